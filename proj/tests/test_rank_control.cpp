#include "ttsalsa/errors.hpp"
#include "ttsalsa/rank_control.hpp"

#include <doctest.h>

using namespace ttsalsa;

namespace {

std::vector<Vector> spectra(std::initializer_list<std::initializer_list<double>> lists) {
  std::vector<Vector> out;
  for (const auto& l : lists) {
    Vector v(static_cast<Index>(l.size()));
    Index i = 0;
    for (double x : l) v(i++) = x;
    out.push_back(v);
  }
  return out;
}

}  // namespace

TEST_CASE("without regularization every filter value is one") {
  const auto fs = minimal_filter_values(spectra({{1.0, 0.1}, {0.7, 0.3, 1e-9}}), {4, 4, 4}, 0.0,
                                        BoundaryRule::formula);
  for (const Vector& th : fs.theta) CHECK(th.isOnes());
  CHECK(fs.filters.back().isZero());
}

TEST_CASE("minimal filter values match a scalar recomputation") {
  const std::vector<Index> modes{3, 5, 4, 6};
  const auto sigma = spectra({{2.0, 0.5}, {1.5, 0.4, 0.01}, {1.0, 0.2}});
  const double omega = 0.3;
  const auto fs = minimal_filter_values(sigma, modes, omega, BoundaryRule::formula);
  auto filt = [&](Index mu, double sl, double sr) {
    const auto w = zeta_constants(modes, mu, omega, BoundaryRule::formula);
    return 1.0 / (1.0 + w.zeta1 / (sl * sl) + w.zeta2 / (sr * sr) + w.zeta12 / (sl * sl * sr * sr));
  };
  for (Index b = 0; b < 3; ++b) {
    for (Index i = 0; i < sigma[b].size(); ++i) {
      const double left = filt(b, b == 0 ? 1.0 : sigma[b - 1](0), sigma[b](i));
      const double right = b + 1 < 3 ? filt(b + 1, sigma[b](i), sigma[b + 1](0)) : 0.0;
      CHECK(fs.theta[b](i) == doctest::Approx(std::max(left, right)).epsilon(1e-14));
    }
    // nonincreasing along a sorted spectrum
    for (Index i = 1; i < sigma[b].size(); ++i) CHECK(fs.theta[b](i) <= fs.theta[b](i - 1));
  }
}

TEST_CASE("classification thresholds") {
  FilterState fs;
  Vector th(4);
  th << 0.999, 0.995, 0.5, 0.2;
  fs.theta.push_back(th);
  CHECK(stabilized_ranks(fs, 0.99) == std::vector<Index>{2});
  CHECK(stabilized_ranks(fs, 0.33) == std::vector<Index>{3});
}

TEST_CASE("fixpoints of the singular value map") {
  auto fp = filter_fixpoints(2.0, 1.0);
  REQUIRE(fp);
  CHECK(fp->first == doctest::Approx(1.0));
  CHECK(fp->second == doctest::Approx(1.0));
  fp = filter_fixpoints(2.5, 1.0);
  REQUIRE(fp);
  CHECK(fp->first == doctest::Approx(2.0));
  CHECK(fp->second == doctest::Approx(0.5));
  CHECK_FALSE(filter_fixpoints(1.0, 1.0));
  // below the repelling point the iteration decays toward zero
  double x = 0.45;
  for (int k = 0; k < 200; ++k) x = 2.5 / (1.0 + 1.0 / (x * x));
  CHECK(x < 1e-6);
}

TEST_CASE("pessimistic residual estimate") {
  // equal relative errors on both sets give the plain extrapolation
  CHECK(residual_estimate(1.0, 100.0, 0.5, 25.0, 400.0) == doctest::Approx(2.0));
  CHECK(residual_estimate(0.0, 100.0, 0.0, 25.0, 400.0) == 0.0);
}

TEST_CASE("sigma_min reaches the fixpoint of its defining map") {
  const std::vector<Index> modes{6, 6, 6, 6};
  const auto sigma = spectra({{1.0, 0.1}, {1.0, 0.2}, {1.0, 0.3}});
  RankControlParams params;
  params.fixpoint_steps = 200;
  const double omega = 0.05, res = 0.4;
  const std::vector<double> s = sigma_min_update({1e-3, 1e-3, 1e-3}, sigma, modes, omega, res, 1.0, params);
  for (Index b = 0; b < 3; ++b) {
    auto map = [&](double x) { return (1.0 - theta_min(sigma, modes, omega, params.boundary, b, x)) * res / 24.0; };
    // bisection on x - map(x), which is increasing
    double lo = 1e-12, hi = 1.0;
    for (int k = 0; k < 200; ++k) {
      const double mid = 0.5 * (lo + hi);
      (mid - map(mid) > 0.0 ? hi : lo) = mid;
    }
    CHECK(std::abs(s[b] - lo) < 1e-10 * lo);
  }
  // without regularization the limit falls to the floor
  const auto zero = sigma_min_update({1e-3, 1e-3, 1e-3}, sigma, modes, 0.0, res, 1.0, params);
  CHECK(zero[0] == doctest::Approx(1e-14));
}

TEST_CASE("omega schedule") {
  RankControlParams params;
  FilterState fs;
  fs.theta.push_back(Vector::Constant(2, 0.9));
  OmegaSchedule s;
  s.omega_tilde = 0.5;

  ProgressTracker rising;
  for (double r : {1.0, 0.5, 0.6}) rising.record(r, r);
  auto out = update_omega(s, rising, fs, 1.0, false, 2.0, params);
  CHECK(out.omega_tilde == doctest::Approx(0.5 / 1.1));
  CHECK(out.decreased);
  CHECK(out.omega == doctest::Approx(2.0 * 0.5 / 1.1));

  ProgressTracker halving;
  for (int i = 0; i < 8; ++i) halving.record(std::pow(0.5, i), std::pow(0.5, i));
  out = update_omega(s, halving, fs, 0.001, false, 1.0, params);
  CHECK(out.omega_tilde == 0.5);
  CHECK_FALSE(out.decreased);

  ProgressTracker flat;
  for (int i = 0; i < 8; ++i) flat.record(1.0 - 1e-5 * i, 1.0);
  out = update_omega(s, flat, fs, 0.001, false, 1.0, params);
  CHECK(out.decreased);
  out = update_omega(s, flat, fs, 0.5, false, 1.0, params);  // spectrum still moving
  CHECK_FALSE(out.decreased);
  out = update_omega(s, rising, fs, 1.0, true, 1.0, params);
  CHECK(out.omega_tilde == 0.5);

  // far below the virtual threshold the decrease is applied twice
  fs.theta[0](1) = 0.1;
  out = update_omega(s, rising, fs, 1.0, false, 1.0, params);
  CHECK(out.omega_tilde == doctest::Approx(0.5 / 1.21));
}

TEST_CASE("minimal omega") {
  RankControlParams params;
  params.r_lim = 2;
  FilterState fs;
  fs.theta.push_back(Vector::Constant(2, 0.995));
  CHECK(omega_is_minimal(fs, false, params));
  params.r_lim = 3;
  CHECK_FALSE(omega_is_minimal(fs, false, params));
  CHECK_FALSE(omega_is_minimal(fs, true, params));
  fs.theta[0].setConstant(0.9995);
  CHECK(omega_is_minimal(fs, true, params));
}

TEST_CASE("blocking of rank increases") {
  const std::vector<Index> modes{4, 4, 4};
  RankControlParams params;
  ProgressTracker tr;
  tr.record(1.0, 1.0);
  // fresh run: sum of ranks below 2(d-1)
  CHECK(unblocked_ranks({1, 1, 1, 1}, modes, tr, 10.0, params) == std::vector<Index>{0, 1});
  // dof of ranks (2,2) is 8+16+8-8 = 24
  CHECK(tt_dof({1, 2, 2, 1}, modes) == 24.0);
  CHECK(unblocked_ranks({1, 2, 2, 1}, modes, tr, 24.0 * 1.2 - 1.0, params).empty());
  CHECK(unblocked_ranks({1, 2, 2, 1}, modes, tr, 1000.0, params).size() == 2);
  // little improvement since the reference milestone
  tr.note_rank_increase(1.0, 1.0);
  tr.record(0.99, 0.99);
  CHECK(unblocked_ranks({1, 2, 2, 1}, modes, tr, 1000.0, params).empty());
  tr.record(0.5, 0.5);
  CHECK(unblocked_ranks({1, 2, 2, 1}, modes, tr, 1000.0, params).size() == 2);
  // cap by r_lim and mode sizes
  params.r_lim = 2;
  CHECK(unblocked_ranks({1, 2, 1, 1}, modes, tr, 1000.0, params) == std::vector<Index>{1});
}

TEST_CASE("rank increase appends exactly the requested singular value") {
  Rng rng(31);
  const TTTensor t = TTTensor::random({4, 5, 4}, {2, 2}, rng);
  const GaugedTensor before = standard_representation(t);
  const TTTensor u = increase_rank(t, 1, 1e-3, rng);
  CHECK(u.inner_ranks() == std::vector<Index>{2, 3});
  const GaugedTensor after = standard_representation(u);
  const Vector& s0 = before.gauge.sigma[1];
  const Vector& s1 = after.gauge.sigma[1];
  REQUIRE(s1.size() == 3);
  CHECK((s1.head(2) - s0).norm() < 1e-10 * s0.norm());
  CHECK(std::abs(s1(2) - 1e-3) < 1e-10 * 1e-3);
  // the neighbouring bond only moves at second order in the new value
  CHECK((before.gauge.sigma[0] - after.gauge.sigma[0]).norm() < 10.0 * 1e-3 * 1e-3);
  CHECK((full_contract(u) - full_contract(t)).norm() == doctest::Approx(1e-3).epsilon(1e-6));
  // same seed, same expansion
  Rng a(5), b(5);
  CHECK((full_contract(increase_rank(t, 0, 0.1, a)) - full_contract(increase_rank(t, 0, 0.1, b))).norm() == 0.0);
  const TTTensor full = increase_rank(TTTensor::constant({2, 2}, 1.0), 0, 0.1, rng);
  CHECK_THROWS_AS(increase_rank(full, 0, 0.1, rng), ArgumentError);
}

TEST_CASE("constant tensor gains a second singular value") {
  Rng rng(32);
  const TTTensor t = increase_rank(TTTensor::constant({3, 3, 3}, 1.0), 0, 1e-3, rng);
  const auto s = standard_representation(t).gauge.sigma[0];
  REQUIRE(s.size() == 2);
  CHECK(s(0) == doctest::Approx(std::sqrt(27.0)));
  CHECK(s(1) == doctest::Approx(1e-3));
}

TEST_CASE("rank decrease truncates the last direction") {
  Rng rng(33);
  const TTTensor t = TTTensor::random({4, 5, 4}, {3, 3}, rng);
  const auto s = standard_representation(t).gauge.sigma[0];
  const TTTensor u = decrease_rank(t, 0);
  CHECK(u.inner_ranks() == std::vector<Index>{2, 3});
  CHECK((full_contract(u) - full_contract(t)).norm() == doctest::Approx(s(2)).epsilon(1e-10));
  const TTTensor one = TTTensor::constant({3, 3}, 1.0);
  CHECK(decrease_rank(one, 0).inner_ranks() == std::vector<Index>{1});
}

TEST_CASE("progress tracker keeps the best control residual") {
  ProgressTracker tr;
  CHECK(tr.record(1.0, 1.0));
  CHECK(tr.record(0.5, 0.4));
  CHECK_FALSE(tr.record(0.3, 0.6));
  CHECK(tr.best_iter == 1);
  CHECK(tr.iteration() == 2);
  CHECK(mean_reduction({1.0, 0.5, 0.25}, 5) == doctest::Approx(0.5));
}
