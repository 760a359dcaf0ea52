#include "ttsalsa/errors.hpp"
#include "ttsalsa/testbed.hpp"

#include <doctest.h>

#include <sstream>

using namespace ttsalsa;

namespace {

std::vector<Index> zeros(Index d) { return std::vector<Index>(static_cast<size_t>(d), 0); }

}  // namespace

TEST_CASE("domino values") {
  CHECK(domino_value(zeros(3)) == doctest::Approx(1.0 / 3.0));
  CHECK(domino_value(std::vector<Index>{1, 0}) == doctest::Approx(1.0 / 3.0));
  CHECK(domino_value(zeros(6)) == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("generic function values at the first index") {
  CHECK(generic_value(1, zeros(8)) == doctest::Approx(0.25 + 1.0 / 3.0 + std::sin(2.0)));
  CHECK(generic_value(1, zeros(8)) == doctest::Approx(1.49263).epsilon(1e-5));
  CHECK(generic_value(2, zeros(7)) == doctest::Approx(0.25));
  CHECK(generic_value(3, zeros(11)) == doctest::Approx(std::sqrt(2.5)));
  CHECK_THROWS_AS(generic_value(1, zeros(7)), ArgumentError);
}

TEST_CASE("domino spectrum decays quickly") {
  const std::vector<Index> modes(6, 12);
  const Index total = 2985984;  // 12^6
  // exact TT-SVD of the dense tensor
  Vector full(total);
  std::vector<Index> idx(6);
  for (Index pos = 0; pos < total; ++pos) {
    Index rest = pos;
    for (auto& i : idx) {
      i = rest % 12;
      rest /= 12;
    }
    full(pos) = domino_value(idx);
  }
  const Matrix m = Eigen::Map<const Matrix>(full.data(), 12 * 12 * 12, 12 * 12 * 12);
  const Vector s = Eigen::BDCSVD<Matrix>(m).singularValues();
  // frozen from the dense decomposition
  CHECK(s(4) / s(0) == doctest::Approx(1.76304e-3).epsilon(1e-4));
}

TEST_CASE("random TT tensor with a forced uniform spectrum") {
  const std::vector<Index> modes(5, 8);
  const TTTensor t = random_tt_uniform_spectrum(modes, 4, 17);
  const auto r = t.inner_ranks();
  Index sum = 0;
  for (Index x : r) {
    CHECK(x >= 1);
    CHECK(x <= 4);
    sum += x;
  }
  CHECK(3 * sum >= 2 * 4 * 4);
  const GaugedTensor g = standard_representation(t);
  for (Index b = 0; b < 4; ++b) CHECK(g.gauge.sigma[b].norm() == doctest::Approx(1.0).epsilon(1e-10));
  // same seed, same tensor
  const TTTensor u = random_tt_uniform_spectrum(modes, 4, 17);
  CHECK((full_contract(u) - full_contract(t)).norm() == 0.0);
  const TTTensor one = random_tt_uniform_spectrum(modes, 1, 3);
  CHECK(one.inner_ranks() == std::vector<Index>{1, 1, 1, 1});
}

TEST_CASE("spectrum replacement reaches prescribed values") {
  Rng rng(51);
  TTTensor t = TTTensor::random({4, 4, 4}, {2, 2}, rng);
  Vector a(2), b(2);
  a << 1.0, 0.5;
  b << 0.9, 0.6;
  a /= a.norm();
  b /= b.norm();
  const double dev = impose_spectrum(t, {a, b});
  CHECK(dev < 1e-10);
  const GaugedTensor g = standard_representation(t);
  CHECK((g.gauge.sigma[0] - a).norm() < 1e-10);
  CHECK((g.gauge.sigma[1] - b).norm() < 1e-10);
}

TEST_CASE("rank adaption tensor") {
  const std::vector<Index> modes{5, 3, 3, 4, 6, 6};
  const Index k = 2;
  const double beta = 3.0;
  const TTTensor t = rank_adaption_tensor(modes, k, 1.0, beta, 9);
  const GaugedTensor g = standard_representation(t);
  std::vector<Index> r;
  for (const auto& s : g.gauge.sigma) r.push_back(s.size());
  CHECK(r == std::vector<Index>{k, k, k, 1, 2 * k});
  for (Index b = 0; b < 3; ++b) CHECK((g.gauge.sigma[b].array() - 1.0).abs().maxCoeff() < 1e-12);
  CHECK(g.gauge.sigma[3](0) == doctest::Approx(std::sqrt(2.0)));
  const Vector& s5 = g.gauge.sigma[4];
  for (Index i = 1; i < s5.size(); ++i) CHECK(s5(i) / s5(i - 1) == doctest::Approx(1.0 / beta));
  // A(i) = Q(i1..i4) * B(i5, i6)
  const Matrix a = unfold(t, 4);
  CHECK(Eigen::JacobiSVD<Matrix>(a).singularValues()(1) < 1e-12 * a.norm());
  CHECK_THROWS_AS(rank_adaption_tensor({1, 3, 3, 4, 6, 6}, 2, 1.0, beta, 1), ArgumentError);
  CHECK_THROWS_AS(rank_adaption_tensor(modes, 2, 1.0, 0.5, 1), ArgumentError);
}

TEST_CASE("aggregates") {
  CHECK(geometric_mean({1e-4, 1e-6}) == doctest::Approx(1e-5));
  CHECK(geometric_deviation({1e-4, 1e-4}) == doctest::Approx(1.0));
  CHECK(count_successes({1e-6, 2e-5, 9.9e-6, 1e-5}, 1e-5) == 2);
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
}

TEST_CASE("one deterministic trial aggregates to itself") {
  ExperimentSpec spec;
  spec.kind = TargetKind::domino;
  spec.d = 3;
  spec.n = 6;
  spec.c_sf = 2.0;
  spec.r_p = 2;
  spec.trials = 1;
  spec.solver.rank.r_lim = 3;
  const auto recs = run_experiment(spec);
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].error.empty());
  const auto rows = aggregate(spec, recs);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].geo_mean_relc == doctest::Approx(recs[0].rel_c));
  CHECK(rows[0].geo_dev_relc == doctest::Approx(1.0));
  std::ostringstream os;
  write_report_csv(os, rows);
  CHECK(os.str().rfind("target,d,n,C_sf,algorithm,trials,geo_mean_relC,geo_dev_relC,geo_mean_relP,geo_dev_relP,"
                       "mean_time_s,successes\ndomino,3,6,2,salsa,1,",
                       0) == 0);
  // rerunning reproduces the record
  const auto again = run_experiment(spec);
  CHECK(again[0].rel_c == recs[0].rel_c);
}

TEST_CASE("experiment validation") {
  ExperimentSpec spec;
  spec.kind = TargetKind::generic2;
  spec.d = 8;
  CHECK_THROWS_AS(validate(spec), ArgumentError);
  spec.d = 7;
  CHECK_NOTHROW(validate(spec));
  spec.trials = 0;
  CHECK_THROWS_AS(validate(spec), ArgumentError);
}
