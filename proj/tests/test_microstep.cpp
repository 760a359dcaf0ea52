#include "ttsalsa/errors.hpp"
#include "ttsalsa/microstep.hpp"

#include <doctest.h>

using namespace ttsalsa;

namespace {

LocalSystem random_system(Rng& rng, Index a, Index rl, Index rr, const RegularizationWeights& w) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), pos(0.2, 2.0);
  LocalSystem sys;
  sys.left_rows = Matrix::NullaryExpr(a, rl, [&] { return u(rng); });
  sys.right_rows = Matrix::NullaryExpr(a, rr, [&] { return u(rng); });
  sys.values = Vector::NullaryExpr(a, [&] { return u(rng); });
  sys.sigma_left = Vector::NullaryExpr(rl, [&] { return pos(rng); });
  sys.sigma_right = Vector::NullaryExpr(rr, [&] { return pos(rng); });
  sys.weights = w;
  sys.n_left = 6.0;
  sys.n_right = 5.0;
  return sys;
}

// Objective of the regularized local problem written out term by term.
double objective(const LocalSystem& sys, const Matrix& n) {
  double f = 0.0;
  for (Index s = 0; s < sys.values.size(); ++s) {
    const double r = sys.left_rows.row(s) * n * sys.right_rows.row(s).transpose() - sys.values(s);
    f += r * r;
  }
  const Vector il = sys.sigma_left.cwiseInverse(), ir = sys.sigma_right.cwiseInverse();
  const Matrix cr = sys.right_rows.transpose() * sys.right_rows;
  const Matrix cl = sys.left_rows.transpose() * sys.left_rows;
  const Matrix nl = il.asDiagonal() * n;
  const Matrix nr = n * ir.asDiagonal();
  f += sys.weights.zeta1 / sys.n_left * (nl * cr * nl.transpose()).trace();
  f += sys.weights.zeta2 / sys.n_right * (nr.transpose() * cl * nr).trace();
  const double rho = static_cast<double>(sys.values.size()) / (sys.n_left * sys.n_right);
  f += rho * sys.weights.zeta12 * (il.asDiagonal() * n * ir.asDiagonal()).squaredNorm();
  return f;
}

// Design-matrix row of one sample: entry l + rL * q is left(l) * right(q).
Vector design_row(const Vector& right, const Vector& left) {
  Vector out(left.size() * right.size());
  for (Index q = 0; q < right.size(); ++q) out.segment(q * left.size(), left.size()) = right(q) * left;
  return out;
}

}  // namespace

TEST_CASE("constants follow the size ratios") {
  const std::vector<Index> modes(6, 12);
  const auto w = zeta_constants(modes, 2, 2.0, BoundaryRule::formula);
  CHECK(w.zeta1 == doctest::Approx(4.0 / 3.0));
  CHECK(w.zeta2 == doctest::Approx(2.0));
  CHECK(w.zeta12 == doctest::Approx(4.0 * 4.0 / 6.0));
  const auto r = zeta_constants(modes, 0, 2.0, BoundaryRule::remark);
  CHECK_FALSE(r.any());
  CHECK(zeta_constants(modes, 3, 0.0, BoundaryRule::formula).any() == false);
}

TEST_CASE("matrix rule weights") {
  const auto w0 = zeta_constants({4, 6}, 0, 1.0, BoundaryRule::matrix);
  const auto w1 = zeta_constants({4, 6}, 1, 1.0, BoundaryRule::matrix);
  CHECK(w0.zeta1 == 0.0);
  CHECK(w0.zeta2 == doctest::Approx(0.4));
  CHECK(w1.zeta1 == doctest::Approx(0.6));
  CHECK(w1.zeta2 == 0.0);
  CHECK_THROWS_AS(zeta_constants({4, 6, 3}, 0, 1.0, BoundaryRule::matrix), ArgumentError);
}

TEST_CASE("solve_slice is a stationary point of the written-out objective") {
  Rng rng(21);
  for (int rep = 0; rep < 10; ++rep) {
    const RegularizationWeights w{0.3, 0.2, 0.06};
    const LocalSystem sys = random_system(rng, 12, 2, 3, w);
    const Matrix n = solve_slice(sys);
    const double f0 = objective(sys, n);
    // a minimizer of a convex quadratic: every perturbation increases f
    std::normal_distribution<double> g;
    for (int k = 0; k < 20; ++k) {
      const Matrix dn = Matrix::NullaryExpr(2, 3, [&] { return 1e-4 * g(rng); });
      CHECK(objective(sys, n + dn) >= f0 - 1e-14);
    }
    // normal equations hold
    Matrix a;
    Vector rhs;
    assemble_normal(sys, a, rhs);
    const Vector x = Eigen::Map<const Vector>(n.data(), n.size());
    CHECK((a * x - rhs).norm() < 1e-10 * rhs.norm());
  }
}

TEST_CASE("without weights the minimum-norm least-squares solution is returned") {
  Rng rng(22);
  LocalSystem sys = random_system(rng, 3, 2, 2, {});  // underdetermined: 3 samples, 4 unknowns
  const Matrix n = solve_slice(sys);
  Matrix k(3, 4);
  for (Index s = 0; s < 3; ++s) {
    Vector row = design_row(sys.right_rows.row(s).transpose(), sys.left_rows.row(s).transpose());
    k.row(s) = row.transpose();
  }
  const Vector want = k.completeOrthogonalDecomposition().pseudoInverse() * sys.values;
  CHECK((Eigen::Map<const Vector>(n.data(), 4) - want).norm() < 1e-12);
}

TEST_CASE("filter matrix") {
  Vector sl(2), sr(1);
  sl << 2.0, 1.0;
  sr << 0.5;
  const Matrix f = filter_matrix(sl, sr, {1.0, 0.25, 0.5});
  CHECK(f(0, 0) == doctest::Approx(1.0 / (1.0 + 0.25 + 1.0 + 0.5 / (4.0 * 0.25))));
  CHECK(f(1, 0) == doctest::Approx(1.0 / (1.0 + 1.0 + 1.0 + 0.5 / 0.25)));
  CHECK(filter_matrix(sl, sr, {}).isOnes());
}

TEST_CASE("iTRIP needs enough points per slice") {
  Rng rng(23);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Matrix> l{Matrix::NullaryExpr(4, 2, [&] { return u(rng); })};
  std::vector<Matrix> r{Matrix::NullaryExpr(4, 2, [&] { return u(rng); })};
  CHECK(itrip_check(l, r).holds);
  l[0].conservativeResize(3, 2);
  r[0].conservativeResize(3, 2);
  CHECK_FALSE(itrip_check(l, r).holds);
  // all four points sharing one left interface row: rank at most two
  std::vector<Matrix> same{Matrix(4, 2)};
  same[0].rowwise() = Eigen::RowVector2d(0.3, -0.7);
  r[0] = Matrix::NullaryExpr(4, 2, [&] { return u(rng); });
  CHECK_FALSE(itrip_check(same, r).holds);
}
