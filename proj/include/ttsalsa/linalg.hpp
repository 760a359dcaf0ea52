#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace ttsalsa {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Rng = std::mt19937_64;

/// Thin SVD a = u * diag(s) * v^T with s descending.
///
/// The largest-magnitude entry of every left singular vector is made
/// nonnegative so that factorizations are reproducible.
struct Svd {
  Matrix u;
  Vector s;
  Matrix v;
};

Svd thin_svd(const Matrix& a);

/// Unit vector orthogonal to the columns of `basis` (which must be
/// orthonormal and have fewer columns than rows).
Vector random_orthogonal_direction(const Matrix& basis, Rng& rng);

/// Thin QR a = q * r with q having min(rows, cols) orthonormal columns.
void thin_qr(const Matrix& a, Matrix& q, Matrix& r);

}  // namespace ttsalsa
