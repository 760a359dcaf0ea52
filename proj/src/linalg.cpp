#include "ttsalsa/linalg.hpp"

#include <stdexcept>

namespace ttsalsa {

Svd thin_svd(const Matrix& a) {
  Svd out;
  if (a.rows() == 0 || a.cols() == 0) {
    out.u.resize(a.rows(), 0);
    out.v.resize(a.cols(), 0);
    return out;
  }
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  out.u = svd.matrixU();
  out.s = svd.singularValues();
  out.v = svd.matrixV();
  for (Index k = 0; k < out.u.cols(); ++k) {
    Index arg = 0;
    out.u.col(k).cwiseAbs().maxCoeff(&arg);
    if (out.u(arg, k) < 0.0) {
      out.u.col(k) *= -1.0;
      out.v.col(k) *= -1.0;
    }
  }
  return out;
}

Vector random_orthogonal_direction(const Matrix& basis, Rng& rng) {
  const Index m = basis.rows();
  if (basis.cols() >= m) {
    throw std::invalid_argument("random_orthogonal_direction: basis already spans the space");
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int attempt = 0; attempt < 16; ++attempt) {
    Vector x(m);
    for (Index i = 0; i < m; ++i) x(i) = normal(rng);
    // two Gram-Schmidt passes for numerical orthogonality
    for (int pass = 0; pass < 2; ++pass) {
      if (basis.cols() > 0) x -= basis * (basis.transpose() * x);
    }
    const double nrm = x.norm();
    if (nrm > 1e-8) return x / nrm;
  }
  throw std::runtime_error("random_orthogonal_direction: failed to find a direction");
}

void thin_qr(const Matrix& a, Matrix& q, Matrix& r) {
  const Index k = std::min(a.rows(), a.cols());
  Eigen::HouseholderQR<Matrix> qr(a);
  q = qr.householderQ() * Matrix::Identity(a.rows(), k);
  r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
}

}  // namespace ttsalsa
