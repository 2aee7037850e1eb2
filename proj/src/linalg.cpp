#include "lgpr/linalg.hpp"

#include <cmath>

namespace lgpr {

double Cholesky::log_det() const {
  const Matrix& L = llt.matrixLLT();
  double total = 0.0;
  for (Eigen::Index i = 0; i < L.rows(); ++i) total += std::log(L(i, i));
  return 2.0 * total;
}

Matrix Cholesky::inverse() const {
  return llt.solve(Matrix::Identity(llt.rows(), llt.cols()));
}

Cholesky robust_cholesky(const Matrix& K, const std::string& failure_message) {
  if (K.rows() != K.cols()) {
    throw DimensionError("square matrix columns", static_cast<std::size_t>(K.rows()),
                         static_cast<std::size_t>(K.cols()));
  }
  if (!K.allFinite()) throw Error(failure_message + " (non-finite entries)");
  const Eigen::Index n = K.rows();
  double scale = n > 0 ? K.diagonal().mean() : 1.0;
  if (!(scale > 0.0)) scale = 1.0;

  Cholesky out;
  for (double rel = kJitterRelative; rel <= kJitterRelativeMax * 1.0000001; rel *= 10.0) {
    out.jitter = rel * scale;
    Matrix A = K;
    A.diagonal().array() += out.jitter;
    out.llt.compute(A);
    if (out.llt.info() == Eigen::Success) {
      const Matrix& L = out.llt.matrixLLT();
      bool ok = true;
      for (Eigen::Index i = 0; i < n && ok; ++i) ok = L(i, i) > 0.0 && std::isfinite(L(i, i));
      const bool last = rel * 10.0 > kJitterRelativeMax * 1.0000001;
      if (ok && (last || out.llt.rcond() * static_cast<double>(n) >= kConditionFloor)) return out;
    }
  }
  throw Error(failure_message);
}

}  // namespace lgpr
