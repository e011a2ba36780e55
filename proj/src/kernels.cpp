#include "mabmdp/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mabmdp::kernels {

namespace {

void check_square(const Matrix& P, Eigen::Index n, const char* who) {
  if (P.rows() != P.cols() || P.rows() != n)
    throw std::invalid_argument(std::string(who) + ": dimension mismatch");
}

}  // namespace

void propagate_serial(const Vector& in, const Matrix& P, Vector& out) {
  const Eigen::Index n = in.size();
  check_square(P, n, "propagate");
  out.setZero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = in(i);
    for (Eigen::Index j = 0; j < n; ++j) out(j) += w * P(i, j);
  }
}

void propagate_parallel(const Vector& in, const Matrix& P, Vector& out) {
  const Eigen::Index n = in.size();
  check_square(P, n, "propagate");
  out.resize(n);
  const double* p = P.data();
  const double* x = in.data();
  double* y = out.data();
  // Each thread owns a contiguous block of output columns and streams the
  // rows of P through it, so P is read row-major.
  constexpr Eigen::Index kBlock = 256;
  const Eigen::Index blocks = (n + kBlock - 1) / kBlock;
#pragma omp parallel for schedule(static)
  for (Eigen::Index b = 0; b < blocks; ++b) {
    const Eigen::Index lo = b * kBlock, hi = std::min(n, lo + kBlock);
    for (Eigen::Index j = lo; j < hi; ++j) y[j] = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double w = x[i];
      if (w == 0.0) continue;
      const double* src = p + i * n;
#pragma omp simd
      for (Eigen::Index j = lo; j < hi; ++j) y[j] += w * src[j];
    }
  }
}

void advance_rows_serial(const Matrix& dist, const Matrix& P, Matrix& next) {
  const Eigen::Index n = P.rows();
  check_square(P, dist.cols(), "advance_rows");
  next.resize(dist.rows(), n);
  for (Eigen::Index r = 0; r < dist.rows(); ++r)
    for (Eigen::Index j = 0; j < n; ++j) {
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) acc += dist(r, i) * P(i, j);
      next(r, j) = acc;
    }
}

void advance_rows_parallel(const Matrix& dist, const Matrix& P, Matrix& next) {
  const Eigen::Index n = P.rows();
  check_square(P, dist.cols(), "advance_rows");
  next.resize(dist.rows(), n);
  const Eigen::Index rows = dist.rows();
  const double* p = P.data();
  const double* d = dist.data();
  double* out = next.data();
#pragma omp parallel for schedule(static)
  for (Eigen::Index r = 0; r < rows; ++r) {
    double* dst = out + r * n;
    for (Eigen::Index j = 0; j < n; ++j) dst[j] = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double w = d[r * n + i];
      if (w == 0.0) continue;
      const double* src = p + i * n;
#pragma omp simd
      for (Eigen::Index j = 0; j < n; ++j) dst[j] += w * src[j];
    }
  }
}

void row_l1_distance_serial(const Matrix& dist, const Vector& mu, Vector& out) {
  if (dist.cols() != mu.size()) throw std::invalid_argument("row_l1_distance: dimension mismatch");
  out.resize(dist.rows());
  for (Eigen::Index r = 0; r < dist.rows(); ++r) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < dist.cols(); ++j) acc += std::abs(dist(r, j) - mu(j));
    out(r) = acc;
  }
}

void row_l1_distance_parallel(const Matrix& dist, const Vector& mu, Vector& out) {
  if (dist.cols() != mu.size()) throw std::invalid_argument("row_l1_distance: dimension mismatch");
  out.resize(dist.rows());
  const Eigen::Index rows = dist.rows(), n = dist.cols();
  const double* d = dist.data();
  const double* m = mu.data();
  double* o = out.data();
#pragma omp parallel for schedule(static)
  for (Eigen::Index r = 0; r < rows; ++r) {
    double acc = 0.0;
#pragma omp simd reduction(+ : acc)
    for (Eigen::Index j = 0; j < n; ++j) acc += std::abs(d[r * n + j] - m[j]);
    o[r] = acc;
  }
}

}  // namespace mabmdp::kernels
