#pragma once

#include "mabmdp/mdp.hpp"

namespace mabmdp {

enum class Execution { serial, parallel };

// Dense distribution-propagation kernels behind chain analysis.
//
// Each kernel has a plain serial reference and an OpenMP version. The two
// accumulate in different orders, so they agree to rounding, not bitwise.
namespace kernels {

// out = in^T P
void propagate_serial(const Vector& in, const Matrix& P, Vector& out);
void propagate_parallel(const Vector& in, const Matrix& P, Vector& out);

// next.row(r) = dist.row(r) * P for every row.
void advance_rows_serial(const Matrix& dist, const Matrix& P, Matrix& next);
void advance_rows_parallel(const Matrix& dist, const Matrix& P, Matrix& next);

// out(r) = || dist.row(r) - mu ||_1
void row_l1_distance_serial(const Matrix& dist, const Vector& mu, Vector& out);
void row_l1_distance_parallel(const Matrix& dist, const Vector& mu, Vector& out);

inline void propagate(Execution ex, const Vector& in, const Matrix& P, Vector& out) {
  ex == Execution::serial ? propagate_serial(in, P, out) : propagate_parallel(in, P, out);
}
inline void advance_rows(Execution ex, const Matrix& dist, const Matrix& P, Matrix& next) {
  ex == Execution::serial ? advance_rows_serial(dist, P, next) : advance_rows_parallel(dist, P, next);
}
inline void row_l1_distance(Execution ex, const Matrix& dist, const Vector& mu, Vector& out) {
  ex == Execution::serial ? row_l1_distance_serial(dist, mu, out)
                          : row_l1_distance_parallel(dist, mu, out);
}

}  // namespace kernels
}  // namespace mabmdp
