#pragma once

#include "tvqp/types.hpp"

namespace tvqp::linalg {

/// Eigen-decomposition of a symmetric matrix. Column j of `vectors` pairs
/// with `values[j]`; values are sorted in descending order.
struct SymmetricEigen {
    Vector values;
    Matrix vectors;
};

/// Cyclic Jacobi rotations on a dense symmetric matrix. Only the upper
/// triangle of `a` is read. Sweeps until the off-diagonal Frobenius mass drops
/// below `tol` times the matrix norm (or `max_sweeps` is reached).
SymmetricEigen jacobi_eigen(const Matrix& a, double tol = 1e-15, int max_sweeps = 100);

/// ½(M + Mᵀ).
Matrix symmetric_part(const Matrix& m);

/// Largest |eigenvalue| of a symmetric matrix.
double symmetric_spectral_norm(const Matrix& sym);

/// Spectral norm of an arbitrary (possibly rectangular) matrix.
double spectral_norm(const Matrix& m);

double min_eigenvalue(const Matrix& sym);
double max_eigenvalue(const Matrix& sym);

}  // namespace tvqp::linalg
