#pragma once

#include <cstddef>
#include <span>
#include <string>

#include <Eigen/Core>

namespace dekm {

// Dense row-major real matrix. Samples are rows throughout the library:
// X is n x d, H = f(X) is n x e, Y = H V^T is n x e.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;
using Index = Eigen::Index;

std::string shape_of(const Matrix& m);

bool all_finite(const Matrix& m);

/// Throws NumericError mentioning `what` if any entry is NaN or Inf.
void require_finite(const Matrix& m, const std::string& what);

// Shape-checked kernels. Each throws DimensionError naming both shapes.
Matrix multiply(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);
Matrix row_slice(const Matrix& a, Index first, Index count);
Matrix gather_rows(const Matrix& a, std::span<const std::size_t> rows);

// Orthonormal eigenbasis of a symmetric matrix. Row i of `v` is the
// eigenvector for eigenvalues(i); eigenvalues ascend, so the last row is
// the direction of largest spread.
struct TransformState {
    Matrix v;
    RowVector eigenvalues;
};

struct EigenOptions {
    double relative_tolerance = 1e-10;  // on off-diagonal Frobenius norm
    int max_sweeps = 100;
};

/// Cyclic Jacobi eigendecomposition. The input is symmetrized by averaging
/// with its transpose; asymmetry beyond 1e-9 * (1 + max|s|) is rejected.
/// Each eigenvector is signed so that its first largest-magnitude entry is
/// positive.
TransformState sym_eig(const Matrix& s, const EigenOptions& options = {});

}  // namespace dekm
