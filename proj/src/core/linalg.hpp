#pragma once

#include <span>
#include <vector>

#include "core/matrix.hpp"

namespace srfe {

// Householder QR of a tall matrix (rows >= cols). Factors are stored packed:
// reflectors below the diagonal, R on and above it.
struct QrDecomposition {
  int rows = 0;
  int cols = 0;
  Matrix qr;
  std::vector<double> rdiag;

  bool full_rank(double rel_tol = 1e-10) const;

  // Least-squares solution of A x = b. Throws RankDeficient when R has a
  // negligible diagonal entry.
  std::vector<double> solve(std::span<const double> rhs) const;

  // Inverse of R (upper triangular, cols x cols); used for (A^T A)^-1 = R^-1 R^-T.
  Matrix r_inverse() const;
};

QrDecomposition qr_decompose(const Matrix& a);

// Least squares via QR; design matrix must have rows > cols.
std::vector<double> least_squares(const Matrix& a, std::span<const double> b);

// Diagonal of (A^T A)^-1 from the R factor, for classical standard errors.
std::vector<double> gram_inverse_diagonal(const QrDecomposition& qr);

}  // namespace srfe
