#include "core/linalg.hpp"

#include <cmath>

#include "core/error.hpp"

namespace srfe {

QrDecomposition qr_decompose(const Matrix& a) {
  require(a.rows >= a.cols && a.cols >= 1, ErrorCode::InvalidArgument,
          "QR needs a tall matrix");
  QrDecomposition d;
  d.rows = a.rows;
  d.cols = a.cols;
  d.qr = a;
  d.rdiag.assign(static_cast<size_t>(a.cols), 0.0);

  Matrix& qr = d.qr;
  const int m = a.rows, n = a.cols;
  for (int k = 0; k < n; ++k) {
    double norm = 0.0;
    for (int i = k; i < m; ++i) norm = std::hypot(norm, qr.at(i, k));
    if (norm != 0.0) {
      if (qr.at(k, k) < 0.0) norm = -norm;
      for (int i = k; i < m; ++i) qr.at(i, k) /= norm;
      qr.at(k, k) += 1.0;
      for (int j = k + 1; j < n; ++j) {
        double s = 0.0;
        for (int i = k; i < m; ++i) s += qr.at(i, k) * qr.at(i, j);
        s = -s / qr.at(k, k);
        for (int i = k; i < m; ++i) qr.at(i, j) += s * qr.at(i, k);
      }
    }
    d.rdiag[static_cast<size_t>(k)] = -norm;
  }
  return d;
}

bool QrDecomposition::full_rank(double rel_tol) const {
  double max_diag = 0.0;
  for (double r : rdiag) max_diag = std::max(max_diag, std::fabs(r));
  if (max_diag == 0.0) return false;
  for (double r : rdiag) {
    if (std::fabs(r) <= rel_tol * max_diag) return false;
  }
  return true;
}

std::vector<double> QrDecomposition::solve(std::span<const double> rhs) const {
  require(static_cast<int>(rhs.size()) == rows, ErrorCode::LengthMismatch,
          "rhs length does not match matrix rows");
  require(full_rank(), ErrorCode::RankDeficient, "design matrix is rank deficient");

  std::vector<double> y(rhs.begin(), rhs.end());
  const int m = rows, n = cols;
  // Apply Q^T
  for (int k = 0; k < n; ++k) {
    double s = 0.0;
    for (int i = k; i < m; ++i) s += qr.at(i, k) * y[static_cast<size_t>(i)];
    if (qr.at(k, k) != 0.0) {
      s = -s / qr.at(k, k);
      for (int i = k; i < m; ++i) y[static_cast<size_t>(i)] += s * qr.at(i, k);
    }
  }
  // Back substitution with R
  std::vector<double> x(static_cast<size_t>(n));
  for (int k = n - 1; k >= 0; --k) {
    double s = y[static_cast<size_t>(k)];
    for (int j = k + 1; j < n; ++j) s -= qr.at(k, j) * x[static_cast<size_t>(j)];
    x[static_cast<size_t>(k)] = s / rdiag[static_cast<size_t>(k)];
  }
  return x;
}

Matrix QrDecomposition::r_inverse() const {
  require(full_rank(), ErrorCode::RankDeficient, "R factor is singular");
  const int n = cols;
  Matrix inv(n, n, 0.0);
  for (int j = n - 1; j >= 0; --j) {
    inv.at(j, j) = 1.0 / rdiag[static_cast<size_t>(j)];
    for (int i = j - 1; i >= 0; --i) {
      double s = 0.0;
      for (int k = i + 1; k <= j; ++k) s += qr.at(i, k) * inv.at(k, j);
      inv.at(i, j) = -s / rdiag[static_cast<size_t>(i)];
    }
  }
  return inv;
}

std::vector<double> least_squares(const Matrix& a, std::span<const double> b) {
  return qr_decompose(a).solve(b);
}

std::vector<double> gram_inverse_diagonal(const QrDecomposition& qr) {
  Matrix rinv = qr.r_inverse();
  const int n = qr.cols;
  std::vector<double> diag(static_cast<size_t>(n), 0.0);
  // (A^T A)^-1 = R^-1 R^-T, so the diagonal is the squared row norms of R^-1.
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = i; j < n; ++j) s += rinv.at(i, j) * rinv.at(i, j);
    diag[static_cast<size_t>(i)] = s;
  }
  return diag;
}

}  // namespace srfe
