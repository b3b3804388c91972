#pragma once

#include <span>
#include <string>
#include <vector>

namespace srfe {

// Dense row-major matrix of doubles.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<size_t>(r) * static_cast<size_t>(c), fill) {}

  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

  std::span<const double> row(int r) const {
    return {data.data() + static_cast<size_t>(r) * cols, static_cast<size_t>(cols)};
  }
  std::span<double> row(int r) {
    return {data.data() + static_cast<size_t>(r) * cols, static_cast<size_t>(cols)};
  }

  std::vector<double> column(int c) const {
    std::vector<double> out(static_cast<size_t>(rows));
    for (int r = 0; r < rows; ++r) out[static_cast<size_t>(r)] = at(r, c);
    return out;
  }

  Matrix select_rows(std::span<const int> indices) const {
    Matrix out(static_cast<int>(indices.size()), cols);
    for (size_t i = 0; i < indices.size(); ++i) {
      auto src = row(indices[i]);
      std::copy(src.begin(), src.end(), out.row(static_cast<int>(i)).begin());
    }
    return out;
  }

  bool all_finite() const;
};

// Numeric feature matrix plus target. y_clean is non-empty only for
// synthetic data, where it holds the noise-free target.
struct Dataset {
  Matrix X;
  std::vector<double> y;
  std::vector<std::string> feature_names;
  std::vector<double> y_clean;

  int rows() const { return X.rows; }
  int cols() const { return X.cols; }

  // Throws on size mismatch, non-finite entries or duplicate names.
  void validate() const;

  Dataset select_rows(std::span<const int> indices) const;
};

std::vector<double> select(std::span<const double> values, std::span<const int> indices);

}  // namespace srfe
