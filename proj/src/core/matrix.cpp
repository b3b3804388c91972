#include "core/matrix.hpp"

#include <cmath>
#include <unordered_set>

#include "core/error.hpp"

namespace srfe {

bool Matrix::all_finite() const {
  for (double v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void Dataset::validate() const {
  require(X.rows >= 1, ErrorCode::EmptyDataset, "dataset has no rows");
  require(static_cast<int>(y.size()) == X.rows, ErrorCode::LengthMismatch,
          "target length does not match row count");
  require(static_cast<int>(feature_names.size()) == X.cols, ErrorCode::LengthMismatch,
          "feature name count does not match column count");
  require(y_clean.empty() || y_clean.size() == y.size(), ErrorCode::LengthMismatch,
          "clean target length does not match row count");
  require(X.all_finite(), ErrorCode::NonFiniteInput, "feature matrix has non-finite entries");
  for (double v : y) {
    require(std::isfinite(v), ErrorCode::NonFiniteInput, "target has non-finite entries");
  }
  std::unordered_set<std::string> seen;
  for (const auto& name : feature_names) {
    require(seen.insert(name).second, ErrorCode::InvalidArgument,
            "duplicate feature name: " + name);
  }
}

Dataset Dataset::select_rows(std::span<const int> indices) const {
  Dataset out;
  out.X = X.select_rows(indices);
  out.y = select(y, indices);
  out.feature_names = feature_names;
  if (!y_clean.empty()) out.y_clean = select(y_clean, indices);
  return out;
}

std::vector<double> select(std::span<const double> values, std::span<const int> indices) {
  std::vector<double> out;
  out.reserve(indices.size());
  for (int i : indices) out.push_back(values[static_cast<size_t>(i)]);
  return out;
}

}  // namespace srfe
