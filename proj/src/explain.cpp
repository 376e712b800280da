#include "volasso/explain.hpp"

#include <algorithm>

namespace volasso {

std::vector<Importance> importance_ranking(const ShapMatrix& s) {
  std::vector<Importance> out;
  out.reserve(s.column_names.size());
  for (Eigen::Index j = 0; j < s.values.cols(); ++j) {
    const double importance = s.values.rows() > 0 ? s.values.col(j).cwiseAbs().mean() : 0.0;
    out.push_back({s.column_names[static_cast<std::size_t>(j)], importance});
  }
  std::stable_sort(out.begin(), out.end(), [](const Importance& a, const Importance& b) {
    return a.mean_abs_shap > b.mean_abs_shap;
  });
  return out;
}

}  // namespace volasso
