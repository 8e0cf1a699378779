#include "lcvi/model.hpp"

#include <numeric>

namespace lcvi {

std::vector<std::string> Model::latent_names() const {
  std::vector<std::string> names;
  names.reserve(latent_dim());
  for (std::size_t j = 0; j < latent_dim(); ++j) {
    names.push_back("theta[" + std::to_string(j) + "]");
  }
  return names;
}

Batch full_batch(const Model& model) {
  Batch b;
  b.rows.resize(model.num_rows());
  std::iota(b.rows.begin(), b.rows.end(), std::size_t{0});
  b.scale = 1.0;
  return b;
}

Batch make_batch(const Model& model, std::span<const std::size_t> rows) {
  if (rows.empty()) throw std::invalid_argument("make_batch: empty batch");
  Batch b;
  b.rows.assign(rows.begin(), rows.end());
  b.scale = static_cast<double>(model.num_rows()) /
            static_cast<double>(rows.size());
  return b;
}

std::vector<std::size_t> batch_prediction_targets(const Model& model,
                                                  const Batch& batch) {
  std::vector<std::size_t> out;
  for (std::size_t row : batch.rows) {
    const auto owned = model.prediction_targets_in_row(row);
    out.insert(out.end(), owned.begin(), owned.end());
  }
  return out;
}

}  // namespace lcvi
