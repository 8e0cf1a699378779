#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace lcvi {

/// Dense real matrix (users x items, row-major) with disjoint train and
/// held-out cell masks.
struct MatrixData {
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<double> values;
  std::vector<std::uint8_t> train_mask;
  std::vector<std::uint8_t> test_mask;

  MatrixData() = default;
  MatrixData(std::size_t rows, std::size_t cols);

  double& at(std::size_t i, std::size_t j) { return values[i * n_cols + j]; }
  double at(std::size_t i, std::size_t j) const {
    return values[i * n_cols + j];
  }
  bool is_train(std::size_t i, std::size_t j) const {
    return train_mask[i * n_cols + j] != 0;
  }
  bool is_test(std::size_t i, std::size_t j) const {
    return test_mask[i * n_cols + j] != 0;
  }

  std::size_t train_count() const;
  std::size_t test_count() const;

  /// Assigns every cell to train or test with probability 1/2 each.
  void split_cells(std::uint64_t seed);

  /// Throws std::invalid_argument on shape mismatch, overlapping masks or
  /// non-finite values.
  void validate() const;

  /// Dense values CSV at `path` plus `<path>.mask.csv` holding 0 (unused),
  /// 1 (train) or 2 (held out) per cell.
  void save_csv(const std::filesystem::path& path) const;
  static MatrixData load_csv(const std::filesystem::path& path);
  static std::filesystem::path mask_path(const std::filesystem::path& path);

  friend bool operator==(const MatrixData&, const MatrixData&) = default;
};

/// Synthetic stand-in for a log-count matrix: Z (users x k) and W (k x items)
/// drawn from N(0, sigma_z^2) and N(0, sigma_w^2), Y = ZW + sigma_y * noise,
/// cells split 50/50 into train and held-out.
MatrixData generate_synthetic_matrix(std::size_t n_users, std::size_t n_items,
                                     std::size_t k_true, double sigma_y,
                                     std::uint64_t seed, double sigma_w = 10.0,
                                     double sigma_z = 10.0);

}  // namespace lcvi
