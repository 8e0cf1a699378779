#include "lcvi/matrix_data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "lcvi/random.hpp"

namespace lcvi {

namespace {

constexpr std::uint64_t kSplitStream = 0x5350;  // "SP"
constexpr std::uint64_t kFactorStream = 0x4654;

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<std::vector<std::string>> read_csv_cells(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace

MatrixData::MatrixData(std::size_t rows, std::size_t cols)
    : n_rows(rows),
      n_cols(cols),
      values(rows * cols, 0.0),
      train_mask(rows * cols, 0),
      test_mask(rows * cols, 0) {}

std::size_t MatrixData::train_count() const {
  std::size_t n = 0;
  for (auto m : train_mask) n += m != 0;
  return n;
}

std::size_t MatrixData::test_count() const {
  std::size_t n = 0;
  for (auto m : test_mask) n += m != 0;
  return n;
}

void MatrixData::split_cells(std::uint64_t seed) {
  RandomStream stream = seed_rng(seed).split(kSplitStream).stream();
  for (std::size_t c = 0; c < values.size(); ++c) {
    const bool train = stream.uniform() < 0.5;
    train_mask[c] = train ? 1 : 0;
    test_mask[c] = train ? 0 : 1;
  }
}

void MatrixData::validate() const {
  const std::size_t n = n_rows * n_cols;
  if (values.size() != n || train_mask.size() != n || test_mask.size() != n) {
    throw std::invalid_argument("MatrixData: masks do not match shape");
  }
  for (std::size_t c = 0; c < n; ++c) {
    if (train_mask[c] && test_mask[c]) {
      throw std::invalid_argument("MatrixData: cell " + std::to_string(c) +
                                  " is both train and test");
    }
    if (!std::isfinite(values[c])) {
      throw std::invalid_argument("MatrixData: non-finite value at cell " +
                                  std::to_string(c));
    }
  }
}

std::filesystem::path MatrixData::mask_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".mask.csv");
}

void MatrixData::save_csv(const std::filesystem::path& path) const {
  validate();
  std::ofstream values_out(path);
  std::ofstream mask_out(mask_path(path));
  if (!values_out || !mask_out) {
    throw std::runtime_error("cannot write matrix cache " + path.string());
  }
  for (std::size_t i = 0; i < n_rows; ++i) {
    for (std::size_t j = 0; j < n_cols; ++j) {
      const char* sep = j + 1 < n_cols ? "," : "\n";
      values_out << format_double(at(i, j)) << sep;
      const int role = is_train(i, j) ? 1 : (is_test(i, j) ? 2 : 0);
      mask_out << role << sep;
    }
  }
}

MatrixData MatrixData::load_csv(const std::filesystem::path& path) {
  const auto value_rows = read_csv_cells(path);
  const auto mask_rows = read_csv_cells(mask_path(path));
  if (value_rows.empty()) {
    throw std::runtime_error(path.string() + ": empty matrix");
  }
  if (mask_rows.size() != value_rows.size()) {
    throw std::runtime_error(path.string() +
                             ": mask sidecar row count differs");
  }
  MatrixData m(value_rows.size(), value_rows.front().size());
  for (std::size_t i = 0; i < m.n_rows; ++i) {
    if (value_rows[i].size() != m.n_cols || mask_rows[i].size() != m.n_cols) {
      throw std::runtime_error(path.string() + ": ragged row " +
                               std::to_string(i + 1));
    }
    for (std::size_t j = 0; j < m.n_cols; ++j) {
      const std::string& v = value_rows[i][j];
      double x = 0.0;
      auto res = std::from_chars(v.data(), v.data() + v.size(), x);
      if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
        throw std::runtime_error(path.string() + ": bad value at row " +
                                 std::to_string(i + 1));
      }
      m.at(i, j) = x;
      const std::string& r = mask_rows[i][j];
      if (r == "1") {
        m.train_mask[i * m.n_cols + j] = 1;
      } else if (r == "2") {
        m.test_mask[i * m.n_cols + j] = 1;
      } else if (r != "0") {
        throw std::runtime_error(path.string() + ": bad mask code at row " +
                                 std::to_string(i + 1));
      }
    }
  }
  m.validate();
  return m;
}

MatrixData generate_synthetic_matrix(std::size_t n_users, std::size_t n_items,
                                     std::size_t k_true, double sigma_y,
                                     std::uint64_t seed, double sigma_w,
                                     double sigma_z) {
  if (n_users == 0 || n_items == 0 || k_true == 0) {
    throw std::invalid_argument("generate_synthetic_matrix: dims must be >= 1");
  }
  if (!(sigma_y >= 0.0) || !(sigma_w > 0.0) || !(sigma_z > 0.0)) {
    throw std::invalid_argument("generate_synthetic_matrix: bad sigma");
  }
  RandomStream stream = seed_rng(seed).split(kFactorStream).stream();
  std::vector<double> z(n_users * k_true);
  std::vector<double> w(k_true * n_items);
  for (double& v : z) v = sigma_z * stream.normal();
  for (double& v : w) v = sigma_w * stream.normal();

  MatrixData m(n_users, n_items);
  for (std::size_t i = 0; i < n_users; ++i) {
    for (std::size_t j = 0; j < n_items; ++j) {
      double mean = 0.0;
      for (std::size_t l = 0; l < k_true; ++l) {
        mean += z[i * k_true + l] * w[l * n_items + j];
      }
      m.at(i, j) = mean + sigma_y * stream.normal();
    }
  }
  m.split_cells(seed);
  return m;
}

}  // namespace lcvi
