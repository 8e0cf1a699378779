#include "lcvi/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

namespace lcvi {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool parse_integer(const std::string& s, long long& out) {
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

/// Ids sorted numerically when all are integers, else lexicographically.
std::vector<std::string> ordered_ids(const std::map<std::string, int>& seen) {
  std::vector<std::string> ids;
  for (const auto& [id, _] : seen) ids.push_back(id);
  bool numeric = true;
  long long tmp = 0;
  for (const auto& id : ids) numeric = numeric && parse_integer(id, tmp);
  if (numeric) {
    std::stable_sort(ids.begin(), ids.end(), [](const auto& a, const auto& b) {
      long long x = 0, y = 0;
      parse_integer(a, x);
      parse_integer(b, y);
      return x < y;
    });
  }
  return ids;
}

struct Entry {
  std::string user;
  std::string item;
  long long count;
};

}  // namespace

MatrixData ingest_count_matrix(std::istream& in, std::size_t top_items,
                               std::uint64_t seed) {
  std::vector<Entry> entries;
  std::map<std::pair<std::string, std::string>, long> first_line;
  std::map<std::string, int> users, items;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      f.push_back(trim(std::string_view(line).substr(
          start, comma == std::string::npos ? std::string::npos : comma - start)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    long long count = 0;
    const bool count_ok = f.size() == 3 && parse_integer(f[2], count);
    if (line_no == 1 && f.size() == 3 && !count_ok) continue;  // header
    if (!count_ok || f[0].empty() || f[1].empty()) {
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": expected user,item,count with an integer count");
    }
    if (count < 0) {
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": negative count " + std::to_string(count));
    }
    const auto key = std::make_pair(f[0], f[1]);
    const auto [it, inserted] = first_line.emplace(key, line_no);
    if (!inserted) {
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": duplicate (user, item) pair (" + f[0] + ", " +
                               f[1] + "), first seen on line " +
                               std::to_string(it->second));
    }
    users.emplace(f[0], 0);
    items.emplace(f[1], 0);
    entries.push_back({f[0], f[1], count});
  }
  if (entries.empty()) throw std::runtime_error("count file has no entries");

  const auto user_ids = ordered_ids(users);
  auto item_ids = ordered_ids(items);
  std::map<std::string, std::size_t> user_index;
  for (std::size_t i = 0; i < user_ids.size(); ++i) user_index[user_ids[i]] = i;

  if (top_items > 0 && top_items < item_ids.size()) {
    std::map<std::string, long long> totals;
    for (const auto& e : entries) totals[e.item] += e.count;
    std::vector<std::size_t> order(item_ids.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return totals[item_ids[a]] > totals[item_ids[b]];
    });
    order.resize(top_items);
    std::sort(order.begin(), order.end());
    std::vector<std::string> kept;
    for (std::size_t i : order) kept.push_back(item_ids[i]);
    item_ids = std::move(kept);
  }
  std::map<std::string, std::size_t> item_index;
  for (std::size_t j = 0; j < item_ids.size(); ++j) item_index[item_ids[j]] = j;

  MatrixData m(user_ids.size(), item_ids.size());
  for (const auto& e : entries) {
    const auto it = item_index.find(e.item);
    if (it == item_index.end()) continue;
    m.at(user_index[e.user], it->second) = std::log1p(static_cast<double>(e.count));
  }
  m.split_cells(seed);
  return m;
}

MatrixData ingest_count_matrix(const std::filesystem::path& path,
                               std::size_t top_items, std::uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open count file " + path.string());
  return ingest_count_matrix(in, top_items, seed);
}

}  // namespace lcvi
