#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "lcvi/matrix_data.hpp"

namespace lcvi {

/**
 * Builds a dense log(1 + count) matrix from `user,item,count` rows.
 *
 * Pairs absent from the file count as 0. A first line whose count field is
 * not a number is taken as a header. Users and items are ordered by id
 * (numerically when every id is an integer). With top_items > 0 only the
 * items with the largest total counts are kept, ties broken by id order.
 * Cells are split 50/50 into train and held-out with `seed`.
 *
 * Throws std::runtime_error with the line number for malformed rows,
 * negative counts and duplicate (user, item) pairs.
 */
MatrixData ingest_count_matrix(std::istream& in, std::size_t top_items,
                               std::uint64_t seed);
MatrixData ingest_count_matrix(const std::filesystem::path& path,
                               std::size_t top_items, std::uint64_t seed);

}  // namespace lcvi
