#pragma once

#include <filesystem>
#include <iosfwd>
#include <variant>

#include "tnkf/tensor_train.hpp"

namespace tnkf {

/**
 * Single-file TT container.
 *
 *   bytes 0..7   ASCII magic "TNKFTT\x00\x01"
 *   bytes 8..15  header length H, unsigned 64-bit little-endian
 *   next H bytes JSON header:
 *                  {"format": "tnkf-tt", "version": 1, "kind": "tt" | "ttm",
 *                   "l": l, "n_list": [n_1..n_d], "n_col_list": [...] (ttm only),
 *                   "ranks": [r_1..r_{d-1}], "payload_doubles": count}
 *   payload      every core in order, elements first-index-fastest,
 *                IEEE-754 binary64 little-endian
 */
inline constexpr int kTTFormatVersion = 1;

void write_tt(std::ostream& out, const TensorTrain& tt);
void write_tt(std::ostream& out, const TTMatrix& ttm);
std::variant<TensorTrain, TTMatrix> read_tt_any(std::istream& in);

void save_tt(const std::filesystem::path& path, const TensorTrain& tt);
void save_tt(const std::filesystem::path& path, const TTMatrix& ttm);
/// Throws std::runtime_error on I/O or format errors, or if the file holds a TT-matrix.
TensorTrain load_tt(const std::filesystem::path& path);
TTMatrix load_ttm(const std::filesystem::path& path);

}  // namespace tnkf
