#pragma once

#include <filesystem>
#include <iosfwd>

#include "tnkf/volterra.hpp"

namespace tnkf::volterra {

/// CSV with header `t,u1..up,y1..yl` and one row per sample; values use
/// 17 significant digits so they round-trip exactly.
void write_csv(std::ostream& out, const IoRecord& record);
IoRecord read_csv(std::istream& in);

void save_csv(const std::filesystem::path& path, const IoRecord& record);
IoRecord load_csv(const std::filesystem::path& path);

}  // namespace tnkf::volterra
