#pragma once

#include "ctt/tt.hpp"

#include <filesystem>
#include <iosfwd>

namespace ctt {

// Binary layout (all integers u64 little-endian unless noted), see docs/formats.md:
//   "CTTT" | u32 version | u64 order d | u64 r0 | u64 n[d] | u64 ranks[d+1]
//   | cores 1..d, each row-major (r_{j-1}, n_j, r_j) as f64 little-endian
void write_tt(std::ostream& os, const TTTensor& a);
[[nodiscard]] TTTensor read_tt(std::istream& is);

void write_dense(std::ostream& os, const DenseTensor& t);
[[nodiscard]] DenseTensor read_dense(std::istream& is);

void save_tt(const std::filesystem::path& path, const TTTensor& a);
[[nodiscard]] TTTensor load_tt(const std::filesystem::path& path);

}  // namespace ctt
