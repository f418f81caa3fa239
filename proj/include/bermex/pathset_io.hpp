#pragma once

#include <filesystem>
#include <iosfwd>

#include "bermex/mc_engine.hpp"

namespace bermex {

/// Binary dump: "XPSE", version u32, M u64, N+1 u32, d u32, measure tag u8, seed u64,
/// then little-endian doubles [path][date][component]. The exercise dates follow the
/// header as N+1 doubles so a reloaded set carries its grid.
void write_pathset(std::ostream& out, const PathSet& paths);
PathSet read_pathset(std::istream& in);

void save_pathset(const std::filesystem::path& file, const PathSet& paths);
PathSet load_pathset(const std::filesystem::path& file);

}  // namespace bermex
