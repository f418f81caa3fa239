#include "bermex/pathset_io.hpp"

#include <fstream>

#include "binary_io.hpp"

namespace bermex {

namespace {
constexpr std::uint32_t kVersion = 1;
}

void write_pathset(std::ostream& out, const PathSet& paths) {
    out.write("XPSE", 4);
    detail::put<std::uint32_t>(out, kVersion);
    detail::put<std::uint64_t>(out, paths.paths());
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(paths.dates()));
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(paths.dim()));
    detail::put<std::uint8_t>(out, paths.measure().tag());
    detail::put<std::uint64_t>(out, paths.seed());
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(paths.grid().substeps()));
    detail::put_doubles(out, paths.grid().dates().data(), paths.grid().dates().size());
    detail::put_doubles(out, paths.raw().data(), paths.raw().size());
    if (!out) throw std::runtime_error("failed to write path set");
}

PathSet read_pathset(std::istream& in) {
    detail::expect_magic(in, "XPSE");
    const auto version = detail::get<std::uint32_t>(in);
    if (version != kVersion) throw std::runtime_error("unsupported XPSE version " + std::to_string(version));
    const auto m = detail::get<std::uint64_t>(in);
    const auto dates = detail::get<std::uint32_t>(in);
    const auto dim = detail::get<std::uint32_t>(in);
    const auto tag = detail::get<std::uint8_t>(in);
    const auto seed = detail::get<std::uint64_t>(in);
    const auto substeps = detail::get<std::uint32_t>(in);
    std::vector<double> grid(dates);
    detail::get_doubles(in, grid.data(), grid.size());
    std::vector<double> states(m * dates * dim);
    detail::get_doubles(in, states.data(), states.size());
    return PathSet(m, TimeGrid(std::move(grid), static_cast<int>(substeps)), static_cast<int>(dim),
                   Measure::from_tag(tag), seed, std::move(states));
}

void save_pathset(const std::filesystem::path& file, const PathSet& paths) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + file.string());
    write_pathset(out, paths);
}

PathSet load_pathset(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + file.string());
    return read_pathset(in);
}

}  // namespace bermex
