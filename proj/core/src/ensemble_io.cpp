#include "sapsim/ensemble_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace sapsim {
namespace {

static_assert(std::endian::native == std::endian::little,
              "ensemble dumps are written in host order; big-endian hosts need byte swapping");

constexpr std::array<char, 8> kMagic{'S', 'A', 'P', 'S', 'I', 'M', 'E', 'N'};

template <class T>
void put(std::ostream& os, T value) {
    os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T get(std::istream& is) {
    T value{};
    if (!is.read(reinterpret_cast<char*>(&value), sizeof(T))) {
        throw InvalidInput("ensemble dump is truncated");
    }
    return value;
}

}  // namespace

void write_ensemble(std::ostream& os, const PathEnsemble& ens) {
    os.write(kMagic.data(), kMagic.size());
    put<std::uint32_t>(os, kEnsembleFormatVersion);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(ens.dim()));
    put<std::uint64_t>(os, ens.paths());
    put<std::uint64_t>(os, ens.grid().points);
    put<double>(os, ens.grid().dt);
    const auto raw = ens.raw();
    os.write(reinterpret_cast<const char*>(raw.data()),
             static_cast<std::streamsize>(raw.size() * sizeof(double)));
    if (!os) throw InvalidInput("failed to write ensemble dump");
}

void write_ensemble(const std::filesystem::path& file, const PathEnsemble& ens) {
    std::ofstream os(file, std::ios::binary);
    if (!os) throw InvalidInput("cannot open " + file.string() + " for writing");
    write_ensemble(os, ens);
}

PathEnsemble read_ensemble(std::istream& is) {
    std::array<char, 8> magic{};
    if (!is.read(magic.data(), magic.size()) || magic != kMagic) {
        throw InvalidInput("not an ensemble dump (bad magic)");
    }
    const auto version = get<std::uint32_t>(is);
    if (version != kEnsembleFormatVersion) {
        throw InvalidInput("unsupported ensemble dump version " + std::to_string(version));
    }
    const auto dim = get<std::uint32_t>(is);
    const auto paths = get<std::uint64_t>(is);
    const auto points = get<std::uint64_t>(is);
    const auto dt = get<double>(is);

    PathEnsemble ens(TimeGrid{dt, points}, paths, dim, 0);
    auto raw = ens.raw();
    if (!is.read(reinterpret_cast<char*>(raw.data()),
                 static_cast<std::streamsize>(raw.size() * sizeof(double)))) {
        throw InvalidInput("ensemble dump is truncated");
    }
    const std::size_t row = points * dim;
    for (std::size_t i = 0; i < paths; ++i) {
        const auto first = raw.begin() + static_cast<std::ptrdiff_t>(i * row);
        if (!std::all_of(first, first + static_cast<std::ptrdiff_t>(row),
                         [](double v) { return std::isfinite(v); })) {
            ens.mark_invalid(i);
        }
    }
    return ens;
}

PathEnsemble read_ensemble(const std::filesystem::path& file) {
    std::ifstream is(file, std::ios::binary);
    if (!is) throw InvalidInput("cannot open " + file.string());
    return read_ensemble(is);
}

}  // namespace sapsim
