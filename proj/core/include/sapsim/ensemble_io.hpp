#pragma once

// Binary ensemble dump. Layout, little-endian:
//   char[8]  magic "SAPSIMEN"
//   uint32   format version
//   uint32   N (modes)
//   uint64   P (paths)
//   uint64   grid length
//   float64  dt
//   float64  values[P][grid length][N]
// Paths that blew up carry NaN after the failure and are restored as invalid.

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "sapsim/hilbert.hpp"

namespace sapsim {

inline constexpr std::uint32_t kEnsembleFormatVersion = 1;

void write_ensemble(std::ostream& os, const PathEnsemble& ens);
void write_ensemble(const std::filesystem::path& file, const PathEnsemble& ens);

/// Throws InvalidInput on a bad magic, unknown version or truncated data.
PathEnsemble read_ensemble(std::istream& is);
PathEnsemble read_ensemble(const std::filesystem::path& file);

}  // namespace sapsim
