#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "ness/core.hpp"
#include "ness/observables.hpp"

namespace ness {

/// Raised on unreadable, unwritable or malformed files.
class IoError : public Error {
 public:
  using Error::Error;
};

// Field snapshot layout, all little-endian:
//   "NESS" | u32 version | u32 n_points | f64 x_min | f64 x_max | f64 time |
//   n_points x (f64 re, f64 im)
inline constexpr std::uint32_t kSnapshotVersion = 1;

struct SnapshotFile {
  double time = 0.0;
  WaveField field;
};

void write_snapshot(std::ostream& out, const WaveField& field, double time);
void write_snapshot(const std::filesystem::path& path, const WaveField& field, double time);

/// Reads a snapshot and rebuilds its grid. Throws IoError on a bad magic,
/// unknown version, truncated payload or a grid the Grid type rejects.
SnapshotFile read_snapshot(std::istream& in);
SnapshotFile read_snapshot(const std::filesystem::path& path);

/// Writes `t,norm,x_c,peak_density,peak_amplitude,sigma_t` rows after a
/// `#`-prefixed header that records the config hash. Values are printed with
/// 17 significant digits so the file round-trips doubles exactly.
void write_time_series(std::ostream& out, const TimeSeries& series, const std::string& config_hash);
void write_time_series(const std::filesystem::path& path, const TimeSeries& series,
                       const std::string& config_hash);

/// Parses a file written by write_time_series; gain_rate is left empty.
TimeSeries read_time_series(std::istream& in, std::string* config_hash = nullptr);

}  // namespace ness
