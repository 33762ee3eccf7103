#include "ness/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "ness/errors.hpp"

namespace ness {
namespace {

constexpr std::array<char, 4> kMagic{'N', 'E', 'S', 'S'};

template <typename T>
void put_le(std::ostream& out, T value) {
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::ranges::reverse(bytes);
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T get_le(std::istream& in, const char* what) {
  std::array<char, sizeof(T)> bytes;
  if (!in.read(bytes.data(), bytes.size())) throw IoError(std::string("snapshot truncated while reading ") + what);
  if constexpr (std::endian::native == std::endian::big) std::ranges::reverse(bytes);
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode) {
  std::ofstream out(path, mode);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode) {
  std::ifstream in(path, mode);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

void format_double(std::ostream& out, double v) {
  std::array<char, 32> buf;
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
  out.write(buf.data(), end - buf.data());
}

}  // namespace

void write_snapshot(std::ostream& out, const WaveField& field, double time) {
  const Grid& g = *field.grid;
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, kSnapshotVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(g.size()));
  put_le<double>(out, g.x_min());
  put_le<double>(out, g.x_max());
  put_le<double>(out, time);
  for (const auto& z : field.values) {
    put_le<double>(out, z.real());
    put_le<double>(out, z.imag());
  }
  if (!out) throw IoError("failed while writing snapshot");
}

void write_snapshot(const std::filesystem::path& path, const WaveField& field, double time) {
  auto out = open_out(path, std::ios::binary | std::ios::trunc);
  write_snapshot(out, field, time);
}

SnapshotFile read_snapshot(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw IoError("not a NESS snapshot (bad magic)");
  const auto version = get_le<std::uint32_t>(in, "version");
  if (version != kSnapshotVersion) {
    throw IoError("unsupported snapshot version " + std::to_string(version));
  }
  const auto n = get_le<std::uint32_t>(in, "n_points");
  const auto x_min = get_le<double>(in, "x_min");
  const auto x_max = get_le<double>(in, "x_max");
  SnapshotFile snap;
  snap.time = get_le<double>(in, "time");
  GridPtr grid;
  try {
    grid = make_grid(x_min, x_max, n);
  } catch (const ConfigError& e) {
    throw IoError(std::string("snapshot header describes an invalid grid: ") + e.what());
  }
  std::vector<complex> values(n);
  for (auto& z : values) {
    const double re = get_le<double>(in, "field values");
    const double im = get_le<double>(in, "field values");
    z = {re, im};
  }
  snap.field = WaveField(grid, std::move(values));
  return snap;
}

SnapshotFile read_snapshot(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::binary);
  return read_snapshot(in);
}

void write_time_series(std::ostream& out, const TimeSeries& s, const std::string& config_hash) {
  out << "# config_hash=" << config_hash << '\n';
  out << "t,norm,x_c,peak_density,peak_amplitude,sigma_t\n";
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (const auto* col : {&s.t, &s.norm, &s.x_c, &s.peak_density, &s.peak_amplitude, &s.sigma_t}) {
      if (col != &s.t) out << ',';
      format_double(out, (*col)[i]);
    }
    out << '\n';
  }
  if (!out) throw IoError("failed while writing time series");
}

void write_time_series(const std::filesystem::path& path, const TimeSeries& series,
                       const std::string& config_hash) {
  auto out = open_out(path, std::ios::trunc);
  write_time_series(out, series, config_hash);
}

TimeSeries read_time_series(std::istream& in, std::string* config_hash) {
  TimeSeries s;
  std::string line;
  bool header_seen = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line.front() == '#') {
      const auto pos = line.find("config_hash=");
      if (config_hash && pos != std::string::npos) *config_hash = line.substr(pos + 12);
      continue;
    }
    if (!header_seen) {
      if (line != "t,norm,x_c,peak_density,peak_amplitude,sigma_t") {
        throw IoError("time series line " + std::to_string(line_no) + ": unexpected column header");
      }
      header_seen = true;
      continue;
    }
    std::array<double, 6> row{};
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (std::size_t c = 0; c < row.size(); ++c) {
      const auto [next, ec] = std::from_chars(p, end, row[c]);
      if (ec != std::errc{} || (c + 1 < row.size() && (next == end || *next != ','))) {
        throw IoError("time series line " + std::to_string(line_no) + ": malformed row");
      }
      p = next + 1;
    }
    s.t.push_back(row[0]);
    s.norm.push_back(row[1]);
    s.x_c.push_back(row[2]);
    s.peak_density.push_back(row[3]);
    s.peak_amplitude.push_back(row[4]);
    s.sigma_t.push_back(row[5]);
  }
  if (!header_seen) throw IoError("time series has no column header");
  return s;
}

}  // namespace ness
