// SPDX-License-Identifier: Apache-2.0
//
// Measured-channel container.
//
// Binary layout, all fields little-endian:
//   char[4]  magic "CFMD"
//   u32      version (1)
//   u32      number of AP antenna locations M
//   u32      number of UE locations K
//   u32      number of frequency indices F
//   u32      flags (bit 0: coordinate table present)
//   f64[3M]  AP coordinates x,y,z   (only with bit 0)
//   f64[3K]  UE coordinates x,y,z   (only with bit 0)
//   f64[2MKF] re,im pairs, row-major over (m, k, i)
//
// CSV variant: header "m,k,i,re,im", one row per coefficient, no coordinates.

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>

#include "cfmimo/channel.hpp"

namespace cfmimo {

namespace {

constexpr std::array<char, 4> kMagic{'C', 'F', 'M', 'D'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kFlagCoordinates = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  std::array<char, 4> b{};
  for (int j = 0; j < 4; ++j) b[j] = static_cast<char>((v >> (8 * j)) & 0xFF);
  out.write(b.data(), b.size());
}

void put_f64(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  std::array<char, 8> b{};
  for (int j = 0; j < 8; ++j) b[j] = static_cast<char>((bits >> (8 * j)) & 0xFF);
  out.write(b.data(), b.size());
}

class ByteReader {
 public:
  explicit ByteReader(std::istream& in) : in_(in) {}

  std::uint64_t raw(int bytes) {
    std::array<unsigned char, 8> b{};
    in_.read(reinterpret_cast<char*>(b.data()), bytes);
    if (in_.gcount() != bytes) throw MalformedDataset("dataset file is truncated");
    std::uint64_t v = 0;
    for (int j = bytes - 1; j >= 0; --j) v = (v << 8) | b[j];
    return v;
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(raw(4)); }
  double f64() { return std::bit_cast<double>(raw(8)); }

 private:
  std::istream& in_;
};

MeasuredDataset read_binary(std::istream& in) {
  ByteReader r(in);
  std::array<char, 4> magic{};
  in.read(magic.data(), 4);
  if (magic != kMagic) throw MalformedDataset("bad dataset magic");
  if (r.u32() != kVersion) throw MalformedDataset("unsupported dataset version");
  MeasuredDataset ds;
  ds.num_ap_locations = static_cast<int>(r.u32());
  ds.num_ue_locations = static_cast<int>(r.u32());
  ds.num_frequencies = static_cast<int>(r.u32());
  const std::uint32_t flags = r.u32();
  if (ds.num_ap_locations < 1 || ds.num_ue_locations < 1 || ds.num_frequencies < 1)
    throw MalformedDataset("dataset dimensions must be positive");
  ds.has_coordinates = (flags & kFlagCoordinates) != 0;
  if (ds.has_coordinates) {
    auto read_coords = [&](int count, std::vector<Vector3d>& out) {
      out.resize(count);
      for (auto& p : out) {
        const double x = r.f64();
        const double y = r.f64();
        const double z = r.f64();
        p = {x, y, z};
      }
    };
    read_coords(ds.num_ap_locations, ds.ap_coords);
    read_coords(ds.num_ue_locations, ds.ue_coords);
  }
  ds.coefficients.resize(ds.offset(ds.num_ap_locations, 0, 0));
  for (auto& c : ds.coefficients) {
    const double re = r.f64();
    const double im = r.f64();
    c = {re, im};
  }
  if (in.peek() != std::char_traits<char>::eof()) throw MalformedDataset("trailing bytes after dataset payload");
  ds.validate();
  return ds;
}

template <typename T>
T parse_field(const std::string& text, std::size_t line) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  while (first < last && *first == ' ') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  while (ptr < last && (*ptr == ' ' || *ptr == '\r')) ++ptr;
  if (ec != std::errc{} || ptr != last)
    throw MalformedDataset("line " + std::to_string(line) + ": cannot parse '" + text + "'");
  return value;
}

MeasuredDataset read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw MalformedDataset("empty dataset file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "m,k,i,re,im") throw MalformedDataset("CSV dataset header must be 'm,k,i,re,im'");

  std::map<std::array<int, 3>, std::complex<double>> entries;
  int max_m = -1, max_k = -1, max_i = -1;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 5) throw MalformedDataset("line " + std::to_string(lineno) + ": expected 5 columns");
    const std::array<int, 3> key{parse_field<int>(fields[0], lineno), parse_field<int>(fields[1], lineno),
                                 parse_field<int>(fields[2], lineno)};
    if (key[0] < 0 || key[1] < 0 || key[2] < 0)
      throw MalformedDataset("line " + std::to_string(lineno) + ": negative index");
    const std::complex<double> value{parse_field<double>(fields[3], lineno), parse_field<double>(fields[4], lineno)};
    if (!entries.emplace(key, value).second)
      throw MalformedDataset("line " + std::to_string(lineno) + ": duplicate (m,k,i)");
    max_m = std::max(max_m, key[0]);
    max_k = std::max(max_k, key[1]);
    max_i = std::max(max_i, key[2]);
  }
  MeasuredDataset ds;
  ds.num_ap_locations = max_m + 1;
  ds.num_ue_locations = max_k + 1;
  ds.num_frequencies = max_i + 1;
  if (entries.empty()) throw MalformedDataset("CSV dataset has no rows");
  if (entries.size() != ds.offset(ds.num_ap_locations, 0, 0))
    throw MalformedDataset("CSV dataset is missing (m,k,i) entries");
  ds.coefficients.resize(entries.size());
  for (const auto& [key, value] : entries) ds.coefficients[ds.offset(key[0], key[1], key[2])] = value;
  ds.validate();
  return ds;
}

}  // namespace

MeasuredDataset load_measured(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MalformedDataset("cannot open dataset '" + path.string() + "'");
  std::array<char, 4> head{};
  in.read(head.data(), 4);
  const bool binary = in.gcount() == 4 && head == kMagic;
  in.clear();
  in.seekg(0);
  return binary ? read_binary(in) : read_csv(in);
}

void save_measured(const MeasuredDataset& dataset, const std::filesystem::path& path) {
  dataset.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write dataset '" + path.string() + "'");
  out.write(kMagic.data(), kMagic.size());
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(dataset.num_ap_locations));
  put_u32(out, static_cast<std::uint32_t>(dataset.num_ue_locations));
  put_u32(out, static_cast<std::uint32_t>(dataset.num_frequencies));
  put_u32(out, dataset.has_coordinates ? kFlagCoordinates : 0u);
  if (dataset.has_coordinates) {
    for (const auto& p : dataset.ap_coords)
      for (int j = 0; j < 3; ++j) put_f64(out, p(j));
    for (const auto& p : dataset.ue_coords)
      for (int j = 0; j < 3; ++j) put_f64(out, p(j));
  }
  for (const auto& c : dataset.coefficients) {
    put_f64(out, c.real());
    put_f64(out, c.imag());
  }
  if (!out) throw std::runtime_error("failed writing dataset '" + path.string() + "'");
}

void save_measured_csv(const MeasuredDataset& dataset, const std::filesystem::path& path) {
  dataset.validate();
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write dataset '" + path.string() + "'");
  out << "m,k,i,re,im\n";
  out.precision(17);
  for (int m = 0; m < dataset.num_ap_locations; ++m)
    for (int k = 0; k < dataset.num_ue_locations; ++k)
      for (int i = 0; i < dataset.num_frequencies; ++i) {
        const auto c = dataset.at(m, k, i);
        out << m << ',' << k << ',' << i << ',' << c.real() << ',' << c.imag() << '\n';
      }
}

}  // namespace cfmimo
