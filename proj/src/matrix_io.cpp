#include "orifeat/matrix_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace orifeat::matrix_io {

namespace {

constexpr std::array<char, 4> kMagic = {'M', 'P', 'F', '1'};
constexpr std::uint8_t kMaxFeatureTag = 7;

void put_le(std::ostream& out, std::uint64_t v, int bytes) {
  char b[8];
  for (int i = 0; i < bytes; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, bytes);
}

std::uint64_t get_le(const unsigned char* p, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path, bool binary) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

}  // namespace

void write_mpf(const Matrix& m, std::uint8_t kind_tag, const std::filesystem::path& path) {
  auto out = open_out(path, true);
  out.write(kMagic.data(), 4);
  put_le(out, static_cast<std::uint32_t>(m.rows()), 4);
  put_le(out, static_cast<std::uint32_t>(m.cols()), 4);
  put_le(out, kind_tag, 1);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) put_le(out, std::bit_cast<std::uint64_t>(m(i, j)), 8);
  if (!out) throw Error("write failed for " + path.string());
}

TaggedMatrix read_mpf(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  const std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  if (bytes.size() < kMpfHeaderBytes) throw FormatError("truncated MPF1 header", bytes.size());
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) throw FormatError("bad MPF1 magic", 0);
  const std::uint64_t rows = get_le(bytes.data() + 4, 4);
  const std::uint64_t cols = get_le(bytes.data() + 8, 4);
  TaggedMatrix out;
  out.tag = bytes[12];
  const std::uint64_t expected = kMpfHeaderBytes + rows * cols * 8;
  if (bytes.size() < expected) throw FormatError("truncated MPF1 payload", bytes.size());
  if (bytes.size() > expected) throw FormatError("trailing bytes after MPF1 payload", expected);
  out.data.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  const unsigned char* p = bytes.data() + kMpfHeaderBytes;
  for (Eigen::Index i = 0; i < out.data.rows(); ++i)
    for (Eigen::Index j = 0; j < out.data.cols(); ++j, p += 8) out.data(i, j) = std::bit_cast<double>(get_le(p, 8));
  return out;
}

void write_features(const features::FeatureMatrix& f, const std::filesystem::path& path) {
  write_mpf(f.data(), static_cast<std::uint8_t>(f.kind()), path);
}

features::FeatureMatrix read_features(const std::filesystem::path& path) {
  TaggedMatrix m = read_mpf(path);
  if (m.tag > kMaxFeatureTag)
    throw FormatError("MPF1 kind tag " + std::to_string(m.tag) + " is not a feature kind", 12);
  return features::FeatureMatrix(std::move(m.data), static_cast<features::FeatureKind>(m.tag));
}

void write_csv(const Matrix& m, const std::vector<std::string>& header, const std::filesystem::path& path,
               bool frame_column) {
  if (static_cast<Eigen::Index>(header.size()) != m.cols() + (frame_column ? 1 : 0))
    throw DomainError("CSV header width does not match the matrix");
  auto out = open_out(path, false);
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  out << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (frame_column) out << i << ',';
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_double(m(i, j));
    out << '\n';
  }
  if (!out) throw Error("write failed for " + path.string());
}

void write_features_csv(const features::FeatureMatrix& f, const std::filesystem::path& path) {
  std::vector<std::string> header{"frame"};
  for (Eigen::Index j = 0; j < f.dims(); ++j) header.push_back(f.column_name(j));
  write_csv(f.data(), header, path, true);
}

void write_grid_csv(const Matrix& m, const std::filesystem::path& path) {
  auto out = open_out(path, false);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_double(m(i, j));
    out << '\n';
  }
  if (!out) throw Error("write failed for " + path.string());
}

Matrix read_csv(const std::filesystem::path& path, std::vector<std::string>* header) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty CSV file " + path.string(), 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> names;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) names.push_back(cell);
  }
  std::vector<double> values;
  std::size_t rows = 0;
  std::uint64_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t n = 0;
    while (std::getline(ss, cell, ',')) {
      double v = 0.0;
      if (cell == "nan") {
        v = std::nan("");
      } else {
        const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (ec != std::errc() || ptr != cell.data() + cell.size())
          throw FormatError("non-numeric CSV cell '" + cell + "'", line_no);
      }
      values.push_back(v);
      ++n;
    }
    if (n != names.size()) throw FormatError("CSV row has " + std::to_string(n) + " cells", line_no);
    ++rows;
  }
  Matrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(names.size()));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < names.size(); ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[i * names.size() + j];
  if (header) *header = std::move(names);
  return out;
}

}  // namespace orifeat::matrix_io
