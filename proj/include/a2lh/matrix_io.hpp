#pragma once

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "a2lh/error.hpp"

namespace a2lh {

enum class MatrixFormat { csv, binary };

inline MatrixFormat format_from_path(const std::filesystem::path& p) {
  return p.extension() == ".csv" ? MatrixFormat::csv : MatrixFormat::binary;
}

namespace detail {

inline constexpr std::array<char, 4> kMatrixMagic = {'A', '2', 'L', 'H'};
inline constexpr std::uint32_t kMatrixVersion = 1;

template <typename T>
T byteswap_if_big(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::array<unsigned char, sizeof(T)> b;
    std::memcpy(b.data(), &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b.data(), sizeof(T));
  }
  return v;
}

template <typename T>
void write_le(std::ostream& os, T v) {
  v = byteswap_if_big(v);
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_le(std::istream& is, std::string_view what) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (is.gcount() != static_cast<std::streamsize>(sizeof(T)))
    throw ParseError("truncated matrix container while reading " + std::string(what));
  return byteswap_if_big(v);
}

}  // namespace detail

/// Size in bytes of the binary container holding a rows x cols matrix.
constexpr std::uint64_t container_size(std::uint64_t rows, std::uint64_t cols) {
  return 4 + 4 + 8 + 8 + 8 * rows * cols;
}

/// Writes one binary container: magic, version, rows, cols, row-major float64.
inline void write_container(std::ostream& os, const Eigen::MatrixXd& m) {
  os.write(detail::kMatrixMagic.data(), 4);
  detail::write_le<std::uint32_t>(os, detail::kMatrixVersion);
  detail::write_le<std::uint64_t>(os, static_cast<std::uint64_t>(m.rows()));
  detail::write_le<std::uint64_t>(os, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) detail::write_le<double>(os, m(i, j));
  if (!os) throw IoError("failed writing matrix container");
}

/// Reads exactly one container from the current stream position.
inline Eigen::MatrixXd read_container(std::istream& is) {
  std::array<char, 4> magic{};
  is.read(magic.data(), 4);
  if (is.gcount() != 4 || magic != detail::kMatrixMagic)
    throw ParseError("bad magic in matrix header (expected \"A2LH\")");
  const auto version = detail::read_le<std::uint32_t>(is, "version");
  if (version != detail::kMatrixVersion)
    throw ParseError("unsupported matrix format version " + std::to_string(version));
  const auto rows = detail::read_le<std::uint64_t>(is, "rows");
  const auto cols = detail::read_le<std::uint64_t>(is, "cols");
  if (rows > (1ULL << 40) || cols > (1ULL << 40) || (rows && cols > (1ULL << 40) / rows))
    throw ParseError("implausible matrix shape in header");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::vector<double> row(cols);
  for (std::uint64_t i = 0; i < rows; ++i) {
    is.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(8 * cols));
    if (is.gcount() != static_cast<std::streamsize>(8 * cols))
      throw ParseError("payload shorter than header shape " + std::to_string(rows) + "x" +
                       std::to_string(cols) + " (ran out at row " + std::to_string(i) + ")");
    for (std::uint64_t j = 0; j < cols; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          detail::byteswap_if_big(row[j]);
  }
  return m;
}

inline Eigen::MatrixXd parse_csv(std::istream& is) {
  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::size_t fields = 0;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      std::string_view field = rest.substr(0, comma);
      while (!field.empty() && (field.front() == ' ' || field.front() == '\t'))
        field.remove_prefix(1);
      while (!field.empty() && (field.back() == ' ' || field.back() == '\t'))
        field.remove_suffix(1);
      if (!field.empty() && field.front() == '+') field.remove_prefix(1);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (field.empty() || ec != std::errc() || ptr != field.data() + field.size())
        throw ParseError("CSV line " + std::to_string(lineno) + ", column " +
                         std::to_string(fields + 1) + ": cannot parse '" + std::string(field) +
                         "'");
      if (!std::isfinite(v))
        throw ParseError("CSV line " + std::to_string(lineno) + ", column " +
                         std::to_string(fields + 1) + ": non-finite entry");
      values.push_back(v);
      ++fields;
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (rows == 0) {
      cols = fields;
    } else if (fields != cols) {
      throw ParseError("CSV line " + std::to_string(lineno) + ": expected " +
                       std::to_string(cols) + " fields, found " + std::to_string(fields));
    }
    ++rows;
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[i * cols + j];
  return m;
}

inline void write_csv(std::ostream& os, const Eigen::MatrixXd& m) {
  std::array<char, 64> buf{};
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) os.put(',');
      const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), m(i, j));
      os.write(buf.data(), ptr - buf.data());
    }
    os.put('\n');
  }
}

/// Throws ParseError naming the first non-finite entry (0-based row/col).
inline void check_finite(const Eigen::MatrixXd& m, std::string_view what) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (!std::isfinite(m(i, j)))
        throw ParseError(std::string(what) + ": non-finite entry at row " + std::to_string(i) +
                         ", col " + std::to_string(j));
}

/// Reads a raw matrix. Binary files must contain exactly one container.
inline Eigen::MatrixXd read_matrix(const std::filesystem::path& path, MatrixFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  Eigen::MatrixXd m;
  if (format == MatrixFormat::csv) {
    m = parse_csv(in);
  } else {
    m = read_container(in);
    in.peek();
    if (!in.eof())
      throw ParseError("'" + path.string() + "': trailing bytes after matrix payload");
  }
  check_finite(m, path.string());
  return m;
}

inline void write_raw_matrix(const Eigen::MatrixXd& m, const std::filesystem::path& path,
                             MatrixFormat format) {
  if (path.empty()) throw IoError("empty output path");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  if (format == MatrixFormat::csv)
    write_csv(out, m);
  else
    write_container(out, m);
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace a2lh
