#include "graphdict/serialize.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace graphdict {

namespace {

constexpr std::array<char, 4> kMagic{'G', 'D', 'S', 'M'};

template <typename T>
void put_le(std::vector<char>& buf, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  buf.insert(buf.end(), bytes.begin(), bytes.end());
}

template <typename T>
T get_le(const char* p) {
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode) {
  std::ofstream out(path, mode);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode) {
  std::ifstream in(path, mode);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  return in;
}

std::string format_double(double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  return {buf, static_cast<std::size_t>(n)};
}

}  // namespace

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
  std::string text = "# gdsm-csv rows=" + std::to_string(m.rows()) + " cols=" + std::to_string(m.cols()) +
                     " ordering=" + kEdgeOrderingTag + "\n";
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (c) text += ',';
      text += format_double(m(r, c));
    }
    text += '\n';
  }
  write_text(path, text);
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::in);
  std::string header;
  std::getline(in, header);
  long rows = -1, cols = -1;
  char ordering[64] = {0};
  if (std::sscanf(header.c_str(), "# gdsm-csv rows=%ld cols=%ld ordering=%63s", &rows, &cols, ordering) != 3 ||
      rows < 0 || cols < 0)
    throw IoError("malformed CSV matrix header in " + path.string());
  if (std::string(ordering) != kEdgeOrderingTag)
    throw IoError("unsupported edge ordering '" + std::string(ordering) + "' in " + path.string());
  Matrix m(rows, cols);
  std::string line;
  for (long r = 0; r < rows; ++r) {
    if (!std::getline(in, line)) throw IoError("CSV matrix truncated: " + path.string());
    const char* p = line.data();
    const char* end = p + line.size();
    for (long c = 0; c < cols; ++c) {
      double v = 0.0;
      const auto res = std::from_chars(p, end, v);
      if (res.ec != std::errc()) throw IoError("bad number in CSV matrix " + path.string());
      m(r, c) = v;
      p = res.ptr;
      if (c + 1 < cols) {
        if (p == end || *p != ',') throw IoError("too few columns in CSV matrix " + path.string());
        ++p;
      }
    }
  }
  return m;
}

void write_matrix_binary(const std::filesystem::path& path, const Matrix& m) {
  if (m.rows() > UINT32_MAX || m.cols() > UINT32_MAX) throw IoError("matrix too large for GDSM block");
  std::vector<char> buf(kMagic.begin(), kMagic.end());
  buf.reserve(12 + 8 * static_cast<std::size_t>(m.size()));
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(m.rows()));
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(m.cols()));
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) put_le<double>(buf, m(r, c));
  auto out = open_out(path, std::ios::out | std::ios::binary | std::ios::trunc);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

Matrix read_matrix_binary(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::in | std::ios::binary);
  std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < 12 || !std::equal(kMagic.begin(), kMagic.end(), buf.begin()))
    throw IoError("not a GDSM matrix file: " + path.string());
  const auto rows = get_le<std::uint32_t>(buf.data() + 4);
  const auto cols = get_le<std::uint32_t>(buf.data() + 8);
  const std::size_t count = static_cast<std::size_t>(rows) * cols;
  if (buf.size() != 12 + 8 * count) throw IoError("GDSM payload size mismatch: " + path.string());
  Matrix m(rows, cols);
  const char* p = buf.data() + 12;
  for (std::uint32_t r = 0; r < rows; ++r)
    for (std::uint32_t c = 0; c < cols; ++c, p += 8) m(r, c) = get_le<double>(p);
  return m;
}

void save_matrix(const std::filesystem::path& path, const Matrix& m) {
  if (path.extension() == ".csv")
    write_matrix_csv(path, m);
  else
    write_matrix_binary(path, m);
}

Matrix load_matrix(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? read_matrix_csv(path) : read_matrix_binary(path);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_out(path, std::ios::out | std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::in | std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace graphdict
