#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "graphdict/edge_space.hpp"

namespace graphdict {

// Raised for unreadable/unwritable paths and malformed matrix files.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// CSV layout:
//   # gdsm-csv rows=<R> cols=<C> ordering=upper-row-major-v1
//   v00,v01,...
// Values are printed with 17 significant digits so a read gives back the
// exact doubles.
//
// Binary layout (all little-endian):
//   bytes 0..3   "GDSM"
//   u32          rows
//   u32          cols
//   f64[R*C]     row-major payload

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix_csv(const std::filesystem::path& path);

void write_matrix_binary(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix_binary(const std::filesystem::path& path);

// Dispatch on extension: ".csv" is CSV, anything else is the binary block.
void save_matrix(const std::filesystem::path& path, const Matrix& m);
Matrix load_matrix(const std::filesystem::path& path);

// Write a text file, throwing IoError on failure.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace graphdict
