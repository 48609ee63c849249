#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "waveinv/field.hpp"

namespace waveinv {

/// Raw contents of a WFLD1 file.
struct WfldArray {
  std::vector<std::uint32_t> shape;
  bool complex = false;
  std::vector<double> data;  // interleaved (re, im) when complex
};

/// Writes "WFLD1", u8 dim, u32 shape[dim], u8 kind (0 real, 1 complex),
/// then the little-endian row-major payload.
void write_wfld(const std::filesystem::path& path, const WfldArray& array);
WfldArray read_wfld(const std::filesystem::path& path);

/// Field shape is (levels, nodes along x[, nodes along y]).
void write_field(const std::filesystem::path& path, const Field& f);
void write_field(const std::filesystem::path& path, const ComplexField& f);
/// A spatial state pair as shape (2, nodes along x[, nodes along y]).
void write_state(const std::filesystem::path& path, const Grid& grid, const Spatial& u, const Spatial& ut);

/// Long-format CSV: t, x[, y], value (plus an edge column for flux traces in 2D).
void write_trace_csv(const std::filesystem::path& path, const BoundaryTrace& tr);

/// Shortest round-trip decimal form of a double.
std::string fmt(double v);

/// Small CSV writer with deterministic number formatting.
class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path);
  ~CsvWriter();
  void header(const std::vector<std::string>& cols);
  void row(const std::vector<double>& values);
  void row_text(const std::vector<std::string>& values);
  /// Writes the buffered rows; called by the destructor if not done earlier.
  void close();

 private:
  std::filesystem::path path_;
  std::string buf_;
  bool flushed_ = false;
};

}  // namespace waveinv
