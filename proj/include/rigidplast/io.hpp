#pragma once

// Artifact writers: CSV metrics, JSON summaries, legacy ASCII VTK fields.
// Doubles are written in shortest round-trip form (format_double) so the
// files are byte-stable across runs.

#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "rigidplast/config.hpp"
#include "rigidplast/error.hpp"
#include "rigidplast/mesh.hpp"

namespace rigidplast {

using Json = nlohmann::ordered_json;

/// Schema version of metrics.csv headers and summary.json keys.
inline constexpr int kSchemaVersion = 1;

inline void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw IoError("cannot create output directory " + dir.string());
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  out.close();
  if (!out) throw IoError("failed writing " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

/// Cell value of a CSV row.
class CsvCell {
 public:
  CsvCell(double v) : text_(format_double(v)) {}                       // NOLINT implicit
  CsvCell(int v) : text_(std::to_string(v)) {}                          // NOLINT implicit
  CsvCell(std::size_t v) : text_(std::to_string(v)) {}                  // NOLINT implicit
  CsvCell(std::string v) : text_(std::move(v)) {}                       // NOLINT implicit
  CsvCell(const char* v) : text_(v) {}                                  // NOLINT implicit
  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add(const std::vector<CsvCell>& row) {
    if (row.size() != header_.size())
      throw InternalError("cli_io", "CSV row width does not match the header");
    std::string line;
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) line += ',';
      line += row[i].text();
    }
    rows_.push_back(std::move(line));
  }

  const std::vector<std::string>& header() const { return header_; }

  std::string str() const {
    std::string s;
    for (std::size_t i = 0; i < header_.size(); ++i) {
      if (i > 0) s += ',';
      s += header_[i];
    }
    s += '\n';
    for (const auto& r : rows_) s += r + '\n';
    return s;
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::string> rows_;
};

/// JSON number that is null for non-finite values.
inline Json json_number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

inline std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

struct VtkPointVector {
  std::string name;
  FieldP1 values;
};
struct VtkCellTensor {
  std::string name;
  FieldP0 values;
};
struct VtkCellScalar {
  std::string name;
  std::vector<double> values;
};

/// Legacy ASCII unstructured grid with triangles (VTK cell type 5).
inline std::string vtk_text(const Mesh& mesh, const std::string& title,
                            const std::vector<VtkPointVector>& point_vectors,
                            const std::vector<VtkCellTensor>& cell_tensors,
                            const std::vector<VtkCellScalar>& cell_scalars) {
  std::string s = "# vtk DataFile Version 3.0\n" + title + "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  s += "POINTS " + std::to_string(mesh.num_nodes()) + " double\n";
  for (const auto& x : mesh.nodes) s += format_double(x[0]) + ' ' + format_double(x[1]) + " 0\n";
  s += "CELLS " + std::to_string(mesh.num_cells()) + ' ' + std::to_string(4 * mesh.num_cells()) + '\n';
  for (const auto& t : mesh.triangles)
    s += "3 " + std::to_string(t[0]) + ' ' + std::to_string(t[1]) + ' ' + std::to_string(t[2]) + '\n';
  s += "CELL_TYPES " + std::to_string(mesh.num_cells()) + '\n';
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) s += "5\n";
  if (!point_vectors.empty()) {
    s += "POINT_DATA " + std::to_string(mesh.num_nodes()) + '\n';
    for (const auto& f : point_vectors) {
      if (f.values.size() != mesh.num_nodes())
        throw InternalError("cli_io", "VTK point field size mismatch: " + f.name);
      s += "VECTORS " + f.name + " double\n";
      for (const auto& v : f.values) s += format_double(v[0]) + ' ' + format_double(v[1]) + " 0\n";
    }
  }
  if (!cell_tensors.empty() || !cell_scalars.empty()) {
    s += "CELL_DATA " + std::to_string(mesh.num_cells()) + '\n';
    for (const auto& f : cell_tensors) {
      if (f.values.size() != mesh.num_cells())
        throw InternalError("cli_io", "VTK cell field size mismatch: " + f.name);
      s += "TENSORS " + f.name + " double\n";
      for (const auto& t : f.values) {
        const std::string xy = format_double(t(0, 1));
        s += format_double(t(0, 0)) + ' ' + xy + " 0\n" + xy + ' ' + format_double(t(1, 1)) +
             " 0\n0 0 0\n";
      }
    }
    for (const auto& f : cell_scalars) {
      if (f.values.size() != mesh.num_cells())
        throw InternalError("cli_io", "VTK cell field size mismatch: " + f.name);
      s += "SCALARS " + f.name + " double 1\nLOOKUP_TABLE default\n";
      for (double v : f.values) s += format_double(v) + '\n';
    }
  }
  return s;
}

/// Machine-readable failure record written as error.json.
inline Json error_record(const std::string& type, const std::string& module,
                         const std::string& message, int exit_code) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["status"] = "error";
  j["exit_code"] = exit_code;
  j["error"] = {{"type", type}, {"module", module}, {"message", message}};
  return j;
}

}  // namespace rigidplast
