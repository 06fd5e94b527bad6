#pragma once

#include <string>
#include <vector>

#include "core/mac_grid.hpp"

namespace rtlab {

/// Flat-binary field file: a short ASCII header (key value per line,
/// terminated by a lone "data" line) followed by row-major little-endian
/// float64 payload.
void write_field(const std::string& path, const std::string& name,
                 const std::string& kind, const MacGrid& grid,
                 const Array2D& field, double time = 0.0);

struct FieldFile {
    std::string name, kind;
    int nx = 0, nz = 0;
    double Lx = 0.0, Lz = 0.0;
    bool periodic_x = false;
    double time = 0.0;
    Array2D data;
};

FieldFile read_field(const std::string& path);

/// CSV with one header line; rows are written with %.17g so reruns are
/// byte-identical.
class CsvWriter {
  public:
    CsvWriter(const std::string& path, const std::vector<std::string>& columns);
    ~CsvWriter();
    void row(const std::vector<double>& values);

  private:
    struct Impl;
    Impl* impl_;
};

void ensure_directory(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

} // namespace rtlab
