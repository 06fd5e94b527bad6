#include "core/field_io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "core/error.hpp"

namespace rtlab {

void write_field(const std::string& path, const std::string& name,
                 const std::string& kind, const MacGrid& grid,
                 const Array2D& field, double time) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::IoError, "cannot write field file " + path);
    char head[512];
    std::snprintf(head, sizeof(head),
                  "RTLAB-FIELD 1\n"
                  "name %s\n"
                  "kind %s\n"
                  "grid %d %d\n"
                  "extent %.17g %.17g\n"
                  "periodic_x %d\n"
                  "time %.17g\n"
                  "shape %d %d\n"
                  "layout row-major-j\n"
                  "data\n",
                  name.c_str(), kind.c_str(), grid.nx, grid.nz, grid.Lx,
                  grid.Lz, grid.periodic_x ? 1 : 0, time, field.n1, field.n2);
    out << head;
    out.write(reinterpret_cast<const char*>(field.v.data()),
              static_cast<std::streamsize>(field.v.size() * sizeof(double)));
}

FieldFile read_field(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::IoError, "cannot read field file " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("RTLAB-FIELD", 0) != 0)
        fail(ErrorCode::IoError, path + " is not a field file");
    FieldFile f;
    int n1 = 0, n2 = 0;
    while (std::getline(in, line)) {
        if (line == "data") break;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "name") ls >> f.name;
        else if (key == "kind") ls >> f.kind;
        else if (key == "grid") ls >> f.nx >> f.nz;
        else if (key == "extent") ls >> f.Lx >> f.Lz;
        else if (key == "periodic_x") { int p; ls >> p; f.periodic_x = p != 0; }
        else if (key == "time") ls >> f.time;
        else if (key == "shape") ls >> n1 >> n2;
    }
    if (n1 <= 0 || n2 <= 0)
        fail(ErrorCode::IoError, "field file " + path + " missing shape");
    f.data = Array2D(n1, n2);
    in.read(reinterpret_cast<char*>(f.data.v.data()),
            static_cast<std::streamsize>(f.data.v.size() * sizeof(double)));
    if (!in)
        fail(ErrorCode::IoError, "field file " + path + " truncated payload");
    return f;
}

struct CsvWriter::Impl {
    std::ofstream out;
};

CsvWriter::CsvWriter(const std::string& path,
                     const std::vector<std::string>& columns)
    : impl_(new Impl) {
    impl_->out.open(path);
    if (!impl_->out) fail(ErrorCode::IoError, "cannot write csv " + path);
    for (size_t i = 0; i < columns.size(); ++i)
        impl_->out << columns[i] << (i + 1 < columns.size() ? "," : "\n");
}

CsvWriter::~CsvWriter() { delete impl_; }

void CsvWriter::row(const std::vector<double>& values) {
    char buf[32];
    for (size_t i = 0; i < values.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", values[i]);
        impl_->out << buf << (i + 1 < values.size() ? "," : "\n");
    }
}

void ensure_directory(const std::string& path) {
    std::error_code ec;
    std::filesystem::create_directories(path, ec);
    if (ec) fail(ErrorCode::IoError, "cannot create directory " + path);
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) fail(ErrorCode::IoError, "cannot write " + path);
    out << text;
}

} // namespace rtlab
