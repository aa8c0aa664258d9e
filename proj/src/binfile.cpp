#include "openasc/binfile.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "openasc/error.hpp"

namespace openasc {

namespace {

// The toolchain targets little-endian hosts; serialize through memcpy so the
// layout is still well defined under strict aliasing.
template <typename T>
void write_raw(std::ostream& os, T x) {
    char buf[sizeof(T)];
    std::memcpy(buf, &x, sizeof(T));
    os.write(buf, sizeof(T));
}

template <typename T>
T read_raw(std::istream& is, const std::string& what) {
    char buf[sizeof(T)];
    is.read(buf, sizeof(T));
    if (!is) fail(ErrorCode::CorruptFile, "truncated while reading " + what);
    T x;
    std::memcpy(&x, buf, sizeof(T));
    return x;
}

}  // namespace

void write_u32(std::ostream& os, uint32_t x) { write_raw(os, x); }
void write_u64(std::ostream& os, uint64_t x) { write_raw(os, x); }
void write_f32(std::ostream& os, float x) { write_raw(os, x); }
void write_f64(std::ostream& os, double x) { write_raw(os, x); }

void write_bytes(std::ostream& os, const void* data, size_t len) {
    os.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
}

uint32_t read_u32(std::istream& is, const std::string& what) { return read_raw<uint32_t>(is, what); }
uint64_t read_u64(std::istream& is, const std::string& what) { return read_raw<uint64_t>(is, what); }
float read_f32(std::istream& is, const std::string& what) { return read_raw<float>(is, what); }
double read_f64(std::istream& is, const std::string& what) { return read_raw<double>(is, what); }

void read_bytes(std::istream& is, void* data, size_t len, const std::string& what) {
    is.read(static_cast<char*>(data), static_cast<std::streamsize>(len));
    if (!is) fail(ErrorCode::CorruptFile, "truncated while reading " + what);
}

void write_matrix_file(const std::string& path, const MatrixFile& m, uint32_t magic) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) fail(ErrorCode::IoError, "cannot open for writing: " + path);
    write_u32(os, magic);
    write_u32(os, m.dtype);
    write_u32(os, m.rows);
    write_u32(os, m.cols);
    write_u64(os, m.fingerprint);
    size_t n = static_cast<size_t>(m.rows) * m.cols;
    if (m.dtype == 0) {
        if (m.f32.size() != n) fail(ErrorCode::ShapeError, "f32 payload size mismatch for " + path);
        write_bytes(os, m.f32.data(), n * sizeof(float));
    } else if (m.dtype == 1) {
        if (m.f64.size() != n) fail(ErrorCode::ShapeError, "f64 payload size mismatch for " + path);
        write_bytes(os, m.f64.data(), n * sizeof(double));
    } else {
        fail(ErrorCode::InvalidParameter, "unknown dtype " + std::to_string(m.dtype));
    }
    if (!os) fail(ErrorCode::IoError, "write failed: " + path);
}

MatrixFile read_matrix_file(const std::string& path, uint32_t magic) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(ErrorCode::IoError, "cannot open: " + path);
    uint32_t got = read_u32(is, path + " magic");
    if (got != magic) fail(ErrorCode::CorruptFile, "bad magic in " + path);
    MatrixFile m;
    m.dtype = read_u32(is, path + " dtype");
    m.rows = read_u32(is, path + " rows");
    m.cols = read_u32(is, path + " cols");
    m.fingerprint = read_u64(is, path + " fingerprint");
    size_t n = static_cast<size_t>(m.rows) * m.cols;
    if (m.dtype == 0) {
        m.f32.resize(n);
        if (n) read_bytes(is, m.f32.data(), n * sizeof(float), path + " payload");
    } else if (m.dtype == 1) {
        m.f64.resize(n);
        if (n) read_bytes(is, m.f64.data(), n * sizeof(double), path + " payload");
    } else {
        fail(ErrorCode::CorruptFile, "unknown dtype in " + path);
    }
    char extra;
    if (is.read(&extra, 1)) fail(ErrorCode::CorruptFile, "trailing bytes in " + path);
    return m;
}

std::string read_text_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(ErrorCode::IoError, "cannot open: " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) fail(ErrorCode::IoError, "cannot open for writing: " + path);
    os << content;
    if (!os) fail(ErrorCode::IoError, "write failed: " + path);
}

}  // namespace openasc
