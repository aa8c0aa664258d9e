#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace openasc {

// Little-endian primitive readers/writers shared by every binary artifact.
// All artifacts are written with these so reruns produce byte-identical
// files regardless of locale or formatting state.
void write_u32(std::ostream& os, uint32_t x);
void write_u64(std::ostream& os, uint64_t x);
void write_f32(std::ostream& os, float x);
void write_f64(std::ostream& os, double x);
void write_bytes(std::ostream& os, const void* data, size_t len);
uint32_t read_u32(std::istream& is, const std::string& what);
uint64_t read_u64(std::istream& is, const std::string& what);
float read_f32(std::istream& is, const std::string& what);
double read_f64(std::istream& is, const std::string& what);
void read_bytes(std::istream& is, void* data, size_t len, const std::string& what);

// Tagged matrix container: magic, dtype (0 = f32, 1 = f64), rows, cols,
// pipeline fingerprint, then row-major payload.
struct MatrixFile {
    uint32_t dtype = 0;
    uint32_t rows = 0;
    uint32_t cols = 0;
    uint64_t fingerprint = 0;
    std::vector<float> f32;
    std::vector<double> f64;
};

void write_matrix_file(const std::string& path, const MatrixFile& m, uint32_t magic);
MatrixFile read_matrix_file(const std::string& path, uint32_t magic);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

constexpr uint32_t kFeatureMagic = 0x4f414631;  // "OAF1"
constexpr uint32_t kStatsMagic = 0x4f415331;    // "OAS1"
constexpr uint32_t kModelMagic = 0x4f414d31;    // "OAM1"

}  // namespace openasc
