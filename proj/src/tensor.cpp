#include "openasc/tensor.hpp"

#include <cmath>
#include <sstream>

#include "openasc/error.hpp"

namespace openasc {

long shape_size(const std::vector<int>& shape) {
    long n = 1;
    for (int d : shape) {
        if (d < 0) fail(ErrorCode::ShapeError, "negative dimension in " + shape_str(shape));
        n *= d;
    }
    return shape.empty() ? 0 : n;
}

std::string shape_str(const std::vector<int>& shape) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ",";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

Tensor::Tensor(std::vector<int> s, double fill_value)
    : shape(std::move(s)), v(static_cast<size_t>(shape_size(shape)), fill_value) {}

Tensor Tensor::from(std::vector<int> s, std::vector<double> values) {
    if (shape_size(s) != static_cast<long>(values.size())) {
        fail(ErrorCode::ShapeError,
             "value count " + std::to_string(values.size()) + " does not fill " + shape_str(s));
    }
    Tensor t;
    t.shape = std::move(s);
    t.v = std::move(values);
    return t;
}

int Tensor::dim(int i) const {
    if (i < 0 || i >= ndim()) {
        fail(ErrorCode::ShapeError, "dim " + std::to_string(i) + " out of range for " + shape_str(shape));
    }
    return shape[i];
}

bool Tensor::all_finite() const {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

void Tensor::fill(double value) {
    std::fill(v.begin(), v.end(), value);
}

uint64_t fnv1a64(const void* data, size_t len, uint64_t basis) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    uint64_t h = basis;
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

uint64_t fnv1a64_str(const std::string& s, uint64_t basis) {
    return fnv1a64(s.data(), s.size(), basis);
}

uint64_t derive_seed(uint64_t base, const std::string& tag) {
    uint64_t h = fnv1a64(&base, sizeof(base));
    return fnv1a64_str(tag, h);
}

}  // namespace openasc
