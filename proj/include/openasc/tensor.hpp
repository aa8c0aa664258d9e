#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace openasc {

// Dense row-major tensor of doubles. Batched activations use the layout
// [N, C, H, W]; matrices use [N, F]. Kept as a plain struct so layers can
// reach into storage directly.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> v;

    Tensor() = default;
    explicit Tensor(std::vector<int> s, double fill = 0.0);
    static Tensor from(std::vector<int> s, std::vector<double> values);

    int ndim() const { return static_cast<int>(shape.size()); }
    int dim(int i) const;
    long size() const { return static_cast<long>(v.size()); }
    bool empty() const { return v.empty(); }
    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    bool all_finite() const;
    void fill(double value);

    double& at2(int a, int b) {
        return v[static_cast<size_t>(a) * shape[1] + b];
    }
    const double& at2(int a, int b) const {
        return v[static_cast<size_t>(a) * shape[1] + b];
    }
    double& at4(int n, int c, int h, int w) {
        return v[((static_cast<size_t>(n) * shape[1] + c) * shape[2] + h) * shape[3] + w];
    }
    const double& at4(int n, int c, int h, int w) const {
        return v[((static_cast<size_t>(n) * shape[1] + c) * shape[2] + h) * shape[3] + w];
    }
};

long shape_size(const std::vector<int>& shape);
std::string shape_str(const std::vector<int>& shape);

// FNV-1a over arbitrary bytes; the toolkit's only hash. Chainable by passing
// the previous result as the basis.
uint64_t fnv1a64(const void* data, size_t len, uint64_t basis = 14695981039346656037ull);
uint64_t fnv1a64_str(const std::string& s, uint64_t basis = 14695981039346656037ull);

// Stable per-purpose RNG seed derived from the pipeline seed and a tag.
uint64_t derive_seed(uint64_t base, const std::string& tag);

}  // namespace openasc
