#include "openasc/network.hpp"

#include <fstream>

#include "openasc/binfile.hpp"
#include "openasc/error.hpp"

namespace openasc {

Network Network::build(std::vector<LayerSpec> specs, std::vector<int> input_shape,
                       uint64_t init_seed) {
    if (specs.empty()) fail(ErrorCode::InvalidParameter, "network needs at least one layer");
    Network net;
    net.specs_ = std::move(specs);
    net.input_shape_ = std::move(input_shape);
    std::vector<int> shape = net.input_shape_;
    for (const LayerSpec& spec : net.specs_) {
        net.layers_.push_back(make_layer(spec, shape));
        shape = net.layers_.back()->output_shape();
    }
    std::mt19937_64 rng(init_seed);
    for (auto& layer : net.layers_) layer->init(rng);
    return net;
}

Tensor Network::forward(const Tensor& batch, const Tensor* conditioning, bool training) {
    if (needs_conditioning() && conditioning == nullptr) {
        fail(ErrorCode::MissingConditioning, "network contains a film layer; pass conditioning");
    }
    outputs_.clear();
    outputs_.reserve(layers_.size());
    const Tensor* cur = &batch;
    for (auto& layer : layers_) {
        outputs_.push_back(layer->forward(*cur, conditioning, training));
        cur = &outputs_.back();
    }
    has_forward_ = true;
    return outputs_.back();
}

Tensor Network::backward(const Tensor& grad_output) {
    if (!has_forward_) fail(ErrorCode::InvalidParameter, "backward called before forward");
    Tensor g = grad_output;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
        g = (*it)->backward(g);
    }
    return g;
}

void Network::zero_grads() {
    for (auto& layer : layers_) {
        for (Tensor* g : layer->grads()) g->fill(0.0);
    }
}

std::vector<Tensor*> Network::parameters() {
    std::vector<Tensor*> out;
    for (auto& layer : layers_) {
        for (Tensor* p : layer->params()) out.push_back(p);
    }
    return out;
}

std::vector<Tensor*> Network::gradients() {
    std::vector<Tensor*> out;
    for (auto& layer : layers_) {
        for (Tensor* g : layer->grads()) out.push_back(g);
    }
    return out;
}

std::vector<Tensor*> Network::state() {
    std::vector<Tensor*> out;
    for (auto& layer : layers_) {
        for (Tensor* s : layer->state()) out.push_back(s);
    }
    return out;
}

long Network::parameter_count() const {
    long n = 0;
    for (const auto& layer : layers_) {
        for (Tensor* p : const_cast<Layer&>(*layer).params()) n += p->size();
    }
    return n;
}

bool Network::needs_conditioning() const {
    for (const auto& layer : layers_) {
        if (layer->needs_conditioning()) return true;
    }
    return false;
}

const Tensor& Network::layer_output(int i) const {
    if (!has_forward_ || i < 0 || i >= static_cast<int>(outputs_.size())) {
        fail(ErrorCode::InvalidParameter, "no cached output for layer " + std::to_string(i));
    }
    return outputs_[i];
}

std::vector<int> Network::output_shape() const {
    return layers_.back()->output_shape();
}

Network Network::clone() const {
    Network copy = build(specs_, input_shape_, 0);
    Network& self = const_cast<Network&>(*this);
    auto src = self.state();
    auto dst = copy.state();
    for (size_t i = 0; i < src.size(); ++i) dst[i]->v = src[i]->v;
    return copy;
}

namespace {

void write_spec(std::ostream& os, const LayerSpec& s) {
    write_u32(os, static_cast<uint32_t>(s.kind));
    write_u32(os, static_cast<uint32_t>(s.units));
    write_u32(os, static_cast<uint32_t>(s.kernel));
    write_u32(os, static_cast<uint32_t>(s.stride));
    write_u32(os, static_cast<uint32_t>(s.out_h));
    write_u32(os, static_cast<uint32_t>(s.out_w));
    write_u32(os, static_cast<uint32_t>(s.cond_width));
    write_u32(os, static_cast<uint32_t>(s.reshape_to.size()));
    for (int d : s.reshape_to) write_u32(os, static_cast<uint32_t>(d));
}

LayerSpec read_spec(std::istream& is, const std::string& path) {
    LayerSpec s;
    uint32_t kind = read_u32(is, path + " layer kind");
    if (kind > static_cast<uint32_t>(LayerSpec::Kind::Reshape)) {
        fail(ErrorCode::CorruptFile, "bad layer kind in " + path);
    }
    s.kind = static_cast<LayerSpec::Kind>(kind);
    s.units = static_cast<int>(read_u32(is, path));
    s.kernel = static_cast<int>(read_u32(is, path));
    s.stride = static_cast<int>(read_u32(is, path));
    s.out_h = static_cast<int>(read_u32(is, path));
    s.out_w = static_cast<int>(read_u32(is, path));
    s.cond_width = static_cast<int>(read_u32(is, path));
    uint32_t rn = read_u32(is, path);
    for (uint32_t i = 0; i < rn; ++i) s.reshape_to.push_back(static_cast<int>(read_u32(is, path)));
    return s;
}

}  // namespace

void Network::save(const std::string& path, uint64_t fingerprint) const {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) fail(ErrorCode::IoError, "cannot open for writing: " + path);
    write_u32(os, kModelMagic);
    write_u32(os, 1);  // format version
    write_u64(os, fingerprint);
    write_u32(os, static_cast<uint32_t>(input_shape_.size()));
    for (int d : input_shape_) write_u32(os, static_cast<uint32_t>(d));
    write_u32(os, static_cast<uint32_t>(specs_.size()));
    for (const LayerSpec& s : specs_) write_spec(os, s);
    Network& self = const_cast<Network&>(*this);
    auto tensors = self.state();
    write_u32(os, static_cast<uint32_t>(tensors.size()));
    for (Tensor* t : tensors) {
        write_u32(os, static_cast<uint32_t>(t->shape.size()));
        for (int d : t->shape) write_u32(os, static_cast<uint32_t>(d));
        for (double x : t->v) write_f64(os, x);
    }
    if (!os) fail(ErrorCode::IoError, "write failed: " + path);
}

Network Network::load(const std::string& path, uint64_t expected_fingerprint) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(ErrorCode::IoError, "cannot open: " + path);
    if (read_u32(is, path + " magic") != kModelMagic) {
        fail(ErrorCode::CorruptFile, "bad magic in " + path);
    }
    if (read_u32(is, path + " version") != 1) {
        fail(ErrorCode::CorruptFile, "unsupported checkpoint version in " + path);
    }
    uint64_t fp = read_u64(is, path + " fingerprint");
    if (expected_fingerprint != 0 && fp != expected_fingerprint) {
        fail(ErrorCode::PipelineMismatch,
             "checkpoint " + path + " was produced under a different pipeline configuration");
    }
    uint32_t nd = read_u32(is, path + " input rank");
    std::vector<int> input_shape;
    for (uint32_t i = 0; i < nd; ++i) input_shape.push_back(static_cast<int>(read_u32(is, path)));
    uint32_t ns = read_u32(is, path + " spec count");
    std::vector<LayerSpec> specs;
    for (uint32_t i = 0; i < ns; ++i) specs.push_back(read_spec(is, path));

    Network net = build(std::move(specs), std::move(input_shape), 0);
    auto tensors = net.state();
    uint32_t nt = read_u32(is, path + " tensor count");
    if (nt != tensors.size()) fail(ErrorCode::CorruptFile, "state tensor count mismatch in " + path);
    for (Tensor* t : tensors) {
        uint32_t rank = read_u32(is, path + " tensor rank");
        std::vector<int> shape;
        for (uint32_t i = 0; i < rank; ++i) shape.push_back(static_cast<int>(read_u32(is, path)));
        if (shape != t->shape) fail(ErrorCode::CorruptFile, "state tensor shape mismatch in " + path);
        for (double& x : t->v) x = read_f64(is, path + " tensor data");
    }
    return net;
}

}  // namespace openasc
