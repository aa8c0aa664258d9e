#include "openasc/layers.hpp"

#include <cmath>

#include "openasc/error.hpp"

namespace openasc {

LayerSpec LayerSpec::conv2d(int channels, int kernel, int stride) {
    LayerSpec s;
    s.kind = Kind::Conv2d;
    s.units = channels;
    s.kernel = kernel;
    s.stride = stride;
    return s;
}

LayerSpec LayerSpec::conv_transpose2d(int channels, int kernel, int stride, int out_h, int out_w) {
    LayerSpec s;
    s.kind = Kind::ConvTranspose2d;
    s.units = channels;
    s.kernel = kernel;
    s.stride = stride;
    s.out_h = out_h;
    s.out_w = out_w;
    return s;
}

LayerSpec LayerSpec::dense(int units) {
    LayerSpec s;
    s.kind = Kind::Dense;
    s.units = units;
    return s;
}

LayerSpec LayerSpec::batch_norm() {
    LayerSpec s;
    s.kind = Kind::BatchNorm;
    return s;
}

LayerSpec LayerSpec::relu() {
    LayerSpec s;
    s.kind = Kind::Relu;
    return s;
}

LayerSpec LayerSpec::softmax() {
    LayerSpec s;
    s.kind = Kind::Softmax;
    return s;
}

LayerSpec LayerSpec::global_avg_pool() {
    LayerSpec s;
    s.kind = Kind::GlobalAvgPool;
    return s;
}

LayerSpec LayerSpec::film(int cond_width) {
    LayerSpec s;
    s.kind = Kind::Film;
    s.cond_width = cond_width;
    return s;
}

LayerSpec LayerSpec::flatten() {
    LayerSpec s;
    s.kind = Kind::Flatten;
    return s;
}

LayerSpec LayerSpec::reshape(std::vector<int> to) {
    LayerSpec s;
    s.kind = Kind::Reshape;
    s.reshape_to = std::move(to);
    return s;
}

double init_limit(long fan_in) { return std::sqrt(3.0 / static_cast<double>(fan_in)); }

namespace {

int ceil_div(int a, int b) { return a >= 0 ? (a + b - 1) / b : -((-a) / b); }

void check_batch_shape(const Tensor& in, const std::vector<int>& expect, const char* who) {
    bool ok = in.ndim() == static_cast<int>(expect.size()) + 1 && in.dim(0) >= 1;
    if (ok) {
        for (size_t i = 0; i < expect.size(); ++i) {
            if (in.shape[i + 1] != expect[i]) ok = false;
        }
    }
    if (!ok) {
        std::vector<int> want{-1};
        want.insert(want.end(), expect.begin(), expect.end());
        fail(ErrorCode::ShapeError,
             std::string(who) + ": got " + shape_str(in.shape) + ", want " + shape_str(want));
    }
}

void init_uniform(Tensor& t, long fan_in, std::mt19937_64& rng) {
    double limit = init_limit(fan_in);
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (double& x : t.v) x = dist(rng);
}

class Conv2dLayer : public Layer {
public:
    Conv2dLayer(const LayerSpec& spec, const std::vector<int>& in_shape) {
        if (in_shape.size() != 3) {
            fail(ErrorCode::ShapeError, "conv2d expects [C,H,W] input, got " + shape_str(in_shape));
        }
        if (spec.units <= 0 || spec.kernel <= 0 || spec.stride <= 0) {
            fail(ErrorCode::InvalidParameter, "conv2d needs positive channels, kernel, stride");
        }
        c_ = in_shape[0];
        h_ = in_shape[1];
        w_ = in_shape[2];
        oc_ = spec.units;
        k_ = spec.kernel;
        s_ = spec.stride;
        oh_ = ceil_div(h_, s_);
        ow_ = ceil_div(w_, s_);
        pad_top_ = std::max((oh_ - 1) * s_ + k_ - h_, 0) / 2;
        pad_left_ = std::max((ow_ - 1) * s_ + k_ - w_, 0) / 2;
        weight_ = Tensor({oc_, c_, k_, k_});
        bias_ = Tensor({oc_});
        gw_ = Tensor({oc_, c_, k_, k_});
        gb_ = Tensor({oc_});
    }

    const char* name() const override { return "conv2d"; }
    std::vector<int> output_shape() const override { return {oc_, oh_, ow_}; }

    void init(std::mt19937_64& rng) override {
        init_uniform(weight_, static_cast<long>(c_) * k_ * k_, rng);
        bias_.fill(0.0);
    }

    Tensor forward(const Tensor& in, const Tensor*, bool) override {
        check_batch_shape(in, {c_, h_, w_}, name());
        in_cache_ = in;
        int n = in.dim(0);
        Tensor out({n, oc_, oh_, ow_});
        for (int b = 0; b < n; ++b) {
            for (int oc = 0; oc < oc_; ++oc) {
                double bv = bias_.v[oc];
                double* orow0 = &out.at4(b, oc, 0, 0);
                for (long i = 0; i < static_cast<long>(oh_) * ow_; ++i) orow0[i] = bv;
                for (int ic = 0; ic < c_; ++ic) {
                    for (int ky = 0; ky < k_; ++ky) {
                        int oy_lo = std::max(0, ceil_div(pad_top_ - ky, s_));
                        int oy_hi = std::min(oh_ - 1, (h_ - 1 - ky + pad_top_) / s_);
                        for (int kx = 0; kx < k_; ++kx) {
                            double wv = weight_.at4(oc, ic, ky, kx);
                            if (wv == 0.0) continue;
                            int ox_lo = std::max(0, ceil_div(pad_left_ - kx, s_));
                            int ox_hi = std::min(ow_ - 1, (w_ - 1 - kx + pad_left_) / s_);
                            for (int oy = oy_lo; oy <= oy_hi; ++oy) {
                                int iy = oy * s_ - pad_top_ + ky;
                                const double* irow = &in.at4(b, ic, iy, 0);
                                double* orow = &out.at4(b, oc, oy, 0);
                                for (int ox = ox_lo; ox <= ox_hi; ++ox) {
                                    orow[ox] += wv * irow[ox * s_ - pad_left_ + kx];
                                }
                            }
                        }
                    }
                }
            }
        }
        return out;
    }

    Tensor backward(const Tensor& g) override {
        check_batch_shape(g, {oc_, oh_, ow_}, "conv2d backward");
        const Tensor& in = in_cache_;
        int n = in.dim(0);
        Tensor gin(in.shape);
        for (int b = 0; b < n; ++b) {
            for (int oc = 0; oc < oc_; ++oc) {
                const double* grow0 = &g.at4(b, oc, 0, 0);
                double acc = 0.0;
                for (long i = 0; i < static_cast<long>(oh_) * ow_; ++i) acc += grow0[i];
                gb_.v[oc] += acc;
                for (int ic = 0; ic < c_; ++ic) {
                    for (int ky = 0; ky < k_; ++ky) {
                        int oy_lo = std::max(0, ceil_div(pad_top_ - ky, s_));
                        int oy_hi = std::min(oh_ - 1, (h_ - 1 - ky + pad_top_) / s_);
                        for (int kx = 0; kx < k_; ++kx) {
                            double wv = weight_.at4(oc, ic, ky, kx);
                            double gw_acc = 0.0;
                            int ox_lo = std::max(0, ceil_div(pad_left_ - kx, s_));
                            int ox_hi = std::min(ow_ - 1, (w_ - 1 - kx + pad_left_) / s_);
                            for (int oy = oy_lo; oy <= oy_hi; ++oy) {
                                int iy = oy * s_ - pad_top_ + ky;
                                const double* irow = &in.at4(b, ic, iy, 0);
                                double* girow = &gin.at4(b, ic, iy, 0);
                                const double* grow = &g.at4(b, oc, oy, 0);
                                for (int ox = ox_lo; ox <= ox_hi; ++ox) {
                                    int ix = ox * s_ - pad_left_ + kx;
                                    gw_acc += irow[ix] * grow[ox];
                                    girow[ix] += wv * grow[ox];
                                }
                            }
                            gw_.at4(oc, ic, ky, kx) += gw_acc;
                        }
                    }
                }
            }
        }
        return gin;
    }

    std::vector<Tensor*> params() override { return {&weight_, &bias_}; }
    std::vector<Tensor*> grads() override { return {&gw_, &gb_}; }

private:
    int c_, h_, w_, oc_, k_, s_, oh_, ow_, pad_top_, pad_left_;
    Tensor weight_, bias_, gw_, gb_, in_cache_;
};

class ConvTranspose2dLayer : public Layer {
public:
    ConvTranspose2dLayer(const LayerSpec& spec, const std::vector<int>& in_shape) {
        if (in_shape.size() != 3) {
            fail(ErrorCode::ShapeError,
                 "conv_transpose2d expects [C,H,W] input, got " + shape_str(in_shape));
        }
        if (spec.units <= 0 || spec.kernel <= 0 || spec.stride <= 0 || spec.out_h <= 0 ||
            spec.out_w <= 0) {
            fail(ErrorCode::InvalidParameter,
                 "conv_transpose2d needs positive channels, kernel, stride, output size");
        }
        c_ = in_shape[0];
        h_ = in_shape[1];
        w_ = in_shape[2];
        oc_ = spec.units;
        k_ = spec.kernel;
        s_ = spec.stride;
        oh_ = spec.out_h;
        ow_ = spec.out_w;
        if (oh_ > (h_ - 1) * s_ + k_ || ow_ > (w_ - 1) * s_ + k_) {
            fail(ErrorCode::ShapeError, "conv_transpose2d output size unreachable from input " +
                                            shape_str(in_shape));
        }
        pad_top_ = std::max((h_ - 1) * s_ + k_ - oh_, 0) / 2;
        pad_left_ = std::max((w_ - 1) * s_ + k_ - ow_, 0) / 2;
        weight_ = Tensor({c_, oc_, k_, k_});
        bias_ = Tensor({oc_});
        gw_ = Tensor({c_, oc_, k_, k_});
        gb_ = Tensor({oc_});
    }

    const char* name() const override { return "conv_transpose2d"; }
    std::vector<int> output_shape() const override { return {oc_, oh_, ow_}; }

    void init(std::mt19937_64& rng) override {
        init_uniform(weight_, static_cast<long>(c_) * k_ * k_, rng);
        bias_.fill(0.0);
    }

    Tensor forward(const Tensor& in, const Tensor*, bool) override {
        check_batch_shape(in, {c_, h_, w_}, name());
        in_cache_ = in;
        int n = in.dim(0);
        Tensor out({n, oc_, oh_, ow_});
        for (int b = 0; b < n; ++b) {
            for (int oc = 0; oc < oc_; ++oc) {
                double bv = bias_.v[oc];
                double* orow0 = &out.at4(b, oc, 0, 0);
                for (long i = 0; i < static_cast<long>(oh_) * ow_; ++i) orow0[i] = bv;
            }
            for (int ic = 0; ic < c_; ++ic) {
                for (int oc = 0; oc < oc_; ++oc) {
                    for (int ky = 0; ky < k_; ++ky) {
                        int iy_lo = std::max(0, ceil_div(pad_top_ - ky, s_));
                        int iy_hi = std::min(h_ - 1, (oh_ - 1 + pad_top_ - ky) / s_);
                        for (int kx = 0; kx < k_; ++kx) {
                            double wv = weight_.at4(ic, oc, ky, kx);
                            if (wv == 0.0) continue;
                            int ix_lo = std::max(0, ceil_div(pad_left_ - kx, s_));
                            int ix_hi = std::min(w_ - 1, (ow_ - 1 + pad_left_ - kx) / s_);
                            for (int iy = iy_lo; iy <= iy_hi; ++iy) {
                                int oy = iy * s_ + ky - pad_top_;
                                const double* irow = &in.at4(b, ic, iy, 0);
                                double* orow = &out.at4(b, oc, oy, 0);
                                for (int ix = ix_lo; ix <= ix_hi; ++ix) {
                                    orow[ix * s_ + kx - pad_left_] += wv * irow[ix];
                                }
                            }
                        }
                    }
                }
            }
        }
        return out;
    }

    Tensor backward(const Tensor& g) override {
        check_batch_shape(g, {oc_, oh_, ow_}, "conv_transpose2d backward");
        const Tensor& in = in_cache_;
        int n = in.dim(0);
        Tensor gin(in.shape);
        for (int b = 0; b < n; ++b) {
            for (int oc = 0; oc < oc_; ++oc) {
                const double* grow0 = &g.at4(b, oc, 0, 0);
                double acc = 0.0;
                for (long i = 0; i < static_cast<long>(oh_) * ow_; ++i) acc += grow0[i];
                gb_.v[oc] += acc;
            }
            for (int ic = 0; ic < c_; ++ic) {
                for (int oc = 0; oc < oc_; ++oc) {
                    for (int ky = 0; ky < k_; ++ky) {
                        int iy_lo = std::max(0, ceil_div(pad_top_ - ky, s_));
                        int iy_hi = std::min(h_ - 1, (oh_ - 1 + pad_top_ - ky) / s_);
                        for (int kx = 0; kx < k_; ++kx) {
                            double wv = weight_.at4(ic, oc, ky, kx);
                            double gw_acc = 0.0;
                            int ix_lo = std::max(0, ceil_div(pad_left_ - kx, s_));
                            int ix_hi = std::min(w_ - 1, (ow_ - 1 + pad_left_ - kx) / s_);
                            for (int iy = iy_lo; iy <= iy_hi; ++iy) {
                                int oy = iy * s_ + ky - pad_top_;
                                const double* irow = &in.at4(b, ic, iy, 0);
                                double* girow = &gin.at4(b, ic, iy, 0);
                                const double* grow = &g.at4(b, oc, oy, 0);
                                for (int ix = ix_lo; ix <= ix_hi; ++ix) {
                                    int ox = ix * s_ + kx - pad_left_;
                                    gw_acc += irow[ix] * grow[ox];
                                    girow[ix] += wv * grow[ox];
                                }
                            }
                            gw_.at4(ic, oc, ky, kx) += gw_acc;
                        }
                    }
                }
            }
        }
        return gin;
    }

    std::vector<Tensor*> params() override { return {&weight_, &bias_}; }
    std::vector<Tensor*> grads() override { return {&gw_, &gb_}; }

private:
    int c_, h_, w_, oc_, k_, s_, oh_, ow_, pad_top_, pad_left_;
    Tensor weight_, bias_, gw_, gb_, in_cache_;
};

class DenseLayer : public Layer {
public:
    DenseLayer(const LayerSpec& spec, const std::vector<int>& in_shape) {
        if (in_shape.size() != 1) {
            fail(ErrorCode::ShapeError, "dense expects [F] input, got " + shape_str(in_shape));
        }
        if (spec.units <= 0) fail(ErrorCode::InvalidParameter, "dense needs positive units");
        f_ = in_shape[0];
        u_ = spec.units;
        weight_ = Tensor({f_, u_});
        bias_ = Tensor({u_});
        gw_ = Tensor({f_, u_});
        gb_ = Tensor({u_});
    }

    const char* name() const override { return "dense"; }
    std::vector<int> output_shape() const override { return {u_}; }

    void init(std::mt19937_64& rng) override {
        init_uniform(weight_, f_, rng);
        bias_.fill(0.0);
    }

    Tensor forward(const Tensor& in, const Tensor*, bool) override {
        check_batch_shape(in, {f_}, name());
        in_cache_ = in;
        int n = in.dim(0);
        Tensor out({n, u_});
        for (int b = 0; b < n; ++b) {
            for (int u = 0; u < u_; ++u) out.at2(b, u) = bias_.v[u];
            for (int f = 0; f < f_; ++f) {
                double x = in.at2(b, f);
                if (x == 0.0) continue;
                const double* wrow = &weight_.at2(f, 0);
                double* orow = &out.at2(b, 0);
                for (int u = 0; u < u_; ++u) orow[u] += x * wrow[u];
            }
        }
        return out;
    }

    Tensor backward(const Tensor& g) override {
        check_batch_shape(g, {u_}, "dense backward");
        const Tensor& in = in_cache_;
        int n = in.dim(0);
        Tensor gin({n, f_});
        for (int b = 0; b < n; ++b) {
            const double* grow = &g.at2(b, 0);
            for (int u = 0; u < u_; ++u) gb_.v[u] += grow[u];
            for (int f = 0; f < f_; ++f) {
                double x = in.at2(b, f);
                const double* wrow = &weight_.at2(f, 0);
                double* gwrow = &gw_.at2(f, 0);
                double acc = 0.0;
                for (int u = 0; u < u_; ++u) {
                    acc += grow[u] * wrow[u];
                    gwrow[u] += x * grow[u];
                }
                gin.at2(b, f) = acc;
            }
        }
        return gin;
    }

    std::vector<Tensor*> params() override { return {&weight_, &bias_}; }
    std::vector<Tensor*> grads() override { return {&gw_, &gb_}; }

private:
    int f_, u_;
    Tensor weight_, bias_, gw_, gb_, in_cache_;
};

class BatchNormLayer : public Layer {
public:
    BatchNormLayer(const LayerSpec&, const std::vector<int>& in_shape) : in_shape_(in_shape) {
        if (in_shape.size() == 3) {
            channels_ = in_shape[0];
            spatial_ = in_shape[1] * in_shape[2];
        } else if (in_shape.size() == 1) {
            channels_ = in_shape[0];
            spatial_ = 1;
        } else {
            fail(ErrorCode::ShapeError,
                 "batch_norm expects [C,H,W] or [F] input, got " + shape_str(in_shape));
        }
        gamma_ = Tensor({channels_}, 1.0);
        beta_ = Tensor({channels_}, 0.0);
        ggamma_ = Tensor({channels_});
        gbeta_ = Tensor({channels_});
        running_mean_ = Tensor({channels_}, 0.0);
        running_var_ = Tensor({channels_}, 1.0);
    }

    const char* name() const override { return "batch_norm"; }
    std::vector<int> output_shape() const override { return in_shape_; }

    Tensor forward(const Tensor& in, const Tensor*, bool training) override {
        check_batch_shape(in, in_shape_, name());
        int n = in.dim(0);
        long m = static_cast<long>(n) * spatial_;
        training_ = training;
        inv_std_.assign(channels_, 0.0);
        xhat_ = Tensor(in.shape);
        Tensor out(in.shape);
        for (int c = 0; c < channels_; ++c) {
            double mean, var;
            if (training) {
                double sum = 0.0, sumsq = 0.0;
                for_channel(in, c, [&](double x) {
                    sum += x;
                    sumsq += x * x;
                });
                mean = sum / m;
                var = std::max(sumsq / m - mean * mean, 0.0);
                running_mean_.v[c] = momentum_ * running_mean_.v[c] + (1.0 - momentum_) * mean;
                running_var_.v[c] = momentum_ * running_var_.v[c] + (1.0 - momentum_) * var;
            } else {
                mean = running_mean_.v[c];
                var = running_var_.v[c];
            }
            double inv = 1.0 / std::sqrt(var + eps_);
            inv_std_[c] = inv;
            double gmm = gamma_.v[c], bt = beta_.v[c];
            transform_channel(in, xhat_, out, c, [&](double x, double& xh, double& o) {
                xh = (x - mean) * inv;
                o = gmm * xh + bt;
            });
        }
        return out;
    }

    Tensor backward(const Tensor& g) override {
        check_batch_shape(g, in_shape_, "batch_norm backward");
        int n = g.dim(0);
        long m = static_cast<long>(n) * spatial_;
        Tensor gin(g.shape);
        for (int c = 0; c < channels_; ++c) {
            double sum_g = 0.0, sum_gx = 0.0;
            reduce_channel(g, xhat_, c, sum_g, sum_gx);
            ggamma_.v[c] += sum_gx;
            gbeta_.v[c] += sum_g;
            double gmm = gamma_.v[c], inv = inv_std_[c];
            if (training_) {
                double k1 = sum_g / m, k2 = sum_gx / m;
                combine_channel(g, xhat_, gin, c, [&](double gv, double xh, double& o) {
                    o = gmm * inv * (gv - k1 - xh * k2);
                });
            } else {
                combine_channel(g, xhat_, gin, c, [&](double gv, double, double& o) {
                    o = gmm * inv * gv;
                });
            }
        }
        return gin;
    }

    std::vector<Tensor*> params() override { return {&gamma_, &beta_}; }
    std::vector<Tensor*> grads() override { return {&ggamma_, &gbeta_}; }
    std::vector<Tensor*> state() override {
        return {&gamma_, &beta_, &running_mean_, &running_var_};
    }

private:
    template <typename F>
    void for_channel(const Tensor& t, int c, F f) const {
        int n = t.dim(0);
        for (int b = 0; b < n; ++b) {
            const double* p = t.v.data() + (static_cast<size_t>(b) * channels_ + c) * spatial_;
            for (int i = 0; i < spatial_; ++i) f(p[i]);
        }
    }
    template <typename F>
    void transform_channel(const Tensor& in, Tensor& xh, Tensor& out, int c, F f) const {
        int n = in.dim(0);
        for (int b = 0; b < n; ++b) {
            size_t off = (static_cast<size_t>(b) * channels_ + c) * spatial_;
            for (int i = 0; i < spatial_; ++i) {
                f(in.v[off + i], xh.v[off + i], out.v[off + i]);
            }
        }
    }
    void reduce_channel(const Tensor& g, const Tensor& xh, int c, double& sum_g,
                        double& sum_gx) const {
        int n = g.dim(0);
        for (int b = 0; b < n; ++b) {
            size_t off = (static_cast<size_t>(b) * channels_ + c) * spatial_;
            for (int i = 0; i < spatial_; ++i) {
                sum_g += g.v[off + i];
                sum_gx += g.v[off + i] * xh.v[off + i];
            }
        }
    }
    template <typename F>
    void combine_channel(const Tensor& g, const Tensor& xh, Tensor& gin, int c, F f) const {
        int n = g.dim(0);
        for (int b = 0; b < n; ++b) {
            size_t off = (static_cast<size_t>(b) * channels_ + c) * spatial_;
            for (int i = 0; i < spatial_; ++i) {
                f(g.v[off + i], xh.v[off + i], gin.v[off + i]);
            }
        }
    }

    std::vector<int> in_shape_;
    int channels_ = 0, spatial_ = 1;
    double eps_ = 1e-3, momentum_ = 0.99;
    bool training_ = false;
    Tensor gamma_, beta_, ggamma_, gbeta_, running_mean_, running_var_, xhat_;
    std::vector<double> inv_std_;
};

class ReluLayer : public Layer {
public:
    ReluLayer(const LayerSpec&, const std::vector<int>& in_shape) : in_shape_(in_shape) {}
    const char* name() const override { return "relu"; }
    std::vector<int> output_shape() const override { return in_shape_; }

    Tensor forward(const Tensor& in, const Tensor*, bool) override {
        check_batch_shape(in, in_shape_, name());
        in_cache_ = in;
        Tensor out(in.shape);
        for (size_t i = 0; i < in.v.size(); ++i) out.v[i] = in.v[i] > 0.0 ? in.v[i] : 0.0;
        return out;
    }

    Tensor backward(const Tensor& g) override {
        Tensor gin(g.shape);
        for (size_t i = 0; i < g.v.size(); ++i) {
            gin.v[i] = in_cache_.v[i] > 0.0 ? g.v[i] : 0.0;
        }
        return gin;
    }

private:
    std::vector<int> in_shape_;
    Tensor in_cache_;
};

class SoftmaxLayer : public Layer {
public:
    SoftmaxLayer(const LayerSpec&, const std::vector<int>& in_shape) {
        if (in_shape.size() != 1) {
            fail(ErrorCode::ShapeError, "softmax expects [F] input, got " + shape_str(in_shape));
        }
        f_ = in_shape[0];
    }
    const char* name() const override { return "softmax"; }
    std::vector<int> output_shape() const override { return {f_}; }

    Tensor forward(const Tensor& in, const Tensor*, bool) override {
        check_batch_shape(in, {f_}, name());
        int n = in.dim(0);
        out_cache_ = Tensor({n, f_});
        for (int b = 0; b < n; ++b) {
            const double* row = &in.at2(b, 0);
            double mx = row[0];
            for (int i = 1; i < f_; ++i) mx = std::max(mx, row[i]);
            double sum = 0.0;
            double* orow = &out_cache_.at2(b, 0);
            for (int i = 0; i < f_; ++i) {
                orow[i] = std::exp(row[i] - mx);
                sum += orow[i];
            }
            for (int i = 0; i < f_; ++i) orow[i] /= sum;
        }
        return out_cache_;
    }

    Tensor backward(const Tensor& g) override {
        int n = g.dim(0);
        Tensor gin({n, f_});
        for (int b = 0; b < n; ++b) {
            const double* p = &out_cache_.at2(b, 0);
            const double* grow = &g.at2(b, 0);
            double dot = 0.0;
            for (int i = 0; i < f_; ++i) dot += grow[i] * p[i];
            for (int i = 0; i < f_; ++i) gin.at2(b, i) = p[i] * (grow[i] - dot);
        }
        return gin;
    }

private:
    int f_;
    Tensor out_cache_;
};

class GlobalAvgPoolLayer : public Layer {
public:
    GlobalAvgPoolLayer(const LayerSpec&, const std::vector<int>& in_shape) {
        if (in_shape.size() != 3) {
            fail(ErrorCode::ShapeError,
                 "global_avg_pool expects [C,H,W] input, got " + shape_str(in_shape));
        }
        c_ = in_shape[0];
        h_ = in_shape[1];
        w_ = in_shape[2];
    }
    const char* name() const override { return "global_avg_pool"; }
    std::vector<int> output_shape() const override { return {c_}; }

    Tensor forward(const Tensor& in, const Tensor*, bool) override {
        check_batch_shape(in, {c_, h_, w_}, name());
        int n = in.dim(0);
        Tensor out({n, c_});
        double inv = 1.0 / (static_cast<double>(h_) * w_);
        for (int b = 0; b < n; ++b) {
            for (int c = 0; c < c_; ++c) {
                const double* p = &in.at4(b, c, 0, 0);
                double acc = 0.0;
                for (int i = 0; i < h_ * w_; ++i) acc += p[i];
                out.at2(b, c) = acc * inv;
            }
        }
        return out;
    }

    Tensor backward(const Tensor& g) override {
        int n = g.dim(0);
        Tensor gin({n, c_, h_, w_});
        double inv = 1.0 / (static_cast<double>(h_) * w_);
        for (int b = 0; b < n; ++b) {
            for (int c = 0; c < c_; ++c) {
                double gv = g.at2(b, c) * inv;
                double* p = &gin.at4(b, c, 0, 0);
                for (int i = 0; i < h_ * w_; ++i) p[i] = gv;
            }
        }
        return gin;
    }

private:
    int c_, h_, w_;
};

class FilmLayer : public Layer {
public:
    FilmLayer(const LayerSpec& spec, const std::vector<int>& in_shape) {
        if (in_shape.size() != 1) {
            fail(ErrorCode::ShapeError, "film expects [F] input, got " + shape_str(in_shape));
        }
        if (spec.cond_width <= 0) {
            fail(ErrorCode::InvalidParameter, "film needs a positive conditioning width");
        }
        f_ = in_shape[0];
        kc_ = spec.cond_width;
        wa_ = Tensor({kc_, f_});
        ba_ = Tensor({f_});
        wb_ = Tensor({kc_, f_});
        bb_ = Tensor({f_});
        gwa_ = Tensor({kc_, f_});
        gba_ = Tensor({f_});
        gwb_ = Tensor({kc_, f_});
        gbb_ = Tensor({f_});
    }

    const char* name() const override { return "film"; }
    std::vector<int> output_shape() const override { return {f_}; }
    bool needs_conditioning() const override { return true; }

    void init(std::mt19937_64& rng) override {
        init_uniform(wa_, kc_, rng);
        ba_.fill(0.0);
        init_uniform(wb_, kc_, rng);
        bb_.fill(0.0);
    }

    Tensor forward(const Tensor& in, const Tensor* cond, bool) override {
        check_batch_shape(in, {f_}, name());
        if (cond == nullptr) {
            fail(ErrorCode::MissingConditioning, "film layer requires a conditioning batch");
        }
        check_batch_shape(*cond, {kc_}, "film conditioning");
        if (cond->dim(0) != in.dim(0)) {
            fail(ErrorCode::ShapeError, "film conditioning batch size mismatch");
        }
        in_cache_ = in;
        cond_cache_ = *cond;
        int n = in.dim(0);
        scale_cache_ = Tensor({n, f_});
        Tensor out({n, f_});
        for (int b = 0; b < n; ++b) {
            for (int i = 0; i < f_; ++i) {
                double a = ba_.v[i], sh = bb_.v[i];
                for (int k = 0; k < kc_; ++k) {
                    double y = cond_cache_.at2(b, k);
                    a += y * wa_.at2(k, i);
                    sh += y * wb_.at2(k, i);
                }
                scale_cache_.at2(b, i) = a;
                out.at2(b, i) = a * in.at2(b, i) + sh;
            }
        }
        return out;
    }

    Tensor backward(const Tensor& g) override {
        int n = g.dim(0);
        Tensor gin({n, f_});
        for (int b = 0; b < n; ++b) {
            for (int i = 0; i < f_; ++i) {
                double gv = g.at2(b, i);
                double z = in_cache_.at2(b, i);
                gin.at2(b, i) = gv * scale_cache_.at2(b, i);
                gba_.v[i] += gv * z;
                gbb_.v[i] += gv;
                for (int k = 0; k < kc_; ++k) {
                    double y = cond_cache_.at2(b, k);
                    gwa_.at2(k, i) += y * gv * z;
                    gwb_.at2(k, i) += y * gv;
                }
            }
        }
        return gin;
    }

    std::vector<Tensor*> params() override { return {&wa_, &ba_, &wb_, &bb_}; }
    std::vector<Tensor*> grads() override { return {&gwa_, &gba_, &gwb_, &gbb_}; }

private:
    int f_, kc_;
    Tensor wa_, ba_, wb_, bb_, gwa_, gba_, gwb_, gbb_;
    Tensor in_cache_, cond_cache_, scale_cache_;
};

class FlattenLayer : public Layer {
public:
    FlattenLayer(const LayerSpec&, const std::vector<int>& in_shape) : in_shape_(in_shape) {
        if (in_shape.size() != 3) {
            fail(ErrorCode::ShapeError, "flatten expects [C,H,W] input, got " + shape_str(in_shape));
        }
        f_ = in_shape[0] * in_shape[1] * in_shape[2];
    }
    const char* name() const override { return "flatten"; }
    std::vector<int> output_shape() const override { return {f_}; }

    Tensor forward(const Tensor& in, const Tensor*, bool) override {
        check_batch_shape(in, in_shape_, name());
        Tensor out = in;
        out.shape = {in.dim(0), f_};
        return out;
    }

    Tensor backward(const Tensor& g) override {
        Tensor gin = g;
        gin.shape = {g.dim(0), in_shape_[0], in_shape_[1], in_shape_[2]};
        return gin;
    }

private:
    std::vector<int> in_shape_;
    int f_;
};

class ReshapeLayer : public Layer {
public:
    ReshapeLayer(const LayerSpec& spec, const std::vector<int>& in_shape) : to_(spec.reshape_to) {
        if (in_shape.size() != 1) {
            fail(ErrorCode::ShapeError, "reshape expects [F] input, got " + shape_str(in_shape));
        }
        if (to_.size() != 3 || shape_size(to_) != in_shape[0]) {
            fail(ErrorCode::ShapeError, "reshape target " + shape_str(to_) +
                                            " does not match input width " +
                                            std::to_string(in_shape[0]));
        }
        f_ = in_shape[0];
    }
    const char* name() const override { return "reshape"; }
    std::vector<int> output_shape() const override { return to_; }

    Tensor forward(const Tensor& in, const Tensor*, bool) override {
        check_batch_shape(in, {f_}, name());
        Tensor out = in;
        out.shape = {in.dim(0), to_[0], to_[1], to_[2]};
        return out;
    }

    Tensor backward(const Tensor& g) override {
        Tensor gin = g;
        gin.shape = {g.dim(0), f_};
        return gin;
    }

private:
    std::vector<int> to_;
    int f_;
};

}  // namespace

std::unique_ptr<Layer> make_layer(const LayerSpec& spec, const std::vector<int>& input_shape) {
    using K = LayerSpec::Kind;
    switch (spec.kind) {
        case K::Conv2d: return std::make_unique<Conv2dLayer>(spec, input_shape);
        case K::ConvTranspose2d: return std::make_unique<ConvTranspose2dLayer>(spec, input_shape);
        case K::Dense: return std::make_unique<DenseLayer>(spec, input_shape);
        case K::BatchNorm: return std::make_unique<BatchNormLayer>(spec, input_shape);
        case K::Relu: return std::make_unique<ReluLayer>(spec, input_shape);
        case K::Softmax: return std::make_unique<SoftmaxLayer>(spec, input_shape);
        case K::GlobalAvgPool: return std::make_unique<GlobalAvgPoolLayer>(spec, input_shape);
        case K::Film: return std::make_unique<FilmLayer>(spec, input_shape);
        case K::Flatten: return std::make_unique<FlattenLayer>(spec, input_shape);
        case K::Reshape: return std::make_unique<ReshapeLayer>(spec, input_shape);
    }
    fail(ErrorCode::InvalidParameter, "unknown layer kind");
}

}  // namespace openasc
