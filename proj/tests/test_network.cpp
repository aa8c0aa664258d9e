#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>

#include "gradcheck.hpp"
#include "openasc/error.hpp"
#include "openasc/network.hpp"

using namespace openasc;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

std::vector<LayerSpec> small_net() {
    return {LayerSpec::conv2d(2, 3, 1), LayerSpec::relu(), LayerSpec::batch_norm(),
            LayerSpec::flatten(), LayerSpec::dense(3), LayerSpec::softmax()};
}

}  // namespace

TEST_CASE("build is deterministic in the seed") {
    Network a = Network::build(small_net(), {1, 4, 4}, 7);
    Network b = Network::build(small_net(), {1, 4, 4}, 7);
    Network c = Network::build(small_net(), {1, 4, 4}, 8);
    std::vector<Tensor*> pa = a.parameters(), pb = b.parameters(), pc = c.parameters();
    REQUIRE(pa.size() == pb.size());
    bool same = true, differs = false;
    for (size_t i = 0; i < pa.size(); ++i) {
        if (pa[i]->v != pb[i]->v) same = false;
        if (pa[i]->v != pc[i]->v) differs = true;
    }
    CHECK(same);
    CHECK(differs);
}

TEST_CASE("forward output shape and layer outputs") {
    Network net = Network::build(small_net(), {1, 4, 4}, 7);
    CHECK(net.output_shape() == std::vector<int>({3}));
    Tensor in = gradcheck::random_tensor({2, 1, 4, 4}, 3);
    Tensor out = net.forward(in, nullptr, false);
    CHECK(out.shape == std::vector<int>({2, 3}));
    // Softmax input is the dense output, one layer back.
    const Tensor& logits = net.layer_output(4);
    CHECK(logits.shape == std::vector<int>({2, 3}));
    for (int b = 0; b < 2; ++b) {
        double z = 0.0;
        for (int j = 0; j < 3; ++j) z += out.at2(b, j);
        CHECK(z == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("checkpoint round trip preserves parameters and running stats") {
    Network net = Network::build(small_net(), {1, 4, 4}, 7);
    Tensor in = gradcheck::random_tensor({4, 1, 4, 4}, 5, -2.0, 2.0);
    for (int i = 0; i < 10; ++i) net.forward(in, nullptr, true);  // move BN stats

    std::string path = temp_path("openasc_net_rt.bin");
    net.save(path, 42);
    Network back = Network::load(path, 42);

    std::vector<Tensor*> sa = net.state(), sb = back.state();
    REQUIRE(sa.size() == sb.size());
    for (size_t i = 0; i < sa.size(); ++i) CHECK(sa[i]->v == sb[i]->v);

    Tensor out_a = net.forward(in, nullptr, false);
    Tensor out_b = back.forward(in, nullptr, false);
    CHECK(out_a.v == out_b.v);

    CHECK_THROWS_AS(Network::load(path, 43), Error);
    try {
        Network::load(path, 43);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::PipelineMismatch);
    }
    std::remove(path.c_str());
}

TEST_CASE("clone copies state without sharing storage") {
    Network net = Network::build(small_net(), {1, 4, 4}, 7);
    Tensor in = gradcheck::random_tensor({2, 1, 4, 4}, 9);
    net.forward(in, nullptr, true);
    Network copy = net.clone();
    Tensor a = net.forward(in, nullptr, false);
    Tensor b = copy.forward(in, nullptr, false);
    CHECK(a.v == b.v);
    // Mutating the copy leaves the original untouched.
    copy.parameters()[0]->v[0] += 1.0;
    Tensor c = net.forward(in, nullptr, false);
    CHECK(c.v == a.v);
}

TEST_CASE("conditioning is demanded when a film layer exists") {
    Network net = Network::build({LayerSpec::flatten(), LayerSpec::film(2)}, {1, 2, 2}, 3);
    CHECK(net.needs_conditioning());
    Tensor in = gradcheck::random_tensor({1, 1, 2, 2}, 4);
    CHECK_THROWS_AS(net.forward(in, nullptr, false), Error);
    try {
        net.forward(in, nullptr, false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MissingConditioning);
    }
}

TEST_CASE("shape mismatches are rejected") {
    Network net = Network::build(small_net(), {1, 4, 4}, 7);
    Tensor wrong = gradcheck::random_tensor({2, 1, 5, 5}, 3);
    CHECK_THROWS_AS(net.forward(wrong, nullptr, false), Error);
}

TEST_CASE("parameter count matches layer arithmetic") {
    Network net = Network::build(small_net(), {1, 4, 4}, 7);
    // conv 1->2 k3: 20; bn over 2 channels: 4; dense 32->3: 99.
    CHECK(net.parameter_count() == 20 + 4 + 99);
}

TEST_CASE("checkpoint of a conditioned network restores film parameters") {
    std::vector<LayerSpec> specs = {LayerSpec::flatten(), LayerSpec::dense(4),
                                    LayerSpec::film(3), LayerSpec::dense(2)};
    Network net = Network::build(specs, {1, 2, 2}, 11);
    std::string path = temp_path("openasc_film_rt.bin");
    net.save(path, 1);
    Network back = Network::load(path, 1);
    Tensor in = gradcheck::random_tensor({2, 1, 2, 2}, 12);
    Tensor cond({2, 3});
    cond.fill(-1.0);
    cond.at2(0, 1) = 1.0;
    cond.at2(1, 2) = 1.0;
    Tensor a = net.forward(in, &cond, false);
    Tensor b = back.forward(in, &cond, false);
    CHECK(a.v == b.v);
    std::remove(path.c_str());
}
