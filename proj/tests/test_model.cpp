#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "hdnet/model.hpp"
#include "hdnet/ops.hpp"

using namespace hdnet;

namespace {

ModelConfig small_cfg() {
    ModelConfig mc;
    mc.input_size = 32;
    mc.heatmap_size = 8;
    mc.feature_channels = 4;
    return mc;
}

Tensor ramp_images(int n, int s) {
    Tensor t = Tensor::zeros({static_cast<std::size_t>(n), 3, static_cast<std::size_t>(s),
                              static_cast<std::size_t>(s)});
    for (std::size_t i = 0; i < t.size(); ++i) t.values()[i] = 0.05 + 0.013 * (i % 53);
    return t;
}

}  // namespace

TEST_CASE("pyramid and head shapes") {
    Model model(small_cfg(), default_skeleton(), 3);
    Tape tape;
    Tensor images = ramp_images(2, 32);
    FeaturePyramid pyr = model.backbone_forward(tape, images, false);
    CHECK(pyr.p2.shape() == Shape{2, 4, 16, 16});
    CHECK(pyr.p3.shape() == Shape{2, 4, 8, 8});
    CHECK(pyr.p4.shape() == Shape{2, 4, 4, 4});
    CHECK(pyr.p5.shape() == Shape{2, 4, 2, 2});

    ModelOutput out = model.forward(tape, images, nullptr, false);
    CHECK(out.heatmaps.shape() == Shape{2, 15, 8, 8});
    CHECK(out.pose_hm.shape() == Shape{2, 15, 2});
    CHECK(out.bins.shape() == Shape{2, 71});
    CHECK(out.bhat.shape() == Shape{2, 1});
    for (int n = 0; n < 2; ++n) {
        double s = 0.0;
        for (int i = 0; i < 71; ++i) s += out.bins.data()[n * 71 + i];
        CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("input validation") {
    Model model(small_cfg(), default_skeleton(), 3);
    Tape tape;
    Tensor wrong = Tensor::zeros({1, 3, 16, 16});
    CHECK_THROWS(model.forward(tape, wrong, nullptr, false));
    ModelConfig bad = small_cfg();
    bad.heatmap_size = 5;  // ratio must be 4
    CHECK_THROWS(Model(bad, default_skeleton(), 3));
}

TEST_CASE("soft-argmax of a delta heatmap hits the cell exactly") {
    Tape tape;
    Tensor hm = Tensor::zeros({1, 1, 8, 8});
    hm.values()[5 * 8 + 2] = 1.0;  // v=5, u=2
    Tensor uv = soft_argmax_2d(tape, hm);
    CHECK(uv.data()[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(uv.data()[1] == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("soft-argmax of uniform and twin-peak maps") {
    Tape tape;
    Tensor uniform = Tensor::zeros({1, 1, 8, 8});
    for (double& v : uniform.values()) v = 1.0 / 64.0;
    Tensor uv = soft_argmax_2d(tape, uniform);
    CHECK(uv.data()[0] == doctest::Approx(3.5).epsilon(1e-12));
    CHECK(uv.data()[1] == doctest::Approx(3.5).epsilon(1e-12));

    Tensor twin = Tensor::zeros({1, 1, 8, 8});
    twin.values()[1 * 8 + 1] = 0.5;
    twin.values()[5 * 8 + 3] = 0.5;
    Tensor uv2 = soft_argmax_2d(tape, twin);
    CHECK(uv2.data()[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(uv2.data()[1] == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("soft-argmax translation equivariance") {
    Tape tape;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    Tensor hm = Tensor::zeros({1, 1, 8, 8});
    double sum = 0.0;
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 5; ++x) {
            const double v = dist(rng);
            hm.values()[y * 8 + x] = v;
            sum += v;
        }
    Tensor shifted = Tensor::zeros({1, 1, 8, 8});
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 5; ++x)
            shifted.values()[(y + 2) * 8 + (x + 3)] = hm.values()[y * 8 + x];
    for (double& v : hm.values()) v /= sum;
    for (double& v : shifted.values()) v /= sum;
    Tensor a = soft_argmax_2d(tape, hm);
    Tensor b = soft_argmax_2d(tape, shifted);
    CHECK(b.data()[0] - a.data()[0] == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(b.data()[1] - a.data()[1] == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("bbox masking zeroes outside mass and renormalizes") {
    Tape tape;
    Tensor hm = Tensor::zeros({1, 1, 4, 4});
    for (double& v : hm.values()) v = 1.0 / 16.0;
    std::vector<BBox> boxes = {{1, 1, 2, 2}};
    Tensor masked = mask_heatmaps(tape, hm, boxes, false);
    CHECK(masked.data()[0] == 0.0);
    CHECK(masked.data()[1 * 4 + 1] == doctest::Approx(1.0 / 16.0));

    Tensor renorm = mask_heatmaps(tape, hm, boxes, true);
    double s = 0.0;
    for (double v : renorm.values()) s += v;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(renorm.data()[1 * 4 + 1] == doctest::Approx(0.25).epsilon(1e-12));

    std::vector<BBox> outside = {{9, 9, 12, 12}};
    CHECK_THROWS(mask_heatmaps(tape, hm, outside, true));
}

TEST_CASE("attention pooling of a delta heatmap selects one feature column") {
    Tape tape;
    Tensor hm = Tensor::zeros({1, 1, 2, 2});
    hm.values()[3] = 1.0;
    Tensor feat = Tensor::from({1, 2, 2, 2}, {1, 2, 3, 4, 10, 20, 30, 40});
    Tensor pooled = ops::attention_pool(tape, hm, feat);
    CHECK(pooled.shape() == Shape{1, 1, 2});
    CHECK(pooled.data()[0] == 4.0);
    CHECK(pooled.data()[1] == 40.0);
}

TEST_CASE("attention pooling is convex for normalized heatmaps") {
    Tape tape;
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    Tensor hm = Tensor::zeros({1, 1, 4, 4});
    double s = 0.0;
    for (double& v : hm.values()) {
        v = dist(rng);
        s += v;
    }
    for (double& v : hm.values()) v /= s;
    Tensor feat = Tensor::zeros({1, 1, 4, 4});
    double lo = 1e9, hi = -1e9;
    for (double& v : feat.values()) {
        v = dist(rng) * 10 - 5;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    Tensor pooled = ops::attention_pool(tape, hm, feat);
    CHECK(pooled.data()[0] >= lo);
    CHECK(pooled.data()[0] <= hi);
}

TEST_CASE("gnn identity on a row-stochastic fixed point") {
    // identity mixing weights + constant features: row-stochastic adjacency
    // reproduces the input exactly
    Tape tape;
    const Skeleton skel = default_skeleton();
    const int J = skel.num_joints();
    const std::vector<double> adj = normalize_adjacency(build_adjacency(skel), J);
    const std::size_t C = 3;
    Tensor eye = Tensor::zeros({C, C});
    for (std::size_t i = 0; i < C; ++i) eye.values()[i * C + i] = 1.0;
    Tensor x = Tensor::zeros({1, static_cast<std::size_t>(J), C});
    for (std::size_t j = 0; j < static_cast<std::size_t>(J); ++j)
        for (std::size_t c = 0; c < C; ++c) x.values()[j * C + c] = 2.0 + static_cast<double>(c);
    Tensor y = gnn_mix(tape, x, adj, eye, eye);
    for (std::size_t i = 0; i < y.size(); ++i)
        CHECK(y.data()[i] == doctest::Approx(x.data()[i]).epsilon(1e-12));
}

TEST_CASE("bin logits are invariant to joint permutation after mean pooling") {
    // mean over nodes erases joint order when the adjacency is permuted the
    // same way as the features
    Tape tape;
    const Skeleton skel = default_skeleton();
    const int J = skel.num_joints();
    const std::vector<double> adj = normalize_adjacency(build_adjacency(skel), J);
    std::vector<int> perm(J);
    for (int i = 0; i < J; ++i) perm[i] = (i * 7 + 3) % J;
    std::vector<double> padj(J * J);
    for (int i = 0; i < J; ++i)
        for (int j = 0; j < J; ++j) padj[perm[i] * J + perm[j]] = adj[i * J + j];

    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    const std::size_t C = 4;
    Tensor x = Tensor::zeros({1, static_cast<std::size_t>(J), C});
    for (double& v : x.values()) v = dist(rng);
    Tensor px = Tensor::zeros({1, static_cast<std::size_t>(J), C});
    for (int j = 0; j < J; ++j)
        for (std::size_t c = 0; c < C; ++c)
            px.values()[perm[j] * C + c] = x.values()[j * C + c];
    Tensor ts = Tensor::zeros({C, C}), ti = Tensor::zeros({C, C});
    for (double& v : ts.values()) v = dist(rng);
    for (double& v : ti.values()) v = dist(rng);

    Tensor a = ops::mean_axis1(tape, gnn_mix(tape, x, adj, ts, ti));
    Tensor b = ops::mean_axis1(tape, gnn_mix(tape, px, padj, ts, ti));
    for (std::size_t c = 0; c < C; ++c)
        CHECK(a.data()[c] == doctest::Approx(b.data()[c]).epsilon(1e-9));
}

TEST_CASE("variants share one parameter schema") {
    const std::vector<Variant> variants = {Variant::full, Variant::direct_regression,
                                           Variant::shared_branch, Variant::no_gnn,
                                           Variant::no_hm_pooling};
    std::vector<std::string> reference;
    for (Variant v : variants) {
        ModelConfig mc = small_cfg();
        mc.variant = v;
        Model model(mc, default_skeleton(), 3);
        std::vector<std::string> names;
        for (const auto& [name, t] : model.params()) names.push_back(name);
        if (reference.empty()) reference = names;
        CHECK(names == reference);

        Tape tape;
        ModelOutput out = model.forward(tape, ramp_images(1, 32), nullptr, false);
        if (v == Variant::direct_regression) {
            CHECK(out.dhat_direct.defined());
            CHECK(out.dhat_direct.data()[0] > 0.0);  // softplus output
        } else {
            CHECK(out.bins.defined());
            CHECK(out.bhat.defined());
        }
    }
}

TEST_CASE("variant names round trip") {
    for (const char* name : {"full", "direct-regression", "shared-branch", "no-gnn",
                             "no-hm-pooling"})
        CHECK(variant_name(variant_from_name(name)) == name);
    CHECK_THROWS(variant_from_name("bogus"));
}

TEST_CASE("zero image produces a zero pyramid up to bn offsets") {
    // with zero weights biases at init zero, conv of zeros stays zero; the
    // pyramid laterals are pure convs so a zero stem input keeps p2..p5 finite
    Model model(small_cfg(), default_skeleton(), 3);
    Tape tape;
    Tensor zeros = Tensor::zeros({1, 3, 32, 32});
    FeaturePyramid pyr = model.backbone_forward(tape, zeros, false);
    for (const Tensor* t : {&pyr.p2, &pyr.p3, &pyr.p4, &pyr.p5})
        for (double v : t->values()) CHECK(std::isfinite(v));
}

TEST_CASE("decoded depth matches the bin codec") {
    ModelConfig mc = small_cfg();
    Model model(mc, default_skeleton(), 3);
    Tape tape;
    ModelOutput out = model.forward(tape, ramp_images(1, 32), nullptr, false);
    const CameraIntrinsics cam{600.0, 620.0, 16.0, 16.0};
    std::vector<double> dist(out.bins.values());
    const double expected = decode_depth(dist, mc.bin_config, cam);
    CHECK(model.decoded_depth(out, 0, cam) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("eval-mode forward is deterministic and training updates buffers") {
    Model model(small_cfg(), default_skeleton(), 3);
    Tensor images = ramp_images(2, 32);
    Tape t1, t2;
    ModelOutput a = model.forward(t1, images, nullptr, false);
    ModelOutput b = model.forward(t2, images, nullptr, false);
    for (std::size_t i = 0; i < a.bins.size(); ++i)
        CHECK(a.bins.data()[i] == b.bins.data()[i]);

    const std::vector<double> before = model.buffers().at("backbone.stem.bn.mean").values();
    Tape t3;
    model.forward(t3, images, nullptr, true);
    const std::vector<double> after = model.buffers().at("backbone.stem.bn.mean").values();
    CHECK(before != after);
}
