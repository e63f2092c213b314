#include "hdnet/gradsuite.hpp"

#include <cmath>
#include <random>

#include "hdnet/losses.hpp"
#include "hdnet/model.hpp"
#include "hdnet/ops.hpp"

namespace hdnet {

namespace {

constexpr double kStep = 1e-5;
constexpr double kTol = 1e-6;

Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo, double hi,
                     double keep_away_from_zero = 0.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Tensor t = Tensor::zeros(shape, true);
    for (double& v : t.values()) {
        v = dist(rng);
        // nudge off the kink so central differences stay two-sided smooth
        if (keep_away_from_zero > 0.0 && std::fabs(v) < keep_away_from_zero)
            v = v < 0.0 ? -keep_away_from_zero : keep_away_from_zero;
    }
    return t;
}

}  // namespace

std::vector<GradSuiteEntry> run_gradient_suite(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<GradSuiteEntry> out;

    auto check = [&out](const std::string& name, const GraphBuilder& builder,
                        std::vector<Tensor> point, double tol = kTol, int max_coords = -1) {
        const GradCheckResult r = gradient_check(builder, std::move(point), kStep, tol, max_coords);
        out.push_back({name, r.max_rel_err, r.pass});
    };

    using namespace ops;

    check("add", [](Tape& t, std::vector<Tensor>& x) {
        return sum_all(t, mul(t, add(t, x[0], x[1]), x[0]));
    }, {random_tensor({2, 3}, rng, -1, 1), random_tensor({2, 3}, rng, -1, 1)});

    check("sub_mul", [](Tape& t, std::vector<Tensor>& x) {
        return sum_all(t, mul(t, sub(t, x[0], x[1]), x[1]));
    }, {random_tensor({4}, rng, -1, 1), random_tensor({4}, rng, -1, 1)});

    check("scale", [](Tape& t, std::vector<Tensor>& x) {
        return sum_all(t, scale(t, mul(t, x[0], x[0]), -2.5));
    }, {random_tensor({3, 2}, rng, -1, 1)});

    check("relu", [](Tape& t, std::vector<Tensor>& x) {
        return sum_all(t, mul(t, relu(t, x[0]), x[0]));
    }, {random_tensor({5, 5}, rng, -1, 1, 0.05)});

    check("softplus", [](Tape& t, std::vector<Tensor>& x) {
        return sum_all(t, softplus(t, x[0]));
    }, {random_tensor({6}, rng, -2, 2)});

    check("abs", [](Tape& t, std::vector<Tensor>& x) {
        return sum_all(t, abs(t, x[0]));
    }, {random_tensor({7}, rng, -1, 1, 0.05)});

    check("log_eps", [](Tape& t, std::vector<Tensor>& x) {
        return sum_all(t, log_eps(t, x[0]));
    }, {random_tensor({6}, rng, 0.2, 2.0)});

    {
        std::vector<double> mask = {1, 0, 0.5, 2, -1, 0.25};
        check("mul_const", [mask](Tape& t, std::vector<Tensor>& x) {
            return sum_all(t, mul_const(t, x[0], mask));
        }, {random_tensor({6}, rng, -1, 1)});
    }

    check("matmul", [](Tape& t, std::vector<Tensor>& x) {
        return sum_all(t, mul(t, matmul(t, x[0], x[1]), matmul(t, x[0], x[1])));
    }, {random_tensor({3, 4}, rng, -1, 1), random_tensor({4, 2}, rng, -1, 1)});

    check("linear", [](Tape& t, std::vector<Tensor>& x) {
        return mean_all(t, relu(t, linear(t, x[0], x[1], x[2])));
    }, {random_tensor({2, 5}, rng, -1, 1, 0.02), random_tensor({5, 3}, rng, -1, 1),
        random_tensor({3}, rng, -1, 1)});

    check("conv2d_s1", [](Tape& t, std::vector<Tensor>& x) {
        return sum_all(t, mul(t, conv2d(t, x[0], x[1], x[2], 1, 1),
                              conv2d(t, x[0], x[1], x[2], 1, 1)));
    }, {random_tensor({2, 2, 5, 5}, rng, -1, 1), random_tensor({3, 2, 3, 3}, rng, -1, 1),
        random_tensor({3}, rng, -1, 1)});

    check("conv2d_s2", [](Tape& t, std::vector<Tensor>& x) {
        return mean_all(t, conv2d(t, x[0], x[1], x[2], 2, 1));
    }, {random_tensor({1, 3, 6, 6}, rng, -1, 1), random_tensor({2, 3, 3, 3}, rng, -1, 1),
        random_tensor({2}, rng, -1, 1)});

    {
        Tensor rm = Tensor::zeros({3});
        Tensor rv = Tensor::zeros({3});
        for (double& v : rv.values()) v = 1.0;
        check("batchnorm_train", [rm, rv](Tape& t, std::vector<Tensor>& x) mutable {
            Tensor m = rm.detach(), v = rv.detach();
            return sum_all(t, mul(t, batchnorm(t, x[0], x[1], x[2], m, v, true, 0.9, 1e-5, 1),
                                  x[0]));
        }, {random_tensor({2, 3, 4, 4}, rng, -1, 1), random_tensor({3}, rng, 0.5, 1.5),
            random_tensor({3}, rng, -0.5, 0.5)}, 1e-5);
    }

    check("softmax", [](Tape& t, std::vector<Tensor>& x) {
        return sum_all(t, mul(t, softmax(t, x[0], 1), x[0]));
    }, {random_tensor({3, 7}, rng, -2, 2)});

    check("upsample_nearest", [](Tape& t, std::vector<Tensor>& x) {
        return sum_all(t, mul(t, upsample_nearest(t, x[0], 2), upsample_nearest(t, x[0], 2)));
    }, {random_tensor({1, 2, 3, 3}, rng, -1, 1)});

    check("upsample_bilinear", [](Tape& t, std::vector<Tensor>& x) {
        return sum_all(t, mul(t, upsample_bilinear(t, x[0], 2), upsample_bilinear(t, x[0], 2)));
    }, {random_tensor({1, 2, 4, 4}, rng, -1, 1)});

    check("avgpool2x2", [](Tape& t, std::vector<Tensor>& x) {
        return sum_all(t, mul(t, avgpool2x2(t, x[0]), avgpool2x2(t, x[0])));
    }, {random_tensor({2, 2, 4, 4}, rng, -1, 1)});

    check("global_avgpool", [](Tape& t, std::vector<Tensor>& x) {
        return sum_all(t, mul(t, global_avgpool(t, x[0]), global_avgpool(t, x[0])));
    }, {random_tensor({2, 3, 4, 4}, rng, -1, 1)});

    check("concat", [](Tape& t, std::vector<Tensor>& x) {
        return sum_all(t, mul(t, concat(t, {x[0], x[1]}, 1), concat(t, {x[0], x[1]}, 1)));
    }, {random_tensor({2, 2, 3, 3}, rng, -1, 1), random_tensor({2, 3, 3, 3}, rng, -1, 1)});

    check("reshape", [](Tape& t, std::vector<Tensor>& x) {
        Tensor r = reshape(t, x[0], {6});
        return sum_all(t, mul(t, r, r));
    }, {random_tensor({2, 3}, rng, -1, 1)});

    check("mean_axis1", [](Tape& t, std::vector<Tensor>& x) {
        return sum_all(t, mul(t, mean_axis1(t, x[0]), mean_axis1(t, x[0])));
    }, {random_tensor({2, 4, 3}, rng, -1, 1)});

    check("normalize_sum", [](Tape& t, std::vector<Tensor>& x) {
        return sum_all(t, mul(t, normalize_sum(t, x[0], 1), x[0]));
    }, {random_tensor({3, 5}, rng, 0.2, 2.0)});

    {
        std::vector<double> mix = {0.5, 0.5, 0.0, 0.25, 0.5, 0.25, 0.0, 0.5, 0.5};
        check("graph_mix", [mix](Tape& t, std::vector<Tensor>& x) {
            Tensor g = graph_mix(t, x[0], mix, 3);
            return sum_all(t, mul(t, g, g));
        }, {random_tensor({2, 3, 4}, rng, -1, 1)});
    }

    check("attention_pool", [](Tape& t, std::vector<Tensor>& x) {
        Tensor p = attention_pool(t, x[0], x[1]);
        return sum_all(t, mul(t, p, p));
    }, {random_tensor({2, 3, 4, 4}, rng, 0.0, 1.0), random_tensor({2, 5, 4, 4}, rng, -1, 1)});

    {
        std::vector<BBox> boxes = {{1, 1, 3, 3}, {0, 0, 2, 4}};
        check("mask_heatmaps", [boxes](Tape& t, std::vector<Tensor>& x) {
            Tensor sm = softmax(t, reshape(t, x[0], {2 * 2, 5 * 5}), 1);
            Tensor hm = reshape(t, sm, {2, 2, 5, 5});
            Tensor masked = mask_heatmaps(t, hm, boxes, true);
            return sum_all(t, mul(t, masked, x[1]));
        }, {random_tensor({2, 2, 5, 5}, rng, -1, 1), random_tensor({2, 2, 5, 5}, rng, -1, 1)});
    }

    check("soft_argmax", [](Tape& t, std::vector<Tensor>& x) {
        Tensor sm = softmax(t, reshape(t, x[0], {2, 4 * 4}), 1);
        Tensor hm = reshape(t, sm, {1, 2, 4, 4});
        Tensor uv = soft_argmax_2d(t, hm);
        return sum_all(t, mul(t, uv, uv));
    }, {random_tensor({1, 2, 4, 4}, rng, -2, 2)});

    {
        Skeleton skel = default_skeleton();
        const std::vector<double> adj = normalize_adjacency(build_adjacency(skel),
                                                            skel.num_joints());
        check("gnn_mix", [adj](Tape& t, std::vector<Tensor>& x) {
            Tensor g = gnn_mix(t, x[0], adj, x[1], x[2]);
            return sum_all(t, mul(t, g, g));
        }, {random_tensor({2, 15, 3}, rng, -1, 1), random_tensor({3, 3}, rng, -1, 1),
            random_tensor({3, 3}, rng, -1, 1)});
    }

    // end-to-end: a tiny model driven through every loss term
    {
        ModelConfig mc;
        mc.input_size = 16;
        mc.heatmap_size = 4;
        mc.feature_channels = 2;
        Skeleton skel = default_skeleton();
        auto model = std::make_shared<Model>(mc, skel, seed);
        const std::size_t J = mc.num_joints, h = mc.heatmap_size, NB = mc.bin_config.num_bins;
        // batch of 2: a single sample would give the 1x1 top level degenerate
        // batch statistics (output exactly beta = 0, right on the relu kink)
        Tensor hm_target = Tensor::zeros({2, J, h, h});
        for (double& v : hm_target.values()) v = 1.0 / (h * h);
        Tensor pose_target = Tensor::zeros({2, J, 2});
        for (double& v : pose_target.values()) v = 1.3;
        Tensor bin_target = Tensor::zeros({2, NB});
        bin_target.values()[10] = 0.4;
        bin_target.values()[11] = 0.6;
        bin_target.values()[NB + 20] = 1.0;
        Tensor b_target = Tensor::from({2, 1}, {10.6, 20.0});
        std::vector<Tensor> leaves;
        std::vector<std::string> names;
        for (auto& [name, p] : model->params()) {
            leaves.push_back(p);
            names.push_back(name);
        }
        std::vector<BBox> boxes = {{0, 0, 3, 3}, {1, 0, 3, 2}};
        LossWeights w;
        GraphBuilder builder = [model, hm_target, pose_target, bin_target, b_target, boxes,
                                w](Tape& t, std::vector<Tensor>& x) {
            Tensor images = Tensor::zeros({2, 3, 16, 16});
            for (std::size_t i = 0; i < images.size(); ++i)
                images.values()[i] = 0.1 + 0.02 * static_cast<double>(i % 31);
            ModelOutput o = model->forward(t, images, &boxes, true);
            Tensor l_hm = heatmap_mse(t, o.heatmaps, hm_target);
            Tensor l_pose = pose_l1(t, o.pose_hm, pose_target);
            Tensor l_bins = bins_ce(t, o.bins, bin_target);
            Tensor l_idx = idx_l1(t, o.bhat, b_target);
            return total_loss(t, l_hm, l_pose, l_bins, l_idx, w);
        };
        const GradCheckResult r = gradient_check(builder, leaves, 1e-5, 2e-4, 4);
        out.push_back({"model_composite", r.max_rel_err, r.pass});
    }

    return out;
}

bool gradient_suite_passed(const std::vector<GradSuiteEntry>& entries) {
    for (const GradSuiteEntry& e : entries)
        if (!e.pass) return false;
    return true;
}

}  // namespace hdnet
