#include "hdnet/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace hdnet {

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::full: return "full";
        case Variant::direct_regression: return "direct-regression";
        case Variant::shared_branch: return "shared-branch";
        case Variant::no_gnn: return "no-gnn";
        case Variant::no_hm_pooling: return "no-hm-pooling";
    }
    throw std::logic_error("variant_name: unknown variant");
}

Variant variant_from_name(const std::string& name) {
    if (name == "full") return Variant::full;
    if (name == "direct-regression") return Variant::direct_regression;
    if (name == "shared-branch") return Variant::shared_branch;
    if (name == "no-gnn") return Variant::no_gnn;
    if (name == "no-hm-pooling") return Variant::no_hm_pooling;
    throw std::invalid_argument("unknown model variant: " + name);
}

void ModelConfig::validate() const {
    if (input_size <= 0 || heatmap_size <= 0)
        throw std::invalid_argument("model config: sizes must be positive");
    if (input_size % heatmap_size != 0)
        throw std::invalid_argument("model config: heatmap_size must divide input_size");
    if (input_size / heatmap_size != 4)
        throw std::invalid_argument("model config: heatmap stride must be 4 (input = 4 x heatmap)");
    if (input_size % 16 != 0)
        throw std::invalid_argument("model config: input_size must be divisible by 16");
    if (num_joints < 2) throw std::invalid_argument("model config: need at least 2 joints");
    if (feature_channels < 1) throw std::invalid_argument("model config: feature_channels >= 1");
    if (num_gnn_layers < 1) throw std::invalid_argument("model config: num_gnn_layers >= 1");
    if (bin_config.num_bins < 2) throw std::invalid_argument("model config: num_bins >= 2");
    if (!(bin_config.alpha > 0.0 && bin_config.alpha < bin_config.beta))
        throw std::invalid_argument("model config: require 0 < alpha < beta");
    if (bn_eps <= 0.0) throw std::invalid_argument("model config: bn_eps must be positive");
}

Tensor mask_heatmaps(Tape& tape, const Tensor& hm, const std::vector<BBox>& boxes,
                     bool renormalize) {
    if (hm.ndim() != 4) throw std::invalid_argument("mask_heatmaps: expected [N,J,h,w]");
    const std::size_t N = hm.dim(0), J = hm.dim(1), H = hm.dim(2), W = hm.dim(3);
    if (boxes.size() != N)
        throw std::invalid_argument("mask_heatmaps: " + std::to_string(boxes.size()) +
                                    " boxes for batch of " + std::to_string(N));
    std::vector<double> mask(hm.size(), 0.0);
    for (std::size_t n = 0; n < N; ++n) {
        const BBox& b = boxes[n];
        bool any = false;
        for (std::size_t y = 0; y < H; ++y)
            for (std::size_t x = 0; x < W; ++x) {
                const bool inside = static_cast<double>(x) >= b.x0 && static_cast<double>(x) <= b.x1 &&
                                    static_cast<double>(y) >= b.y0 && static_cast<double>(y) <= b.y1;
                if (!inside) continue;
                any = true;
                for (std::size_t j = 0; j < J; ++j)
                    mask[((n * J + j) * H + y) * W + x] = 1.0;
            }
        if (!any)
            throw std::invalid_argument("mask_heatmaps: bounding box of sample " +
                                        std::to_string(n) + " does not intersect the heatmap grid");
    }
    Tensor masked = ops::mul_const(tape, hm, mask);
    if (!renormalize) return masked;
    Tensor flat = ops::reshape(tape, masked, {N, J, H * W});
    return ops::reshape(tape, ops::normalize_sum(tape, flat, 2), {N, J, H, W});
}

Tensor soft_argmax_2d(Tape& tape, const Tensor& hm) {
    if (hm.ndim() != 4) throw std::invalid_argument("soft_argmax_2d: expected [N,J,h,w]");
    const std::size_t N = hm.dim(0), J = hm.dim(1), H = hm.dim(2), W = hm.dim(3);
    std::vector<double> coords(H * W * 2);
    for (std::size_t y = 0; y < H; ++y)
        for (std::size_t x = 0; x < W; ++x) {
            coords[(y * W + x) * 2 + 0] = static_cast<double>(x);  // u
            coords[(y * W + x) * 2 + 1] = static_cast<double>(y);  // v
        }
    Tensor grid = Tensor::from({H * W, 2}, std::move(coords), false);
    Tensor flat = ops::reshape(tape, hm, {N * J, H * W});
    return ops::reshape(tape, ops::matmul(tape, flat, grid), {N, J, 2});
}

Tensor gnn_mix(Tape& tape, const Tensor& x, const std::vector<double>& adj_norm,
               const Tensor& theta_self, const Tensor& theta_inter) {
    if (x.ndim() != 3) throw std::invalid_argument("gnn_mix: expected [N,J,C] features");
    const std::size_t N = x.dim(0), J = x.dim(1), C = x.dim(2);
    if (adj_norm.size() != J * J)
        throw std::invalid_argument("gnn_mix: adjacency size does not match " + std::to_string(J) +
                                    " joints");
    std::vector<double> diag(J * J, 0.0), off(J * J, 0.0);
    for (std::size_t i = 0; i < J; ++i)
        for (std::size_t j = 0; j < J; ++j)
            (i == j ? diag : off)[i * J + j] = adj_norm[i * J + j];
    Tensor flat = ops::reshape(tape, x, {N * J, C});
    Tensor s = ops::reshape(tape, ops::matmul(tape, flat, theta_self), {N, J, C});
    Tensor t = ops::reshape(tape, ops::matmul(tape, flat, theta_inter), {N, J, C});
    return ops::add(tape, ops::graph_mix(tape, s, diag, J), ops::graph_mix(tape, t, off, J));
}

Model::Model(ModelConfig cfg, Skeleton skeleton, std::uint64_t seed)
    : cfg_(std::move(cfg)), skel_(std::move(skeleton)) {
    cfg_.validate();
    validate_skeleton(skel_);
    if (skel_.num_joints() != cfg_.num_joints)
        throw std::invalid_argument("model: skeleton has " + std::to_string(skel_.num_joints()) +
                                    " joints but config expects " + std::to_string(cfg_.num_joints));
    adj_norm_ = normalize_adjacency(build_adjacency(skel_), skel_.num_joints());

    std::mt19937_64 rng(seed);
    auto uniform_init = [&rng](Tensor& t, std::size_t fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] = dist(rng);
    };
    auto add_conv = [&](const std::string& name, std::size_t f, std::size_t c, std::size_t k) {
        Tensor w = Tensor::zeros({f, c, k, k}, true);
        uniform_init(w, c * k * k);
        params_.emplace(name + ".w", w);
        params_.emplace(name + ".b", Tensor::zeros({f}, true));
    };
    auto add_linear = [&](const std::string& name, std::size_t in, std::size_t out, bool bias) {
        Tensor w = Tensor::zeros({in, out}, true);
        uniform_init(w, in);
        params_.emplace(name + ".w", w);
        if (bias) params_.emplace(name + ".b", Tensor::zeros({out}, true));
    };
    auto add_bn = [&](const std::string& name, std::size_t c) {
        Tensor gamma = Tensor::zeros({c}, true);
        std::fill(gamma.data(), gamma.data() + c, 1.0);
        params_.emplace(name + ".gamma", gamma);
        params_.emplace(name + ".beta", Tensor::zeros({c}, true));
        buffers_.emplace(name + ".mean", Tensor::zeros({c}, false));
        Tensor var = Tensor::zeros({c}, false);
        std::fill(var.data(), var.data() + c, 1.0);
        buffers_.emplace(name + ".var", var);
    };

    const auto C = static_cast<std::size_t>(cfg_.feature_channels);
    const std::size_t C4 = 4 * C;
    const auto J = static_cast<std::size_t>(cfg_.num_joints);
    const auto NB = static_cast<std::size_t>(cfg_.bin_config.num_bins);

    add_conv("backbone.stem", C, 3, 3);
    add_bn("backbone.stem.bn", C);
    for (int lvl : {3, 4, 5}) {
        const std::string name = "backbone.stage" + std::to_string(lvl);
        add_conv(name, C, C, 3);
        add_bn(name + ".bn", C);
    }
    for (int lvl : {2, 3, 4, 5}) add_conv("backbone.lat" + std::to_string(lvl), C, C, 1);
    for (const char* branch : {"pose", "depth"})
        for (int lvl : {5, 4, 3, 2}) {
            const std::string base =
                std::string("branch.") + branch + ".lvl" + std::to_string(lvl);
            add_conv(base + ".conv1", C, C, 3);
            add_bn(base + ".conv1.bn", C);
            add_conv(base + ".conv2", C, C, 3);
            add_bn(base + ".conv2.bn", C);
        }
    add_conv("pose.head", J, C4, 1);
    for (int l = 0; l < cfg_.num_gnn_layers; ++l) {
        const std::string base = "gnn.layer" + std::to_string(l);
        add_linear(base + ".self", C4, C4, false);
        add_linear(base + ".inter", C4, C4, false);
        add_bn(base + ".bn", C4);
        // per-node fully connected replacement for the no-gnn variant
        const std::string fc = "fc_nodes.layer" + std::to_string(l);
        add_linear(fc, C4, C4, false);
        add_bn(fc + ".bn", C4);
        // globally pooled path for the no-hm-pooling variant
        const std::string pf = "pool_fc.layer" + std::to_string(l);
        add_linear(pf, C4, C4, false);
        add_bn(pf + ".bn", C4);
    }
    add_linear("depth.fc", C4, NB, true);
    add_linear("depth.fc_direct", C4, 1, true);
}

Tensor Model::param(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::logic_error("model: missing parameter " + name);
    return it->second;
}

Tensor Model::buffer(const std::string& name) {
    auto it = buffers_.find(name);
    if (it == buffers_.end()) throw std::logic_error("model: missing buffer " + name);
    return it->second;
}

Tensor Model::conv_bn_relu(Tape& tape, const Tensor& x, const std::string& name, int stride,
                           int pad, bool training) {
    Tensor y = ops::conv2d(tape, x, param(name + ".w"), param(name + ".b"), stride, pad);
    Tensor rm = buffer(name + ".bn.mean");
    Tensor rv = buffer(name + ".bn.var");
    y = ops::batchnorm(tape, y, param(name + ".bn.gamma"), param(name + ".bn.beta"), rm, rv,
                       training, cfg_.bn_momentum, cfg_.bn_eps, 1);
    return ops::relu(tape, y);
}

FeaturePyramid Model::backbone_forward(Tape& tape, const Tensor& images, bool training) {
    const auto S = static_cast<std::size_t>(cfg_.input_size);
    if (images.ndim() != 4 || images.dim(1) != 3 || images.dim(2) != S || images.dim(3) != S)
        throw std::invalid_argument("backbone: expected [N,3," + std::to_string(S) + "," +
                                    std::to_string(S) + "] input, got " + shape_str(images.shape()));
    Tensor c2 = conv_bn_relu(tape, images, "backbone.stem", 2, 1, training);
    Tensor c3 = conv_bn_relu(tape, c2, "backbone.stage3", 2, 1, training);
    Tensor c4 = conv_bn_relu(tape, c3, "backbone.stage4", 2, 1, training);
    Tensor c5 = conv_bn_relu(tape, c4, "backbone.stage5", 2, 1, training);
    auto lat = [&](const Tensor& c, int lvl) {
        const std::string name = "backbone.lat" + std::to_string(lvl);
        return ops::conv2d(tape, c, param(name + ".w"), param(name + ".b"), 1, 0);
    };
    FeaturePyramid pyr;
    pyr.p5 = lat(c5, 5);
    pyr.p4 = ops::add(tape, lat(c4, 4), ops::upsample_nearest(tape, pyr.p5, 2));
    pyr.p3 = ops::add(tape, lat(c3, 3), ops::upsample_nearest(tape, pyr.p4, 2));
    pyr.p2 = ops::add(tape, lat(c2, 2), ops::upsample_nearest(tape, pyr.p3, 2));
    return pyr;
}

Tensor Model::multiscale_merge(Tape& tape, const FeaturePyramid& pyr, const std::string& branch,
                               bool training) {
    struct Level {
        const Tensor* t;
        int lvl;
        int factor;  // relative to heatmap resolution; -2 encodes a 2x downsample
    };
    const std::vector<Level> levels = {
        {&pyr.p5, 5, 4}, {&pyr.p4, 4, 2}, {&pyr.p3, 3, 1}, {&pyr.p2, 2, -2}};
    const auto h = static_cast<std::size_t>(cfg_.heatmap_size);
    std::vector<Tensor> merged;
    for (const Level& level : levels) {
        const std::string base = "branch." + branch + ".lvl" + std::to_string(level.lvl);
        Tensor x = conv_bn_relu(tape, *level.t, base + ".conv1", 1, 1, training);
        if (level.factor > 1)
            x = ops::upsample_bilinear(tape, x, level.factor);
        else if (level.factor == -2)
            x = ops::avgpool2x2(tape, x);
        if (x.dim(2) != h || x.dim(3) != h)
            throw std::logic_error("multiscale_merge: level " + std::to_string(level.lvl) +
                                   " resolved to " + shape_str(x.shape()) + ", expected " +
                                   std::to_string(h) + "x" + std::to_string(h));
        x = conv_bn_relu(tape, x, base + ".conv2", 1, 1, training);
        merged.push_back(x);
    }
    return ops::concat(tape, merged, 1);
}

Tensor Model::pose_branch(Tape& tape, const Tensor& f_pose) {
    const std::size_t N = f_pose.dim(0), H = f_pose.dim(2), W = f_pose.dim(3);
    const auto J = static_cast<std::size_t>(cfg_.num_joints);
    Tensor logits = ops::conv2d(tape, f_pose, param("pose.head.w"), param("pose.head.b"), 1, 0);
    Tensor flat = ops::reshape(tape, logits, {N, J, H * W});
    return ops::reshape(tape, ops::softmax(tape, flat, 2), {N, J, H, W});
}

Tensor Model::depth_head(Tape& tape, const Tensor& pooled, bool training) {
    const std::size_t N = pooled.dim(0), J = pooled.dim(1), C4 = pooled.dim(2);
    Tensor x = pooled;
    for (int l = 0; l < cfg_.num_gnn_layers; ++l) {
        Tensor y;
        std::string bn_name;
        if (cfg_.variant == Variant::no_gnn) {
            const std::string base = "fc_nodes.layer" + std::to_string(l);
            Tensor flat = ops::reshape(tape, x, {N * J, C4});
            y = ops::reshape(tape, ops::matmul(tape, flat, param(base + ".w")), {N, J, C4});
            bn_name = base + ".bn";
        } else {
            const std::string base = "gnn.layer" + std::to_string(l);
            y = gnn_mix(tape, x, adj_norm_, param(base + ".self.w"), param(base + ".inter.w"));
            bn_name = base + ".bn";
        }
        Tensor rm = buffer(bn_name + ".mean");
        Tensor rv = buffer(bn_name + ".var");
        y = ops::batchnorm(tape, y, param(bn_name + ".gamma"), param(bn_name + ".beta"), rm, rv,
                           training, cfg_.bn_momentum, cfg_.bn_eps, 2);
        x = ops::relu(tape, y);
    }
    Tensor g = ops::mean_axis1(tape, x);
    if (cfg_.variant == Variant::direct_regression)
        return ops::linear(tape, g, param("depth.fc_direct.w"), param("depth.fc_direct.b"));
    return ops::linear(tape, g, param("depth.fc.w"), param("depth.fc.b"));
}

Tensor Model::depth_head_global(Tape& tape, const Tensor& f_depth, bool training) {
    Tensor g = ops::global_avgpool(tape, f_depth);
    for (int l = 0; l < cfg_.num_gnn_layers; ++l) {
        const std::string base = "pool_fc.layer" + std::to_string(l);
        Tensor y = ops::matmul(tape, g, param(base + ".w"));
        Tensor rm = buffer(base + ".bn.mean");
        Tensor rv = buffer(base + ".bn.var");
        y = ops::batchnorm(tape, y, param(base + ".bn.gamma"), param(base + ".bn.beta"), rm, rv,
                           training, cfg_.bn_momentum, cfg_.bn_eps, 1);
        g = ops::relu(tape, y);
    }
    return ops::linear(tape, g, param("depth.fc.w"), param("depth.fc.b"));
}

ModelOutput Model::forward(Tape& tape, const Tensor& images, const std::vector<BBox>* bboxes,
                           bool training) {
    FeaturePyramid pyr = backbone_forward(tape, images, training);
    Tensor f_pose = multiscale_merge(tape, pyr, "pose", training);
    Tensor f_depth = cfg_.variant == Variant::shared_branch
                         ? f_pose
                         : multiscale_merge(tape, pyr, "depth", training);
    Tensor hm = pose_branch(tape, f_pose);
    if (bboxes) hm = mask_heatmaps(tape, hm, *bboxes, cfg_.renormalize_masked);

    ModelOutput out;
    out.heatmaps = hm;
    out.pose_hm = soft_argmax_2d(tape, hm);

    Tensor logits;
    if (cfg_.variant == Variant::no_hm_pooling) {
        logits = depth_head_global(tape, f_depth, training);
    } else {
        Tensor pooled = ops::attention_pool(tape, hm, f_depth);
        logits = depth_head(tape, pooled, training);
    }
    if (cfg_.variant == Variant::direct_regression) {
        out.dhat_direct = ops::softplus(tape, logits);
    } else {
        out.bins = ops::softmax(tape, logits, 1);
        const auto NB = static_cast<std::size_t>(cfg_.bin_config.num_bins);
        std::vector<double> idx(NB);
        for (std::size_t i = 0; i < NB; ++i) idx[i] = static_cast<double>(i);
        Tensor idx_col = Tensor::from({NB, 1}, std::move(idx), false);
        out.bhat = ops::matmul(tape, out.bins, idx_col);
    }
    return out;
}

double Model::decoded_depth(const ModelOutput& out, std::size_t n,
                            const CameraIntrinsics& camera) const {
    if (cfg_.variant == Variant::direct_regression) {
        const double dhat = out.dhat_direct.values().at(n);
        return denormalize_depth(dhat, camera);
    }
    const double b_hat = out.bhat.values().at(n);
    return depth_from_bin_coord(b_hat, cfg_.bin_config, camera);
}

Model::Prediction Model::predict(const Tensor& image, const BBox* bbox_hm,
                                 const CameraIntrinsics& camera, double patch_du,
                                 double patch_dv) {
    Tape tape;
    Tensor batch = Tensor::from({1, image.dim(0), image.dim(1), image.dim(2)}, image.values(), false);
    std::vector<BBox> boxes;
    if (bbox_hm) boxes.push_back(*bbox_hm);
    ModelOutput out = forward(tape, batch, bbox_hm ? &boxes : nullptr, false);
    tape.clear();

    Prediction pred;
    const auto J = static_cast<std::size_t>(cfg_.num_joints);
    const double stride = static_cast<double>(cfg_.input_size) / cfg_.heatmap_size;
    for (std::size_t j = 0; j < J; ++j)
        pred.pose2d.push_back({out.pose_hm.values()[j * 2 + 0] * stride,
                               out.pose_hm.values()[j * 2 + 1] * stride});
    if (cfg_.variant != Variant::direct_regression) {
        const auto NB = static_cast<std::size_t>(cfg_.bin_config.num_bins);
        pred.bins.assign(out.bins.values().begin(), out.bins.values().begin() + NB);
    }
    pred.depth = decoded_depth(out, 0, camera);
    const auto root = static_cast<std::size_t>(skel_.root_index);
    const double u = pred.pose2d[root][0] + patch_du;
    const double v = pred.pose2d[root][1] + patch_dv;
    pred.root3d = back_project(u, v, pred.depth, camera);

    const std::size_t HW = static_cast<std::size_t>(cfg_.heatmap_size) * cfg_.heatmap_size;
    double peak = 0.0;
    for (std::size_t p = 0; p < HW; ++p)
        peak = std::max(peak, out.heatmaps.values()[root * HW + p]);
    pred.score = peak;
    return pred;
}

}  // namespace hdnet
