#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hdnet/geometry.hpp"
#include "hdnet/ops.hpp"
#include "hdnet/skeleton.hpp"

namespace hdnet {

enum class Variant { full, direct_regression, shared_branch, no_gnn, no_hm_pooling };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

struct ModelConfig {
    int input_size = 256;
    int heatmap_size = 64;
    int num_joints = 15;
    int feature_channels = 16;  // per-scale channel width
    int num_gnn_layers = 2;
    BinConfig bin_config;
    Variant variant = Variant::full;
    bool renormalize_masked = true;
    double bn_momentum = 0.9;
    double bn_eps = 1e-5;

    void validate() const;
};

// Axis-aligned box in heatmap cell coordinates; a cell (ix, iy) is inside
// when x0 <= ix <= x1 and y0 <= iy <= y1.
struct BBox {
    double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
};

struct FeaturePyramid {
    Tensor p5, p4, p3, p2;  // strides 16, 8, 4, 2 relative to the input
};

struct ModelOutput {
    Tensor heatmaps;     // [N,J,h,h], masked and renormalized
    Tensor pose_hm;      // [N,J,2] soft-argmax coordinates in heatmap cells
    Tensor bins;         // [N,N_B] softmax distribution (undefined for direct regression)
    Tensor bhat;         // [N,1] weighted bin index (undefined for direct regression)
    Tensor dhat_direct;  // [N,1] normalized depth (direct regression only)
};

// Zeroes heatmap mass outside each sample's box; renormalizes per joint when
// requested. Throws when a box has no intersection with the grid.
Tensor mask_heatmaps(Tape& tape, const Tensor& hm, const std::vector<BBox>& boxes,
                     bool renormalize);

// Expectation of (u, v) grid coordinates under each joint map: [N,J,h,w] -> [N,J,2].
Tensor soft_argmax_2d(Tape& tape, const Tensor& hm);

// One GNN mixing step before the nonlinearity:
// out[i] = a_ii * x[i] Theta_self + sum_{j != i} a_ij * x[j] Theta_inter.
Tensor gnn_mix(Tape& tape, const Tensor& x, const std::vector<double>& adj_norm,
               const Tensor& theta_self, const Tensor& theta_inter);

class Model {
public:
    Model(ModelConfig cfg, Skeleton skeleton, std::uint64_t seed);

    const ModelConfig& config() const { return cfg_; }
    const Skeleton& skeleton() const { return skel_; }
    std::map<std::string, Tensor>& params() { return params_; }
    std::map<std::string, Tensor>& buffers() { return buffers_; }
    const std::map<std::string, Tensor>& params() const { return params_; }
    const std::map<std::string, Tensor>& buffers() const { return buffers_; }

    FeaturePyramid backbone_forward(Tape& tape, const Tensor& images, bool training);
    // branch is "pose" or "depth"
    Tensor multiscale_merge(Tape& tape, const FeaturePyramid& pyr, const std::string& branch,
                            bool training);
    Tensor pose_branch(Tape& tape, const Tensor& f_pose);

    ModelOutput forward(Tape& tape, const Tensor& images, const std::vector<BBox>* bboxes,
                        bool training);

    // Absolute depth of sample n decoded from a forward result.
    double decoded_depth(const ModelOutput& out, std::size_t n, const CameraIntrinsics& camera) const;

    // Full single-sample pipeline on a detached forward pass (eval mode).
    struct Prediction {
        std::vector<std::array<double, 2>> pose2d;  // input-patch pixels
        std::vector<double> bins;
        double depth = 0.0;
        Vec3 root3d;
        double score = 0.0;  // peak heatmap value of the root joint
    };
    Prediction predict(const Tensor& image, const BBox* bbox_hm, const CameraIntrinsics& camera,
                       double patch_du = 0.0, double patch_dv = 0.0);

    const std::vector<double>& normalized_adjacency() const { return adj_norm_; }

private:
    Tensor param(const std::string& name) const;
    Tensor buffer(const std::string& name);
    Tensor conv_bn_relu(Tape& tape, const Tensor& x, const std::string& name, int stride, int pad,
                        bool training);
    Tensor depth_head(Tape& tape, const Tensor& pooled, bool training);  // [N,J,C'] -> logits
    Tensor depth_head_global(Tape& tape, const Tensor& f_depth, bool training);

    ModelConfig cfg_;
    Skeleton skel_;
    std::vector<double> adj_norm_;
    std::map<std::string, Tensor> params_;
    std::map<std::string, Tensor> buffers_;
};

}  // namespace hdnet
