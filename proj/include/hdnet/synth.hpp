#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "hdnet/geometry.hpp"
#include "hdnet/model.hpp"
#include "hdnet/skeleton.hpp"
#include "hdnet/tensor.hpp"

namespace hdnet {

struct PersonGT {
    std::vector<Vec3> pose3d;                   // camera space, mm
    std::vector<std::array<double, 2>> pose2d;  // pixels
    BBox bbox;                                  // pixels
    double root_depth = 0.0;                    // mm
    std::vector<double> bin_target;
    bool truncated = false;  // any joint projected outside the image
};

struct SceneSample {
    int size = 0;  // square image, 3 x size x size
    std::vector<double> image;
    std::vector<PersonGT> persons;
    CameraIntrinsics camera;
    std::uint64_t seed = 0;
};

struct GenConfig {
    int min_persons = 1;
    int max_persons = 2;
    double depth_min = 1200.0;  // mm
    double depth_max = 4200.0;
    Skeleton skeleton;
    std::vector<double> bone_mean;  // per edge, mm
    std::vector<double> bone_std;
    double joint_radius_mm = 9.0;
    int image_size = 96;
    double focal_min = 550.0;
    double focal_max = 650.0;
    int max_place_retries = 64;
    BinConfig bins;

    void validate() const;
    // Desk-scale defaults sized so figures land well inside the bin range.
    static GenConfig desk_default();
};

// Deterministic for a fixed (cfg, seed) pair.
SceneSample generate_scene(const GenConfig& cfg, std::uint64_t seed);

// Sum-normalized Gaussian per joint, centered at the exact (u, v) in heatmap
// cells. Joints outside the grid produce a zero map and a truncation flag.
Tensor render_gt_heatmaps(const std::vector<std::array<double, 2>>& pose2d_hm, double sigma,
                          int height, int width, std::vector<bool>* truncated = nullptr);

// Fixed-size zero-padded crop at original scale; the transform maps patch
// coordinates back to source pixels: src = patch + (dx, dy).
struct CropTransform {
    double dx = 0.0, dy = 0.0;
};

Tensor crop_patch(const Tensor& image, double center_x, double center_y, int patch_size,
                  CropTransform* transform);

}  // namespace hdnet
