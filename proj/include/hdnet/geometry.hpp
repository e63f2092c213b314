#pragma once

#include <cmath>
#include <utility>
#include <vector>

namespace hdnet {

struct CameraIntrinsics {
    double fx = 1000.0;
    double fy = 1000.0;
    double cx = 0.0;
    double cy = 0.0;

    // single focal-length approximation used for depth normalization
    double focal() const { return std::sqrt(fx * fy); }
};

struct BinConfig {
    double alpha = 1.0;
    double beta = 8.0;
    int num_bins = 71;
};

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;
};

// d_hat = d / sqrt(fx * fy); throws on d <= 0.
double normalize_depth(double d, const CameraIntrinsics& camera);
double denormalize_depth(double d_hat, const CameraIntrinsics& camera);

// Real-valued coordinate into the log-depth bin space; strictly increasing,
// 0 at alpha and num_bins-1 at beta. Values outside [alpha, beta] are clamped
// and counted (see bin_clamp_count).
double bin_index(double d_hat, const BinConfig& cfg);
long bin_clamp_count();
void reset_bin_clamp_count();

// Two-bin interpolation target: weights (1-frac(b), frac(b)) at floor(b),
// floor(b)+1. The weighted index sum recovers b exactly.
std::vector<double> encode_bins(double b, int num_bins);

// Weighted bin-index sum of a distribution (the soft-argmax over bins).
double decode_bin_coord(const std::vector<double>& dist);

// b-coordinate -> absolute depth through the log-depth map and the camera focal.
double depth_from_bin_coord(double b_hat, const BinConfig& cfg, const CameraIntrinsics& camera);
double decode_depth(const std::vector<double>& dist, const BinConfig& cfg,
                    const CameraIntrinsics& camera);

Vec3 back_project(double u, double v, double d, const CameraIntrinsics& camera);
std::pair<double, double> project(const Vec3& p, const CameraIntrinsics& camera);

}  // namespace hdnet
