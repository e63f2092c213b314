#include "hdnet/geometry.hpp"

#include <atomic>
#include <stdexcept>
#include <string>

namespace hdnet {

namespace {
std::atomic<long> g_clamp_count{0};

void check_camera(const CameraIntrinsics& camera) {
    if (camera.fx <= 0.0 || camera.fy <= 0.0)
        throw std::invalid_argument("camera: focal lengths must be positive");
}

void check_distribution(const std::vector<double>& dist) {
    if (dist.empty()) throw std::invalid_argument("bin distribution: empty");
    double sum = 0.0;
    for (double w : dist) {
        if (w < 0.0) throw std::invalid_argument("bin distribution: negative weight");
        sum += w;
    }
    if (std::fabs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("bin distribution: weights sum to " + std::to_string(sum));
}
}  // namespace

double normalize_depth(double d, const CameraIntrinsics& camera) {
    check_camera(camera);
    if (d <= 0.0) throw std::domain_error("normalize_depth: depth must be positive");
    return d / camera.focal();
}

double denormalize_depth(double d_hat, const CameraIntrinsics& camera) {
    check_camera(camera);
    if (d_hat <= 0.0) throw std::domain_error("denormalize_depth: depth must be positive");
    return d_hat * camera.focal();
}

double bin_index(double d_hat, const BinConfig& cfg) {
    if (d_hat <= 0.0) throw std::domain_error("bin_index: normalized depth must be positive");
    if (!(cfg.alpha > 0.0 && cfg.alpha < cfg.beta) || cfg.num_bins < 2)
        throw std::invalid_argument("bin_index: invalid bin config");
    if (d_hat < cfg.alpha || d_hat > cfg.beta) {
        g_clamp_count.fetch_add(1, std::memory_order_relaxed);
        d_hat = std::fmin(std::fmax(d_hat, cfg.alpha), cfg.beta);
    }
    return (std::log(d_hat) - std::log(cfg.alpha)) / (std::log(cfg.beta) - std::log(cfg.alpha)) *
           static_cast<double>(cfg.num_bins - 1);
}

long bin_clamp_count() { return g_clamp_count.load(std::memory_order_relaxed); }
void reset_bin_clamp_count() { g_clamp_count.store(0, std::memory_order_relaxed); }

std::vector<double> encode_bins(double b, int num_bins) {
    if (num_bins < 2) throw std::invalid_argument("encode_bins: need at least 2 bins");
    if (b < 0.0 || b > static_cast<double>(num_bins - 1))
        throw std::domain_error("encode_bins: bin coordinate " + std::to_string(b) +
                                " out of [0, " + std::to_string(num_bins - 1) + "]");
    std::vector<double> dist(static_cast<std::size_t>(num_bins), 0.0);
    const double fl = std::floor(b);
    const auto i = static_cast<std::size_t>(fl);
    const double frac = b - fl;
    if (frac == 0.0) {
        dist[i] = 1.0;
    } else {
        dist[i] = 1.0 - frac;
        dist[i + 1] = frac;
    }
    return dist;
}

double decode_bin_coord(const std::vector<double>& dist) {
    check_distribution(dist);
    double b = 0.0;
    for (std::size_t i = 0; i < dist.size(); ++i) b += static_cast<double>(i) * dist[i];
    return b;
}

double depth_from_bin_coord(double b_hat, const BinConfig& cfg, const CameraIntrinsics& camera) {
    check_camera(camera);
    return std::exp(b_hat / static_cast<double>(cfg.num_bins - 1) *
                        (std::log(cfg.beta) - std::log(cfg.alpha)) +
                    std::log(cfg.alpha)) *
           camera.focal();
}

double decode_depth(const std::vector<double>& dist, const BinConfig& cfg,
                    const CameraIntrinsics& camera) {
    if (static_cast<int>(dist.size()) != cfg.num_bins)
        throw std::invalid_argument("decode_depth: distribution length " +
                                    std::to_string(dist.size()) + " != num_bins " +
                                    std::to_string(cfg.num_bins));
    return depth_from_bin_coord(decode_bin_coord(dist), cfg, camera);
}

Vec3 back_project(double u, double v, double d, const CameraIntrinsics& camera) {
    check_camera(camera);
    if (d <= 0.0) throw std::domain_error("back_project: depth must be positive");
    return {(u - camera.cx) * d / camera.fx, (v - camera.cy) * d / camera.fy, d};
}

std::pair<double, double> project(const Vec3& p, const CameraIntrinsics& camera) {
    check_camera(camera);
    if (p.z <= 0.0) throw std::domain_error("project: point behind camera");
    return {p.x * camera.fx / p.z + camera.cx, p.y * camera.fy / p.z + camera.cy};
}

}  // namespace hdnet
