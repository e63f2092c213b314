#include "hdnet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>

namespace hdnet {

void GenConfig::validate() const {
    if (min_persons < 1 || max_persons < min_persons)
        throw std::invalid_argument("gen config: invalid person count range");
    if (!(depth_min > 0.0 && depth_min < depth_max))
        throw std::invalid_argument("gen config: invalid depth range");
    if (!(focal_min > 0.0 && focal_min <= focal_max))
        throw std::invalid_argument("gen config: invalid focal range");
    if (image_size < 16) throw std::invalid_argument("gen config: image too small");
    if (joint_radius_mm <= 0.0) throw std::invalid_argument("gen config: joint radius <= 0");
    validate_skeleton(skeleton);
    if (bone_mean.size() != skeleton.edges.size() || bone_std.size() != skeleton.edges.size())
        throw std::invalid_argument("gen config: bone statistics must cover every edge");
    // depth range must map into the bin range for every sampled focal length
    if (depth_min < bins.alpha * focal_max || depth_max > bins.beta * focal_min)
        throw std::invalid_argument(
            "gen config: depth range exceeds [alpha*f, beta*f] for some focal length");
}

GenConfig GenConfig::desk_default() {
    GenConfig cfg;
    cfg.skeleton = default_skeleton();
    // mm, per edge of default_skeleton(); miniature figures keep the
    // projected size within a small image while staying pinhole-exact
    const std::vector<std::pair<const char*, double>> lengths = {
        {"pelvis-neck", 34.0}, {"neck-head", 13.0},   {"neck-l_shoulder", 10.0},
        {"upper_arm", 16.0},   {"forearm", 15.0},     {"neck-r_shoulder", 10.0},
        {"upper_arm", 16.0},   {"forearm", 15.0},     {"pelvis-l_hip", 8.0},
        {"thigh", 22.0},       {"shin", 21.0},        {"pelvis-r_hip", 8.0},
        {"thigh", 22.0},       {"shin", 21.0}};
    for (const auto& [name, len] : lengths) {
        (void)name;
        cfg.bone_mean.push_back(len);
        cfg.bone_std.push_back(len * 0.04);
    }
    return cfg;
}

namespace {

struct Vec3d {
    double x, y, z;
};

Vec3d normalized(Vec3d v) {
    const double n = std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z);
    if (n < 1e-12) return {0.0, -1.0, 0.0};
    return {v.x / n, v.y / n, v.z / n};
}

// preferred bone direction per edge of the kinematic tree (camera frame,
// Y down); indexed by edge order of the skeleton
Vec3d base_direction(int edge_index, int parent, int child) {
    (void)parent;
    (void)child;
    static const Vec3d dirs[] = {
        {0.0, -1.0, 0.0},   // pelvis -> neck
        {0.0, -1.0, 0.0},   // neck -> head
        {-1.0, 0.0, 0.0},   // neck -> l_shoulder
        {-0.4, 1.0, 0.0},   // l upper arm
        {-0.2, 1.0, 0.0},   // l forearm
        {1.0, 0.0, 0.0},    // neck -> r_shoulder
        {0.4, 1.0, 0.0},    // r upper arm
        {0.2, 1.0, 0.0},    // r forearm
        {-1.0, 0.3, 0.0},   // pelvis -> l_hip
        {0.0, 1.0, 0.0},    // l thigh
        {0.0, 1.0, 0.0},    // l shin
        {1.0, 0.3, 0.0},    // pelvis -> r_hip
        {0.0, 1.0, 0.0},    // r thigh
        {0.0, 1.0, 0.0},    // r shin
    };
    if (edge_index >= 0 && edge_index < static_cast<int>(std::size(dirs))) return dirs[edge_index];
    return {0.0, 1.0, 0.0};
}

struct Disk {
    double u, v, r;       // pixels
    double color[3];
};

struct Capsule {
    double u0, v0, u1, v1, r;
    double color[3];
};

double capsule_distance(double px, double py, const Capsule& c) {
    const double dx = c.u1 - c.u0, dy = c.v1 - c.v0;
    const double len2 = dx * dx + dy * dy;
    double t = 0.0;
    if (len2 > 1e-12) t = std::clamp(((px - c.u0) * dx + (py - c.v0) * dy) / len2, 0.0, 1.0);
    const double qx = c.u0 + t * dx, qy = c.v0 + t * dy;
    return std::hypot(px - qx, py - qy);
}

void splat(std::vector<double>& image, int size, double u, double v, double radius,
           const double color[3], double dist_fn_radius,
           const std::function<double(double, double)>& dist_fn) {
    const int x0 = std::max(0, static_cast<int>(std::floor(u - dist_fn_radius - 1.0)));
    const int x1 = std::min(size - 1, static_cast<int>(std::ceil(u + dist_fn_radius + 1.0)));
    const int y0 = std::max(0, static_cast<int>(std::floor(v - dist_fn_radius - 1.0)));
    const int y1 = std::min(size - 1, static_cast<int>(std::ceil(v + dist_fn_radius + 1.0)));
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            const double d = dist_fn(static_cast<double>(x), static_cast<double>(y));
            const double cov = std::clamp(radius + 0.5 - d, 0.0, 1.0);
            if (cov <= 0.0) continue;
            for (int ch = 0; ch < 3; ++ch) {
                double& px = image[(static_cast<std::size_t>(ch) * size + y) * size + x];
                px = px * (1.0 - cov) + color[ch] * cov;
            }
        }
}

const double kPalette[4][3] = {
    {0.95, 0.80, 0.55}, {0.55, 0.95, 0.75}, {0.75, 0.60, 0.95}, {0.95, 0.55, 0.60}};

}  // namespace

SceneSample generate_scene(const GenConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    SceneSample scene;
    scene.seed = seed;
    scene.size = cfg.image_size;
    const double f = cfg.focal_min + (cfg.focal_max - cfg.focal_min) * unit(rng);
    scene.camera = {f, f, cfg.image_size / 2.0, cfg.image_size / 2.0};

    std::uniform_int_distribution<int> person_count(cfg.min_persons, cfg.max_persons);
    const int num_persons = person_count(rng);

    const Skeleton& skel = cfg.skeleton;
    const int J = skel.num_joints();

    // children lists rooted at the pelvis
    std::vector<std::vector<std::pair<int, int>>> children(J);  // (child joint, edge index)
    {
        std::vector<bool> visited(J, false);
        std::vector<int> stack{skel.root_index};
        visited[skel.root_index] = true;
        while (!stack.empty()) {
            int j = stack.back();
            stack.pop_back();
            for (int e = 0; e < static_cast<int>(skel.edges.size()); ++e) {
                auto [a, b] = skel.edges[e];
                int other = -1;
                if (a == j && !visited[b]) other = b;
                if (b == j && !visited[a]) other = a;
                if (other >= 0) {
                    visited[other] = true;
                    children[j].emplace_back(other, e);
                    stack.push_back(other);
                }
            }
        }
    }

    for (int p = 0; p < num_persons; ++p) {
        bool placed = false;
        for (int attempt = 0; attempt < cfg.max_place_retries && !placed; ++attempt) {
            const double depth = cfg.depth_min + (cfg.depth_max - cfg.depth_min) * unit(rng);
            const double margin = 0.25 * cfg.image_size;
            const double ru = margin + (cfg.image_size - 2.0 * margin) * unit(rng);
            const double rv = margin + (cfg.image_size - 2.0 * margin) * unit(rng);
            Vec3 root = back_project(ru, rv, depth, scene.camera);

            std::vector<Vec3> pose3d(J);
            pose3d[skel.root_index] = root;
            std::vector<int> order{skel.root_index};
            for (std::size_t qi = 0; qi < order.size(); ++qi) {
                const int j = order[qi];
                for (auto [child, e] : children[j]) {
                    const Vec3d base = base_direction(e, j, child);
                    Vec3d dir = normalized({base.x + 0.35 * gauss(rng), base.y + 0.35 * gauss(rng),
                                            0.30 * gauss(rng)});
                    const double len = std::max(1.0, cfg.bone_mean[e] + cfg.bone_std[e] * gauss(rng));
                    pose3d[child] = {pose3d[j].x + len * dir.x, pose3d[j].y + len * dir.y,
                                     pose3d[j].z + len * dir.z};
                    order.push_back(child);
                }
            }

            PersonGT person;
            person.pose3d = pose3d;
            person.root_depth = root.z;
            bool ok = true;
            double min_u = 1e18, max_u = -1e18, min_v = 1e18, max_v = -1e18;
            for (const Vec3& q : pose3d) {
                if (q.z <= 0.0) {
                    ok = false;
                    break;
                }
                auto [u, v] = project(q, scene.camera);
                person.pose2d.push_back({u, v});
                min_u = std::min(min_u, u);
                max_u = std::max(max_u, u);
                min_v = std::min(min_v, v);
                max_v = std::max(max_v, v);
            }
            if (!ok) continue;
            const double pad = 1.5 * cfg.joint_radius_mm * f / depth;
            person.bbox = {min_u - pad, min_v - pad, max_u + pad, max_v + pad};
            person.truncated = min_u < 0.0 || min_v < 0.0 ||
                               max_u > cfg.image_size - 1.0 || max_v > cfg.image_size - 1.0;
            if (person.truncated) continue;

            const double d_hat = normalize_depth(person.root_depth, scene.camera);
            person.bin_target = encode_bins(bin_index(d_hat, cfg.bins), cfg.bins.num_bins);
            scene.persons.push_back(std::move(person));
            placed = true;
        }
        if (!placed)
            throw std::runtime_error("generate_scene: could not place person " +
                                     std::to_string(p) + " after bounded retries (seed " +
                                     std::to_string(seed) + ")");
    }

    // rasterize far to near so closer figures occlude
    scene.image.assign(3 * static_cast<std::size_t>(scene.size) * scene.size, 0.0);
    std::vector<std::size_t> draw_order(scene.persons.size());
    for (std::size_t i = 0; i < draw_order.size(); ++i) draw_order[i] = i;
    std::stable_sort(draw_order.begin(), draw_order.end(), [&](std::size_t a, std::size_t b) {
        return scene.persons[a].root_depth > scene.persons[b].root_depth;
    });
    for (std::size_t oi : draw_order) {
        const PersonGT& person = scene.persons[oi];
        const double* color = kPalette[oi % 4];
        for (std::size_t e = 0; e < skel.edges.size(); ++e) {
            auto [a, b] = skel.edges[e];
            Capsule cap{person.pose2d[a][0], person.pose2d[a][1], person.pose2d[b][0],
                        person.pose2d[b][1], 0.0,
                        {color[0], color[1], color[2]}};
            const double z = 0.5 * (person.pose3d[a].z + person.pose3d[b].z);
            cap.r = 0.45 * cfg.joint_radius_mm * f / z;
            const double span = std::max({std::fabs(cap.u1 - cap.u0), std::fabs(cap.v1 - cap.v0),
                                          1.0}) + cap.r;
            splat(scene.image, scene.size, 0.5 * (cap.u0 + cap.u1), 0.5 * (cap.v0 + cap.v1), cap.r,
                  cap.color, 0.5 * span + cap.r + 1.0,
                  [&cap](double px, double py) { return capsule_distance(px, py, cap); });
        }
        for (int j = 0; j < J; ++j) {
            const double r = cfg.joint_radius_mm * f / person.pose3d[j].z;
            const double cu = person.pose2d[j][0], cv = person.pose2d[j][1];
            splat(scene.image, scene.size, cu, cv, r, color, r + 1.0,
                  [cu, cv](double px, double py) { return std::hypot(px - cu, py - cv); });
        }
    }
    return scene;
}

Tensor render_gt_heatmaps(const std::vector<std::array<double, 2>>& pose2d_hm, double sigma,
                          int height, int width, std::vector<bool>* truncated) {
    if (sigma <= 0.0) throw std::invalid_argument("render_gt_heatmaps: sigma must be positive");
    const std::size_t J = pose2d_hm.size();
    const auto H = static_cast<std::size_t>(height), W = static_cast<std::size_t>(width);
    Tensor maps = Tensor::zeros({J, H, W}, false);
    if (truncated) truncated->assign(J, false);
    for (std::size_t j = 0; j < J; ++j) {
        const double u = pose2d_hm[j][0], v = pose2d_hm[j][1];
        const bool outside = u < -0.5 || u > static_cast<double>(W) - 0.5 || v < -0.5 ||
                             v > static_cast<double>(H) - 0.5;
        if (outside) {
            if (truncated) (*truncated)[j] = true;
            continue;
        }
        double sum = 0.0;
        double* plane = maps.data() + j * H * W;
        const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
        for (std::size_t y = 0; y < H; ++y)
            for (std::size_t x = 0; x < W; ++x) {
                const double du = static_cast<double>(x) - u, dv = static_cast<double>(y) - v;
                const double g = std::exp(-(du * du + dv * dv) * inv2s2);
                plane[y * W + x] = g;
                sum += g;
            }
        for (std::size_t i = 0; i < H * W; ++i) plane[i] /= sum;
    }
    return maps;
}

Tensor crop_patch(const Tensor& image, double center_x, double center_y, int patch_size,
                  CropTransform* transform) {
    if (image.ndim() != 3 || image.dim(0) != 3)
        throw std::invalid_argument("crop_patch: expected [3,H,W] image");
    const auto H = static_cast<long>(image.dim(1)), W = static_cast<long>(image.dim(2));
    const long P = patch_size;
    const long x0 = std::lround(center_x) - P / 2;
    const long y0 = std::lround(center_y) - P / 2;
    if (x0 + P <= 0 || y0 + P <= 0 || x0 >= W || y0 >= H)
        throw std::invalid_argument("crop_patch: patch does not intersect the image");
    Tensor patch = Tensor::zeros({3, static_cast<std::size_t>(P), static_cast<std::size_t>(P)},
                                 false);
    for (int c = 0; c < 3; ++c)
        for (long y = 0; y < P; ++y) {
            const long sy = y0 + y;
            if (sy < 0 || sy >= H) continue;
            for (long x = 0; x < P; ++x) {
                const long sx = x0 + x;
                if (sx < 0 || sx >= W) continue;
                patch.data()[(static_cast<std::size_t>(c) * P + y) * P + x] =
                    image.data()[(static_cast<std::size_t>(c) * H + sy) * W + sx];
            }
        }
    if (transform) *transform = {static_cast<double>(x0), static_cast<double>(y0)};
    return patch;
}

}  // namespace hdnet
