#pragma once

#include <string>
#include <utility>
#include <vector>

namespace hdnet {

struct Skeleton {
    std::vector<std::string> joint_names;
    std::vector<std::pair<int, int>> edges;  // unordered joint-index pairs
    int root_index = 0;

    int num_joints() const { return static_cast<int>(joint_names.size()); }
};

// Throws on out-of-range edges, duplicate edges, or a disconnected graph.
void validate_skeleton(const Skeleton& skel);

// 15-joint default: pelvis, neck, head, shoulders, elbows, wrists, hips,
// knees, ankles with standard kinematic edges.
Skeleton default_skeleton();

// JSON file: {"joints": [...], "edges": [["a","b"], ...], "root": "name"}
Skeleton load_skeleton(const std::string& path);
void save_skeleton(const Skeleton& skel, const std::string& path);
std::string skeleton_to_json(const Skeleton& skel);
Skeleton skeleton_from_json(const std::string& json_text);

// Raw adjacency: symmetric 0/1 with unit diagonal, row-major N_J x N_J.
std::vector<double> build_adjacency(const Skeleton& skel);

// L1 row normalization; throws on a zero row.
std::vector<double> normalize_adjacency(const std::vector<double>& a, int num_joints);

}  // namespace hdnet
