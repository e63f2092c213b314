#include "hdnet/skeleton.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

#include "json.hpp"

namespace hdnet {

void validate_skeleton(const Skeleton& skel) {
    const int n = skel.num_joints();
    if (n == 0) throw std::invalid_argument("skeleton: no joints");
    if (skel.root_index < 0 || skel.root_index >= n)
        throw std::invalid_argument("skeleton: root index out of range");
    std::set<std::pair<int, int>> seen;
    std::vector<std::vector<int>> nbr(n);
    for (auto [a, b] : skel.edges) {
        if (a < 0 || a >= n || b < 0 || b >= n)
            throw std::invalid_argument("skeleton: edge index out of range");
        if (a == b) throw std::invalid_argument("skeleton: self edge");
        auto key = std::minmax(a, b);
        if (!seen.insert(key).second) throw std::invalid_argument("skeleton: duplicate edge");
        nbr[a].push_back(b);
        nbr[b].push_back(a);
    }
    // connectivity
    std::vector<bool> visited(n, false);
    std::vector<int> stack{0};
    visited[0] = true;
    int count = 1;
    while (!stack.empty()) {
        int j = stack.back();
        stack.pop_back();
        for (int k : nbr[j])
            if (!visited[k]) {
                visited[k] = true;
                ++count;
                stack.push_back(k);
            }
    }
    if (count != n) throw std::invalid_argument("skeleton: graph is not connected");
}

Skeleton default_skeleton() {
    Skeleton s;
    s.joint_names = {"pelvis",     "neck",    "head",    "l_shoulder", "l_elbow",
                     "l_wrist",    "r_shoulder", "r_elbow", "r_wrist", "l_hip",
                     "l_knee",     "l_ankle", "r_hip",   "r_knee",     "r_ankle"};
    s.edges = {{0, 1},  {1, 2},  {1, 3},  {3, 4},   {4, 5},   {1, 6},  {6, 7},
               {7, 8},  {0, 9},  {9, 10}, {10, 11}, {0, 12},  {12, 13}, {13, 14}};
    s.root_index = 0;
    validate_skeleton(s);
    return s;
}

std::string skeleton_to_json(const Skeleton& skel) {
    nlohmann::json j;
    j["joints"] = skel.joint_names;
    j["edges"] = nlohmann::json::array();
    for (auto [a, b] : skel.edges)
        j["edges"].push_back({skel.joint_names.at(a), skel.joint_names.at(b)});
    j["root"] = skel.joint_names.at(skel.root_index);
    return j.dump(2);
}

Skeleton skeleton_from_json(const std::string& json_text) {
    nlohmann::json j = nlohmann::json::parse(json_text);
    Skeleton s;
    s.joint_names = j.at("joints").get<std::vector<std::string>>();
    std::map<std::string, int> index;
    for (int i = 0; i < static_cast<int>(s.joint_names.size()); ++i) {
        if (!index.emplace(s.joint_names[i], i).second)
            throw std::invalid_argument("skeleton: duplicate joint name " + s.joint_names[i]);
    }
    auto lookup = [&](const std::string& name) {
        auto it = index.find(name);
        if (it == index.end())
            throw std::invalid_argument("skeleton: unknown joint name " + name);
        return it->second;
    };
    for (const auto& e : j.at("edges")) {
        if (!e.is_array() || e.size() != 2)
            throw std::invalid_argument("skeleton: edge must be a pair of joint names");
        s.edges.emplace_back(lookup(e[0].get<std::string>()), lookup(e[1].get<std::string>()));
    }
    s.root_index = lookup(j.at("root").get<std::string>());
    validate_skeleton(s);
    return s;
}

Skeleton load_skeleton(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("skeleton: cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return skeleton_from_json(text);
}

void save_skeleton(const Skeleton& skel, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("skeleton: cannot write " + path);
    out << skeleton_to_json(skel) << "\n";
}

std::vector<double> build_adjacency(const Skeleton& skel) {
    validate_skeleton(skel);
    const int n = skel.num_joints();
    std::vector<double> a(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) a[static_cast<std::size_t>(i) * n + i] = 1.0;
    for (auto [i, j] : skel.edges) {
        a[static_cast<std::size_t>(i) * n + j] = 1.0;
        a[static_cast<std::size_t>(j) * n + i] = 1.0;
    }
    return a;
}

std::vector<double> normalize_adjacency(const std::vector<double>& a, int num_joints) {
    const auto n = static_cast<std::size_t>(num_joints);
    if (a.size() != n * n) throw std::invalid_argument("normalize_adjacency: size mismatch");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < n; ++i) {
        double row_sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) row_sum += a[i * n + j];
        if (row_sum <= 0.0)
            throw std::invalid_argument("normalize_adjacency: zero row " + std::to_string(i));
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] = a[i * n + j] / row_sum;
    }
    return out;
}

}  // namespace hdnet
