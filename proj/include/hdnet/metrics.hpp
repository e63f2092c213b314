#pragma once

#include <optional>
#include <vector>

#include "hdnet/geometry.hpp"

namespace hdnet {

struct RootPrediction {
    Vec3 root3d;
    double score = 1.0;
    std::optional<std::vector<Vec3>> pose3d;
};

struct MatchPair {
    int pred_index = -1;
    int gt_index = -1;
    double distance = 0.0;  // mm
};

struct MatchResult {
    std::vector<MatchPair> pairs;
    std::vector<int> unmatched_preds;
    std::vector<int> unmatched_gts;
};

enum class MatchMode { greedy, optimal };

// Greedy globally-nearest-first matching; ties broken by (lower prediction
// index, lower ground-truth index). The optimal mode minimizes the total
// matched distance over all maximum matchings.
MatchResult match_roots(const std::vector<RootPrediction>& preds, const std::vector<Vec3>& gts,
                        MatchMode mode = MatchMode::greedy);

struct MrpeResult {
    double mrpe = 0.0;    // mean Euclidean distance, mm
    double mrpe_x = 0.0;  // mean absolute per-axis error
    double mrpe_y = 0.0;
    double mrpe_z = 0.0;
};

MrpeResult mrpe(const std::vector<RootPrediction>& preds, const std::vector<Vec3>& gts,
                const MatchResult& match);

struct ApAr {
    double threshold_mm = 0.0;
    double ap = 0.0;
    double ar = 0.0;
};

// Score-swept average precision (101-point interpolation) and recall over
// all predictions, per distance threshold.
std::vector<ApAr> root_ap_ar(const std::vector<RootPrediction>& preds,
                             const std::vector<Vec3>& gts,
                             const std::vector<double>& thresholds_mm);

// Same sweep with predictions ranked globally but only assignable to ground
// truths sharing their group id (one group per scene).
std::vector<ApAr> root_ap_ar_grouped(const std::vector<RootPrediction>& preds,
                                     const std::vector<int>& pred_group,
                                     const std::vector<Vec3>& gts,
                                     const std::vector<int>& gt_group,
                                     const std::vector<double>& thresholds_mm);

enum class PckMode { absolute, root_aligned };

// Percentage of joints within threshold over all matched persons. Inputs are
// indexed alongside match_roots results; root_index selects the alignment
// joint for the root-aligned mode.
double pck(const std::vector<RootPrediction>& preds, const std::vector<std::vector<Vec3>>& gt_poses,
           const MatchResult& match, PckMode mode, int root_index, double threshold_mm = 150.0);

}  // namespace hdnet
