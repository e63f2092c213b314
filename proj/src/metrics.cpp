#include "hdnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace hdnet {

namespace {

double dist3(const Vec3& a, const Vec3& b) {
    return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) +
                     (a.z - b.z) * (a.z - b.z));
}

// exhaustive minimum-total-distance maximum matching, small instances only
void optimal_search(const std::vector<std::vector<double>>& d, std::size_t pred,
                    std::vector<int>& gt_used, std::vector<int>& current, std::size_t matched,
                    double cost, std::size_t target, double& best_cost,
                    std::vector<int>& best) {
    const std::size_t np = d.size();
    if (pred == np) {
        if (matched == target && cost < best_cost) {
            best_cost = cost;
            best = current;
        }
        return;
    }
    // remaining preds cannot reach a maximum matching: prune
    if (matched + (np - pred) < target) return;
    for (std::size_t g = 0; g < gt_used.size(); ++g) {
        if (gt_used[g]) continue;
        gt_used[g] = 1;
        current[pred] = static_cast<int>(g);
        optimal_search(d, pred + 1, gt_used, current, matched + 1, cost + d[pred][g], target,
                       best_cost, best);
        gt_used[g] = 0;
        current[pred] = -1;
    }
    optimal_search(d, pred + 1, gt_used, current, matched, cost, target, best_cost, best);
}

}  // namespace

MatchResult match_roots(const std::vector<RootPrediction>& preds, const std::vector<Vec3>& gts,
                        MatchMode mode) {
    const std::size_t np = preds.size(), ng = gts.size();
    std::vector<std::vector<double>> d(np, std::vector<double>(ng));
    for (std::size_t p = 0; p < np; ++p)
        for (std::size_t g = 0; g < ng; ++g) d[p][g] = dist3(preds[p].root3d, gts[g]);

    MatchResult result;
    std::vector<int> pred_used(np, 0), gt_used(ng, 0);

    if (mode == MatchMode::greedy) {
        const std::size_t target = std::min(np, ng);
        while (result.pairs.size() < target) {
            double best = std::numeric_limits<double>::infinity();
            int bp = -1, bg = -1;
            for (std::size_t p = 0; p < np; ++p) {
                if (pred_used[p]) continue;
                for (std::size_t g = 0; g < ng; ++g) {
                    if (gt_used[g]) continue;
                    if (d[p][g] < best) {
                        best = d[p][g];
                        bp = static_cast<int>(p);
                        bg = static_cast<int>(g);
                    }
                }
            }
            pred_used[bp] = 1;
            gt_used[bg] = 1;
            result.pairs.push_back({bp, bg, best});
        }
    } else {
        if (np > 10 || ng > 10)
            throw std::invalid_argument("match_roots: optimal mode supports at most 10 instances");
        std::vector<int> current(np, -1), best_assign(np, -1);
        double best_cost = std::numeric_limits<double>::infinity();
        optimal_search(d, 0, gt_used, current, 0, 0.0, std::min(np, ng), best_cost, best_assign);
        gt_used.assign(ng, 0);
        for (std::size_t p = 0; p < np; ++p) {
            if (best_assign[p] < 0) continue;
            pred_used[p] = 1;
            gt_used[best_assign[p]] = 1;
            result.pairs.push_back({static_cast<int>(p), best_assign[p], d[p][best_assign[p]]});
        }
    }
    for (std::size_t p = 0; p < np; ++p)
        if (!pred_used[p]) result.unmatched_preds.push_back(static_cast<int>(p));
    for (std::size_t g = 0; g < ng; ++g)
        if (!gt_used[g]) result.unmatched_gts.push_back(static_cast<int>(g));
    return result;
}

MrpeResult mrpe(const std::vector<RootPrediction>& preds, const std::vector<Vec3>& gts,
                const MatchResult& match) {
    if (match.pairs.empty()) throw std::invalid_argument("mrpe: no matched pairs");
    MrpeResult r;
    for (const MatchPair& pair : match.pairs) {
        const Vec3& p = preds.at(pair.pred_index).root3d;
        const Vec3& g = gts.at(pair.gt_index);
        r.mrpe += dist3(p, g);
        r.mrpe_x += std::fabs(p.x - g.x);
        r.mrpe_y += std::fabs(p.y - g.y);
        r.mrpe_z += std::fabs(p.z - g.z);
    }
    const double n = static_cast<double>(match.pairs.size());
    r.mrpe /= n;
    r.mrpe_x /= n;
    r.mrpe_y /= n;
    r.mrpe_z /= n;
    return r;
}

std::vector<ApAr> root_ap_ar(const std::vector<RootPrediction>& preds,
                             const std::vector<Vec3>& gts,
                             const std::vector<double>& thresholds_mm) {
    return root_ap_ar_grouped(preds, std::vector<int>(preds.size(), 0), gts,
                              std::vector<int>(gts.size(), 0), thresholds_mm);
}

std::vector<ApAr> root_ap_ar_grouped(const std::vector<RootPrediction>& preds,
                                     const std::vector<int>& pred_group,
                                     const std::vector<Vec3>& gts,
                                     const std::vector<int>& gt_group,
                                     const std::vector<double>& thresholds_mm) {
    if (pred_group.size() != preds.size() || gt_group.size() != gts.size())
        throw std::invalid_argument("root_ap_ar_grouped: group size mismatch");
    const std::size_t np = preds.size(), ng = gts.size();
    std::vector<std::size_t> order(np);
    for (std::size_t i = 0; i < np; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (preds[a].score != preds[b].score) return preds[a].score > preds[b].score;
        return a < b;
    });

    std::vector<ApAr> out;
    for (double thr : thresholds_mm) {
        ApAr entry;
        entry.threshold_mm = thr;
        if (ng == 0) {
            out.push_back(entry);
            continue;
        }
        // score-ordered greedy assignment to the nearest free ground truth
        std::vector<int> gt_used(ng, 0);
        std::vector<int> tp_flags;
        tp_flags.reserve(np);
        for (std::size_t oi : order) {
            double best = std::numeric_limits<double>::infinity();
            int bg = -1;
            for (std::size_t g = 0; g < ng; ++g) {
                if (gt_used[g] || gt_group[g] != pred_group[oi]) continue;
                const double dd = dist3(preds[oi].root3d, gts[g]);
                if (dd < best) {
                    best = dd;
                    bg = static_cast<int>(g);
                }
            }
            if (bg >= 0 && best <= thr) {
                gt_used[bg] = 1;
                tp_flags.push_back(1);
            } else {
                tp_flags.push_back(0);
            }
        }
        std::vector<double> precision, recall;
        int tp = 0;
        for (std::size_t i = 0; i < tp_flags.size(); ++i) {
            tp += tp_flags[i];
            precision.push_back(static_cast<double>(tp) / static_cast<double>(i + 1));
            recall.push_back(static_cast<double>(tp) / static_cast<double>(ng));
        }
        double ap = 0.0;
        for (int k = 0; k <= 100; ++k) {
            const double r = static_cast<double>(k) / 100.0;
            double p_best = 0.0;
            for (std::size_t i = 0; i < precision.size(); ++i)
                if (recall[i] >= r) p_best = std::max(p_best, precision[i]);
            ap += p_best;
        }
        entry.ap = ap / 101.0;
        entry.ar = np == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(ng);
        out.push_back(entry);
    }
    return out;
}

double pck(const std::vector<RootPrediction>& preds, const std::vector<std::vector<Vec3>>& gt_poses,
           const MatchResult& match, PckMode mode, int root_index, double threshold_mm) {
    long correct = 0, total = 0;
    for (const MatchPair& pair : match.pairs) {
        const RootPrediction& pred = preds.at(pair.pred_index);
        if (!pred.pose3d) continue;
        const std::vector<Vec3>& gt = gt_poses.at(pair.gt_index);
        const std::vector<Vec3>& pp = *pred.pose3d;
        if (pp.size() != gt.size())
            throw std::invalid_argument("pck: joint count mismatch");
        Vec3 shift{0.0, 0.0, 0.0};
        if (mode == PckMode::root_aligned) {
            const Vec3& pr = pp.at(root_index);
            const Vec3& gr = gt.at(root_index);
            shift = {gr.x - pr.x, gr.y - pr.y, gr.z - pr.z};
        }
        for (std::size_t j = 0; j < gt.size(); ++j) {
            const Vec3 q{pp[j].x + shift.x, pp[j].y + shift.y, pp[j].z + shift.z};
            if (dist3(q, gt[j]) <= threshold_mm) ++correct;
            ++total;
        }
    }
    if (total == 0)
        throw std::invalid_argument("pck: no matched persons with 3-d poses");
    return 100.0 * static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace hdnet
