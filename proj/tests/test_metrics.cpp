#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <tuple>
#include <vector>

#include "doctest.h"
#include "hdnet/metrics.hpp"

using namespace hdnet;

namespace {

double dist3(const Vec3& a, const Vec3& b) {
    return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) +
                     (a.z - b.z) * (a.z - b.z));
}

// Independent greedy oracle: sort every (pred, gt) pair by (distance, pred, gt)
// and accept a pair when both sides are still free.
std::vector<MatchPair> greedy_oracle(const std::vector<RootPrediction>& preds,
                                     const std::vector<Vec3>& gts) {
    std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
    for (std::size_t p = 0; p < preds.size(); ++p)
        for (std::size_t g = 0; g < gts.size(); ++g)
            pairs.emplace_back(dist3(preds[p].root3d, gts[g]), p, g);
    std::sort(pairs.begin(), pairs.end());
    std::vector<bool> pf(preds.size(), false), gf(gts.size(), false);
    std::vector<MatchPair> out;
    for (const auto& [d, p, g] : pairs) {
        if (pf[p] || gf[g]) continue;
        pf[p] = gf[g] = true;
        out.push_back({static_cast<int>(p), static_cast<int>(g), d});
    }
    return out;
}

// Brute-force optimal oracle over all injective assignments of the smaller
// side into the larger.
double optimal_oracle_cost(const std::vector<RootPrediction>& preds,
                           const std::vector<Vec3>& gts) {
    const std::size_t np = preds.size(), ng = gts.size();
    const std::size_t k = std::min(np, ng);
    if (k == 0) return 0.0;
    std::vector<std::size_t> big(std::max(np, ng));
    std::iota(big.begin(), big.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double cost = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t p = np <= ng ? i : big[i];
            const std::size_t g = np <= ng ? big[i] : i;
            cost += dist3(preds[p].root3d, gts[g]);
        }
        best = std::min(best, cost);
    } while (std::next_permutation(big.begin(), big.end()));
    return best;
}

std::vector<RootPrediction> random_preds(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> coord(-500.0, 500.0);
    std::uniform_real_distribution<double> score(0.0, 1.0);
    std::vector<RootPrediction> out(n);
    for (auto& p : out) {
        p.root3d = {coord(rng), coord(rng), coord(rng) + 2000.0};
        p.score = score(rng);
    }
    return out;
}

std::vector<Vec3> random_gts(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> coord(-500.0, 500.0);
    std::vector<Vec3> out(n);
    for (auto& g : out) g = {coord(rng), coord(rng), coord(rng) + 2000.0};
    return out;
}

}  // namespace

TEST_CASE("greedy matching agrees with the exhaustive oracle on 1000 instances") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::size_t> count(0, 6);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto preds = random_preds(rng, count(rng));
        const auto gts = random_gts(rng, count(rng));
        const MatchResult got = match_roots(preds, gts, MatchMode::greedy);
        const auto want = greedy_oracle(preds, gts);
        REQUIRE(got.pairs.size() == want.size());
        for (std::size_t i = 0; i < want.size(); ++i) {
            CHECK(got.pairs[i].pred_index == want[i].pred_index);
            CHECK(got.pairs[i].gt_index == want[i].gt_index);
            CHECK(got.pairs[i].distance == doctest::Approx(want[i].distance).epsilon(1e-12));
        }
        CHECK(got.unmatched_preds.size() == preds.size() - want.size());
        CHECK(got.unmatched_gts.size() == gts.size() - want.size());
    }
}

TEST_CASE("optimal matching attains the brute-force minimum cost") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<std::size_t> count(0, 5);
    for (int trial = 0; trial < 300; ++trial) {
        const auto preds = random_preds(rng, count(rng));
        const auto gts = random_gts(rng, count(rng));
        const MatchResult got = match_roots(preds, gts, MatchMode::optimal);
        CHECK(got.pairs.size() == std::min(preds.size(), gts.size()));
        double cost = 0.0;
        for (const MatchPair& p : got.pairs) cost += p.distance;
        CHECK(cost == doctest::Approx(optimal_oracle_cost(preds, gts)).epsilon(1e-9));
    }
}

TEST_CASE("optimal matching can beat greedy but never loses") {
    // classic adversarial layout where the greedy pick forces a long second edge
    std::vector<RootPrediction> preds(2);
    preds[0].root3d = {0, 0, 0};
    preds[1].root3d = {10, 0, 0};
    std::vector<Vec3> gts = {{4, 0, 0}, {-50, 0, 0}};
    const MatchResult greedy = match_roots(preds, gts, MatchMode::greedy);
    const MatchResult opt = match_roots(preds, gts, MatchMode::optimal);
    auto total = [](const MatchResult& r) {
        double c = 0.0;
        for (const auto& p : r.pairs) c += p.distance;
        return c;
    };
    CHECK(total(opt) < total(greedy));
}

TEST_CASE("mrpe decomposes into per-axis means") {
    std::vector<RootPrediction> preds(2);
    preds[0].root3d = {1, 2, 3};
    preds[1].root3d = {10, 10, 10};
    std::vector<Vec3> gts = {{0, 0, 0}, {10, 10, 16}};
    const MatchResult m = match_roots(preds, gts, MatchMode::greedy);
    const MrpeResult r = mrpe(preds, gts, m);
    CHECK(r.mrpe_x == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r.mrpe_y == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.mrpe_z == doctest::Approx(4.5).epsilon(1e-12));
    CHECK(r.mrpe == doctest::Approx((std::sqrt(14.0) + 6.0) / 2.0).epsilon(1e-12));
    CHECK_THROWS(mrpe(preds, gts, MatchResult{}));
}

TEST_CASE("ap/ar agree with a brute-force score sweep on 1000 instances") {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<std::size_t> count(0, 6);
    const std::vector<double> thresholds = {250.0, 400.0, 700.0};
    for (int trial = 0; trial < 1000; ++trial) {
        const auto preds = random_preds(rng, count(rng));
        const auto gts = random_gts(rng, std::max<std::size_t>(count(rng), 1));
        const std::vector<ApAr> got = root_ap_ar(preds, gts, thresholds);
        REQUIRE(got.size() == thresholds.size());

        // oracle: stable-sort by descending score, assign greedily to the
        // nearest free gt within the threshold, then sweep every cutoff and
        // take the best precision at or above each recall level
        std::vector<std::size_t> order(preds.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return preds[a].score > preds[b].score;
        });
        for (std::size_t t = 0; t < thresholds.size(); ++t) {
            std::vector<bool> used(gts.size(), false);
            std::vector<int> tp;
            for (std::size_t oi : order) {
                double best = thresholds[t];
                int pick = -1;
                for (std::size_t g = 0; g < gts.size(); ++g) {
                    if (used[g]) continue;
                    const double d = dist3(preds[oi].root3d, gts[g]);
                    if (d <= best) {
                        best = d;
                        pick = static_cast<int>(g);
                    }
                }
                if (pick >= 0) used[pick] = true;
                tp.push_back(pick >= 0 ? 1 : 0);
            }
            std::vector<double> prec, rec;
            int hits = 0;
            for (std::size_t k = 0; k < tp.size(); ++k) {
                hits += tp[k];
                prec.push_back(static_cast<double>(hits) / static_cast<double>(k + 1));
                rec.push_back(static_cast<double>(hits) / static_cast<double>(gts.size()));
            }
            double ap = 0.0;
            for (int ri = 0; ri <= 100; ++ri) {
                const double level = ri / 100.0;
                double best_p = 0.0;
                for (std::size_t k = 0; k < prec.size(); ++k)
                    if (rec[k] >= level) best_p = std::max(best_p, prec[k]);
                ap += best_p / 101.0;
            }
            const double ar =
                tp.empty() ? 0.0
                           : static_cast<double>(hits) / static_cast<double>(gts.size());
            CHECK(got[t].threshold_mm == thresholds[t]);
            CHECK(got[t].ap == doctest::Approx(ap).epsilon(1e-12));
            CHECK(got[t].ar == doctest::Approx(ar).epsilon(1e-12));
        }
    }
}

TEST_CASE("ap is monotone in the distance threshold") {
    std::mt19937_64 rng(123);
    for (int trial = 0; trial < 50; ++trial) {
        const auto preds = random_preds(rng, 5);
        const auto gts = random_gts(rng, 5);
        const auto res = root_ap_ar(preds, gts, {100.0, 300.0, 900.0, 2000.0});
        for (std::size_t i = 1; i < res.size(); ++i) {
            CHECK(res[i].ap >= res[i - 1].ap);
            CHECK(res[i].ar >= res[i - 1].ar);
        }
    }
}

TEST_CASE("grouped ap equals plain ap when everything is one group") {
    std::mt19937_64 rng(55);
    for (int trial = 0; trial < 100; ++trial) {
        const auto preds = random_preds(rng, 4);
        const auto gts = random_gts(rng, 4);
        const std::vector<int> pg(preds.size(), 0), gg(gts.size(), 0);
        const auto plain = root_ap_ar(preds, gts, {300.0});
        const auto grouped = root_ap_ar_grouped(preds, pg, gts, gg, {300.0});
        CHECK(plain[0].ap == doctest::Approx(grouped[0].ap).epsilon(1e-12));
        CHECK(plain[0].ar == doctest::Approx(grouped[0].ar).epsilon(1e-12));
    }
}

TEST_CASE("grouped ap never assigns across groups") {
    // one perfect prediction per scene, but swapped group labels: nothing matches
    std::vector<RootPrediction> preds(2);
    preds[0].root3d = {0, 0, 1000};
    preds[1].root3d = {500, 0, 1000};
    std::vector<Vec3> gts = {{0, 0, 1000}, {500, 0, 1000}};
    const auto ok = root_ap_ar_grouped(preds, {0, 1}, gts, {0, 1}, {100.0});
    CHECK(ok[0].ap == doctest::Approx(1.0));
    const auto swapped = root_ap_ar_grouped(preds, {1, 0}, gts, {0, 1}, {100.0});
    CHECK(swapped[0].ap == doctest::Approx(0.0));
}

TEST_CASE("pck under translation: absolute fails, root-aligned is immune") {
    const std::vector<Vec3> skeleton_gt = {{0, 0, 2000}, {100, 0, 2000}, {0, 200, 2000}};
    std::vector<Vec3> shifted = skeleton_gt;
    for (Vec3& j : shifted) j.x += 400.0;  // well past the 150 mm radius

    std::vector<RootPrediction> preds(1);
    preds[0].root3d = shifted[0];
    preds[0].pose3d = shifted;
    const std::vector<std::vector<Vec3>> gt_poses = {skeleton_gt};
    std::vector<Vec3> gt_roots = {skeleton_gt[0]};
    const MatchResult m = match_roots(preds, gt_roots, MatchMode::greedy);

    CHECK(pck(preds, gt_poses, m, PckMode::absolute, 0) == doctest::Approx(0.0));
    CHECK(pck(preds, gt_poses, m, PckMode::root_aligned, 0) == doctest::Approx(100.0));
}

TEST_CASE("pck counts joints inside the radius") {
    const std::vector<Vec3> gt_pose = {{0, 0, 2000}, {100, 0, 2000}, {0, 200, 2000},
                                       {50, 50, 2000}};
    std::vector<Vec3> pred_pose = gt_pose;
    pred_pose[1].x += 149.0;  // inside
    pred_pose[2].y += 151.0;  // outside
    std::vector<RootPrediction> preds(1);
    preds[0].root3d = pred_pose[0];
    preds[0].pose3d = pred_pose;
    std::vector<Vec3> gt_roots = {gt_pose[0]};
    const MatchResult m = match_roots(preds, gt_roots, MatchMode::greedy);
    CHECK(pck(preds, {gt_pose}, m, PckMode::absolute, 0) == doctest::Approx(75.0));

    std::vector<RootPrediction> no_pose(1);
    no_pose[0].root3d = gt_pose[0];
    const MatchResult m2 = match_roots(no_pose, gt_roots, MatchMode::greedy);
    CHECK_THROWS(pck(no_pose, {gt_pose}, m2, PckMode::absolute, 0));
}
