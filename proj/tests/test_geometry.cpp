#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "hdnet/geometry.hpp"

using namespace hdnet;

TEST_CASE("two-bin encoding worked example") {
    const std::vector<double> dist = encode_bins(2.4, 5);
    REQUIRE(dist.size() == 5);
    CHECK(dist[0] == 0.0);
    CHECK(dist[1] == 0.0);
    CHECK(dist[2] == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(dist[3] == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(dist[4] == 0.0);
    CHECK(decode_bin_coord(dist) == doctest::Approx(2.4).epsilon(1e-12));
}

TEST_CASE("integer coordinates give one-hot encodings") {
    const std::vector<double> dist = encode_bins(3.0, 6);
    for (int i = 0; i < 6; ++i) CHECK(dist[i] == (i == 3 ? 1.0 : 0.0));
    // the top bin has no right neighbor and must still be representable
    const std::vector<double> top = encode_bins(5.0, 6);
    CHECK(top[5] == 1.0);
}

TEST_CASE("codec round trip below 1e-9 relative") {
    const BinConfig bins{1.0, 8.0, 71};
    const CameraIntrinsics cam{580.0, 620.0, 48.0, 48.0};
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> dhat(1.0, 8.0);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double d = dhat(rng);
        const double b = bin_index(d, bins);
        const std::vector<double> dist = encode_bins(b, bins.num_bins);
        const double back = normalize_depth(depth_from_bin_coord(decode_bin_coord(dist), bins, cam), cam);
        worst = std::max(worst, std::fabs(back - d) / d);
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("bin coordinate is strictly increasing with anchored endpoints") {
    const BinConfig bins{1.0, 8.0, 71};
    CHECK(bin_index(1.0, bins) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(bin_index(8.0, bins) == doctest::Approx(70.0).epsilon(1e-12));
    double prev = -1.0;
    for (double d = 1.0; d <= 8.0; d += 0.01) {
        const double b = bin_index(d, bins);
        CHECK(b > prev);
        prev = b;
    }
}

TEST_CASE("out-of-range depths clamp and are counted") {
    const BinConfig bins{1.0, 8.0, 71};
    reset_bin_clamp_count();
    CHECK(bin_index(0.5, bins) == 0.0);
    CHECK(bin_index(9.0, bins) == 70.0);
    CHECK(bin_clamp_count() == 2);
    reset_bin_clamp_count();
    CHECK(bin_clamp_count() == 0);
    CHECK_THROWS(bin_index(-1.0, bins));
}

TEST_CASE("normalized depth uses the focal product") {
    const CameraIntrinsics cam{500.0, 720.0, 0.0, 0.0};
    const double f = std::sqrt(500.0 * 720.0);
    CHECK(normalize_depth(2.0 * f, cam) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(denormalize_depth(2.0, cam) == doctest::Approx(2.0 * f).epsilon(1e-12));
    CHECK_THROWS(normalize_depth(0.0, cam));
}

TEST_CASE("decode_depth scales with the focal length") {
    // scaling both focal lengths by s scales the decoded depth by s
    const BinConfig bins{1.0, 8.0, 71};
    const std::vector<double> dist = encode_bins(33.25, bins.num_bins);
    const CameraIntrinsics cam{600.0, 600.0, 0.0, 0.0};
    const double s = 1.75;
    const CameraIntrinsics scaled{600.0 * s, 600.0 * s, 0.0, 0.0};
    const double d0 = decode_depth(dist, bins, cam);
    const double d1 = decode_depth(dist, bins, scaled);
    CHECK(d1 == doctest::Approx(s * d0).epsilon(1e-12));
}

TEST_CASE("project and back_project are exact inverses") {
    const CameraIntrinsics cam{580.0, 620.0, 47.5, 48.5};
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> uv(0.0, 96.0), depth(800.0, 5000.0);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double u = uv(rng), v = uv(rng), d = depth(rng);
        const Vec3 p = back_project(u, v, d, cam);
        CHECK(p.z == d);
        const auto [u2, v2] = project(p, cam);
        worst = std::max({worst, std::fabs(u2 - u) / std::max(1.0, u),
                          std::fabs(v2 - v) / std::max(1.0, v)});
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("decoder validates its input distribution") {
    const BinConfig bins{1.0, 8.0, 71};
    std::vector<double> bad(71, 0.0);
    bad[3] = 0.7;  // mass 0.7, not 1
    CHECK_THROWS(decode_bin_coord(bad));
    bad[4] = 0.5;
    bad[5] = -0.2;
    CHECK_THROWS(decode_bin_coord(bad));
}
