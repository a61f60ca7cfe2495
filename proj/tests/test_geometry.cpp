#include "doctest.h"

#include <random>

#include "cvr/geometry.hpp"

using namespace cvr;

namespace {

LandmarkSet set_of(std::vector<Point3> pts, std::string scheme = "") {
    LandmarkSet lm;
    lm.points = std::move(pts);
    lm.scheme_id = std::move(scheme);
    return lm;
}

}  // namespace

TEST_CASE("normalize_depth subtracts the mean z") {
    auto out = normalize_depth(set_of({{0, 0, 2}, {1, 1, 4}, {2, 2, 6}}));
    CHECK(out.points[0].z == doctest::Approx(-2.0));
    CHECK(out.points[1].z == doctest::Approx(0.0));
    CHECK(out.points[2].z == doctest::Approx(2.0));
    CHECK(out.points[1].x == 1.0);  // x,y untouched
    CHECK(out.points[1].y == 1.0);

    auto zeros = normalize_depth(set_of({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}}));
    for (const auto& p : zeros.points) CHECK(p.z == 0.0);

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    LandmarkSet big;
    for (int i = 0; i < 68; ++i) big.points.push_back({u(rng), u(rng), u(rng)});
    auto n1 = normalize_depth(big);
    double mean = 0.0;
    for (const auto& p : n1.points) mean += p.z;
    CHECK(std::abs(mean / 68.0) < 1e-9);

    // idempotent
    auto n2 = normalize_depth(n1);
    for (int i = 0; i < 68; ++i)
        CHECK(std::abs(n2.points[i].z - n1.points[i].z) < 1e-9);

    CHECK_THROWS_AS(normalize_depth(LandmarkSet{}), std::invalid_argument);
}

TEST_CASE("map_to_volume affine examples") {
    CubeMapping m;
    m.source_bbox = {0, 0, 256, 256};
    m.w = m.h = m.d = 64;
    m.depth_offset = 128.0;  // volume z = (0 + 128) * 0.25 = 32
    m.depth_scale = 0.25;
    auto r = map_to_volume(set_of({{128, 128, 0}}), m);
    CHECK_FALSE(r.any_clamped);
    CHECK(r.landmarks.points[0].x == doctest::Approx(32.0));
    CHECK(r.landmarks.points[0].y == doctest::Approx(32.0));
    CHECK(r.landmarks.points[0].z == doctest::Approx(32.0));
}

TEST_CASE("map_to_volume identity mapping leaves input unchanged") {
    CubeMapping m;
    m.source_bbox = {0, 0, 32, 32};
    m.w = m.h = 32;
    m.d = 16;
    m.depth_offset = 0.0;
    m.depth_scale = 1.0;
    auto in = set_of({{3.5, 7.25, 2.0}, {10, 20, 15.5}});
    auto r = map_to_volume(in, m);
    CHECK_FALSE(r.any_clamped);
    for (int i = 0; i < 2; ++i) {
        CHECK(r.landmarks.points[i].x == in.points[i].x);
        CHECK(r.landmarks.points[i].y == in.points[i].y);
        CHECK(r.landmarks.points[i].z == in.points[i].z);
    }
}

TEST_CASE("map round trip stays within 1e-6") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        CubeMapping m;
        m.source_bbox = {10 + 100 * u(rng), 5 + 100 * u(rng), 0, 0};
        m.source_bbox.x_max = m.source_bbox.x_min + 50 + 200 * u(rng);
        m.source_bbox.y_max = m.source_bbox.y_min + 50 + 200 * u(rng);
        m.w = m.h = 64;
        m.d = 64;
        m.depth_offset = 100.0;
        m.depth_scale = 64.0 / 200.0;
        LandmarkSet in;
        for (int i = 0; i < 12; ++i)
            in.points.push_back({m.source_bbox.x_min + u(rng) * m.source_bbox.width(),
                                 m.source_bbox.y_min + u(rng) * m.source_bbox.height(),
                                 -90 + 180 * u(rng)});
        auto vol = map_to_volume(in, m);
        REQUIRE_FALSE(vol.any_clamped);
        auto back = map_to_image(vol.landmarks, m);
        for (int i = 0; i < 12; ++i) {
            CHECK(std::abs(back.points[i].x - in.points[i].x) < 1e-6);
            CHECK(std::abs(back.points[i].y - in.points[i].y) < 1e-6);
            CHECK(std::abs(back.points[i].z - in.points[i].z) < 1e-6);
        }
    }
}

TEST_CASE("map_to_volume clamps with a flag and rejects far-out points") {
    CubeMapping m;
    m.source_bbox = {0, 0, 100, 100};
    m.w = m.h = m.d = 10;
    m.depth_offset = 50.0;
    m.depth_scale = 0.1;
    // slightly outside the bbox but within the 25% expansion
    auto r = map_to_volume(set_of({{-5, 50, 0}}), m);
    CHECK(r.any_clamped);
    CHECK(r.landmarks.points[0].x == doctest::Approx(0.0));
    // far outside the expanded bbox
    CHECK_THROWS_AS(map_to_volume(set_of({{-50, 50, 0}}), m), std::invalid_argument);
}

TEST_CASE("flip_remap involution and fixed points") {
    for (const std::string id : {"toy12", "ibug68", "face66"}) {
        auto p = flip_remap(id);
        for (std::size_t i = 0; i < p.size(); ++i)
            CHECK(p[static_cast<std::size_t>(p[i])] == static_cast<int>(i));
    }
    auto p68 = flip_remap("ibug68");
    CHECK(p68[0] == 16);   // jaw corners swap
    CHECK(p68[30] == 30);  // nose tip is midline
    CHECK(p68[8] == 8);    // chin is midline
    auto ptoy = flip_remap("toy12");
    CHECK(ptoy[4] == 4);  // nose tip fixed
    CHECK(ptoy[0] == 3);  // eye outers swap
    CHECK_THROWS_AS(flip_remap("nope"), std::invalid_argument);
}

TEST_CASE("augment identity params is the identity") {
    Image img = Image::zeros(8, 8);
    for (std::int64_t i = 0; i < img.data.size(); ++i) img.data[i] = 0.01 * double(i % 97);
    auto lm = set_of({{1, 2, 3}, {4, 5, 6}}, "");
    lm.scheme_id = "";
    auto [img2, lm2] = augment(img, lm, AugmentParams{}, 16, 16, 16);
    CHECK(img2.data.vec() == img.data.vec());
    for (int i = 0; i < 2; ++i) {
        CHECK(lm2.points[i].x == lm.points[i].x);
        CHECK(lm2.points[i].y == lm.points[i].y);
        CHECK(lm2.points[i].z == lm.points[i].z);
    }
}

TEST_CASE("flip twice recovers the original") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 15.0);
    LandmarkSet lm;
    lm.scheme_id = "toy12";
    for (int i = 0; i < 12; ++i) lm.points.push_back({u(rng), u(rng), u(rng)});
    Image img = Image::zeros(16, 16);
    for (std::int64_t i = 0; i < img.data.size(); ++i) img.data[i] = 0.001 * double(i % 991);
    AugmentParams flip;
    flip.flip = true;
    auto [i1, l1] = augment(img, lm, flip, 16, 16, 16);
    auto [i2, l2] = augment(i1, l1, flip, 16, 16, 16);
    for (int i = 0; i < 12; ++i) {
        CHECK(std::abs(l2.points[i].x - lm.points[i].x) < 1e-6);
        CHECK(std::abs(l2.points[i].y - lm.points[i].y) < 1e-6);
        CHECK(std::abs(l2.points[i].z - lm.points[i].z) < 1e-6);
    }
    CHECK(i2.data.vec() == img.data.vec());
}

TEST_CASE("rotation matches a direct 2D oracle") {
    LandmarkSet lm = set_of({{48, 32, 7}});
    AugmentParams p;
    p.rotation_deg = 90.0;
    Image img = Image::zeros(64, 64);
    auto [imo, out] = augment(img, lm, p, 64, 64, 64);
    // oracle: p' = c + R(90)*(p-c), R = [[0,-1],[1,0]], c = 31.5
    const double dx = 48 - 31.5, dy = 32 - 31.5;
    CHECK(out.points[0].x == doctest::Approx(31.5 - dy));
    CHECK(out.points[0].y == doctest::Approx(31.5 + dx));
    CHECK(out.points[0].z == doctest::Approx(7.0));
}

TEST_CASE("scale acts on z about the depth center") {
    LandmarkSet lm = set_of({{8, 8, 12}});
    AugmentParams p;
    p.scale = 1.5;
    Image img = Image::zeros(16, 16);
    auto [imo, out] = augment(img, lm, p, 16, 16, 16);
    CHECK(out.points[0].z == doctest::Approx(7.5 + 1.5 * (12 - 7.5)));
}

TEST_CASE("flip with an unknown scheme fails loudly") {
    LandmarkSet lm = set_of({{1, 1, 1}});
    lm.scheme_id = "mystery";
    AugmentParams p;
    p.flip = true;
    Image img = Image::zeros(8, 8);
    CHECK_THROWS_AS(augment(img, lm, p, 8, 8, 8), std::invalid_argument);
}

TEST_CASE("flip maps a symmetric shape onto itself") {
    // Build a left/right mirror-symmetric toy12 shape: paired points are
    // mirror images, midline points sit on the mirror plane.
    const auto perm = flip_remap("toy12");
    LandmarkSet lm;
    lm.scheme_id = "toy12";
    lm.points.resize(12);
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(1.0, 7.0);
    const double cx = 7.5;
    for (int i = 0; i < 12; ++i) {
        if (perm[i] == i) {
            lm.points[i] = {cx, u(rng), u(rng)};
        } else if (perm[i] > i) {
            const double off = u(rng), y = u(rng), z = u(rng);
            lm.points[i] = {cx - off, y, z};
            lm.points[static_cast<std::size_t>(perm[i])] = {cx + off, y, z};
        }
    }
    AugmentParams p;
    p.flip = true;
    Image img = Image::zeros(16, 16);
    auto [imo, out] = augment(img, lm, p, 16, 16, 16);
    for (int i = 0; i < 12; ++i) {
        CHECK(out.points[i].x == doctest::Approx(lm.points[i].x).epsilon(1e-9));
        CHECK(out.points[i].y == doctest::Approx(lm.points[i].y).epsilon(1e-9));
        CHECK(out.points[i].z == doctest::Approx(lm.points[i].z).epsilon(1e-9));
    }
}

TEST_CASE("sample_augment is deterministic and in range") {
    AugmentRanges ranges;
    auto a = sample_augment(ranges, 42);
    auto b = sample_augment(ranges, 42);
    CHECK(a.rotation_deg == b.rotation_deg);
    CHECK(a.scale == b.scale);
    CHECK(a.flip == b.flip);
    CHECK(std::abs(a.rotation_deg) <= ranges.max_rotation_deg);
    CHECK(a.scale >= ranges.scale_min);
    CHECK(a.scale <= ranges.scale_max);
}
