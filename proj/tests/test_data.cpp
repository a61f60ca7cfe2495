#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "cvr/data.hpp"

using namespace cvr;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("synthetic samples are deterministic, posed and zero-mean in depth") {
    SyntheticSpec spec;
    spec.n_samples = 4;
    spec.image_size = 32;
    spec.seed = 9;
    auto a = generate_synthetic(spec);
    auto b = generate_synthetic(spec);
    REQUIRE(a.size() == 4);
    CHECK(a[0].sample_id == "synth0000");
    CHECK(a[3].sample_id == "synth0003");
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].image.data.vec() == b[i].image.data.vec());
        REQUIRE(a[i].landmarks.count() == 12);
        CHECK(a[i].landmarks.scheme_id == "toy12");
        REQUIRE(a[i].yaw_deg.has_value());
        CHECK(std::abs(*a[i].yaw_deg) <= spec.yaw_range_deg);
        double zmean = 0.0;
        for (const auto& p : a[i].landmarks.points) zmean += p.z;
        CHECK(std::abs(zmean / 12.0) < 1e-9);
        CHECK(a[i].bbox.width() == 32.0);
        CHECK(a[i].image.data.all_finite());
        CHECK(a[i].image.data.vec() != Image::zeros(32, 32).data.vec());
    }
    // different seeds give different geometry
    spec.seed = 10;
    auto c = generate_synthetic(spec);
    CHECK(c[0].landmarks.points[0].x != a[0].landmarks.points[0].x);

    SyntheticSpec bad;
    bad.n_samples = 0;
    CHECK_THROWS_AS(generate_synthetic(bad), std::invalid_argument);
    SyntheticSpec no_rig;
    no_rig.scheme_id = "ibug68";
    CHECK_THROWS_AS(generate_synthetic(no_rig), std::invalid_argument);
}

TEST_CASE("frontal synthetic faces keep left/right template ordering") {
    SyntheticSpec spec;
    spec.n_samples = 1;
    spec.image_size = 64;
    spec.yaw_range_deg = spec.pitch_range_deg = spec.roll_range_deg = 0.0;
    spec.deform_amplitude = 0.0;
    auto s = generate_synthetic(spec);
    const auto& p = s[0].landmarks.points;
    CHECK(p[0].x < p[1].x);   // left eye outer left of inner
    CHECK(p[2].x < p[3].x);   // right eye inner left of outer
    CHECK(p[0].y < p[10].y);  // eyes above chin (y down)
    CHECK(p[4].x == doctest::Approx(31.5));  // nose tip on the midline
}

TEST_CASE("tight_bbox2d bounds the 2D projection") {
    LandmarkSet lm;
    lm.points = {{1, 5, -3}, {4, 2, 9}, {2, 8, 0}};
    Box2 b = tight_bbox2d(lm);
    CHECK(b.x_min == 1.0);
    CHECK(b.y_min == 2.0);
    CHECK(b.x_max == 4.0);
    CHECK(b.y_max == 8.0);
    CHECK_THROWS_AS(tight_bbox2d(LandmarkSet{}), std::invalid_argument);
}

TEST_CASE("mapping_for centers the depth range on z = 0") {
    Box2 bbox{10, 20, 110, 60};  // 100 x 40
    CubeMapping m = mapping_for(bbox, 16, 16, 8, 1.0);
    CHECK(m.depth_offset == doctest::Approx(50.0));  // extent = max(100,40)
    CHECK(m.depth_scale == doctest::Approx(8.0 / 100.0));
    // z = 0 lands mid-depth; extremes land on the depth faces
    CHECK((0.0 + m.depth_offset) * m.depth_scale == doctest::Approx(4.0));
    CHECK((-50.0 + m.depth_offset) * m.depth_scale == doctest::Approx(0.0));
    CHECK((50.0 + m.depth_offset) * m.depth_scale == doctest::Approx(8.0));
    CHECK_THROWS_AS(mapping_for(bbox, 16, 16, 8, 0.0), std::invalid_argument);
}

TEST_CASE("dataset files round-trip through a directory") {
    SyntheticSpec spec;
    spec.n_samples = 3;
    spec.image_size = 32;
    spec.seed = 4;
    auto samples = generate_synthetic(spec);
    TempDir dir("cvr_dataset_rt");
    save_dataset(dir.path.string(), samples);
    auto back = load_dataset(dir.path.string());
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].sample_id == samples[i].sample_id);
        CHECK(back[i].landmarks.scheme_id == "toy12");
        REQUIRE(back[i].landmarks.count() == 12);
        for (int j = 0; j < 12; ++j) {
            CHECK(back[i].landmarks.points[static_cast<std::size_t>(j)].x ==
                  samples[i].landmarks.points[static_cast<std::size_t>(j)].x);
            CHECK(back[i].landmarks.points[static_cast<std::size_t>(j)].z ==
                  samples[i].landmarks.points[static_cast<std::size_t>(j)].z);
        }
        CHECK(back[i].bbox.x_max == samples[i].bbox.x_max);
        REQUIRE(back[i].yaw_deg.has_value());
        CHECK(*back[i].yaw_deg == doctest::Approx(*samples[i].yaw_deg).epsilon(1e-12));
        // image survives 8-bit quantization
        for (std::int64_t k = 0; k < back[i].image.data.size(); ++k)
            CHECK(std::abs(back[i].image.data[k] - samples[i].image.data[k]) <= 0.5 / 255.0 + 1e-12);
    }
}

TEST_CASE("dataset loader fills a tight bbox when meta is absent") {
    SyntheticSpec spec;
    spec.n_samples = 1;
    spec.image_size = 32;
    auto samples = generate_synthetic(spec);
    TempDir dir("cvr_dataset_nometa");
    save_dataset(dir.path.string(), samples);
    fs::remove(dir.path / "synth0000.meta");
    auto back = load_dataset(dir.path.string());
    REQUIRE(back.size() == 1);
    Box2 tight = tight_bbox2d(samples[0].landmarks);
    CHECK(back[0].bbox.x_min == doctest::Approx(tight.x_min).epsilon(1e-9));
    CHECK(back[0].bbox.y_max == doctest::Approx(tight.y_max).epsilon(1e-9));
    CHECK_FALSE(back[0].yaw_deg.has_value());
}

TEST_CASE("dataset loader reports broken samples") {
    TempDir dir("cvr_dataset_broken");
    std::ofstream(dir.path / "x.pts3") << "# scheme=toy12 n=12\n1 2 3\n";  // count mismatch
    CHECK_THROWS_AS(load_dataset(dir.path.string()), std::runtime_error);

    TempDir dir2("cvr_dataset_noimg");
    LandmarkSet lm;
    lm.points = {{1, 1, 0}, {2, 2, 0}};
    save_landmarks((dir2.path / "y.pts3").string(), lm);
    CHECK_THROWS_AS(load_dataset(dir2.path.string()), std::runtime_error);

    CHECK_THROWS_AS(load_dataset("/no/such/dir"), std::runtime_error);
}

TEST_CASE("prepare_train_set builds pyramid targets that match the coords") {
    SyntheticSpec spec;
    spec.n_samples = 2;
    spec.image_size = 64;
    spec.seed = 6;
    auto samples = generate_synthetic(spec);
    auto hg = toy_hourglass_config();
    TrainSet ts = prepare_train_set(samples, hg, 1.0);
    REQUIRE(ts.size() == 2);
    for (std::size_t i = 0; i < ts.size(); ++i) {
        CHECK(ts[i].image.shape() == std::vector<int>{3, 64, 64});
        REQUIRE(ts[i].pyramid.size() == 2);
        CHECK(ts[i].pyramid[0].shape() == std::vector<int>{1, 16, 16});
        CHECK(ts[i].pyramid[1].shape() == std::vector<int>{16, 16, 16});
        REQUIRE(ts[i].coords.shape() == std::vector<int>{36});
        // coords live inside the volume cube
        for (int j = 0; j < 12; ++j) {
            CHECK(ts[i].coords[3 * j + 0] >= 0.0);
            CHECK(ts[i].coords[3 * j + 0] <= 16.0);
            CHECK(ts[i].coords[3 * j + 2] >= 0.0);
            CHECK(ts[i].coords[3 * j + 2] <= 16.0);
        }
        // the final-level target peaks near each stored coordinate
        const Tensor& vol = ts[i].pyramid[1];
        for (int j = 0; j < 12; ++j) {
            const int x = std::min(15, static_cast<int>(std::round(ts[i].coords[3 * j + 0])));
            const int y = std::min(15, static_cast<int>(std::round(ts[i].coords[3 * j + 1])));
            const int z = std::min(15, static_cast<int>(std::round(ts[i].coords[3 * j + 2])));
            CHECK(vol[(z * 16 + y) * 16 + x] > 0.05);
        }
    }
    // wrong image size is rejected
    SyntheticSpec small = spec;
    small.image_size = 32;
    CHECK_THROWS_AS(prepare_train_set(generate_synthetic(small), hg, 1.0),
                    std::invalid_argument);
}
