#include "cvr/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "cvr/kvconfig.hpp"
#include "cvr/volumetric.hpp"

namespace fs = std::filesystem;

namespace cvr {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Toy 12-point rig matching the toy12 scheme ordering.
const std::vector<Point3>& toy12_template() {
    static const std::vector<Point3> t = {
        {-0.45, -0.25, 0.15},  // left eye outer
        {-0.18, -0.25, 0.05},  // left eye inner
        {0.18, -0.25, 0.05},   // right eye inner
        {0.45, -0.25, 0.15},   // right eye outer
        {0.0, 0.05, -0.35},    // nose tip
        {-0.28, 0.40, 0.05},   // mouth left
        {0.0, 0.33, -0.12},    // mouth top
        {0.28, 0.40, 0.05},    // mouth right
        {0.0, 0.50, -0.08},    // mouth bottom
        {-0.55, 0.50, 0.45},   // jaw left
        {0.0, 0.75, 0.10},     // chin
        {0.55, 0.50, 0.45},    // jaw right
    };
    return t;
}

Point3 rotate(const Point3& p, double yaw, double pitch, double roll) {
    // y down; yaw about y, pitch about x, roll about z
    const double cy = std::cos(yaw), sy = std::sin(yaw);
    const double cx = std::cos(pitch), sx = std::sin(pitch);
    const double cz = std::cos(roll), sz = std::sin(roll);
    Point3 a{cy * p.x + sy * p.z, p.y, -sy * p.x + cy * p.z};
    Point3 b{a.x, cx * a.y - sx * a.z, sx * a.y + cx * a.z};
    return Point3{cz * b.x - sz * b.y, sz * b.x + cz * b.y, b.z};
}

}  // namespace

void SyntheticSpec::validate() const {
    check_arg(n_samples >= 1, "synthetic: n_samples must be >= 1");
    check_arg(image_size >= 8, "synthetic: image_size must be >= 8");
    check_arg(deform_amplitude >= 0.0, "synthetic: deform_amplitude must be >= 0");
    const auto& tpl = custom_template.empty() && scheme_id == "toy12"
                          ? toy12_template()
                          : custom_template;
    check_arg(tpl.size() >= 4, "synthetic: template needs at least 4 points");
    if (scheme_registered(scheme_id))
        check_arg(static_cast<int>(tpl.size()) == scheme_registry(scheme_id).n,
                  "synthetic: template size does not match scheme " + scheme_id);
}

std::vector<Point3> synthetic_template(const SyntheticSpec& spec) {
    if (!spec.custom_template.empty()) return spec.custom_template;
    check_arg(spec.scheme_id == "toy12",
              "no built-in synthetic template for scheme " + spec.scheme_id +
                  "; provide custom_template");
    return toy12_template();
}

std::vector<Sample> generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    const std::vector<Point3> tpl = synthetic_template(spec);
    const int n = static_cast<int>(tpl.size());
    const int sz = spec.image_size;
    const double scale = 0.35 * sz;
    const double cx = (sz - 1) / 2.0, cy = (sz - 1) / 2.0;
    const double blob_sigma = std::max(1.0, sz / 32.0);

    std::vector<Sample> out;
    out.reserve(static_cast<std::size_t>(spec.n_samples));
    for (int si = 0; si < spec.n_samples; ++si) {
        std::mt19937_64 rng(splitmix64(spec.seed ^ (0x5317ULL + static_cast<std::uint64_t>(si))));
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        const double yaw = u(rng) * spec.yaw_range_deg * kPi / 180.0;
        const double pitch = u(rng) * spec.pitch_range_deg * kPi / 180.0;
        const double roll = u(rng) * spec.roll_range_deg * kPi / 180.0;

        Sample s;
        const std::string num = std::to_string(si);
        s.sample_id = "synth" + std::string(num.size() < 4 ? 4 - num.size() : 0, '0') + num;
        s.yaw_deg = yaw * 180.0 / kPi;
        s.bbox = Box2{0.0, 0.0, static_cast<double>(sz), static_cast<double>(sz)};
        s.landmarks.scheme_id = spec.scheme_id;
        double zsum = 0.0;
        for (int i = 0; i < n; ++i) {
            Point3 p = tpl[static_cast<std::size_t>(i)];
            p.x += u(rng) * spec.deform_amplitude;
            p.y += u(rng) * spec.deform_amplitude;
            p.z += u(rng) * spec.deform_amplitude;
            p = rotate(p, yaw, pitch, roll);
            Point3 q{cx + scale * p.x, cy + scale * p.y, scale * p.z};
            zsum += q.z;
            s.landmarks.points.push_back(q);
        }
        const double zmean = zsum / n;
        for (auto& p : s.landmarks.points) p.z -= zmean;

        // Per-landmark color blobs so the image determines the 2D layout.
        s.image = Image::zeros(sz, sz);
        for (int i = 0; i < n; ++i) {
            const Point3& p = s.landmarks.points[static_cast<std::size_t>(i)];
            const double col[3] = {0.35 + 0.65 * ((i * 7 + 1) % n) / static_cast<double>(n),
                                   0.35 + 0.65 * ((i * 5 + 3) % n) / static_cast<double>(n),
                                   0.35 + 0.65 * ((i * 11 + 5) % n) / static_cast<double>(n)};
            const int r = static_cast<int>(std::ceil(3.0 * blob_sigma));
            const int x0 = std::max(0, static_cast<int>(p.x) - r);
            const int x1 = std::min(sz - 1, static_cast<int>(p.x) + r);
            const int y0 = std::max(0, static_cast<int>(p.y) - r);
            const int y1 = std::min(sz - 1, static_cast<int>(p.y) + r);
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x) {
                    const double dx = x - p.x, dy = y - p.y;
                    const double g =
                        std::exp(-(dx * dx + dy * dy) / (2.0 * blob_sigma * blob_sigma));
                    for (int c = 0; c < 3; ++c)
                        s.image.at(c, y, x) = std::min(1.0, s.image.at(c, y, x) + col[c] * g);
                }
        }
        out.push_back(std::move(s));
    }
    return out;
}

Box2 tight_bbox2d(const LandmarkSet& lm) {
    lm.validate();
    Box2 b{lm.points[0].x, lm.points[0].y, lm.points[0].x, lm.points[0].y};
    for (const auto& p : lm.points) {
        b.x_min = std::min(b.x_min, p.x);
        b.y_min = std::min(b.y_min, p.y);
        b.x_max = std::max(b.x_max, p.x);
        b.y_max = std::max(b.y_max, p.y);
    }
    return b;
}

std::vector<Sample> load_dataset(const std::string& root) {
    check_state(fs::is_directory(root), "dataset root is not a directory: " + root);
    std::vector<std::string> ids;
    for (const auto& entry : fs::directory_iterator(root))
        if (entry.is_regular_file() && entry.path().extension() == ".pts3")
            ids.push_back(entry.path().stem().string());
    std::sort(ids.begin(), ids.end());

    std::vector<Sample> out;
    out.reserve(ids.size());
    for (const auto& id : ids) {
        const fs::path base = fs::path(root) / id;
        Sample s;
        s.sample_id = id;
        try {
            s.landmarks = load_landmarks((base.string() + ".pts3"));
        } catch (const std::exception& e) {
            throw std::runtime_error("sample " + id + ": " + e.what());
        }
        const std::string img_path = base.string() + ".img";
        check_state(fs::exists(img_path), "sample " + id + ": missing image " + img_path);
        s.image = load_ppm(img_path);

        const std::string meta_path = base.string() + ".meta";
        bool have_bbox = false;
        if (fs::exists(meta_path)) {
            std::ifstream mf(meta_path);
            std::string text((std::istreambuf_iterator<char>(mf)),
                             std::istreambuf_iterator<char>());
            const KvMap kv = parse_kv_text(text);
            if (kv.count("bbox")) {
                std::istringstream bs(kv.at("bbox"));
                char comma;
                Box2 b;
                check_state(static_cast<bool>(bs >> b.x_min >> comma >> b.y_min >> comma >>
                                              b.x_max >> comma >> b.y_max),
                            "sample " + id + ": malformed bbox in " + meta_path);
                check_state(b.area() > 0, "sample " + id + ": bbox has no area");
                s.bbox = b;
                have_bbox = true;
            }
            if (kv.count("yaw")) s.yaw_deg = std::stod(kv.at("yaw"));
        }
        if (!have_bbox) s.bbox = tight_bbox2d(s.landmarks);
        check_state(s.image.data.all_finite(), "sample " + id + ": non-finite image");
        out.push_back(std::move(s));
    }
    return out;
}

void save_dataset(const std::string& root, const std::vector<Sample>& samples) {
    fs::create_directories(root);
    for (const auto& s : samples) {
        const fs::path base = fs::path(root) / s.sample_id;
        save_ppm(base.string() + ".img", s.image);
        save_landmarks(base.string() + ".pts3", s.landmarks);
        std::ofstream mf(base.string() + ".meta");
        check_state(mf.good(), "cannot write meta for sample " + s.sample_id);
        mf.precision(17);
        mf << "bbox = " << s.bbox.x_min << "," << s.bbox.y_min << "," << s.bbox.x_max
           << "," << s.bbox.y_max << "\n";
        if (s.yaw_deg) mf << "yaw = " << *s.yaw_deg << "\n";
    }
}

CubeMapping mapping_for(const Box2& bbox, int w, int h, int d,
                        double depth_extent_factor) {
    check_arg(depth_extent_factor > 0.0, "depth_extent_factor must be positive");
    CubeMapping m;
    m.source_bbox = bbox;
    m.w = w;
    m.h = h;
    m.d = d;
    const double extent = depth_extent_factor * std::max(bbox.width(), bbox.height());
    m.depth_offset = extent / 2.0;
    m.depth_scale = d / extent;
    m.validate();
    return m;
}

TrainSet prepare_train_set(const std::vector<Sample>& samples,
                           const HourglassStackConfig& hg_cfg, double sigma,
                           double depth_extent_factor) {
    hg_cfg.validate();
    check_arg(sigma > 0.0, "sigma must be positive");
    TrainSet out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        check_arg(s.image.height() == hg_cfg.input_h && s.image.width() == hg_cfg.input_w,
                  "sample " + s.sample_id + ": image size does not match config");
        const CubeMapping m = mapping_for(s.bbox, hg_cfg.out_w(), hg_cfg.out_h(),
                                          hg_cfg.d_max(), depth_extent_factor);
        const LandmarkSet vol_lm = map_to_volume(s.landmarks, m).landmarks;
        TrainSample ts;
        ts.image = s.image.data;
        const VolumePyramid pyr = build_pyramid(vol_lm, hg_cfg.out_w(), hg_cfg.out_h(),
                                                hg_cfg.z_resolutions, sigma);
        for (const auto& g : pyr.grids) ts.pyramid.push_back(grid_to_tensor(g));
        ts.coords = Tensor({3 * vol_lm.count()});
        for (int i = 0; i < vol_lm.count(); ++i) {
            ts.coords[3 * i + 0] = vol_lm.points[static_cast<std::size_t>(i)].x;
            ts.coords[3 * i + 1] = vol_lm.points[static_cast<std::size_t>(i)].y;
            ts.coords[3 * i + 2] = vol_lm.points[static_cast<std::size_t>(i)].z;
        }
        out.push_back(std::move(ts));
    }
    return out;
}

}  // namespace cvr
