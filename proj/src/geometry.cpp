#include "cvr/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace cvr {

namespace {

constexpr double kPi = 3.14159265358979323846;

double clamp_axis(double v, int extent, bool* clamped) {
    const double hi = static_cast<double>(extent) - 1e-9;
    if (v < 0.0 || v > hi) {
        *clamped = true;
        return std::clamp(v, 0.0, hi);
    }
    return v;
}

}  // namespace

void CubeMapping::validate() const {
    check_arg(source_bbox.area() > 0.0, "cube mapping bbox must have positive area");
    check_arg(depth_scale > 0.0, "cube mapping depth_scale must be positive");
    check_arg(w > 0 && h > 0 && d > 0, "cube mapping target dims must be positive");
}

LandmarkSet normalize_depth(const LandmarkSet& lm) {
    lm.validate();
    double mean = 0.0;
    for (const auto& p : lm.points) mean += p.z;
    mean /= static_cast<double>(lm.count());
    LandmarkSet out = lm;
    for (auto& p : out.points) p.z -= mean;
    return out;
}

MappedLandmarks map_to_volume(const LandmarkSet& image_space, const CubeMapping& m) {
    image_space.validate();
    m.validate();
    const Box2& b = m.source_bbox;
    const double ex = b.width() * m.expand_factor;
    const double ey = b.height() * m.expand_factor;
    MappedLandmarks out;
    out.landmarks.scheme_id = image_space.scheme_id;
    out.landmarks.points.reserve(image_space.points.size());
    for (const auto& p : image_space.points) {
        check_arg(p.x >= b.x_min - ex && p.x <= b.x_max + ex &&
                  p.y >= b.y_min - ey && p.y <= b.y_max + ey,
                  "landmark outside expanded source bbox");
        Point3 q;
        q.x = (p.x - b.x_min) / b.width() * m.w;
        q.y = (p.y - b.y_min) / b.height() * m.h;
        q.z = (p.z + m.depth_offset) * m.depth_scale;
        bool clamped = false;
        q.x = clamp_axis(q.x, m.w, &clamped);
        q.y = clamp_axis(q.y, m.h, &clamped);
        q.z = clamp_axis(q.z, m.d, &clamped);
        out.any_clamped = out.any_clamped || clamped;
        out.landmarks.points.push_back(q);
    }
    return out;
}

LandmarkSet map_to_image(const LandmarkSet& volume_space, const CubeMapping& m) {
    volume_space.validate();
    m.validate();
    const Box2& b = m.source_bbox;
    LandmarkSet out;
    out.scheme_id = volume_space.scheme_id;
    out.points.reserve(volume_space.points.size());
    for (const auto& p : volume_space.points) {
        Point3 q;
        q.x = p.x / m.w * b.width() + b.x_min;
        q.y = p.y / m.h * b.height() + b.y_min;
        q.z = p.z / m.depth_scale - m.depth_offset;
        out.points.push_back(q);
    }
    return out;
}

std::pair<Image, LandmarkSet> augment(const Image& image, const LandmarkSet& landmarks,
                                      const AugmentParams& params,
                                      int frame_w, int frame_h, int frame_d) {
    landmarks.validate();
    check_arg(params.scale > 0.0, "augment: scale must be positive");
    check_arg(frame_w > 0 && frame_h > 0 && frame_d > 0, "augment: bad frame dims");

    const bool identity = params.rotation_deg == 0.0 && params.scale == 1.0 && !params.flip;
    const double a = params.rotation_deg * kPi / 180.0;
    const double ca = std::cos(a), sa = std::sin(a), s = params.scale;

    // Landmarks: similarity about the volume-frame center, then optional mirror.
    LandmarkSet lm_out;
    lm_out.scheme_id = landmarks.scheme_id;
    lm_out.points.resize(landmarks.points.size());
    const double cx = (frame_w - 1) / 2.0, cy = (frame_h - 1) / 2.0, cz = (frame_d - 1) / 2.0;
    std::vector<int> perm;
    if (params.flip) perm = flip_remap(landmarks.scheme_id);  // errors on unknown scheme
    for (int i = 0; i < landmarks.count(); ++i) {
        const Point3& p = landmarks.points[static_cast<std::size_t>(i)];
        Point3 q;
        const double dx = p.x - cx, dy = p.y - cy;
        q.x = cx + s * (ca * dx - sa * dy);
        q.y = cy + s * (sa * dx + ca * dy);
        q.z = cz + s * (p.z - cz);
        if (params.flip) {
            q.x = (frame_w - 1) - q.x;
            lm_out.points[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = q;
        } else {
            lm_out.points[static_cast<std::size_t>(i)] = q;
        }
    }

    if (identity) return {image, lm_out};

    // Image: inverse-map each output pixel through the same similarity about
    // the image center.
    const int H = image.height(), W = image.width();
    const double icx = (W - 1) / 2.0, icy = (H - 1) / 2.0;
    Image out = Image::zeros(H, W);
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            double ox = static_cast<double>(x), oy = static_cast<double>(y);
            if (params.flip) ox = (W - 1) - ox;
            // inverse similarity: rotate by -a, scale by 1/s
            const double dx = ox - icx, dy = oy - icy;
            const double sx = icx + (ca * dx + sa * dy) / s;
            const double sy = icy + (-sa * dx + ca * dy) / s;
            for (int c = 0; c < 3; ++c) out.at(c, y, x) = sample_bilinear(image, c, sx, sy);
        }
    }
    return {out, lm_out};
}

AugmentParams sample_augment(const AugmentRanges& ranges, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> rot(-ranges.max_rotation_deg, ranges.max_rotation_deg);
    std::uniform_real_distribution<double> sc(ranges.scale_min, ranges.scale_max);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    AugmentParams p;
    p.rotation_deg = rot(rng);
    p.scale = sc(rng);
    p.flip = u(rng) < ranges.flip_prob;
    p.seed = seed;
    return p;
}

}  // namespace cvr
