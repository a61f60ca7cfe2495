#ifndef CVR_GEOMETRY_HPP_
#define CVR_GEOMETRY_HPP_

#include <cstdint>
#include <utility>

#include "cvr/image.hpp"
#include "cvr/landmarks.hpp"

namespace cvr {

struct Box2 {
    double x_min = 0, y_min = 0, x_max = 0, y_max = 0;
    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
    double area() const { return width() * height(); }
};

// Affine image-to-volume mapping: x,y go from bbox pixels to [0,w)x[0,h),
// z goes to [0,d) via (z + depth_offset) * depth_scale.
struct CubeMapping {
    Box2 source_bbox;
    double depth_offset = 0.0;
    double depth_scale = 1.0;
    int w = 0, h = 0, d = 0;
    double expand_factor = 0.25;  // tolerated bbox overshoot before it is an error

    void validate() const;
};

struct AugmentParams {
    double rotation_deg = 0.0;
    double scale = 1.0;
    bool flip = false;
    std::uint64_t seed = 0;
};

struct AugmentRanges {
    double max_rotation_deg = 30.0;
    double scale_min = 0.75, scale_max = 1.25;
    double flip_prob = 0.5;
};

struct MappedLandmarks {
    LandmarkSet landmarks;
    bool any_clamped = false;
};

// Shifts z so the set is zero-mean in depth; x,y untouched.
LandmarkSet normalize_depth(const LandmarkSet& lm);

MappedLandmarks map_to_volume(const LandmarkSet& image_space, const CubeMapping& m);
LandmarkSet map_to_image(const LandmarkSet& volume_space, const CubeMapping& m);

// Rotation convention: positive angles rotate counter-clockwise in image
// coordinates (y pointing down), i.e. p' = c + s*R(a)*(p-c) with
// R = [[cos,-sin],[sin,cos]]. Flip mirrors x about the frame center
// (x' = (w-1) - x) and remaps landmark order via flip_remap. z is scaled by
// the same factor about the depth center. Landmarks are in volume
// coordinates of a (frame_w, frame_h, frame_d) frame; the image is warped
// by the matching similarity about its own center with bilinear sampling
// and edge padding.
std::pair<Image, LandmarkSet> augment(const Image& image, const LandmarkSet& landmarks,
                                      const AugmentParams& params,
                                      int frame_w, int frame_h, int frame_d);

AugmentParams sample_augment(const AugmentRanges& ranges, std::uint64_t seed);

}  // namespace cvr

#endif  // CVR_GEOMETRY_HPP_
