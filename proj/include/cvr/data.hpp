#ifndef CVR_DATA_HPP_
#define CVR_DATA_HPP_

#include <optional>
#include <string>
#include <vector>

#include "cvr/geometry.hpp"
#include "cvr/image.hpp"
#include "cvr/landmarks.hpp"
#include "cvr/network.hpp"
#include "cvr/training.hpp"

namespace cvr {

// One dataset record: image-space landmarks (z zero-mean, in pixel units).
struct Sample {
    Image image;
    LandmarkSet landmarks;
    Box2 bbox;
    std::optional<double> yaw_deg;
    std::string sample_id;
};

struct SyntheticSpec {
    std::string scheme_id = "toy12";
    int n_samples = 8;
    int image_size = 64;
    double yaw_range_deg = 40.0;
    double pitch_range_deg = 20.0;
    double roll_range_deg = 20.0;
    double deform_amplitude = 0.02;  // fraction of the face scale
    std::uint64_t seed = 0;
    // Overrides the built-in rig; required for schemes without one.
    std::vector<Point3> custom_template;

    void validate() const;
};

// 3D rig for a scheme, centered, roughly unit scale, y pointing down.
std::vector<Point3> synthetic_template(const SyntheticSpec& spec);

// Deterministic per seed; each sample is the randomly posed, mildly deformed
// template under orthographic projection, rendered as per-landmark color
// blobs.
std::vector<Sample> generate_synthetic(const SyntheticSpec& spec);

// Directory layout: <root>/<id>.img (PPM), <root>/<id>.pts3, optional
// <root>/<id>.meta with "bbox = x0,y0,x1,y1" and "yaw = degrees".
// Samples come back in lexicographic id order. A missing bbox defaults to
// the tight 2D landmark bbox.
std::vector<Sample> load_dataset(const std::string& root);
void save_dataset(const std::string& root, const std::vector<Sample>& samples);

Box2 tight_bbox2d(const LandmarkSet& lm);

// Image-to-volume mapping derived from a sample bbox: the depth extent is
// depth_extent_factor * max(bbox width, height), centered on z = 0.
CubeMapping mapping_for(const Box2& bbox, int w, int h, int d,
                        double depth_extent_factor = 1.0);

// Precomputes network inputs and supervision targets for training.
TrainSet prepare_train_set(const std::vector<Sample>& samples,
                           const HourglassStackConfig& hg_cfg, double sigma,
                           double depth_extent_factor = 1.0);

}  // namespace cvr

#endif  // CVR_DATA_HPP_
