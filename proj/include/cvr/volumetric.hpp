#ifndef CVR_VOLUMETRIC_HPP_
#define CVR_VOLUMETRIC_HPP_

#include <string>
#include <vector>

#include "cvr/landmarks.hpp"

namespace cvr {

// Dense likelihood volume; values stored x-fastest, i.e.
// values[(k*h + j)*w + i] holds voxel (i,j,k).
struct VoxelGrid {
    int w = 0, h = 0, d = 0;
    double sigma = 1.0;
    std::vector<double> values;

    static VoxelGrid zeros(int w, int h, int d, double sigma);
    std::int64_t size() const { return static_cast<std::int64_t>(w) * h * d; }
    double& at(int i, int j, int k) {
        return values[(static_cast<std::int64_t>(k) * h + j) * w + i];
    }
    double at(int i, int j, int k) const {
        return values[(static_cast<std::int64_t>(k) * h + j) * w + i];
    }
    double max_value() const;
    void validate() const;
};

// Multi-resolution supervision targets with increasing depth resolution.
struct VolumePyramid {
    std::vector<VoxelGrid> grids;
    std::vector<int> z_resolutions;
    int levels() const { return static_cast<int>(grids.size()); }
};

// Gaussian contribution of a landmark to a voxel, with the 1/(2*pi*sigma^2)
// normalizer (peak value at zero offset).
double gaussian_contribution(const Point3& landmark, const Point3& voxel, double sigma);

// Max-composition of per-landmark Gaussians into a single grid.
// A truncation radius of 3*sigma is applied unless truncate is false.
VoxelGrid encode(const LandmarkSet& landmarks, int w, int h, int d, double sigma,
                 bool truncate = true);

// Re-encodes landmarks with z rescaled by z_res[m]/d_max per level.
// z_resolutions must be strictly increasing and end at d_max.
VolumePyramid build_pyramid(const LandmarkSet& landmarks, int w, int h,
                            const std::vector<int>& z_resolutions, double sigma,
                            bool truncate = true);

// Local maxima above min_value, refined per axis by quadratic fit; peaks
// closer than min_separation are merged keeping the stronger one.
std::vector<Point3> decode_peaks(const VoxelGrid& grid, double min_value,
                                 double min_separation);

// Binary container: magic "CVR1", w/h/d as u32 LE, sigma as f64 LE, then
// w*h*d f32 values in x-fastest order.
void save_voxel_grid(const std::string& path, const VoxelGrid& grid);
VoxelGrid load_voxel_grid(const std::string& path);

}  // namespace cvr

#endif  // CVR_VOLUMETRIC_HPP_
