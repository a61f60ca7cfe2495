#ifndef CVR_IMAGE_HPP_
#define CVR_IMAGE_HPP_

#include <string>

#include "cvr/tensor.hpp"

namespace cvr {

// Images are (3,H,W) tensors with values in [0,1].
struct Image {
    Tensor data;
    int height() const { return data.dim(1); }
    int width() const { return data.dim(2); }
    static Image zeros(int h, int w) { return Image{Tensor({3, h, w})}; }
    double& at(int c, int y, int x) {
        return data[(static_cast<std::int64_t>(c) * height() + y) * width() + x];
    }
    double at(int c, int y, int x) const {
        return data[(static_cast<std::int64_t>(c) * height() + y) * width() + x];
    }
};

// 8-bit binary PPM (P6).
void save_ppm(const std::string& path, const Image& img);
Image load_ppm(const std::string& path);

// 8-bit binary PGM (P5) from a single-channel row-major array.
void save_pgm(const std::string& path, const double* values, int h, int w,
              double vmin, double vmax);

// Bilinear sample with edge padding; (x,y) in pixel coordinates.
double sample_bilinear(const Image& img, int c, double x, double y);

}  // namespace cvr

#endif  // CVR_IMAGE_HPP_
