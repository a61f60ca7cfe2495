#include "cvr/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace cvr {

namespace {

int clampi(int v, int lo, int hi) { return std::max(lo, std::min(hi, v)); }

unsigned char to_byte(double v) {
    return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

void save_ppm(const std::string& path, const Image& img) {
    std::ofstream f(path, std::ios::binary);
    check_state(f.good(), "cannot open for writing: " + path);
    const int h = img.height(), w = img.width();
    f << "P6\n" << w << " " << h << "\n255\n";
    std::vector<unsigned char> row(static_cast<std::size_t>(w) * 3);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                row[static_cast<std::size_t>(x) * 3 + static_cast<std::size_t>(c)] =
                    to_byte(img.at(c, y, x));
        f.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    check_state(f.good(), "write failed: " + path);
}

Image load_ppm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    check_state(f.good(), "cannot open image file: " + path);
    std::string magic;
    f >> magic;
    check_state(magic == "P6", "unsupported image format in " + path);
    auto next_int = [&]() {
        // skip whitespace and '#' comments
        for (;;) {
            int ch = f.peek();
            if (ch == '#') {
                std::string dummy;
                std::getline(f, dummy);
            } else if (std::isspace(ch)) {
                f.get();
            } else {
                break;
            }
        }
        int v;
        f >> v;
        return v;
    };
    int w = next_int(), h = next_int(), maxv = next_int();
    check_state(w > 0 && h > 0 && maxv == 255, "bad PPM header in " + path);
    f.get();  // single whitespace after header
    std::vector<unsigned char> buf(static_cast<std::size_t>(w) * h * 3);
    f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    check_state(f.gcount() == static_cast<std::streamsize>(buf.size()),
                "truncated PPM data in " + path);
    Image img = Image::zeros(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                img.at(c, y, x) =
                    buf[(static_cast<std::size_t>(y) * w + x) * 3 + static_cast<std::size_t>(c)] / 255.0;
    return img;
}

void save_pgm(const std::string& path, const double* values, int h, int w,
              double vmin, double vmax) {
    std::ofstream f(path, std::ios::binary);
    check_state(f.good(), "cannot open for writing: " + path);
    f << "P5\n" << w << " " << h << "\n255\n";
    const double span = vmax > vmin ? vmax - vmin : 1.0;
    for (int i = 0; i < h * w; ++i) {
        unsigned char b = to_byte((values[i] - vmin) / span);
        f.write(reinterpret_cast<const char*>(&b), 1);
    }
    check_state(f.good(), "write failed: " + path);
}

double sample_bilinear(const Image& img, int c, double x, double y) {
    const int h = img.height(), w = img.width();
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const double fx = x - x0, fy = y - y0;
    const int x0c = clampi(x0, 0, w - 1), x1c = clampi(x0 + 1, 0, w - 1);
    const int y0c = clampi(y0, 0, h - 1), y1c = clampi(y0 + 1, 0, h - 1);
    const double v00 = img.at(c, y0c, x0c), v01 = img.at(c, y0c, x1c);
    const double v10 = img.at(c, y1c, x0c), v11 = img.at(c, y1c, x1c);
    return (1 - fy) * ((1 - fx) * v00 + fx * v01) + fy * ((1 - fx) * v10 + fx * v11);
}

}  // namespace cvr
