#include "cvr/volumetric.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "cvr/tensor.hpp"

namespace cvr {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr char kMagic[4] = {'C', 'V', 'R', '1'};

}  // namespace

VoxelGrid VoxelGrid::zeros(int w, int h, int d, double sigma) {
    check_arg(w > 0 && h > 0 && d > 0, "voxel grid dims must be positive");
    check_arg(sigma > 0.0, "sigma must be positive");
    VoxelGrid g;
    g.w = w;
    g.h = h;
    g.d = d;
    g.sigma = sigma;
    g.values.assign(static_cast<std::size_t>(g.size()), 0.0);
    return g;
}

double VoxelGrid::max_value() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, v);
    return m;
}

void VoxelGrid::validate() const {
    check_arg(w > 0 && h > 0 && d > 0 && sigma > 0.0, "invalid voxel grid header");
    check_arg(static_cast<std::int64_t>(values.size()) == size(),
              "voxel grid value count does not match dims");
    const double peak = 1.0 / (2.0 * kPi * sigma * sigma);
    for (double v : values) {
        check_arg(std::isfinite(v), "voxel grid contains non-finite values");
        check_arg(v >= 0.0 && v <= peak * (1.0 + 1e-12), "voxel value out of [0, peak] range");
    }
}

double gaussian_contribution(const Point3& landmark, const Point3& voxel, double sigma) {
    check_arg(sigma > 0.0, "sigma must be positive");
    const double dx = landmark.x - voxel.x;
    const double dy = landmark.y - voxel.y;
    const double dz = landmark.z - voxel.z;
    const double s2 = sigma * sigma;
    return std::exp(-(dx * dx + dy * dy + dz * dz) / (2.0 * s2)) / (2.0 * kPi * s2);
}

VoxelGrid encode(const LandmarkSet& landmarks, int w, int h, int d, double sigma,
                 bool truncate) {
    landmarks.validate();
    VoxelGrid g = VoxelGrid::zeros(w, h, d, sigma);
    const double r = 3.0 * sigma;
    for (const auto& p : landmarks.points) {
        int i0 = 0, i1 = w - 1, j0 = 0, j1 = h - 1, k0 = 0, k1 = d - 1;
        if (truncate) {
            i0 = std::max(0, static_cast<int>(std::ceil(p.x - r)));
            i1 = std::min(w - 1, static_cast<int>(std::floor(p.x + r)));
            j0 = std::max(0, static_cast<int>(std::ceil(p.y - r)));
            j1 = std::min(h - 1, static_cast<int>(std::floor(p.y + r)));
            k0 = std::max(0, static_cast<int>(std::ceil(p.z - r)));
            k1 = std::min(d - 1, static_cast<int>(std::floor(p.z + r)));
        }
        for (int k = k0; k <= k1; ++k)
            for (int j = j0; j <= j1; ++j)
                for (int i = i0; i <= i1; ++i) {
                    const double v = gaussian_contribution(
                        p, Point3{static_cast<double>(i), static_cast<double>(j),
                                  static_cast<double>(k)},
                        sigma);
                    double& cell = g.at(i, j, k);
                    cell = std::max(cell, v);
                }
    }
    return g;
}

VolumePyramid build_pyramid(const LandmarkSet& landmarks, int w, int h,
                            const std::vector<int>& z_resolutions, double sigma,
                            bool truncate) {
    landmarks.validate();
    check_arg(!z_resolutions.empty(), "z_resolutions must not be empty");
    for (std::size_t i = 1; i < z_resolutions.size(); ++i)
        check_arg(z_resolutions[i] > z_resolutions[i - 1],
                  "z_resolutions must be strictly increasing");
    check_arg(z_resolutions.front() > 0, "z_resolutions must be positive");
    const int d_max = z_resolutions.back();

    VolumePyramid pyr;
    pyr.z_resolutions = z_resolutions;
    for (int res : z_resolutions) {
        LandmarkSet scaled = landmarks;
        const double f = static_cast<double>(res) / static_cast<double>(d_max);
        for (auto& p : scaled.points) p.z *= f;
        pyr.grids.push_back(encode(scaled, w, h, res, sigma, truncate));
    }
    return pyr;
}

std::vector<Point3> decode_peaks(const VoxelGrid& grid, double min_value,
                                 double min_separation) {
    grid.validate();
    struct Peak {
        Point3 p;
        double v;
    };
    std::vector<Peak> candidates;

    auto refine = [](double fm, double f0, double fp) {
        const double denom = fm - 2.0 * f0 + fp;
        if (denom >= 0.0) return 0.0;  // not a proper local max along this axis
        return std::clamp(0.5 * (fm - fp) / denom, -0.5, 0.5);
    };

    for (int k = 0; k < grid.d; ++k)
        for (int j = 0; j < grid.h; ++j)
            for (int i = 0; i < grid.w; ++i) {
                const double v = grid.at(i, j, k);
                if (v <= min_value) continue;
                bool is_max = true;
                for (int dk = -1; dk <= 1 && is_max; ++dk)
                    for (int dj = -1; dj <= 1 && is_max; ++dj)
                        for (int di = -1; di <= 1 && is_max; ++di) {
                            if (!di && !dj && !dk) continue;
                            const int ii = i + di, jj = j + dj, kk = k + dk;
                            if (ii < 0 || ii >= grid.w || jj < 0 || jj >= grid.h ||
                                kk < 0 || kk >= grid.d)
                                continue;
                            if (grid.at(ii, jj, kk) > v) is_max = false;
                        }
                if (!is_max) continue;
                Point3 p{static_cast<double>(i), static_cast<double>(j),
                         static_cast<double>(k)};
                if (i > 0 && i < grid.w - 1)
                    p.x += refine(grid.at(i - 1, j, k), v, grid.at(i + 1, j, k));
                if (j > 0 && j < grid.h - 1)
                    p.y += refine(grid.at(i, j - 1, k), v, grid.at(i, j + 1, k));
                if (k > 0 && k < grid.d - 1)
                    p.z += refine(grid.at(i, j, k - 1), v, grid.at(i, j, k + 1));
                candidates.push_back({p, v});
            }

    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Peak& a, const Peak& b) { return a.v > b.v; });
    std::vector<Point3> out;
    for (const auto& c : candidates) {
        bool keep = true;
        for (const auto& q : out) {
            const double dx = c.p.x - q.x, dy = c.p.y - q.y, dz = c.p.z - q.z;
            if (std::sqrt(dx * dx + dy * dy + dz * dz) < min_separation) {
                keep = false;
                break;
            }
        }
        if (keep) out.push_back(c.p);
    }
    return out;
}

namespace {

template <typename T>
void write_le(std::ofstream& f, T v) {
    // assumes little-endian host
    f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_le(std::ifstream& f) {
    T v{};
    f.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}

}  // namespace

void save_voxel_grid(const std::string& path, const VoxelGrid& grid) {
    grid.validate();
    std::ofstream f(path, std::ios::binary);
    check_state(f.good(), "cannot open for writing: " + path);
    f.write(kMagic, 4);
    write_le<std::uint32_t>(f, static_cast<std::uint32_t>(grid.w));
    write_le<std::uint32_t>(f, static_cast<std::uint32_t>(grid.h));
    write_le<std::uint32_t>(f, static_cast<std::uint32_t>(grid.d));
    write_le<double>(f, grid.sigma);
    for (double v : grid.values) write_le<float>(f, static_cast<float>(v));
    check_state(f.good(), "write failed: " + path);
}

VoxelGrid load_voxel_grid(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    check_state(f.good(), "cannot open voxel grid file: " + path);
    char magic[4];
    f.read(magic, 4);
    check_state(f.good() && std::memcmp(magic, kMagic, 4) == 0,
                "bad voxel grid magic in " + path);
    VoxelGrid g;
    g.w = static_cast<int>(read_le<std::uint32_t>(f));
    g.h = static_cast<int>(read_le<std::uint32_t>(f));
    g.d = static_cast<int>(read_le<std::uint32_t>(f));
    g.sigma = read_le<double>(f);
    check_state(f.good() && g.w > 0 && g.h > 0 && g.d > 0 && g.sigma > 0,
                "bad voxel grid header in " + path);
    g.values.resize(static_cast<std::size_t>(g.size()));
    for (auto& v : g.values) v = static_cast<double>(read_le<float>(f));
    check_state(f.good(), "truncated voxel grid data in " + path);
    return g;
}

}  // namespace cvr
