#ifndef CVR_LANDMARKS_HPP_
#define CVR_LANDMARKS_HPP_

#include <array>
#include <string>
#include <vector>

namespace cvr {

struct Point3 {
    double x = 0.0, y = 0.0, z = 0.0;
};

// Ordered landmark positions plus the ordering scheme they follow.
struct LandmarkSet {
    std::vector<Point3> points;
    std::string scheme_id;

    int count() const { return static_cast<int>(points.size()); }
    void validate() const;  // non-empty, finite, count matches scheme if known
};

// Per-scheme metadata: left/right flip permutation and eye-corner indices.
struct LandmarkScheme {
    std::string id;
    int n = 0;
    std::vector<int> flip_perm;  // involutive
    int left_eye_outer = -1;
    int right_eye_outer = -1;
};

const LandmarkScheme& scheme_registry(const std::string& id);
bool scheme_registered(const std::string& id);

// Involutive flip permutation for a registered scheme.
std::vector<int> flip_remap(const std::string& scheme_id);

// Plain-text landmark file: one "x y z" line per landmark, optional
// "# scheme=<id> n=<N>" header.
void save_landmarks(const std::string& path, const LandmarkSet& lm);
LandmarkSet load_landmarks(const std::string& path);

}  // namespace cvr

#endif  // CVR_LANDMARKS_HPP_
