#include "cvr/landmarks.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "cvr/tensor.hpp"

namespace cvr {

namespace {

std::vector<int> perm_from_pairs(int n, const std::vector<std::pair<int, int>>& pairs) {
    std::vector<int> p(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = i;
    for (auto [a, b] : pairs) {
        p[static_cast<std::size_t>(a)] = b;
        p[static_cast<std::size_t>(b)] = a;
    }
    return p;
}

// Toy 12-point rig: 0/1 left eye outer/inner, 2/3 right eye inner/outer,
// 4 nose tip, 5/6/7/8 mouth left/top/right/bottom, 9/10/11 jaw left/chin/right.
LandmarkScheme make_toy12() {
    LandmarkScheme s;
    s.id = "toy12";
    s.n = 12;
    s.flip_perm = perm_from_pairs(12, {{0, 3}, {1, 2}, {5, 7}, {9, 11}});
    s.left_eye_outer = 0;
    s.right_eye_outer = 3;
    return s;
}

// Standard 68-point left/right symmetry table.
std::vector<std::pair<int, int>> pairs68() {
    std::vector<std::pair<int, int>> p;
    for (int i = 0; i < 8; ++i) p.emplace_back(i, 16 - i);            // jaw
    for (int i = 0; i < 5; ++i) p.emplace_back(17 + i, 26 - i);      // brows
    p.insert(p.end(), {{31, 35}, {32, 34}});                          // nostrils
    p.insert(p.end(), {{36, 45}, {37, 44}, {38, 43}, {39, 42}, {40, 47}, {41, 46}});  // eyes
    p.insert(p.end(), {{48, 54}, {49, 53}, {50, 52}, {59, 55}, {58, 56}});            // outer mouth
    p.insert(p.end(), {{60, 64}, {61, 63}, {67, 65}});                                // inner mouth
    return p;
}

LandmarkScheme make_ibug68() {
    LandmarkScheme s;
    s.id = "ibug68";
    s.n = 68;
    s.flip_perm = perm_from_pairs(68, pairs68());
    s.left_eye_outer = 36;
    s.right_eye_outer = 45;
    return s;
}

// 66-point variant: the 68-point set without the inner mouth corners (60, 64).
LandmarkScheme make_face66() {
    LandmarkScheme s;
    s.id = "face66";
    s.n = 66;
    // Old-index -> new-index after dropping 60 and 64.
    auto remap = [](int i) { return i < 60 ? i : (i < 64 ? i - 1 : i - 2); };
    std::vector<std::pair<int, int>> p;
    for (auto [a, b] : pairs68())
        if (a != 60 && b != 60 && a != 64 && b != 64)
            p.emplace_back(remap(a), remap(b));
    s.flip_perm = perm_from_pairs(66, p);
    s.left_eye_outer = 36;
    s.right_eye_outer = 45;
    return s;
}

const std::map<std::string, LandmarkScheme>& registry() {
    static const std::map<std::string, LandmarkScheme> reg = {
        {"toy12", make_toy12()},
        {"ibug68", make_ibug68()},
        {"face66", make_face66()},
    };
    return reg;
}

}  // namespace

void LandmarkSet::validate() const {
    check_arg(!points.empty(), "landmark set is empty");
    for (const auto& p : points)
        check_arg(std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z),
                  "landmark set contains non-finite coordinates");
    if (scheme_registered(scheme_id))
        check_arg(count() == scheme_registry(scheme_id).n,
                  "landmark count does not match scheme " + scheme_id);
}

bool scheme_registered(const std::string& id) { return registry().count(id) > 0; }

const LandmarkScheme& scheme_registry(const std::string& id) {
    auto it = registry().find(id);
    check_arg(it != registry().end(), "unregistered landmark scheme: " + id);
    return it->second;
}

std::vector<int> flip_remap(const std::string& scheme_id) {
    return scheme_registry(scheme_id).flip_perm;
}

void save_landmarks(const std::string& path, const LandmarkSet& lm) {
    lm.validate();
    std::ofstream f(path);
    check_state(f.good(), "cannot open for writing: " + path);
    f.precision(17);
    if (!lm.scheme_id.empty())
        f << "# scheme=" << lm.scheme_id << " n=" << lm.count() << "\n";
    for (const auto& p : lm.points) f << p.x << " " << p.y << " " << p.z << "\n";
    check_state(f.good(), "write failed: " + path);
}

LandmarkSet load_landmarks(const std::string& path) {
    std::ifstream f(path);
    check_state(f.good(), "cannot open landmark file: " + path);
    LandmarkSet lm;
    int declared_n = -1;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream hs(line.substr(1));
            std::string tok;
            while (hs >> tok) {
                if (tok.rfind("scheme=", 0) == 0) lm.scheme_id = tok.substr(7);
                if (tok.rfind("n=", 0) == 0) declared_n = std::stoi(tok.substr(2));
            }
            continue;
        }
        std::istringstream ls(line);
        Point3 p;
        if (!(ls >> p.x >> p.y >> p.z))
            throw std::runtime_error("malformed landmark line in " + path + ": " + line);
        lm.points.push_back(p);
    }
    if (declared_n >= 0 && declared_n != lm.count())
        throw std::runtime_error("landmark count mismatch in " + path);
    lm.validate();
    return lm;
}

}  // namespace cvr
