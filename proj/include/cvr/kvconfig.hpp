#ifndef CVR_KVCONFIG_HPP_
#define CVR_KVCONFIG_HPP_

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cvr/tensor.hpp"

namespace cvr {

// Flat "key = value" text config; '#' starts a comment.
using KvMap = std::map<std::string, std::string>;

inline std::string kv_trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline KvMap parse_kv_text(const std::string& text) {
    KvMap kv;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = kv_trim(line.substr(0, eq));
        const std::string val = kv_trim(line.substr(eq + 1));
        if (!key.empty()) kv[key] = val;
    }
    return kv;
}

inline std::string kv_get(const KvMap& kv, const std::string& key,
                          const std::string& fallback) {
    auto it = kv.find(key);
    return it == kv.end() ? fallback : it->second;
}

inline int kv_int(const KvMap& kv, const std::string& key, int fallback) {
    auto it = kv.find(key);
    return it == kv.end() ? fallback : std::stoi(it->second);
}

inline double kv_double(const KvMap& kv, const std::string& key, double fallback) {
    auto it = kv.find(key);
    return it == kv.end() ? fallback : std::stod(it->second);
}

inline bool kv_bool(const KvMap& kv, const std::string& key, bool fallback) {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    check_arg(it->second == "true" || it->second == "false" ||
              it->second == "1" || it->second == "0",
              "bad boolean for " + key);
    return it->second == "true" || it->second == "1";
}

inline std::vector<int> kv_int_list(const KvMap& kv, const std::string& key,
                                    std::vector<int> fallback) {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    std::vector<int> out;
    std::istringstream is(it->second);
    std::string tok;
    while (std::getline(is, tok, ',')) {
        tok = kv_trim(tok);
        if (!tok.empty()) out.push_back(std::stoi(tok));
    }
    return out;
}

inline std::string int_list_str(const std::vector<int>& v) {
    std::ostringstream os;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) os << ",";
        os << v[i];
    }
    return os.str();
}

}  // namespace cvr

#endif  // CVR_KVCONFIG_HPP_
