#pragma once

#include <map>
#include <string>

namespace mixdecon {

// Parsed `name(key=value, ...)` specification used for models and targets.
struct SpecString {
    std::string name;
    std::map<std::string, double> params;

    static SpecString parse(const std::string& text);
    double get(const std::string& key, double fallback) const;
    bool has(const std::string& key) const { return params.count(key) != 0; }
    // Reject keys outside `allowed` (comma-separated list).
    void allow_only(const std::string& allowed) const;
    std::string str() const;
};

}  // namespace mixdecon
