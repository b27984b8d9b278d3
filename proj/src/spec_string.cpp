#include "mixdecon/spec_string.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <set>
#include <sstream>

#include "mixdecon/errors.hpp"

namespace mixdecon {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

}  // namespace

SpecString SpecString::parse(const std::string& text) {
    SpecString out;
    const std::string t = trim(text);
    const auto open = t.find('(');
    if (open == std::string::npos) {
        out.name = t;
    } else {
        if (t.back() != ')') throw DomainError("malformed specification '" + text + "'");
        out.name = trim(t.substr(0, open));
        std::stringstream body(t.substr(open + 1, t.size() - open - 2));
        std::string item;
        while (std::getline(body, item, ',')) {
            item = trim(item);
            if (item.empty()) continue;
            const auto eq = item.find('=');
            if (eq == std::string::npos)
                throw DomainError("specification parameter '" + item + "' lacks '='");
            const std::string key = trim(item.substr(0, eq));
            const std::string val = trim(item.substr(eq + 1));
            try {
                std::size_t used = 0;
                const double v = std::stod(val, &used);
                if (used != val.size()) throw std::invalid_argument(val);
                out.params[key] = v;
            } catch (const std::exception&) {
                throw DomainError("specification parameter '" + key + "' is not a number");
            }
        }
    }
    std::transform(out.name.begin(), out.name.end(), out.name.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (out.name.empty()) throw DomainError("empty specification");
    return out;
}

double SpecString::get(const std::string& key, double fallback) const {
    const auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

void SpecString::allow_only(const std::string& allowed) const {
    std::set<std::string> ok;
    std::stringstream ss(allowed);
    std::string k;
    while (std::getline(ss, k, ',')) ok.insert(trim(k));
    for (const auto& [key, v] : params)
        if (!ok.count(key))
            throw DomainError("unknown parameter '" + key + "' for '" + name + "'");
}

std::string SpecString::str() const {
    if (params.empty()) return name;
    std::ostringstream os;
    os << name << '(';
    bool first = true;
    for (const auto& [k, v] : params) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        os << (first ? "" : ",") << k << '=' << buf;
        first = false;
    }
    os << ')';
    return os.str();
}

}  // namespace mixdecon
