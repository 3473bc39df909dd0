#include "fg2/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace fg2 {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

} // namespace

KvMap parse_kv_text(const std::string& text) {
    KvMap kv;
    std::istringstream in(text);
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const size_t eq = t.find('=');
        require(eq != std::string::npos && eq > 0,
                "config: line " + std::to_string(lineno) + " is not key=value: " + t);
        kv[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
    }
    return kv;
}

std::string serialize_kv(const KvMap& kv) {
    std::string out;
    for (const auto& [k, v] : kv) {
        out += k;
        out += '=';
        out += v;
        out += '\n';
    }
    return out;
}

KvMap load_kv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("config: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_kv_text(ss.str());
}

void save_kv_file(const KvMap& kv, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("config: cannot write " + path);
    out << serialize_kv(kv);
    if (!out) throw DataError("config: write failed for " + path);
}

const std::string& kv_get(const KvMap& kv, const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw DataError("config: missing key " + key);
    return it->second;
}

std::string kv_get_or(const KvMap& kv, const std::string& key, const std::string& fallback) {
    auto it = kv.find(key);
    return it == kv.end() ? fallback : it->second;
}

double kv_get_double(const KvMap& kv, const std::string& key, double fallback) {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    try {
        size_t used = 0;
        const double v = std::stod(it->second, &used);
        require(used == it->second.size(), "config: trailing junk in " + key);
        return v;
    } catch (const DataError&) {
        throw;
    } catch (...) {
        throw DataError("config: key " + key + " is not a number: " + it->second);
    }
}

long long kv_get_int(const KvMap& kv, const std::string& key, long long fallback) {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    long long v = 0;
    const auto* b = it->second.data();
    const auto* e = b + it->second.size();
    const auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc{} || res.ptr != e)
        throw DataError("config: key " + key + " is not an integer: " + it->second);
    return v;
}

std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

} // namespace fg2
