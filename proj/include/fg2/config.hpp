#pragma once

// ASCII key=value configuration documents: parsing, deterministic (sorted)
// serialization, and typed accessors. Used for config files, dataset
// manifests, and metric reports.

#include <map>
#include <string>

#include "fg2/mat.hpp"

namespace fg2 {

using KvMap = std::map<std::string, std::string>;

// Lines of `key=value`; blank lines and lines starting with '#' are skipped;
// whitespace around the key and value is trimmed.
KvMap parse_kv_text(const std::string& text);
std::string serialize_kv(const KvMap& kv);

KvMap load_kv_file(const std::string& path);
void save_kv_file(const KvMap& kv, const std::string& path);

const std::string& kv_get(const KvMap& kv, const std::string& key);
std::string kv_get_or(const KvMap& kv, const std::string& key, const std::string& fallback);
double kv_get_double(const KvMap& kv, const std::string& key, double fallback);
long long kv_get_int(const KvMap& kv, const std::string& key, long long fallback);

// Canonical double formatting with round-trip precision.
std::string format_double(double x);

} // namespace fg2
