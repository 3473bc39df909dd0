#include "fg2/container.hpp"

#include <filesystem>

namespace fg2 {

namespace {

bool valid_array_name(const std::string& s) {
    if (s.empty() || s.size() > 200) return false;
    for (char c : s) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '_' || c == '.' || c == '-';
        if (!ok) return false;
    }
    return true;
}

std::string shape_string(const std::vector<size_t>& dims) {
    std::string s;
    for (size_t i = 0; i < dims.size(); ++i) {
        if (i) s += 'x';
        s += std::to_string(dims[i]);
    }
    return s.empty() ? "scalar" : s;
}

} // namespace

void Container::add(ArrayData a) {
    require(valid_array_name(a.name), "container: bad array name '" + a.name + "'");
    require(find(a.name) == nullptr, "container: duplicate array " + a.name);
    arrays.push_back(std::move(a));
}

const ArrayData* Container::find(const std::string& name) const {
    for (const auto& a : arrays)
        if (a.name == name) return &a;
    return nullptr;
}

const ArrayData& Container::at(const std::string& name) const {
    const ArrayData* a = find(name);
    if (!a) throw DataError("container: missing array " + name);
    return *a;
}

MatF Container::matf(const std::string& name) const {
    const ArrayData& a = at(name);
    require(a.dtype == 0 && a.dims.size() == 2, "container: " + name + " is not an f32 matrix");
    MatF m(a.dims[0], a.dims[1]);
    m.v = a.f32;
    return m;
}

MatD Container::matd(const std::string& name) const {
    const ArrayData& a = at(name);
    require(a.dtype == 1 && a.dims.size() == 2, "container: " + name + " is not an f64 matrix");
    MatD m(a.dims[0], a.dims[1]);
    m.v = a.f64;
    return m;
}

std::vector<double> Container::vecd(const std::string& name) const {
    const ArrayData& a = at(name);
    require(a.dtype == 1 && a.dims.size() == 1, "container: " + name + " is not an f64 vector");
    return a.f64;
}

std::vector<int32_t> Container::veci(const std::string& name) const {
    const ArrayData& a = at(name);
    require(a.dtype == 2 && a.dims.size() == 1, "container: " + name + " is not an i32 vector");
    return a.i32;
}

void save_container(const Container& c, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    KvMap man = c.manifest;
    for (const auto& a : c.arrays) {
        const std::string file = a.name + ".f2gb";
        write_array_file((fs::path(dir) / file).string(), a);
        man["array." + a.name] = file;
        man["shape." + a.name] = shape_string(a.dims);
    }
    save_kv_file(man, (fs::path(dir) / "manifest.txt").string());
}

Container load_container(const std::string& dir) {
    namespace fs = std::filesystem;
    Container c;
    c.manifest = load_kv_file((fs::path(dir) / "manifest.txt").string());
    for (const auto& [key, file] : c.manifest) {
        if (key.rfind("array.", 0) != 0) continue;
        const std::string name = key.substr(6);
        ArrayData a = read_array_file((fs::path(dir) / file).string());
        a.name = name;
        require(shape_string(a.dims) == kv_get_or(c.manifest, "shape." + name, ""),
                "container: shape mismatch for " + name);
        c.add(std::move(a));
    }
    return c;
}

} // namespace fg2
