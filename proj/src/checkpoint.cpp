#include "fg2/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

static_assert(std::endian::native == std::endian::little,
              "persistence assumes a little-endian host");

namespace fg2 {

uint32_t crc32(const void* data, size_t n, uint32_t crc) {
    static const auto table = [] {
        std::array<uint32_t, 256> t{};
        for (uint32_t i = 0; i < 256; ++i) {
            uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    const auto* p = static_cast<const uint8_t*>(data);
    crc = ~crc;
    for (size_t i = 0; i < n; ++i) crc = table[(crc ^ p[i]) & 0xFF] ^ (crc >> 8);
    return ~crc;
}

ArrayData ArrayData::of_f32(std::string name, std::vector<size_t> dims, std::vector<float> v) {
    ArrayData a;
    a.name = std::move(name);
    a.dtype = 0;
    a.dims = std::move(dims);
    a.f32 = std::move(v);
    require(a.count() == a.f32.size(), "array " + a.name + ": dims do not match payload");
    return a;
}

ArrayData ArrayData::of_f64(std::string name, std::vector<size_t> dims, std::vector<double> v) {
    ArrayData a;
    a.name = std::move(name);
    a.dtype = 1;
    a.dims = std::move(dims);
    a.f64 = std::move(v);
    require(a.count() == a.f64.size(), "array " + a.name + ": dims do not match payload");
    return a;
}

ArrayData ArrayData::of_i32(std::string name, std::vector<size_t> dims, std::vector<int32_t> v) {
    ArrayData a;
    a.name = std::move(name);
    a.dtype = 2;
    a.dims = std::move(dims);
    a.i32 = std::move(v);
    require(a.count() == a.i32.size(), "array " + a.name + ": dims do not match payload");
    return a;
}

void Checkpoint::add(ArrayData a) {
    require(a.dtype == 0 || a.dtype == 1, "checkpoint: dtype must be f32 or f64");
    require(find(a.name) == nullptr, "checkpoint: duplicate entry " + a.name);
    entries.push_back(std::move(a));
}

const ArrayData* Checkpoint::find(const std::string& name) const {
    for (const auto& e : entries)
        if (e.name == name) return &e;
    return nullptr;
}

const ArrayData& Checkpoint::at(const std::string& name) const {
    const ArrayData* a = find(name);
    if (!a) throw DataError("checkpoint: missing entry " + name);
    return *a;
}

void Checkpoint::add_params(const std::string& prefix, const ParamSet<float>& p) {
    for (size_t i = 0; i < p.count(); ++i)
        add(ArrayData::of_f32(prefix + p.names[i], p.tensors[i].dims, p.tensors[i].v));
}

ParamSet<float> Checkpoint::params(const std::string& prefix) const {
    ParamSet<float> p;
    for (const auto& e : entries) {
        if (e.name.rfind(prefix, 0) != 0) continue;
        require(e.dtype == 0, "checkpoint: parameter " + e.name + " is not f32");
        p.names.push_back(e.name.substr(prefix.size()));
        Tensor<float> t(e.dims);
        t.v = e.f32;
        p.tensors.push_back(std::move(t));
    }
    require(p.count() > 0, "checkpoint: no parameters under prefix " + prefix);
    return p;
}

void Checkpoint::add_matd(const std::string& name, const MatD& m) {
    add(ArrayData::of_f64(name, {m.rows, m.cols}, m.v));
}

MatD Checkpoint::matd(const std::string& name) const {
    const ArrayData& a = at(name);
    require(a.dtype == 1 && a.dims.size() == 2, "checkpoint: " + name + " is not an f64 matrix");
    MatD m(a.dims[0], a.dims[1]);
    m.v = a.f64;
    return m;
}

void Checkpoint::add_matf(const std::string& name, const MatF& m) {
    add(ArrayData::of_f32(name, {m.rows, m.cols}, m.v));
}

MatF Checkpoint::matf(const std::string& name) const {
    const ArrayData& a = at(name);
    require(a.dtype == 0 && a.dims.size() == 2, "checkpoint: " + name + " is not an f32 matrix");
    MatF m(a.dims[0], a.dims[1]);
    m.v = a.f32;
    return m;
}

void Checkpoint::add_vecd(const std::string& name, const std::vector<double>& v) {
    add(ArrayData::of_f64(name, {v.size()}, v));
}

std::vector<double> Checkpoint::vecd(const std::string& name) const {
    const ArrayData& a = at(name);
    require(a.dtype == 1 && a.dims.size() == 1, "checkpoint: " + name + " is not an f64 vector");
    return a.f64;
}

void Checkpoint::add_text(const std::string& name, const std::string& text) {
    std::vector<float> codes(text.size());
    for (size_t i = 0; i < text.size(); ++i) codes[i] = float((unsigned char)text[i]);
    add(ArrayData::of_f32(name, {text.size()}, std::move(codes)));
}

std::string Checkpoint::text(const std::string& name) const {
    const ArrayData& a = at(name);
    require(a.dtype == 0 && a.dims.size() == 1, "checkpoint: " + name + " is not a text entry");
    std::string s(a.f32.size(), '\0');
    for (size_t i = 0; i < a.f32.size(); ++i) s[i] = char((unsigned char)a.f32[i]);
    return s;
}

void Checkpoint::add_scalar(const std::string& name, double v) { add_vecd(name, {v}); }

double Checkpoint::scalar(const std::string& name) const {
    const auto v = vecd(name);
    require(v.size() == 1, "checkpoint: " + name + " is not a scalar");
    return v[0];
}

namespace {

constexpr uint32_t kCheckpointVersion = 1;
constexpr uint32_t kArrayVersion = 1;

struct ByteSink {
    std::vector<uint8_t> bytes;
    void raw(const void* p, size_t n) {
        const auto* b = static_cast<const uint8_t*>(p);
        bytes.insert(bytes.end(), b, b + n);
    }
    void u32(uint32_t v) { raw(&v, 4); }
    void u64(uint64_t v) { raw(&v, 8); }
};

struct ByteSource {
    const uint8_t* p;
    size_t left;
    void raw(void* out, size_t n) {
        if (n > left) throw DataError("persistence: truncated file");
        std::memcpy(out, p, n);
        p += n;
        left -= n;
    }
    uint32_t u32() {
        uint32_t v;
        raw(&v, 4);
        return v;
    }
    uint64_t u64() {
        uint64_t v;
        raw(&v, 8);
        return v;
    }
};

void append_array_body(ByteSink& s, const ArrayData& a, bool with_name) {
    if (with_name) {
        s.u32(uint32_t(a.name.size()));
        s.raw(a.name.data(), a.name.size());
    }
    s.u32(uint32_t(a.dtype));
    s.u32(uint32_t(a.dims.size()));
    for (size_t d : a.dims) s.u64(d);
    switch (a.dtype) {
        case 0: s.raw(a.f32.data(), a.f32.size() * 4); break;
        case 1: s.raw(a.f64.data(), a.f64.size() * 8); break;
        case 2: s.raw(a.i32.data(), a.i32.size() * 4); break;
        default: throw Error("persistence: bad dtype");
    }
}

ArrayData parse_array_body(ByteSource& s, bool with_name) {
    ArrayData a;
    if (with_name) {
        const uint32_t nl = s.u32();
        require(nl <= 4096, "persistence: implausible name length");
        a.name.resize(nl);
        s.raw(a.name.data(), nl);
    }
    a.dtype = int(s.u32());
    require(a.dtype >= 0 && a.dtype <= 2, "persistence: unknown dtype code");
    const uint32_t rank = s.u32();
    require(rank <= 8, "persistence: implausible rank");
    a.dims.resize(rank);
    for (auto& d : a.dims) d = size_t(s.u64());
    const size_t n = a.count();
    require(n <= (size_t(1) << 34), "persistence: implausible element count");
    switch (a.dtype) {
        case 0: a.f32.resize(n); s.raw(a.f32.data(), n * 4); break;
        case 1: a.f64.resize(n); s.raw(a.f64.data(), n * 8); break;
        case 2: a.i32.resize(n); s.raw(a.i32.data(), n * 4); break;
    }
    return a;
}

void write_file_with_crc(const std::string& path, ByteSink& s) {
    const uint32_t crc = crc32(s.bytes.data(), s.bytes.size());
    s.u32(crc);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("persistence: cannot write " + path);
    out.write(reinterpret_cast<const char*>(s.bytes.data()), std::streamsize(s.bytes.size()));
    if (!out) throw DataError("persistence: write failed for " + path);
}

std::vector<uint8_t> read_file_checked(const std::string& path, const char magic[4]) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("persistence: cannot open " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    require(bytes.size() >= 8, "persistence: file too short: " + path);
    require(std::memcmp(bytes.data(), magic, 4) == 0, "persistence: bad magic in " + path);
    uint32_t stored;
    std::memcpy(&stored, bytes.data() + bytes.size() - 4, 4);
    const uint32_t actual = crc32(bytes.data(), bytes.size() - 4);
    require(stored == actual, "persistence: CRC mismatch in " + path);
    bytes.resize(bytes.size() - 4);
    return bytes;
}

} // namespace

void save_checkpoint(const Checkpoint& c, const std::string& path) {
    ByteSink s;
    s.raw("FG2C", 4);
    s.u32(kCheckpointVersion);
    s.u32(uint32_t(c.entries.size()));
    for (const auto& e : c.entries) {
        require(e.dtype == 0 || e.dtype == 1, "checkpoint: dtype must be f32 or f64");
        append_array_body(s, e, true);
    }
    write_file_with_crc(path, s);
}

Checkpoint load_checkpoint(const std::string& path) {
    const std::vector<uint8_t> bytes = read_file_checked(path, "FG2C");
    ByteSource s{bytes.data() + 4, bytes.size() - 4};
    const uint32_t version = s.u32();
    require(version == kCheckpointVersion, "checkpoint: unsupported version");
    const uint32_t count = s.u32();
    Checkpoint c;
    for (uint32_t i = 0; i < count; ++i) c.add(parse_array_body(s, true));
    require(s.left == 0, "checkpoint: trailing bytes");
    return c;
}

void write_array_file(const std::string& path, const ArrayData& a) {
    ByteSink s;
    s.raw("F2GB", 4);
    s.u32(kArrayVersion);
    append_array_body(s, a, false);
    write_file_with_crc(path, s);
}

ArrayData read_array_file(const std::string& path) {
    const std::vector<uint8_t> bytes = read_file_checked(path, "F2GB");
    ByteSource s{bytes.data() + 4, bytes.size() - 4};
    const uint32_t version = s.u32();
    require(version == kArrayVersion, "array file: unsupported version");
    ArrayData a = parse_array_body(s, false);
    require(s.left == 0, "array file: trailing bytes");
    return a;
}

} // namespace fg2
