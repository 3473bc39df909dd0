#pragma once

// Binary persistence.
//
// Checkpoint file ("FG2C"): magic, u32 version, u32 entry count, then per
// entry {u32 name length, name bytes, u32 dtype (0 = f32, 1 = f64), u32 rank,
// u64 dims[rank], little-endian payload}, closed by a CRC-32 of everything
// before it. Array files inside dataset containers ("F2GB") carry a single
// unnamed array with the same envelope (dtype additionally allows 2 = i32).

#include <cstdint>
#include <string>
#include <vector>

#include "fg2/mat.hpp"

namespace fg2 {

// CRC-32 (IEEE 802.3, reflected polynomial 0xEDB88320).
uint32_t crc32(const void* data, size_t n, uint32_t crc = 0);

struct ArrayData {
    std::string name;
    int dtype = 0; // 0 = f32, 1 = f64, 2 = i32
    std::vector<size_t> dims;
    std::vector<float> f32;
    std::vector<double> f64;
    std::vector<int32_t> i32;

    size_t count() const {
        size_t n = 1;
        for (size_t d : dims) n *= d;
        return n;
    }

    static ArrayData of_f32(std::string name, std::vector<size_t> dims, std::vector<float> v);
    static ArrayData of_f64(std::string name, std::vector<size_t> dims, std::vector<double> v);
    static ArrayData of_i32(std::string name, std::vector<size_t> dims, std::vector<int32_t> v);
};

struct Checkpoint {
    std::vector<ArrayData> entries; // insertion order is preserved on disk

    void add(ArrayData a);
    const ArrayData* find(const std::string& name) const;
    const ArrayData& at(const std::string& name) const;

    // Typed helpers layered on the entries.
    void add_params(const std::string& prefix, const ParamSet<float>& p);
    ParamSet<float> params(const std::string& prefix) const;
    void add_matd(const std::string& name, const MatD& m);
    MatD matd(const std::string& name) const;
    void add_matf(const std::string& name, const MatF& m);
    MatF matf(const std::string& name) const;
    void add_vecd(const std::string& name, const std::vector<double>& v);
    std::vector<double> vecd(const std::string& name) const;
    // Config echo: ASCII text stored as an f32 code array (dtype set is
    // deliberately minimal).
    void add_text(const std::string& name, const std::string& text);
    std::string text(const std::string& name) const;
    void add_scalar(const std::string& name, double v);
    double scalar(const std::string& name) const;
};

void save_checkpoint(const Checkpoint& c, const std::string& path);
Checkpoint load_checkpoint(const std::string& path); // throws DataError on any corruption

// Single-array container files.
void write_array_file(const std::string& path, const ArrayData& a);
ArrayData read_array_file(const std::string& path);

} // namespace fg2
