#pragma once

// Dataset container: a directory holding manifest.txt (ASCII key=value) and
// one binary array file per named array. The manifest carries the metadata
// (seed, grid geometry, split sizes, config echo), an `array.<name>` file
// reference for every array, and a `shape.<name>` cross-check so a loaded
// directory is validated end to end.

#include <string>
#include <vector>

#include "fg2/checkpoint.hpp"
#include "fg2/config.hpp"

namespace fg2 {

struct Container {
    KvMap manifest;
    std::vector<ArrayData> arrays; // insertion order; names unique

    void add(ArrayData a);
    const ArrayData* find(const std::string& name) const;
    const ArrayData& at(const std::string& name) const;

    MatF matf(const std::string& name) const;
    MatD matd(const std::string& name) const;
    std::vector<double> vecd(const std::string& name) const;
    std::vector<int32_t> veci(const std::string& name) const;
};

// Writes dir/manifest.txt plus <name>.f2gb per array, recording array.* and
// shape.* manifest keys. The directory is created if needed; existing files
// are overwritten, so regeneration with identical content is byte-identical.
void save_container(const Container& c, const std::string& dir);

// Loads the manifest and every referenced array; throws DataError on missing
// files, unreferenced shapes, or shape mismatches.
Container load_container(const std::string& dir);

} // namespace fg2
