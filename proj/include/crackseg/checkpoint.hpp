#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "crackseg/network.hpp"

namespace crackseg {

/// Flat archive of named float32 tensors plus the model configuration as JSON text.
///
/// Layout (all integers uint32 little-endian):
///   "CRKW" | version (1) | config length | config bytes (UTF-8 JSON) | tensor count |
///   per tensor: name length | name bytes | ndim | dims... | float32 values (little-endian)
class WeightArchive {
public:
    struct Entry {
        std::string name;
        std::vector<std::uint32_t> shape;
        std::vector<float> values;
    };

    std::string config_json;
    std::vector<Entry> entries;

    const Entry* find(const std::string& name) const;

    template <typename T>
    static WeightArchive from_model(const nn::Model<T>& model);

    void save(const std::filesystem::path& path) const;
    static WeightArchive load(const std::filesystem::path& path);
};

/// Overwrites every parameter and buffer whose name starts with `prefix` from the archive.
/// Throws ArchiveError naming the first model tensor that is missing or has another shape.
template <typename T>
void load_weights(nn::Model<T>& model, const WeightArchive& archive, const std::string& prefix = "");

void save_checkpoint(const std::filesystem::path& path, const Model& model);
/// Rebuilds the model from the embedded configuration and loads all weights.
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace crackseg
