#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pfoa/nn/tensor.hpp"

namespace pfoa::io {

/// Parameter checkpoint: <base>.bin holds a magic header plus flat
/// little-endian f32 payload; <base>.json lists name/shape/offset per tensor
/// and carries an opaque caller-provided meta object.
void save_checkpoint(const std::filesystem::path& base,
                     const std::vector<const nn::Parameter*>& params,
                     const std::string& meta_json);

struct LoadedTensor {
    std::string name;
    nn::Shape shape;
    std::vector<double> values;
};

struct LoadedCheckpoint {
    std::vector<LoadedTensor> tensors;
    std::string meta_json;

    const LoadedTensor* find(const std::string& name) const;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& base);

}  // namespace pfoa::io
