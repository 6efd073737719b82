#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>

#include "sentcomp/model.hpp"

namespace sentcomp {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Checkpoint {
  ModelConfig config;
  ModelParams params;
};

// Layout (little-endian): "SCMP", u32 version = 1, u32 header length, UTF-8 JSON
// header {"config": {...}, "tensors": [{"name", "shape"}...]}, then the float32
// payload of each tensor in manifest order.
void save_checkpoint(const ModelParams& params, const ModelConfig& config, std::ostream& out);

/// Writes to a sibling temporary file and renames it into place.
void save_checkpoint(const ModelParams& params, const ModelConfig& config,
                     const std::filesystem::path& path);

/// Validates magic, version, manifest against the config, and payload length
/// before returning; nothing partial escapes on failure.
Checkpoint load_checkpoint(std::istream& in);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace sentcomp
