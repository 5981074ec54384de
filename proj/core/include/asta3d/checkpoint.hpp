#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "asta3d/nn.hpp"

namespace asta3d {

/// Checkpoint layout (all integers and floats little-endian):
///
///   "ASTA3D-CKPT-1"            13-byte magic
///   u64 manifest_length
///   manifest                   JSON text: {"format", "network", "metadata",
///                              "entries": [{name, shape, dtype, offset, trainable}]}
///   blob                       raw float64 values; entry offsets are byte
///                              offsets from the start of the blob
inline constexpr std::string_view kCheckpointMagic = "ASTA3D-CKPT-1";

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CheckpointEntry {
  std::string name;
  Shape shape;
  bool trainable = true;
  std::vector<double> values;
};

struct Checkpoint {
  std::string network_json;   // serialized NetworkSpec
  std::string metadata_json;  // free-form object, "{}" when absent
  std::vector<CheckpointEntry> entries;
};

Checkpoint capture_checkpoint(const ParameterRegistry& registry, std::string network_json,
                              std::string metadata_json = "{}");
void write_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Copies values into a registry. Names, shapes and entry count must match exactly.
void load_into(const Checkpoint& checkpoint, ParameterRegistry& registry);

/// Git-style object id: SHA-1 over "blob <size>\0" followed by the file bytes.
std::string content_hash(const std::filesystem::path& path);

}  // namespace asta3d
