#include "asta3d/checkpoint.hpp"

#include <fstream>
#include <iomanip>
#include <iterator>
#include <sstream>

#include <openssl/evp.h>

#include "byte_io.hpp"
#include "json.hpp"

namespace asta3d {

using json = nlohmann::ordered_json;

Checkpoint capture_checkpoint(const ParameterRegistry& registry, std::string network_json,
                              std::string metadata_json) {
  Checkpoint ckpt;
  ckpt.network_json = std::move(network_json);
  ckpt.metadata_json = std::move(metadata_json);
  for (const auto& e : registry.entries()) {
    ckpt.entries.push_back({e.name, e.tensor.shape(), e.trainable,
                            std::vector<double>(e.tensor.data().begin(), e.tensor.data().end())});
  }
  return ckpt;
}

void write_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  json manifest;
  manifest["format"] = std::string(kCheckpointMagic);
  manifest["network"] = json::parse(checkpoint.network_json.empty() ? "{}" : checkpoint.network_json);
  manifest["metadata"] = json::parse(checkpoint.metadata_json.empty() ? "{}" : checkpoint.metadata_json);
  json entries = json::array();
  std::uint64_t offset = 0;
  for (const auto& e : checkpoint.entries) {
    if (shape_numel(e.shape) != e.values.size()) {
      throw CheckpointError("entry '" + e.name + "' shape does not match its value count");
    }
    entries.push_back({{"name", e.name},
                       {"shape", e.shape},
                       {"dtype", "float64"},
                       {"offset", offset},
                       {"trainable", e.trainable}});
    offset += 8 * e.values.size();
  }
  manifest["entries"] = std::move(entries);
  const std::string text = manifest.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open checkpoint for writing: " + path.string());
  out.write(kCheckpointMagic.data(), static_cast<std::streamsize>(kCheckpointMagic.size()));
  detail::write_u64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& e : checkpoint.entries) {
    for (double v : e.values) detail::write_f64(out, v);
  }
  if (!out) throw CheckpointError("failed writing checkpoint: " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path.string());
  std::string magic(kCheckpointMagic.size(), '\0');
  if (!detail::read_exact(in, magic.data(), magic.size()) || magic != kCheckpointMagic) {
    throw CheckpointError("not an ASTA3D checkpoint (bad magic): " + path.string());
  }
  unsigned char len_bytes[8];
  if (!detail::read_exact(in, reinterpret_cast<char*>(len_bytes), 8)) {
    throw CheckpointError("truncated checkpoint header: " + path.string());
  }
  const std::uint64_t manifest_len = detail::decode_u64(len_bytes);
  std::string text(manifest_len, '\0');
  if (!detail::read_exact(in, text.data(), text.size())) {
    throw CheckpointError("truncated checkpoint manifest: " + path.string());
  }
  const std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  json manifest;
  try {
    manifest = json::parse(text);
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint manifest: ") + e.what());
  }

  Checkpoint ckpt;
  ckpt.network_json = manifest.value("network", json::object()).dump();
  ckpt.metadata_json = manifest.value("metadata", json::object()).dump();
  for (const auto& e : manifest.at("entries")) {
    CheckpointEntry entry;
    entry.name = e.at("name").get<std::string>();
    entry.shape = e.at("shape").get<Shape>();
    entry.trainable = e.value("trainable", true);
    if (e.at("dtype").get<std::string>() != "float64") {
      throw CheckpointError("unsupported dtype for '" + entry.name + "'");
    }
    const auto offset = e.at("offset").get<std::uint64_t>();
    const std::size_t count = shape_numel(entry.shape);
    if (offset + 8 * count > blob.size()) {
      throw CheckpointError("checkpoint data truncated at entry '" + entry.name + "'");
    }
    entry.values.resize(count);
    const auto* bytes = reinterpret_cast<const unsigned char*>(blob.data()) + offset;
    for (std::size_t i = 0; i < count; ++i) entry.values[i] = detail::decode_f64(bytes + 8 * i);
    ckpt.entries.push_back(std::move(entry));
  }
  return ckpt;
}

void load_into(const Checkpoint& checkpoint, ParameterRegistry& registry) {
  const auto& entries = registry.entries();
  if (entries.size() != checkpoint.entries.size()) {
    throw CheckpointError("checkpoint has " + std::to_string(checkpoint.entries.size()) +
                          " entries, model expects " + std::to_string(entries.size()));
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& src = checkpoint.entries[i];
    const auto& dst = entries[i];
    if (src.name != dst.name || src.shape != dst.tensor.shape()) {
      throw CheckpointError("checkpoint entry '" + src.name + "' " + to_string(src.shape) +
                            " does not match model entry '" + dst.name + "' " + to_string(dst.tensor.shape()));
    }
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    Tensor t = entries[i].tensor;
    auto out = t.mutable_data();
    std::copy(checkpoint.entries[i].values.begin(), checkpoint.entries[i].values.end(), out.begin());
  }
}

std::string content_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open for hashing: " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string header = "blob " + std::to_string(bytes.size()) + std::string(1, '\0');

  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int digest_len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr);
  EVP_DigestUpdate(ctx, header.data(), header.size());
  EVP_DigestUpdate(ctx, bytes.data(), bytes.size());
  EVP_DigestFinal_ex(ctx, digest, &digest_len);
  EVP_MD_CTX_free(ctx);

  std::ostringstream hex;
  for (unsigned int i = 0; i < digest_len; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return hex.str();
}

}  // namespace asta3d
