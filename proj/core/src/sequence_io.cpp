#include "asta3d/sequence_io.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include "byte_io.hpp"

namespace asta3d {

using Kind = SequenceFormatError::Kind;

std::string encode_sequence(const PointCloudSequence& seq, TaskTag tag) {
  seq.validate();
  const auto limit = std::numeric_limits<std::uint32_t>::max();
  if (seq.frame_count > limit || seq.points_per_frame > limit || seq.feature_dim > limit) {
    throw SequenceFormatError(Kind::bad_header, "sequence dimensions exceed the u32 header fields");
  }
  std::ostringstream out(std::ios::binary);
  out.write(kSequenceMagic.data(), static_cast<std::streamsize>(kSequenceMagic.size()));
  detail::write_u32(out, static_cast<std::uint32_t>(seq.frame_count));
  detail::write_u32(out, static_cast<std::uint32_t>(seq.points_per_frame));
  detail::write_u32(out, static_cast<std::uint32_t>(seq.feature_dim));
  out.put(seq.has_labels() ? 1 : 0);
  out.put(static_cast<char>(tag));
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const auto& p = seq.positions[i];
    detail::write_f64(out, p.x);
    detail::write_f64(out, p.y);
    detail::write_f64(out, p.z);
    detail::write_f64(out, static_cast<double>(seq.timestamps[i]));
    for (double f : seq.feature(i)) detail::write_f64(out, f);
    if (seq.has_labels()) detail::write_f64(out, static_cast<double>(seq.labels[i]));
  }
  return std::move(out).str();
}

namespace {

bool is_small_integer(double v) {
  return std::isfinite(v) && v >= 0.0 && v < 2147483648.0 && std::floor(v) == v;
}

}  // namespace

PointCloudSequence decode_sequence(std::string_view bytes, TaskTag* tag) {
  if (bytes.size() < kSequenceMagic.size() || bytes.substr(0, kSequenceMagic.size()) != kSequenceMagic) {
    throw SequenceFormatError(Kind::bad_magic, "not an ASTA3D sequence file (bad magic)");
  }
  if (bytes.size() < kSequenceHeaderBytes) throw SequenceFormatError(Kind::truncated, "truncated sequence header");
  const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data());
  PointCloudSequence seq;
  seq.frame_count = detail::decode_u32(raw + 12);
  seq.points_per_frame = detail::decode_u32(raw + 16);
  seq.feature_dim = detail::decode_u32(raw + 20);
  const unsigned has_labels = raw[24];
  const unsigned task = raw[25];
  if (seq.frame_count == 0 || seq.points_per_frame == 0) {
    throw SequenceFormatError(Kind::bad_header, "frame_count and points_per_frame must be positive");
  }
  if (has_labels > 1) throw SequenceFormatError(Kind::bad_header, "has_labels flag must be 0 or 1");
  if (task > 2) throw SequenceFormatError(Kind::bad_header, "unknown task tag " + std::to_string(task));
  if (tag != nullptr) *tag = static_cast<TaskTag>(task);

  const std::size_t n = seq.frame_count * seq.points_per_frame;
  const std::size_t record = 4 + seq.feature_dim + has_labels;
  const std::size_t expected = kSequenceHeaderBytes + 8 * n * record;
  if (bytes.size() < expected) {
    throw SequenceFormatError(Kind::truncated, "sequence body holds " + std::to_string(bytes.size()) +
                                                   " bytes, header implies " + std::to_string(expected));
  }
  if (bytes.size() > expected) {
    throw SequenceFormatError(Kind::trailing_data, "sequence body is " + std::to_string(bytes.size() - expected) +
                                                       " bytes longer than the header implies");
  }

  seq.positions.resize(n);
  seq.timestamps.resize(n);
  seq.features.resize(n * seq.feature_dim);
  if (has_labels) seq.labels.resize(n);
  const unsigned char* p = raw + kSequenceHeaderBytes;
  for (std::size_t i = 0; i < n; ++i) {
    seq.positions[i] = {detail::decode_f64(p), detail::decode_f64(p + 8), detail::decode_f64(p + 16)};
    const double t = detail::decode_f64(p + 24);
    if (!is_small_integer(t) || t >= static_cast<double>(seq.frame_count)) {
      throw SequenceFormatError(Kind::bad_timestamp, "point " + std::to_string(i) + " has timestamp " +
                                                         std::to_string(t) + ", expected an integer frame index");
    }
    seq.timestamps[i] = static_cast<int>(t);
    p += 32;
    for (std::size_t c = 0; c < seq.feature_dim; ++c, p += 8) seq.features[i * seq.feature_dim + c] = detail::decode_f64(p);
    if (has_labels) {
      const double label = detail::decode_f64(p);
      if (!is_small_integer(label)) {
        throw SequenceFormatError(Kind::bad_label, "point " + std::to_string(i) + " has non-integer label");
      }
      seq.labels[i] = static_cast<int>(label);
      p += 8;
    }
  }
  try {
    seq.validate();
  } catch (const SequenceError& e) {
    throw SequenceFormatError(Kind::bad_header, e.what());
  }
  return seq;
}

void write_sequence(const PointCloudSequence& seq, const std::filesystem::path& path, TaskTag tag) {
  const std::string bytes = encode_sequence(seq, tag);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw SequenceFormatError(Kind::io, "cannot open for writing: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw SequenceFormatError(Kind::io, "failed writing " + path.string());
}

PointCloudSequence read_sequence(const std::filesystem::path& path, TaskTag* tag) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SequenceFormatError(Kind::io, "cannot open sequence file: " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_sequence(bytes, tag);
}

}  // namespace asta3d
