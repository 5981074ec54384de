#include "asta3d/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "asta3d/sampling.hpp"

namespace asta3d {

std::string to_string(SyntheticTask task) {
  return task == SyntheticTask::motion_classification ? "motion-classification" : "blob-segmentation";
}

SyntheticTask parse_synthetic_task(const std::string& name) {
  if (name == "motion-classification") return SyntheticTask::motion_classification;
  if (name == "blob-segmentation") return SyntheticTask::blob_segmentation;
  throw std::invalid_argument("unknown synthetic task '" + name + "'");
}

namespace {

using Engine = std::mt19937_64;

Vec3 gaussian(Engine& rng, double sigma) {
  if (sigma == 0.0) return {};
  std::normal_distribution<double> n(0.0, sigma);
  const double x = n(rng);
  const double y = n(rng);
  return {x, y, n(rng)};
}

// Rejection-sampled to |value| <= 3 sigma so generated scenes have hard bounds.
double truncated_normal(Engine& rng, double sigma) {
  if (sigma == 0.0) return 0.0;
  std::normal_distribution<double> n(0.0, sigma);
  for (;;) {
    const double v = n(rng);
    if (std::abs(v) <= 3.0 * sigma) return v;
  }
}

Vec3 truncated_gaussian(Engine& rng, double sigma) {
  const double x = truncated_normal(rng, sigma);
  const double y = truncated_normal(rng, sigma);
  return {x, y, truncated_normal(rng, sigma)};
}

void check_common(const SyntheticTaskSpec& spec) {
  if (spec.frames == 0 || spec.points_per_frame == 0) {
    throw std::invalid_argument("synthetic task needs at least one frame and one point per frame");
  }
  if (spec.noise < 0.0) throw std::invalid_argument("noise sigma must be non-negative");
}

Vec3 apply_motion(std::size_t motion, const Vec3& p, double t, double magnitude, const SyntheticTaskSpec& spec) {
  switch (motion) {
    case 0:
      return {p.x, p.y, p.z + t * spec.step * magnitude};
    case 1:
      return {p.x, p.y, p.z - t * spec.step * magnitude};
    case 2:
      return (1.0 + t * spec.expand_rate * magnitude) * p;
    default: {
      const double a = t * spec.angular_step * magnitude;
      const double c = std::cos(a), s = std::sin(a);
      return {c * p.x - s * p.y, s * p.x + c * p.y, p.z};
    }
  }
}

}  // namespace

std::vector<PointCloudSequence> generate_motion_classification(const SyntheticTaskSpec& spec) {
  check_common(spec);
  if (spec.classes < 1 || spec.classes > 4) {
    throw std::invalid_argument("motion classification supports 1 to 4 classes, got " + std::to_string(spec.classes));
  }
  Engine rng(spec.seed);
  std::uniform_real_distribution<double> unit(-0.5, 0.5);
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  std::vector<PointCloudSequence> out;
  out.reserve(spec.sequences);
  for (std::size_t s = 0; s < spec.sequences; ++s) {
    const std::size_t label = s % spec.classes;
    std::vector<Vec3> base(spec.points_per_frame);
    Vec3 mean;
    for (auto& p : base) {
      const double x = unit(rng);
      const double y = unit(rng);
      p = {x, y, unit(rng)};
      mean = mean + p;
    }
    mean = (1.0 / static_cast<double>(base.size())) * mean;
    for (auto& p : base) p = p - mean;
    const double magnitude = 1.0 + spec.magnitude_jitter * jitter(rng);

    PointCloudSequence seq;
    seq.frame_count = spec.frames;
    seq.points_per_frame = spec.points_per_frame;
    seq.feature_dim = 1;
    for (std::size_t f = 0; f < spec.frames; ++f) {
      const double t = static_cast<double>(f);
      for (const auto& p : base) {
        seq.positions.push_back(apply_motion(label, p, t, magnitude, spec) + gaussian(rng, spec.noise));
        seq.timestamps.push_back(static_cast<int>(f));
        seq.features.push_back(t);
        seq.labels.push_back(static_cast<int>(label));
      }
    }
    out.push_back(std::move(seq));
  }
  return out;
}

std::vector<PointCloudSequence> generate_blob_segmentation(const SyntheticTaskSpec& spec) {
  check_common(spec);
  if (spec.classes != 2) throw std::invalid_argument("blob segmentation has exactly 2 classes");
  if (spec.blob_points > spec.points_per_frame) {
    throw std::invalid_argument("blob_points exceeds points_per_frame");
  }
  constexpr Vec3 kBackgroundColor{0.25, 0.6, 0.3};
  constexpr Vec3 kBlobColor{0.85, 0.25, 0.2};
  Engine rng(spec.seed);
  std::uniform_real_distribution<double> plane(-1.0, 1.0);
  std::uniform_real_distribution<double> slab(-0.05, 0.05);
  std::uniform_real_distribution<double> start(-0.5, 0.5);
  std::uniform_real_distribution<double> heading(0.0, 2.0 * std::acos(-1.0));
  const std::size_t background = spec.points_per_frame - spec.blob_points;

  std::vector<PointCloudSequence> out;
  out.reserve(spec.sequences);
  for (std::size_t s = 0; s < spec.sequences; ++s) {
    std::vector<Vec3> scene(background);
    for (auto& p : scene) {
      const double x = plane(rng);
      const double y = plane(rng);
      p = {x, y, slab(rng)};
    }
    const double sx = start(rng);
    const double sy = start(rng);
    const Vec3 origin{sx, sy, spec.blob_height};
    const double angle = heading(rng);
    const Vec3 direction{std::cos(angle), std::sin(angle), 0.0};

    PointCloudSequence seq;
    seq.frame_count = spec.frames;
    seq.points_per_frame = spec.points_per_frame;
    seq.feature_dim = 4;
    std::vector<std::size_t> order(spec.points_per_frame);
    for (std::size_t f = 0; f < spec.frames; ++f) {
      const Vec3 center = origin + (static_cast<double>(f) * spec.blob_speed) * direction;
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t k : order) {
        const bool blob = k >= background;
        const Vec3 p = blob ? center + truncated_gaussian(rng, spec.blob_sigma)
                            : scene[k] + truncated_gaussian(rng, spec.noise);
        const Vec3 color = (blob ? kBlobColor : kBackgroundColor) + gaussian(rng, spec.color_noise);
        seq.positions.push_back(p);
        seq.timestamps.push_back(static_cast<int>(f));
        seq.features.insert(seq.features.end(), {color.x, color.y, color.z, static_cast<double>(f)});
        seq.labels.push_back(blob ? 1 : 0);
      }
    }
    out.push_back(std::move(seq));
  }
  return out;
}

std::vector<PointCloudSequence> generate(const SyntheticTaskSpec& spec) {
  return spec.task == SyntheticTask::motion_classification ? generate_motion_classification(spec)
                                                           : generate_blob_segmentation(spec);
}

PointCloudSequence downsample_per_frame(const PointCloudSequence& raw, std::size_t points_per_frame) {
  if (points_per_frame == 0) throw std::invalid_argument("points_per_frame must be positive");
  if (raw.positions.size() != raw.timestamps.size()) throw SequenceError("timestamp count does not match point count");
  std::vector<std::vector<std::size_t>> frames(raw.frame_count);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const int t = raw.timestamps[i];
    if (t < 0 || static_cast<std::size_t>(t) >= raw.frame_count) {
      throw SequenceError("timestamp " + std::to_string(t) + " outside [0, " + std::to_string(raw.frame_count) + ")");
    }
    frames[static_cast<std::size_t>(t)].push_back(i);
  }
  PointCloudSequence out;
  out.frame_count = raw.frame_count;
  out.points_per_frame = points_per_frame;
  out.feature_dim = raw.feature_dim;
  std::vector<Vec3> local;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    if (frames[f].size() < points_per_frame) {
      throw SequenceError("frame " + std::to_string(f) + " holds " + std::to_string(frames[f].size()) +
                          " points, fewer than the requested " + std::to_string(points_per_frame));
    }
    local.clear();
    for (std::size_t i : frames[f]) local.push_back(raw.positions[i]);
    for (std::size_t pick : farthest_point_sample(local, points_per_frame)) {
      const std::size_t i = frames[f][pick];
      out.positions.push_back(raw.positions[i]);
      out.timestamps.push_back(raw.timestamps[i]);
      auto feat = raw.feature(i);
      out.features.insert(out.features.end(), feat.begin(), feat.end());
      if (raw.has_labels()) out.labels.push_back(raw.labels[i]);
    }
  }
  out.validate();
  return out;
}

}  // namespace asta3d
