#include "suites.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>

#include "asta3d/asta_conv.hpp"
#include "asta3d/ops.hpp"
#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

namespace asta3d::testing {

namespace {

struct OpCase {
  const char* name;
  std::function<std::vector<GradLeaf>(std::mt19937_64&)> leaves;
  std::function<Tensor(const std::vector<GradLeaf>&)> apply;
};

Tensor project(const Tensor& y, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sum(mul(y, random_tensor(rng, y.shape())));
}

BatchedCloud cloud_of(std::vector<Vec3> positions, std::vector<int> timestamps, std::size_t frames) {
  BatchedCloud c;
  c.positions = std::move(positions);
  c.timestamps = std::move(timestamps);
  c.offsets = {0, c.positions.size()};
  c.frame_count = frames;
  return c;
}

AstaConvConfig layer_config(std::size_t c, std::size_t d, std::size_t out, bool batch_norm) {
  AstaConvConfig cfg;
  cfg.in_channels = c;
  cfg.embed_dim = d;
  cfg.out_channels = out;
  cfg.encode_hidden = {d};
  cfg.attend_hidden = {d};
  cfg.mlp_batch_norm = batch_norm;
  cfg.anchor_scale = 0.2;
  cfg.radius = RadiusSchedule{0.5, 0.5, 0.6, 2, 0, 0.0};
  return cfg;
}

// Two frames of points in [-0.5, 0.5]^3; the first `cores` points double as cores.
struct Instance {
  BatchedCloud points;
  BatchedCloud cores;
  Tensor features;
};

Instance random_instance(std::mt19937_64& rng, std::size_t per_frame, std::size_t cores, std::size_t c) {
  std::vector<Vec3> pos;
  std::vector<int> ts;
  for (int f = 0; f < 2; ++f) {
    for (std::size_t i = 0; i < per_frame; ++i) {
      pos.push_back(random_point(rng, 0.5));
      ts.push_back(f);
    }
  }
  Instance inst;
  inst.points = cloud_of(pos, ts, 2);
  const auto n = static_cast<std::ptrdiff_t>(cores);
  inst.cores = cloud_of({pos.begin(), pos.begin() + n}, {ts.begin(), ts.begin() + n}, 2);
  inst.features = random_tensor(rng, {pos.size(), c});
  return inst;
}

void note(SuiteResult& r, double error, const std::string& where) {
  if (error >= r.worst) {
    r.worst = error;
    r.where = where;
  }
}

void assign(Tensor& t, std::span<const double> values) { std::copy(values.begin(), values.end(), t.mutable_data().begin()); }

}  // namespace

std::vector<SuiteResult> op_gradient_suite(std::size_t instances, std::uint64_t seed) {
  const std::vector<OpCase> cases = {
      {"matmul", [](auto& r) { return std::vector<GradLeaf>{{"a", random_tensor(r, {3, 4}, true)}, {"b", random_tensor(r, {4, 2}, true)}}; },
       [](const auto& l) { return matmul(l[0].tensor, l[1].tensor); }},
      {"add", [](auto& r) { return std::vector<GradLeaf>{{"a", random_tensor(r, {3, 2}, true)}, {"b", random_tensor(r, {3, 2}, true)}}; },
       [](const auto& l) { return add(l[0].tensor, l[1].tensor); }},
      {"sub", [](auto& r) { return std::vector<GradLeaf>{{"a", random_tensor(r, {3, 2}, true)}, {"b", random_tensor(r, {3, 2}, true)}}; },
       [](const auto& l) { return sub(l[0].tensor, l[1].tensor); }},
      {"mul", [](auto& r) { return std::vector<GradLeaf>{{"a", random_tensor(r, {3, 2}, true)}, {"b", random_tensor(r, {3, 2}, true)}}; },
       [](const auto& l) { return mul(l[0].tensor, l[1].tensor); }},
      {"scale", [](auto& r) { return std::vector<GradLeaf>{{"a", random_tensor(r, {2, 3}, true)}}; },
       [](const auto& l) { return scale(l[0].tensor, -1.7); }},
      {"add_row_bias", [](auto& r) { return std::vector<GradLeaf>{{"x", random_tensor(r, {4, 3}, true)}, {"b", random_tensor(r, {3}, true)}}; },
       [](const auto& l) { return add_row_bias(l[0].tensor, l[1].tensor); }},
      {"relu", [](auto& r) { return std::vector<GradLeaf>{{"x", random_tensor(r, {4, 3}, true)}}; },
       [](const auto& l) { return relu(l[0].tensor); }},
      {"mean", [](auto& r) { return std::vector<GradLeaf>{{"x", random_tensor(r, {4, 3}, true)}}; },
       [](const auto& l) { return reshape(mean(l[0].tensor), {1}); }},
      {"sum_axis", [](auto& r) { return std::vector<GradLeaf>{{"x", random_tensor(r, {2, 3, 4}, true)}}; },
       [](const auto& l) { return sum_axis(l[0].tensor, 1); }},
      {"max_axis", [](auto& r) { return std::vector<GradLeaf>{{"x", random_tensor(r, {2, 5, 3}, true)}}; },
       [](const auto& l) { return max_axis(l[0].tensor, 1); }},
      {"softmax", [](auto& r) { return std::vector<GradLeaf>{{"x", random_tensor(r, {2, 6, 3}, true)}}; },
       [](const auto& l) { return softmax(l[0].tensor, 1); }},
      {"concat_cols", [](auto& r) { return std::vector<GradLeaf>{{"a", random_tensor(r, {3, 2}, true)}, {"b", random_tensor(r, {3, 4}, true)}}; },
       [](const auto& l) { return concat_cols(l[0].tensor, l[1].tensor); }},
      {"gather_rows", [](auto& r) { return std::vector<GradLeaf>{{"x", random_tensor(r, {4, 3}, true)}}; },
       [](const auto& l) {
         static const std::size_t idx[] = {3, 0, 3, 1, 1};
         return gather_rows(l[0].tensor, idx);
       }},
      {"scatter_rows", [](auto& r) { return std::vector<GradLeaf>{{"x", random_tensor(r, {3, 2}, true)}}; },
       [](const auto& l) {
         static const std::size_t idx[] = {4, 0, 4};
         return scatter_rows(l[0].tensor, idx, 5);
       }},
      {"weighted_gather_rows", [](auto& r) { return std::vector<GradLeaf>{{"x", random_tensor(r, {4, 3}, true)}}; },
       [](const auto& l) {
         static const std::size_t idx[] = {0, 1, 2, 3, 3, 1};
         static const double w[] = {0.2, 0.3, 0.5, 0.6, 0.4, 0.0};
         return weighted_gather_rows(l[0].tensor, idx, w, 3);
       }},
      {"cross_entropy", [](auto& r) { return std::vector<GradLeaf>{{"z", random_tensor(r, {4, 5}, true)}}; },
       [](const auto& l) {
         static const int labels[] = {0, 4, 2, 2};
         return reshape(cross_entropy_loss(l[0].tensor, labels), {1});
       }},
      {"mlp", [](auto& r) {
         return std::vector<GradLeaf>{{"x", random_tensor(r, {5, 3}, true)},
                                      {"w1", random_tensor(r, {3, 4}, true)},
                                      {"b1", random_tensor(r, {4}, true)},
                                      {"w2", random_tensor(r, {4, 2}, true)}};
       },
       [](const auto& l) {
         return softmax(matmul(relu(add_row_bias(matmul(l[0].tensor, l[1].tensor), l[2].tensor)), l[3].tensor), 1);
       }},
  };

  std::mt19937_64 rng(seed);
  std::vector<SuiteResult> out;
  for (const auto& op : cases) {
    SuiteResult r;
    r.name = op.name;
    for (std::size_t instance = 0; instance < instances; ++instance) {
      const auto leaves = op.leaves(rng);
      const std::uint64_t projection = rng();
      const auto check = check_gradients([&] { return project(op.apply(leaves), projection); }, leaves);
      if (check.max_error >= r.worst) {
        r.worst = check.max_error;
        r.where = check.worst;
      }
      ++r.instances;
    }
    out.push_back(r);
  }
  return out;
}

SuiteResult conv_gradient_suite(std::size_t instances, std::uint64_t seed) {
  SuiteResult r;
  r.name = "asta_conv_layer";
  std::mt19937_64 gen(seed);
  for (std::size_t trial = 0; trial < instances; ++trial) {
    AstaConvConfig cfg;
    cfg.in_channels = 3;
    cfg.embed_dim = 8;
    cfg.out_channels = 8;
    cfg.encode_hidden = {8};
    cfg.attend_hidden = {8};
    cfg.anchor_scale = 0.2;
    cfg.radius = RadiusSchedule{0.5, 0.5, 0.6, 2, 0, 0.0};
    ParameterRegistry reg;
    Rng rng(gen());
    AstaConvLayer layer(reg, "conv", cfg, rng);
    // Positive biases keep most outputs away from the ReLU kink.
    assign(layer.bias(), uniform_values(gen, 8, 0.1, 0.5));

    std::vector<Vec3> pos;
    std::vector<int> ts;
    for (int f = 0; f < 2; ++f) {
      for (int i = 0; i < 12; ++i) {
        pos.push_back(random_point(gen, 0.5));
        ts.push_back(f);
      }
    }
    const auto points = cloud_of(pos, ts, 2);
    const auto cores = cloud_of({pos.begin(), pos.begin() + 5}, {ts.begin(), ts.begin() + 5}, 2);
    const Tensor features = random_tensor(gen, {pos.size(), 3});
    const auto geo = layer.geometry(points, cores);
    const Tensor proj = random_tensor(gen, {5, 8});
    std::vector<GradLeaf> leaves;
    for (const auto& p : reg.parameters()) leaves.push_back({p.name, p.tensor});
    GradCheckOptions opt;
    opt.max_entries = 12;
    opt.seed = gen();
    const auto check = check_gradients(
        [&] { return sum(mul(layer.anchor_conv(layer.attentive_embed(features, geo, true)), proj)); }, leaves, opt);
    if (check.max_error >= r.worst) {
      r.worst = check.max_error;
      r.where = "trial " + std::to_string(trial) + " " + check.worst;
    }
    ++r.instances;
  }
  return r;
}

SuiteResult two_neighbor_embed_suite(std::size_t instances, std::uint64_t seed) {
  // c = 0 and d = 4 without hidden layers: encode is ReLU(I phi), which is phi
  // for positive phi, and attend reads h back out, so per channel
  // e = (h1 exp(h1) + h2 exp(h2)) / (exp(h1) + exp(h2)).
  SuiteResult r;
  r.name = "two_neighbor_embed";
  std::mt19937_64 gen(seed);
  AstaConvConfig cfg;
  cfg.in_channels = 0;
  cfg.embed_dim = 4;
  cfg.out_channels = 2;
  cfg.encode_hidden = {};
  cfg.attend_hidden = {};
  cfg.mlp_batch_norm = false;
  ParameterRegistry reg;
  Rng rng(seed);
  AstaConvLayer layer(reg, "conv", cfg, rng);
  std::vector<double> eye(16, 0.0), attend(32, 0.0);
  for (std::size_t i = 0; i < 4; ++i) {
    eye[i * 4 + i] = 1.0;
    attend[(4 + i) * 4 + i] = 1.0;
  }
  assign(layer.encoder().linears()[0].weight(), eye);
  assign(layer.encoder().linears()[0].bias(), std::vector<double>(4, 0.0));
  assign(layer.attention().linears()[0].weight(), attend);
  assign(layer.attention().linears()[0].bias(), std::vector<double>(4, 0.0));
  for (std::size_t trial = 0; trial < instances; ++trial) {
    const auto phi = uniform_values(gen, 8, 0.01, 3.0);
    const Tensor e = layer.embed_encodings(Tensor::from({2, 4}, phi), 2, false);
    for (std::size_t ch = 0; ch < 4; ++ch) {
      const double h1 = phi[ch], h2 = phi[4 + ch];
      const double expected = (h1 * std::exp(h1) + h2 * std::exp(h2)) / (std::exp(h1) + std::exp(h2));
      const double err = std::abs(e[ch] - expected);
      if (err >= r.worst) {
        r.worst = err;
        r.where = "trial " + std::to_string(trial) + " channel " + std::to_string(ch);
      }
    }
    ++r.instances;
  }
  return r;
}

SuiteResult tetrahedron_suite() {
  SuiteResult r;
  r.name = "tetrahedron";
  Vec3 total;
  for (std::size_t i = 0; i < kAnchorCount; ++i) {
    note(r, std::abs(norm(kTetrahedron[i]) - 1.0), "norm row " + std::to_string(i));
    for (std::size_t j = i + 1; j < kAnchorCount; ++j) {
      note(r, std::abs(dot(kTetrahedron[i], kTetrahedron[j]) + 1.0 / 3.0),
           "cos rows " + std::to_string(i) + "," + std::to_string(j));
    }
    total = total + kTetrahedron[i];
  }
  note(r, std::max({std::abs(total.x), std::abs(total.y), std::abs(total.z)}), "row sum");
  r.instances = 1;
  return r;
}

SuiteResult anchor_placement_suite(std::size_t instances, std::uint64_t seed) {
  SuiteResult r;
  r.name = "anchor_placement";
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> scale_dist(0.01, 2.0);
  std::vector<Vec3> cores(instances);
  for (auto& c : cores) c = random_point(gen, 10.0);
  const std::vector<int> ts(instances, 0);
  const double scale = scale_dist(gen);
  for (double s : {scale, 1.0, 0.05}) {
    const AnchorSet set = make_anchors(cores, ts, s);
    for (std::size_t i = 0; i < instances; ++i) {
      Vec3 centroid;
      for (std::size_t j = 0; j < kAnchorCount; ++j) {
        note(r, std::abs(distance(set.positions[i][j], cores[i]) - s), "distance core " + std::to_string(i));
        centroid = centroid + set.positions[i][j];
      }
      const Vec3 d = 0.25 * centroid - cores[i];
      note(r, std::max({std::abs(d.x), std::abs(d.y), std::abs(d.z)}), "centroid core " + std::to_string(i));
    }
  }
  r.instances = instances;
  return r;
}

SuiteResult grid_equivalence_suite(std::size_t instances, std::uint64_t seed) {
  SuiteResult r;
  r.name = "grid_equivalence";
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<std::size_t> count(1, 300);
  std::uniform_real_distribution<double> radius_dist(0.02, 0.8);
  std::size_t mismatches = 0;
  for (std::size_t trial = 0; trial < instances; ++trial) {
    const std::size_t frames = 1 + trial % 4;
    const std::size_t n = count(gen);
    std::vector<Vec3> pos(n);
    std::vector<int> ts(n);
    for (std::size_t i = 0; i < n; ++i) {
      pos[i] = random_point(gen, 1.0);
      ts[i] = static_cast<int>(gen() % frames);
    }
    // Exact duplicates and points on a lattice exercise ties and cell borders.
    if (n > 4) pos[n - 1] = pos[0];
    if (trial % 5 == 0) {
      for (auto& p : pos) p = {std::round(p.x * 8) / 8, std::round(p.y * 8) / 8, std::round(p.z * 8) / 8};
    }
    std::vector<double> radius(frames);
    for (auto& v : radius) v = radius_dist(gen);
    const double reach = *std::max_element(radius.begin(), radius.end());
    const GridIndex grid(pos, reach);
    for (int q = 0; q < 20; ++q) {
      const Vec3 anchor = q % 4 == 0 ? pos[gen() % n] : random_point(gen, 1.2);
      const int t = static_cast<int>(gen() % frames);
      const NeighborGroup a = radius_query(anchor, t, pos, ts, radius);
      const NeighborGroup b = grid.radius_query(anchor, t, pos, ts, radius);
      bool same = a.valid_count == b.valid_count;
      for (std::size_t k = 0; same && k < kNeighborSlots; ++k) {
        same = a.slots[k].index == b.slots[k].index && a.slots[k].position == b.slots[k].position &&
               a.slots[k].timestamp == b.slots[k].timestamp;
      }
      if (!same) {
        ++mismatches;
        r.where = "trial " + std::to_string(trial) + " query " + std::to_string(q);
      }
    }
    ++r.instances;
  }
  r.worst = static_cast<double>(mismatches);
  return r;
}

SuiteResult anchor_conv_oracle_suite(std::size_t instances, std::uint64_t seed) {
  SuiteResult r;
  r.name = "anchor_conv_oracle";
  std::mt19937_64 gen(seed);
  for (std::size_t trial = 0; trial < instances; ++trial) {
    const std::size_t d = 1 + gen() % 8, out = 1 + gen() % 8, cores = 1 + gen() % 6;
    ParameterRegistry reg;
    Rng rng(gen());
    AstaConvLayer layer(reg, "conv", layer_config(1, d, out, false), rng);
    assign(layer.bias(), uniform_values(gen, out));
    const Tensor e = random_tensor(gen, {cores * kAnchorCount, d});
    const Tensor y = layer.anchor_conv(e);
    const auto expected = anchor_conv_oracle(e.data(), layer.kernel().data(), layer.bias().data(), cores, d, out);
    note(r, max_abs_diff(y.data(), expected), "trial " + std::to_string(trial));
    ++r.instances;
  }
  return r;
}

SuiteResult translation_invariance_suite(std::size_t instances, std::uint64_t seed) {
  SuiteResult r;
  r.name = "translation_invariance";
  std::mt19937_64 gen(seed);
  for (std::size_t trial = 0; trial < instances; ++trial) {
    ParameterRegistry reg;
    Rng rng(gen());
    AstaConvLayer layer(reg, "conv", layer_config(2, 4, 4, trial % 2 == 0), rng);
    const auto inst = random_instance(gen, 25, 5, 2);
    const Vec3 v = random_point(gen, 3.0);
    auto shifted = inst;
    for (auto& p : shifted.points.positions) p = p + v;
    for (auto& p : shifted.cores.positions) p = p + v;
    const Tensor a = layer.forward(inst.features, inst.points, inst.cores, false);
    const Tensor b = layer.forward(inst.features, shifted.points, shifted.cores, false);
    note(r, max_abs_diff(a.data(), b.data()), "trial " + std::to_string(trial));
    ++r.instances;
  }
  return r;
}

SuiteResult time_shift_invariance_suite(std::size_t instances, std::uint64_t seed) {
  SuiteResult r;
  r.name = "time_shift_invariance";
  std::mt19937_64 gen(seed);
  for (std::size_t trial = 0; trial < instances; ++trial) {
    ParameterRegistry reg;
    Rng rng(gen());
    AstaConvLayer layer(reg, "conv", layer_config(2, 4, 4, trial % 2 == 0), rng);
    const auto inst = random_instance(gen, 25, 5, 2);
    const int shift = 1 + static_cast<int>(gen() % 50);
    auto shifted = inst;
    for (auto& t : shifted.points.timestamps) t += shift;
    for (auto& t : shifted.cores.timestamps) t += shift;
    const Tensor a = layer.forward(inst.features, inst.points, inst.cores, false);
    const Tensor b = layer.forward(inst.features, shifted.points, shifted.cores, false);
    note(r, max_abs_diff(a.data(), b.data()), "trial " + std::to_string(trial));
    ++r.instances;
  }
  return r;
}

SuiteResult slot_permutation_suite(std::size_t instances, std::uint64_t seed) {
  SuiteResult r;
  r.name = "slot_permutation";
  std::mt19937_64 gen(seed);
  constexpr std::size_t kGroups = 3, kWidth = 7;
  for (std::size_t trial = 0; trial < instances; ++trial) {
    ParameterRegistry reg;
    Rng rng(gen());
    const bool bn = trial % 2 == 0;
    AstaConvLayer layer(reg, "conv", layer_config(3, 6, 4, bn), rng);
    const auto phi = uniform_values(gen, kGroups * kNeighborSlots * kWidth);
    std::vector<double> permuted;
    for (std::size_t g = 0; g < kGroups; ++g) {
      std::vector<std::size_t> order(kNeighborSlots);
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::shuffle(order.begin(), order.end(), gen);
      for (auto k : order) {
        const auto row = phi.begin() + static_cast<std::ptrdiff_t>((g * kNeighborSlots + k) * kWidth);
        permuted.insert(permuted.end(), row, row + kWidth);
      }
    }
    // Training-mode BatchNorm moments do not depend on row order either.
    const Tensor a = layer.embed_encodings(Tensor::from({kGroups * kNeighborSlots, kWidth}, phi), kNeighborSlots, bn);
    const Tensor b =
        layer.embed_encodings(Tensor::from({kGroups * kNeighborSlots, kWidth}, permuted), kNeighborSlots, bn);
    note(r, max_abs_diff(a.data(), b.data()), "trial " + std::to_string(trial));
    ++r.instances;
  }
  return r;
}

SuiteResult attention_normalization_suite(std::size_t instances, std::uint64_t seed) {
  SuiteResult r;
  r.name = "attention_normalization";
  std::mt19937_64 gen(seed);
  constexpr std::size_t d = 5;
  for (std::size_t trial = 0; trial < instances; ++trial) {
    ParameterRegistry reg;
    Rng rng(gen());
    AstaConvLayer layer(reg, "conv", layer_config(3, d, 4, trial % 2 == 0), rng);
    const auto inst = random_instance(gen, 30, 6, 3);
    AttentionWeights w;
    layer.attentive_embed(inst.features, layer.geometry(inst.points, inst.cores), true, &w);
    for (std::size_t a = 0; a < w.valid_anchors.size(); ++a) {
      for (std::size_t ch = 0; ch < d; ++ch) {
        double total = 0.0;
        for (std::size_t k = 0; k < kNeighborSlots; ++k) {
          const double v = w.weights[(a * kNeighborSlots + k) * d + ch];
          if (!(v > 0.0 && v < 1.0)) note(r, std::numeric_limits<double>::infinity(), "weight outside (0,1)");
          total += v;
        }
        note(r, std::abs(total - 1.0), "trial " + std::to_string(trial));
      }
    }
    ++r.instances;
  }
  return r;
}

SuiteResult zero_trick_suite(std::size_t instances, std::uint64_t seed) {
  SuiteResult r;
  r.name = "zero_trick";
  std::mt19937_64 gen(seed);
  std::size_t empty = 0;
  for (std::size_t trial = 0; trial < instances; ++trial) {
    ParameterRegistry reg;
    Rng rng(gen());
    const AstaConvConfig cfg = layer_config(2, 4, 3, trial % 2 == 0);
    AstaConvLayer layer(reg, "conv", cfg, rng);
    // Sparse candidates plus a far-away core whose anchors are always empty.
    auto inst = random_instance(gen, 6, 3, 2);
    inst.cores.positions.push_back({40.0, 40.0, 40.0});
    inst.cores.timestamps.push_back(0);
    inst.cores.offsets = {0, inst.cores.positions.size()};
    const auto geo = layer.geometry(inst.points, inst.cores);
    const Tensor e = layer.attentive_embed(inst.features, geo, true);
    std::vector<bool> valid(geo.core_count * kAnchorCount, false);
    for (auto a : geo.valid_anchors) valid[a] = true;
    std::vector<double> mask(e.numel(), 0.0);
    double largest = 0.0;
    for (std::size_t a = 0; a < valid.size(); ++a) {
      if (valid[a]) continue;
      ++empty;
      for (std::size_t ch = 0; ch < cfg.embed_dim; ++ch) {
        largest = std::max(largest, std::abs(e[a * cfg.embed_dim + ch]));
        mask[a * cfg.embed_dim + ch] = 1.0 + static_cast<double>(ch);
      }
    }
    reg.zero_grad();
    sum(mul(e, Tensor::from(e.shape(), mask))).backward();
    for (const auto& p : reg.parameters()) {
      if (!p.tensor.has_grad()) continue;
      for (double g : p.tensor.grad()) largest = std::max(largest, std::abs(g));
    }
    note(r, largest, "trial " + std::to_string(trial));
    ++r.instances;
  }
  r.where = std::to_string(empty) + " empty anchors; worst at " + r.where;
  return r;
}

}  // namespace asta3d::testing
