#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pcreg/env.hpp"
#include "pcreg/errors.hpp"
#include "pcreg/geometry.hpp"
#include "pcreg/rng.hpp"

namespace pcreg {

using Logits = Eigen::Matrix<double, 3, StepTable::kNumSteps>;  // row = axis

/// Network widths. Defaults follow the reference architecture: a shared
/// per-point encoder 3 -> 64 -> 128 -> 1024 with max pooling, two action
/// heads 2048 -> 512 -> 256 -> 33 and a value head 512 -> 256 -> 1 fed by
/// the concatenated head middle layers.
struct AgentConfig {
  std::vector<int> encoder_widths{64, 128, 1024};
  std::vector<int> head_widths{512, 256};
  int value_hidden = 256;

  static constexpr int kAxes = 3;
  static constexpr int kLogits = kAxes * StepTable::kNumSteps;  // 33

  int embed_dim() const { return encoder_widths.back(); }
  int state_dim() const { return 2 * embed_dim(); }
  int head_out() const { return head_widths.back(); }

  void validate() const {
    if (encoder_widths.empty() || head_widths.empty() || value_hidden <= 0) {
      throw InvalidInput("AgentConfig: empty layer stack");
    }
    for (const int w : encoder_widths) {
      if (w <= 0) throw InvalidInput("AgentConfig: non-positive width");
    }
    for (const int w : head_widths) {
      if (w <= 0) throw InvalidInput("AgentConfig: non-positive width");
    }
  }

  bool operator==(const AgentConfig& o) const {
    return encoder_widths == o.encoder_widths && head_widths == o.head_widths &&
           value_hidden == o.value_hidden;
  }
};

/// One affine layer, weight stored out x in.
struct Dense {
  Eigen::MatrixXd weight;
  Eigen::VectorXd bias;

  Dense() = default;
  Dense(int out, int in) : weight(Eigen::MatrixXd::Zero(out, in)), bias(Eigen::VectorXd::Zero(out)) {}

  int out_dim() const { return static_cast<int>(weight.rows()); }
  int in_dim() const { return static_cast<int>(weight.cols()); }
};

/// All weights of the agent. Also serves as the container for
/// parameter-shaped quantities (gradients, optimizer moments).
struct AgentParams {
  AgentConfig config;
  std::vector<Dense> encoder;
  std::vector<Dense> rot_head;
  Dense rot_logits;
  std::vector<Dense> trans_head;
  Dense trans_logits;
  std::vector<Dense> value;  // hidden layer + scalar output layer

  /// Fixed traversal order; also the checkpoint layer order.
  std::vector<const Dense*> layers() const {
    std::vector<const Dense*> out;
    for (const auto& d : encoder) out.push_back(&d);
    for (const auto& d : rot_head) out.push_back(&d);
    out.push_back(&rot_logits);
    for (const auto& d : trans_head) out.push_back(&d);
    out.push_back(&trans_logits);
    for (const auto& d : value) out.push_back(&d);
    return out;
  }

  std::vector<Dense*> layers() {
    std::vector<Dense*> out;
    for (auto& d : encoder) out.push_back(&d);
    for (auto& d : rot_head) out.push_back(&d);
    out.push_back(&rot_logits);
    for (auto& d : trans_head) out.push_back(&d);
    out.push_back(&trans_logits);
    for (auto& d : value) out.push_back(&d);
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const Dense* d : layers()) n += d->weight.size() + d->bias.size();
    return n;
  }
};

struct PolicyOutput {
  Logits rot_logits;
  Logits trans_logits;
  double value = 0.0;
};

inline AgentParams zeros_like_structure(const AgentConfig& config) {
  config.validate();
  AgentParams p;
  p.config = config;
  int in = 3;
  for (const int w : config.encoder_widths) {
    p.encoder.emplace_back(w, in);
    in = w;
  }
  for (auto* head : {&p.rot_head, &p.trans_head}) {
    in = config.state_dim();
    for (const int w : config.head_widths) {
      head->emplace_back(w, in);
      in = w;
    }
  }
  p.rot_logits = Dense(AgentConfig::kLogits, config.head_out());
  p.trans_logits = Dense(AgentConfig::kLogits, config.head_out());
  p.value.emplace_back(config.value_hidden, 2 * config.head_out());
  p.value.emplace_back(1, config.value_hidden);
  return p;
}

inline AgentParams zeros_like(const AgentParams& p) { return zeros_like_structure(p.config); }

/// y += a * x, over all parameters.
inline void axpy(double a, const AgentParams& x, AgentParams& y) {
  auto xs = x.layers();
  auto ys = y.layers();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    ys[i]->weight += a * xs[i]->weight;
    ys[i]->bias += a * xs[i]->bias;
  }
}

inline void scale(AgentParams& p, double a) {
  for (Dense* d : p.layers()) {
    d->weight *= a;
    d->bias *= a;
  }
}

/// Deterministic initialization: weights uniform in +-1/sqrt(fan_in),
/// biases zero.
inline AgentParams init_params(const AgentConfig& config, std::uint64_t seed) {
  AgentParams p = zeros_like_structure(config);
  Rng rng(seed);
  for (Dense* d : p.layers()) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(d->in_dim()));
    for (Eigen::Index r = 0; r < d->weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < d->weight.cols(); ++c) {
        d->weight(r, c) = rng.uniform(-bound, bound);
      }
    }
  }
  return p;
}

inline AgentParams init_params(std::uint64_t seed) { return init_params(AgentConfig{}, seed); }

/// Activations recorded during forward, enough to backpropagate.
struct ForwardTrace {
  // Per cloud: inputs to each encoder layer (acts[0] = N x 3 point matrix,
  // then post-ReLU outputs), and the row achieving the max per feature.
  std::array<std::vector<Eigen::MatrixXd>, 2> enc_acts;
  std::array<std::vector<int>, 2> max_rows;
  Eigen::VectorXd state;
  std::vector<Eigen::VectorXd> rot_acts;    // inputs to each rot head layer
  std::vector<Eigen::VectorXd> trans_acts;  // inputs to each trans head layer
  Eigen::VectorXd rot_mid;                  // head stack output (post-ReLU)
  Eigen::VectorXd trans_mid;
  Eigen::VectorXd value_input;  // rot_mid ++ trans_mid
  Eigen::VectorXd value_hidden; // post-ReLU
};

namespace detail {

inline Eigen::MatrixXd cloud_matrix(const PointCloud& cloud) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(cloud.size()), 3);
  for (std::size_t i = 0; i < cloud.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = cloud[i];
  return m;
}

inline Eigen::VectorXd embed_impl(const Eigen::MatrixXd& cloud, const AgentParams& p,
                                  std::vector<Eigen::MatrixXd>* acts, std::vector<int>* max_rows) {
  Eigen::MatrixXd a = cloud;
  const std::size_t n_layers = p.encoder.size();
  if (acts) acts->push_back(a);
  for (std::size_t l = 0; l < n_layers; ++l) {
    Eigen::MatrixXd z =
        (a * p.encoder[l].weight.transpose()).rowwise() + p.encoder[l].bias.transpose();
    if (l + 1 < n_layers) {
      a = z.cwiseMax(0.0);
      if (acts) acts->push_back(a);
    } else {
      a = std::move(z);
    }
  }
  Eigen::VectorXd feature(a.cols());
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    Eigen::Index row = 0;
    const double v = a.col(c).maxCoeff(&row);
    feature[c] = v;
    if (max_rows) max_rows->push_back(static_cast<int>(row));
  }
  return feature;
}

inline Eigen::VectorXd head_impl(const Eigen::VectorXd& state, const std::vector<Dense>& head,
                                 std::vector<Eigen::VectorXd>* acts) {
  Eigen::VectorXd h = state;
  for (const Dense& layer : head) {
    if (acts) acts->push_back(h);
    h = (layer.weight * h + layer.bias).cwiseMax(0.0);
  }
  return h;
}

inline Logits reshape_logits(const Eigen::VectorXd& flat) {
  Logits out;
  for (int axis = 0; axis < 3; ++axis) {
    for (int j = 0; j < StepTable::kNumSteps; ++j) {
      out(axis, j) = flat[axis * StepTable::kNumSteps + j];
    }
  }
  return out;
}

}  // namespace detail

/// Permutation-invariant global feature of a cloud: shared per-point affine
/// stack followed by a coordinatewise max over points.
inline Eigen::VectorXd embed(const PointCloud& cloud, const AgentParams& p) {
  if (cloud.empty()) throw InvalidInput("embed: empty point cloud");
  return detail::embed_impl(detail::cloud_matrix(cloud), p, nullptr, nullptr);
}

/// Full forward pass. State is embed(source) ++ embed(target); the value
/// head reads the concatenation of the two head middle layers.
inline PolicyOutput forward(const PointCloud& source, const PointCloud& target,
                            const AgentParams& p, ForwardTrace* trace = nullptr) {
  if (source.empty() || target.empty()) throw InvalidInput("forward: empty point cloud");
  const Eigen::VectorXd f_src = detail::embed_impl(detail::cloud_matrix(source), p,
                                                   trace ? &trace->enc_acts[0] : nullptr,
                                                   trace ? &trace->max_rows[0] : nullptr);
  const Eigen::VectorXd f_tgt = detail::embed_impl(detail::cloud_matrix(target), p,
                                                   trace ? &trace->enc_acts[1] : nullptr,
                                                   trace ? &trace->max_rows[1] : nullptr);
  Eigen::VectorXd state(f_src.size() + f_tgt.size());
  state << f_src, f_tgt;

  const Eigen::VectorXd rot_mid =
      detail::head_impl(state, p.rot_head, trace ? &trace->rot_acts : nullptr);
  const Eigen::VectorXd trans_mid =
      detail::head_impl(state, p.trans_head, trace ? &trace->trans_acts : nullptr);

  Eigen::VectorXd value_input(rot_mid.size() + trans_mid.size());
  value_input << rot_mid, trans_mid;
  const Eigen::VectorXd value_hidden =
      (p.value[0].weight * value_input + p.value[0].bias).cwiseMax(0.0);
  const double value = (p.value[1].weight * value_hidden + p.value[1].bias)(0);

  PolicyOutput out;
  out.rot_logits = detail::reshape_logits(p.rot_logits.weight * rot_mid + p.rot_logits.bias);
  out.trans_logits =
      detail::reshape_logits(p.trans_logits.weight * trans_mid + p.trans_logits.bias);
  out.value = value;

  if (trace) {
    trace->state = state;
    trace->rot_mid = rot_mid;
    trace->trans_mid = trans_mid;
    trace->value_input = value_input;
    trace->value_hidden = value_hidden;
  }
  return out;
}

using AxisDistribution = Eigen::Matrix<double, StepTable::kNumSteps, 1>;

/// Stable log-softmax of one logit row.
inline AxisDistribution log_softmax_row(const Eigen::Matrix<double, 1, StepTable::kNumSteps>& row) {
  const double m = row.maxCoeff();
  const auto shifted = (row.array() - m).eval();
  const double lse = std::log(shifted.exp().sum());
  return (shifted - lse).transpose();
}

/// The six per-axis categorical distributions (rotation rows first).
inline std::array<AxisDistribution, 6> action_probabilities(const PolicyOutput& out) {
  std::array<AxisDistribution, 6> probs;
  for (int axis = 0; axis < 3; ++axis) {
    probs[static_cast<std::size_t>(axis)] = log_softmax_row(out.rot_logits.row(axis)).array().exp();
    probs[static_cast<std::size_t>(axis + 3)] =
        log_softmax_row(out.trans_logits.row(axis)).array().exp();
  }
  return probs;
}

/// Joint log-probability of the action and total entropy, both summed over
/// the six axes.
inline std::pair<double, double> log_prob_entropy(const PolicyOutput& out, const ActionVector& a) {
  validate(a);
  double logp = 0.0;
  double entropy = 0.0;
  for (int axis = 0; axis < 3; ++axis) {
    const AxisDistribution ls_rot = log_softmax_row(out.rot_logits.row(axis));
    const AxisDistribution ls_trans = log_softmax_row(out.trans_logits.row(axis));
    logp += ls_rot[a.rot[static_cast<std::size_t>(axis)]] +
            ls_trans[a.trans[static_cast<std::size_t>(axis)]];
    entropy -= (ls_rot.array().exp() * ls_rot.array()).sum();
    entropy -= (ls_trans.array().exp() * ls_trans.array()).sum();
  }
  return {logp, entropy};
}

namespace detail {

inline int sample_categorical(const AxisDistribution& probs, Rng& rng) {
  const double u = rng.uniform();
  double cum = 0.0;
  for (int j = 0; j < StepTable::kNumSteps; ++j) {
    cum += probs[j];
    if (u < cum) return j;
  }
  return StepTable::kNumSteps - 1;  // guard against rounding
}

inline int argmax_row(const AxisDistribution& probs) {
  int best = 0;
  for (int j = 1; j < StepTable::kNumSteps; ++j) {
    if (probs[j] > probs[best]) best = j;  // ties keep the lowest index
  }
  return best;
}

}  // namespace detail

/// Draws each of the six sub-actions independently from its softmax.
inline ActionVector sample_action(const PolicyOutput& out, Rng& rng) {
  const auto probs = action_probabilities(out);
  ActionVector a;
  for (int axis = 0; axis < 3; ++axis) {
    a.rot[static_cast<std::size_t>(axis)] =
        detail::sample_categorical(probs[static_cast<std::size_t>(axis)], rng);
    a.trans[static_cast<std::size_t>(axis)] =
        detail::sample_categorical(probs[static_cast<std::size_t>(axis + 3)], rng);
  }
  return a;
}

/// Deterministic action: per-axis argmax with lowest-index tie-breaking.
inline ActionVector argmax_action(const PolicyOutput& out) {
  ActionVector a;
  for (int axis = 0; axis < 3; ++axis) {
    AxisDistribution rot_row = out.rot_logits.row(axis).transpose();
    AxisDistribution trans_row = out.trans_logits.row(axis).transpose();
    a.rot[static_cast<std::size_t>(axis)] = detail::argmax_row(rot_row);
    a.trans[static_cast<std::size_t>(axis)] = detail::argmax_row(trans_row);
  }
  return a;
}

/// Gradients of a scalar loss with respect to the network outputs.
struct OutputGrads {
  Logits rot = Logits::Zero();
  Logits trans = Logits::Zero();
  double value = 0.0;
};

namespace detail {

inline void backward_head(const std::vector<Dense>& head, const std::vector<Eigen::VectorXd>& acts,
                          const Eigen::VectorXd& head_out, Eigen::VectorXd d_out,
                          std::vector<Dense>& grads, Eigen::VectorXd& d_state) {
  // d_out arrives w.r.t. the post-ReLU output of the last layer.
  for (std::size_t l = head.size(); l-- > 0;) {
    const Eigen::VectorXd& out_act = (l + 1 == head.size()) ? head_out : acts[l + 1];
    const Eigen::VectorXd dz = (out_act.array() > 0.0).select(d_out, 0.0);
    grads[l].weight += dz * acts[l].transpose();
    grads[l].bias += dz;
    d_out = head[l].weight.transpose() * dz;
  }
  d_state += d_out;
}

inline void backward_encoder(const AgentParams& p, const std::vector<Eigen::MatrixXd>& acts,
                             const std::vector<int>& max_rows, const Eigen::VectorXd& d_feature,
                             std::vector<Dense>& grads) {
  const std::size_t last = p.encoder.size() - 1;
  // Max pool routes each feature's gradient to its argmax point.
  Eigen::MatrixXd dz = Eigen::MatrixXd::Zero(acts[0].rows(), d_feature.size());
  for (Eigen::Index c = 0; c < d_feature.size(); ++c) {
    dz(max_rows[static_cast<std::size_t>(c)], c) = d_feature[c];
  }
  for (std::size_t l = last + 1; l-- > 0;) {
    grads[l].weight += dz.transpose() * acts[l];
    grads[l].bias += dz.colwise().sum().transpose();
    if (l == 0) break;
    Eigen::MatrixXd da = dz * p.encoder[l].weight;
    dz = (acts[l].array() > 0.0).select(da, 0.0);
  }
}

}  // namespace detail

/// Exact backpropagation from output gradients to parameter gradients,
/// accumulated into `grads` (which must share the params' structure).
inline void backward(const AgentParams& p, const ForwardTrace& trace, const OutputGrads& out_grads,
                     AgentParams& grads) {
  // Value head.
  const double dv = out_grads.value;
  Eigen::VectorXd d_value_input = Eigen::VectorXd::Zero(trace.value_input.size());
  if (dv != 0.0) {
    grads.value[1].weight += dv * trace.value_hidden.transpose();
    grads.value[1].bias[0] += dv;
    Eigen::VectorXd dh = p.value[1].weight.transpose() * dv;
    const Eigen::VectorXd dz = (trace.value_hidden.array() > 0.0).select(dh, 0.0);
    grads.value[0].weight += dz * trace.value_input.transpose();
    grads.value[0].bias += dz;
    d_value_input = p.value[0].weight.transpose() * dz;
  }

  // Logit layers; the value path contributes to both head middles.
  const int h = static_cast<int>(trace.rot_mid.size());
  Eigen::VectorXd d_rot_flat(AgentConfig::kLogits), d_trans_flat(AgentConfig::kLogits);
  for (int axis = 0; axis < 3; ++axis) {
    for (int j = 0; j < StepTable::kNumSteps; ++j) {
      d_rot_flat[axis * StepTable::kNumSteps + j] = out_grads.rot(axis, j);
      d_trans_flat[axis * StepTable::kNumSteps + j] = out_grads.trans(axis, j);
    }
  }
  grads.rot_logits.weight += d_rot_flat * trace.rot_mid.transpose();
  grads.rot_logits.bias += d_rot_flat;
  grads.trans_logits.weight += d_trans_flat * trace.trans_mid.transpose();
  grads.trans_logits.bias += d_trans_flat;

  Eigen::VectorXd d_rot_mid = p.rot_logits.weight.transpose() * d_rot_flat + d_value_input.head(h);
  Eigen::VectorXd d_trans_mid =
      p.trans_logits.weight.transpose() * d_trans_flat + d_value_input.tail(h);

  Eigen::VectorXd d_state = Eigen::VectorXd::Zero(trace.state.size());
  detail::backward_head(p.rot_head, trace.rot_acts, trace.rot_mid, std::move(d_rot_mid),
                        grads.rot_head, d_state);
  detail::backward_head(p.trans_head, trace.trans_acts, trace.trans_mid, std::move(d_trans_mid),
                        grads.trans_head, d_state);

  // Shared encoder: both clouds accumulate into the same weights.
  const int w = static_cast<int>(trace.state.size()) / 2;
  detail::backward_encoder(p, trace.enc_acts[0], trace.max_rows[0], d_state.head(w), grads.encoder);
  detail::backward_encoder(p, trace.enc_acts[1], trace.max_rows[1], d_state.tail(w), grads.encoder);
}

// --- checkpoint serialization -----------------------------------------------

namespace detail {

constexpr std::array<char, 4> kCheckpointMagic{'R', 'A', 'G', 'T'};
constexpr std::uint32_t kCheckpointVersion = 1;

inline void write_u32_le(std::ostream& os, std::uint32_t v) {
  std::array<char, 4> b;
  for (int i = 0; i < 4; ++i) b[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(b.data(), 4);
}

inline std::uint32_t read_u32_le(std::istream& is) {
  std::array<unsigned char, 4> b;
  is.read(reinterpret_cast<char*>(b.data()), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[static_cast<std::size_t>(i)]) << (8 * i);
  return v;
}

inline void write_f64_le(std::ostream& os, double d) {
  const auto bits = std::bit_cast<std::uint64_t>(d);
  std::array<char, 8> b;
  for (int i = 0; i < 8; ++i) b[static_cast<std::size_t>(i)] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  os.write(b.data(), 8);
}

inline double read_f64_le(std::istream& is) {
  std::array<unsigned char, 8> b;
  is.read(reinterpret_cast<char*>(b.data()), 8);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[static_cast<std::size_t>(i)]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace detail

/// Writes a versioned little-endian checkpoint: magic, version, layer
/// count, then per layer (rows, cols, row-major weights, biases).
inline void save_checkpoint(const AgentParams& p, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("save_checkpoint: cannot open " + path);
  os.write(detail::kCheckpointMagic.data(), 4);
  detail::write_u32_le(os, detail::kCheckpointVersion);
  const auto layers = p.layers();
  detail::write_u32_le(os, static_cast<std::uint32_t>(layers.size()));
  for (const Dense* d : layers) {
    detail::write_u32_le(os, static_cast<std::uint32_t>(d->out_dim()));
    detail::write_u32_le(os, static_cast<std::uint32_t>(d->in_dim()));
    for (Eigen::Index r = 0; r < d->weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < d->weight.cols(); ++c) detail::write_f64_le(os, d->weight(r, c));
    }
    for (Eigen::Index r = 0; r < d->bias.size(); ++r) detail::write_f64_le(os, d->bias[r]);
  }
  if (!os) throw IoError("save_checkpoint: write failed for " + path);
}

/// Reads a checkpoint and reconstructs the layer structure, validating the
/// architecture family: encoder chain from 3 inputs, two mirrored heads
/// with 33-way logit layers, and a two-layer value head ending in a scalar.
inline AgentParams load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("load_checkpoint: cannot open " + path);
  std::array<char, 4> magic;
  is.read(magic.data(), 4);
  if (!is || magic != detail::kCheckpointMagic) {
    throw InvalidInput("load_checkpoint: bad magic in " + path);
  }
  const std::uint32_t version = detail::read_u32_le(is);
  if (version != detail::kCheckpointVersion) {
    throw InvalidInput("load_checkpoint: unsupported format version " + std::to_string(version));
  }
  const std::uint32_t n_layers = detail::read_u32_le(is);
  if (n_layers < 7 || n_layers > 1024 || n_layers % 2 == 0) {
    throw InvalidInput("load_checkpoint: implausible layer count");
  }
  std::vector<Dense> raw(n_layers);
  for (auto& d : raw) {
    const std::uint32_t rows = detail::read_u32_le(is);
    const std::uint32_t cols = detail::read_u32_le(is);
    if (!is || rows == 0 || cols == 0 || rows > (1u << 20) || cols > (1u << 20)) {
      throw InvalidInput("load_checkpoint: bad layer dims");
    }
    d = Dense(static_cast<int>(rows), static_cast<int>(cols));
    for (Eigen::Index r = 0; r < d.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < d.weight.cols(); ++c) d.weight(r, c) = detail::read_f64_le(is);
    }
    for (Eigen::Index r = 0; r < d.bias.size(); ++r) d.bias[r] = detail::read_f64_le(is);
  }
  if (!is) throw InvalidInput("load_checkpoint: truncated file " + path);

  const auto fail = [&](const char* why) -> AgentParams {
    throw InvalidInput(std::string("load_checkpoint: architecture mismatch: ") + why);
  };

  if (raw[0].in_dim() != 3) return fail("encoder input must be 3");
  std::size_t i = 1;
  while (i < raw.size() && raw[i].in_dim() == raw[i - 1].out_dim()) ++i;
  const std::size_t n_encoder = i;
  if (raw.size() < n_encoder + 6) return fail("missing head layers");
  const std::size_t remaining = raw.size() - n_encoder;
  if (remaining % 2 != 0) return fail("head layer counts must mirror");
  const std::size_t n_head = remaining / 2 - 2;  // hidden layers per action head
  if (n_head < 1) return fail("missing head hidden layers");

  AgentConfig config;
  config.encoder_widths.clear();
  for (std::size_t l = 0; l < n_encoder; ++l) config.encoder_widths.push_back(raw[l].out_dim());
  config.head_widths.clear();
  for (std::size_t l = 0; l < n_head; ++l) {
    config.head_widths.push_back(raw[n_encoder + l].out_dim());
  }
  config.value_hidden = raw[raw.size() - 2].out_dim();
  config.validate();

  AgentParams p = zeros_like_structure(config);
  const auto expect = [&](const Dense& got, const Dense& want, const char* where) {
    if (got.out_dim() != want.out_dim() || got.in_dim() != want.in_dim()) fail(where);
  };
  std::size_t idx = 0;
  for (auto& d : p.encoder) {
    expect(raw[idx], d, "encoder");
    d = raw[idx++];
  }
  for (auto& d : p.rot_head) {
    expect(raw[idx], d, "rotation head");
    d = raw[idx++];
  }
  expect(raw[idx], p.rot_logits, "rotation logits");
  p.rot_logits = raw[idx++];
  for (auto& d : p.trans_head) {
    expect(raw[idx], d, "translation head");
    d = raw[idx++];
  }
  expect(raw[idx], p.trans_logits, "translation logits");
  p.trans_logits = raw[idx++];
  for (auto& d : p.value) {
    expect(raw[idx], d, "value head");
    d = raw[idx++];
  }
  return p;
}

}  // namespace pcreg
