#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "prefroute/domain.hpp"
#include "prefroute/error.hpp"
#include "prefroute/numerics.hpp"

namespace prefroute {

enum class HeadKind { linear, bilinear, mlp };

inline std::string_view to_string(HeadKind k) {
  switch (k) {
    case HeadKind::linear: return "linear";
    case HeadKind::bilinear: return "bilinear";
    case HeadKind::mlp: return "mlp";
  }
  return "?";
}

inline HeadKind parse_head_kind(std::string_view s) {
  if (s == "linear") return HeadKind::linear;
  if (s == "bilinear") return HeadKind::bilinear;
  if (s == "mlp") return HeadKind::mlp;
  throw ConfigError("unknown head kind '" + std::string(s) + "' (linear|bilinear|mlp)");
}

struct PolicyDims {
  int embed_dim = 0;      // d_e, width of the precomputed prompt embedding
  int arms = 0;           // K
  int pref_hidden = 64;   // hidden width of the preference encoder
  int pref_dim = 64;      // d_p, output width of the preference encoder
  int head_hidden = 256;  // hidden width of the MLP head
  int bilinear_rank = 8;  // rank of each per-arm interaction matrix

  int joint_dim() const { return embed_dim + pref_dim; }
  bool operator==(const PolicyDims&) const = default;
};

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatMap = Eigen::Map<const RowMatrix>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstVecMap = Eigen::Map<const Vector>;
using VecMap = Eigen::Map<Vector>;

// Offsets of each parameter block inside the flat parameter vector. Weight
// blocks are stored row-major as (out x in).
struct ParamLayout {
  struct Block {
    Eigen::Index offset = 0;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    Eigen::Index size() const { return rows * cols; }
  };

  Block pref_w1, pref_b1, pref_w2, pref_b2;
  Block head_w1, head_b1;  // mlp hidden layer
  Block out_w, out_b;      // linear / mlp output; bilinear linear residual
  Block bil_u, bil_v;      // bilinear factors: K blocks of (d_e x r) and (d_p x r)
  Eigen::Index total = 0;

  ParamLayout(HeadKind kind, const PolicyDims& d) {
    auto take = [this](Eigen::Index rows, Eigen::Index cols) {
      Block b{total, rows, cols};
      total += rows * cols;
      return b;
    };
    pref_w1 = take(d.pref_hidden, 2);
    pref_b1 = take(d.pref_hidden, 1);
    pref_w2 = take(d.pref_dim, d.pref_hidden);
    pref_b2 = take(d.pref_dim, 1);
    switch (kind) {
      case HeadKind::linear:
        out_w = take(d.arms, d.joint_dim());
        out_b = take(d.arms, 1);
        break;
      case HeadKind::mlp:
        head_w1 = take(d.head_hidden, d.joint_dim());
        head_b1 = take(d.head_hidden, 1);
        out_w = take(d.arms, d.head_hidden);
        out_b = take(d.arms, 1);
        break;
      case HeadKind::bilinear:
        bil_u = take(static_cast<Eigen::Index>(d.arms) * d.embed_dim, d.bilinear_rank);
        bil_v = take(static_cast<Eigen::Index>(d.arms) * d.pref_dim, d.bilinear_rank);
        out_w = take(d.arms, d.joint_dim());
        out_b = take(d.arms, 1);
        break;
    }
  }
};

inline constexpr double kLogitClamp = 50.0;

/// Forward-pass result: logits, probabilities and the activations needed
/// by `backward`.
struct PolicyOutput {
  Vector logits;     // after clamping to |o| <= kLogitClamp
  Vector probs;
  Vector log_probs;
  bool clamped = false;

  // cached activations
  Vector pref_input;  // (w_q, w_c)
  Vector pref_pre;    // preference encoder hidden pre-activation
  Vector joint;       // z = [embedding; phi(w)]
  Vector head_pre;    // mlp head hidden pre-activation
  Vector clamp_mask;  // 1 where the logit was inside the clamp range
};

/// Softmax with max subtraction. Fills logits/probs/log_probs.
inline void apply_softmax(PolicyOutput& out, const Vector& raw_logits) {
  out.logits = raw_logits;
  out.clamp_mask = Vector::Ones(raw_logits.size());
  out.clamped = false;
  for (Eigen::Index i = 0; i < raw_logits.size(); ++i) {
    if (std::abs(raw_logits[i]) > kLogitClamp) {
      out.logits[i] = std::copysign(kLogitClamp, raw_logits[i]);
      out.clamp_mask[i] = 0.0;
      out.clamped = true;
    }
  }
  const double mx = out.logits.maxCoeff();
  const Vector shifted = out.logits.array() - mx;
  const double log_norm = std::log(shifted.array().exp().sum());
  out.log_probs = shifted.array() - log_norm;
  out.probs = out.log_probs.array().exp();
}

inline PolicyOutput softmax_output(const Vector& logits) {
  PolicyOutput out;
  apply_softmax(out, logits);
  return out;
}

/// Shannon entropy in nats.
inline double entropy(const PolicyOutput& out) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < out.probs.size(); ++i) {
    if (out.probs[i] > 0.0) h -= out.probs[i] * out.log_probs[i];
  }
  return std::max(h, 0.0);
}

/// Lowest index attaining the maximum probability.
inline std::size_t select_argmax(const PolicyOutput& out) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < out.probs.size(); ++i) {
    if (out.probs[i] > out.probs[best]) best = i;
  }
  return static_cast<std::size_t>(best);
}

/// Categorical draw by inverse CDF; consumes one uniform from `rng`.
inline std::size_t select_sample(const PolicyOutput& out, SeededRng& rng) {
  const double u = rng.uniform();
  double cum = 0.0;
  std::size_t last_positive = 0;
  for (Eigen::Index i = 0; i < out.probs.size(); ++i) {
    if (out.probs[i] <= 0.0) continue;
    cum += out.probs[i];
    last_positive = static_cast<std::size_t>(i);
    if (u < cum) return last_positive;
  }
  return last_positive;
}

/// Gradient of the per-sample loss  -advantage * log pi[action] - beta * H(pi)
/// with respect to the logits.
inline Vector loss_logit_gradient(const PolicyOutput& out, std::size_t action, double advantage,
                                  double beta) {
  const double h = entropy(out);
  Vector g(out.probs.size());
  for (Eigen::Index j = 0; j < g.size(); ++j) {
    const double indicator = static_cast<std::size_t>(j) == action ? 1.0 : 0.0;
    g[j] = advantage * (out.probs[j] - indicator) + beta * out.probs[j] * (out.log_probs[j] + h);
  }
  return g;
}

inline double sample_loss(const PolicyOutput& out, std::size_t action, double advantage,
                          double beta) {
  return -advantage * out.log_probs[static_cast<Eigen::Index>(action)] - beta * entropy(out);
}

/// Preference-conditioned routing policy: a ReLU preference encoder feeding
/// one of three decision heads over the joint representation
/// z = [embedding; phi(w)]. All parameters live in one flat vector.
class PolicyNetwork {
 public:
  PolicyNetwork(HeadKind kind, PolicyDims dims)
      : kind_(kind), dims_(dims), layout_(kind, validated(dims)), params_(Vector::Zero(layout_.total)) {}

  /// Glorot-uniform weights, zero biases.
  static PolicyNetwork initialized(HeadKind kind, PolicyDims dims, std::uint64_t seed) {
    PolicyNetwork net(kind, dims);
    SeededRng rng(seed);
    const auto& l = net.layout_;
    auto fill = [&](const ParamLayout::Block& b, double fan_in, double fan_out) {
      const double s = std::sqrt(6.0 / (fan_in + fan_out));
      for (Eigen::Index i = 0; i < b.size(); ++i) {
        net.params_[b.offset + i] = (2.0 * rng.uniform() - 1.0) * s;
      }
    };
    fill(l.pref_w1, 2, dims.pref_hidden);
    fill(l.pref_w2, dims.pref_hidden, dims.pref_dim);
    switch (kind) {
      case HeadKind::linear:
        fill(l.out_w, dims.joint_dim(), dims.arms);
        break;
      case HeadKind::mlp:
        fill(l.head_w1, dims.joint_dim(), dims.head_hidden);
        fill(l.out_w, dims.head_hidden, dims.arms);
        break;
      case HeadKind::bilinear:
        fill(l.bil_u, dims.embed_dim, dims.bilinear_rank);
        fill(l.bil_v, dims.pref_dim, dims.bilinear_rank);
        fill(l.out_w, dims.joint_dim(), dims.arms);
        break;
    }
    return net;
  }

  HeadKind kind() const { return kind_; }
  const PolicyDims& dims() const { return dims_; }
  const ParamLayout& layout() const { return layout_; }
  Eigen::Index param_count() const { return layout_.total; }

  const Vector& params() const { return params_; }
  void set_params(const Vector& p) {
    if (p.size() != params_.size()) {
      throw DimensionError("parameter vector has " + std::to_string(p.size()) + " entries, expected " +
                           std::to_string(params_.size()));
    }
    require_finite(p, "policy parameters");
    params_ = p;
  }

  PolicyOutput forward(const Vector& embedding, const PreferenceVector& w) const {
    if (embedding.size() != dims_.embed_dim) {
      throw DimensionError("embedding has " + std::to_string(embedding.size()) +
                           " entries, network expects " + std::to_string(dims_.embed_dim));
    }
    PolicyOutput out;
    out.pref_input = Vector(2);
    out.pref_input << w.w_q(), w.w_c();
    out.pref_pre = mat(layout_.pref_w1) * out.pref_input + vec(layout_.pref_b1);
    const Vector pref_hidden = out.pref_pre.cwiseMax(0.0);
    const Vector u = mat(layout_.pref_w2) * pref_hidden + vec(layout_.pref_b2);

    out.joint.resize(dims_.joint_dim());
    out.joint << embedding, u;

    Vector logits;
    switch (kind_) {
      case HeadKind::linear:
        logits = mat(layout_.out_w) * out.joint + vec(layout_.out_b);
        break;
      case HeadKind::mlp:
        out.head_pre = mat(layout_.head_w1) * out.joint + vec(layout_.head_b1);
        logits = mat(layout_.out_w) * out.head_pre.cwiseMax(0.0) + vec(layout_.out_b);
        break;
      case HeadKind::bilinear:
        logits = mat(layout_.out_w) * out.joint + vec(layout_.out_b);
        for (int a = 0; a < dims_.arms; ++a) {
          logits[a] += (bil_u(a).transpose() * embedding).dot(bil_v(a).transpose() * u);
        }
        break;
    }
    apply_softmax(out, logits);
    return out;
  }

  PolicyOutput forward(const Context& ctx) const { return forward(ctx.embedding, ctx.preference); }

  /// Adds scale * dL/dtheta into `grad` for the per-sample loss
  /// -advantage * log pi[action] - beta * H(pi). The embedding is frozen.
  void accumulate_gradient(const PolicyOutput& out, std::size_t action, double advantage, double beta,
                           Vector& grad, double scale = 1.0) const {
    if (out.joint.size() != dims_.joint_dim() || out.probs.size() != dims_.arms) {
      throw Error("backward called without a matching forward pass");
    }
    if (action >= static_cast<std::size_t>(dims_.arms)) {
      throw DimensionError("action " + std::to_string(action) + " out of range");
    }
    if (grad.size() != params_.size()) {
      throw DimensionError("gradient buffer has wrong length");
    }
    const Vector g_logits =
        scale * loss_logit_gradient(out, action, advantage, beta).cwiseProduct(out.clamp_mask);
    const Eigen::Index de = dims_.embed_dim;
    const Eigen::Index dp = dims_.pref_dim;
    Vector g_joint;

    switch (kind_) {
      case HeadKind::linear:
        grad_mat(grad, layout_.out_w).noalias() += g_logits * out.joint.transpose();
        grad_vec(grad, layout_.out_b) += g_logits;
        g_joint = mat(layout_.out_w).transpose() * g_logits;
        break;
      case HeadKind::mlp: {
        const Vector hidden = out.head_pre.cwiseMax(0.0);
        grad_mat(grad, layout_.out_w).noalias() += g_logits * hidden.transpose();
        grad_vec(grad, layout_.out_b) += g_logits;
        Vector g_pre = mat(layout_.out_w).transpose() * g_logits;
        for (Eigen::Index i = 0; i < g_pre.size(); ++i) {
          if (out.head_pre[i] <= 0.0) g_pre[i] = 0.0;
        }
        grad_mat(grad, layout_.head_w1).noalias() += g_pre * out.joint.transpose();
        grad_vec(grad, layout_.head_b1) += g_pre;
        g_joint = mat(layout_.head_w1).transpose() * g_pre;
        break;
      }
      case HeadKind::bilinear: {
        grad_mat(grad, layout_.out_w).noalias() += g_logits * out.joint.transpose();
        grad_vec(grad, layout_.out_b) += g_logits;
        g_joint = mat(layout_.out_w).transpose() * g_logits;
        const auto e = out.joint.head(de);
        const auto u = out.joint.tail(dp);
        for (int a = 0; a < dims_.arms; ++a) {
          const Vector p = bil_u(a).transpose() * e;  // r
          const Vector s = bil_v(a).transpose() * u;  // r
          grad_block(grad, layout_.bil_u, a, de).noalias() += g_logits[a] * e * s.transpose();
          grad_block(grad, layout_.bil_v, a, dp).noalias() += g_logits[a] * u * p.transpose();
          g_joint.tail(dp).noalias() += g_logits[a] * (bil_v(a) * p);
        }
        break;
      }
    }

    const Vector g_u = g_joint.tail(dp);
    const Vector pref_hidden = out.pref_pre.cwiseMax(0.0);
    grad_mat(grad, layout_.pref_w2).noalias() += g_u * pref_hidden.transpose();
    grad_vec(grad, layout_.pref_b2) += g_u;
    Vector g_pre = mat(layout_.pref_w2).transpose() * g_u;
    for (Eigen::Index i = 0; i < g_pre.size(); ++i) {
      if (out.pref_pre[i] <= 0.0) g_pre[i] = 0.0;
    }
    grad_mat(grad, layout_.pref_w1).noalias() += g_pre * out.pref_input.transpose();
    grad_vec(grad, layout_.pref_b1) += g_pre;
  }

  Vector backward(const PolicyOutput& out, std::size_t action, double advantage, double beta) const {
    Vector grad = Vector::Zero(params_.size());
    accumulate_gradient(out, action, advantage, beta, grad);
    return grad;
  }

  bool operator==(const PolicyNetwork& o) const {
    return kind_ == o.kind_ && dims_ == o.dims_ && params_ == o.params_;
  }

 private:
  static const PolicyDims& validated(const PolicyDims& d) {
    if (d.embed_dim < 1 || d.arms < 2 || d.pref_hidden < 1 || d.pref_dim < 1 || d.head_hidden < 1 ||
        d.bilinear_rank < 1) {
      throw ConfigError("invalid policy dimensions");
    }
    return d;
  }

  ConstMatMap mat(const ParamLayout::Block& b) const {
    return ConstMatMap(params_.data() + b.offset, b.rows, b.cols);
  }
  ConstVecMap vec(const ParamLayout::Block& b) const { return ConstVecMap(params_.data() + b.offset, b.rows); }
  ConstMatMap bil_u(int arm) const {
    const Eigen::Index n = static_cast<Eigen::Index>(dims_.embed_dim) * dims_.bilinear_rank;
    return ConstMatMap(params_.data() + layout_.bil_u.offset + arm * n, dims_.embed_dim, dims_.bilinear_rank);
  }
  ConstMatMap bil_v(int arm) const {
    const Eigen::Index n = static_cast<Eigen::Index>(dims_.pref_dim) * dims_.bilinear_rank;
    return ConstMatMap(params_.data() + layout_.bil_v.offset + arm * n, dims_.pref_dim, dims_.bilinear_rank);
  }

  static MatMap grad_mat(Vector& g, const ParamLayout::Block& b) {
    return MatMap(g.data() + b.offset, b.rows, b.cols);
  }
  static VecMap grad_vec(Vector& g, const ParamLayout::Block& b) { return VecMap(g.data() + b.offset, b.rows); }
  MatMap grad_block(Vector& g, const ParamLayout::Block& b, int arm, Eigen::Index rows) const {
    const Eigen::Index n = rows * dims_.bilinear_rank;
    return MatMap(g.data() + b.offset + arm * n, rows, dims_.bilinear_rank);
  }

  HeadKind kind_;
  PolicyDims dims_;
  ParamLayout layout_;
  Vector params_;
};

// ---------------------------------------------------------------------------
// Checkpoints: one JSON document. Doubles are written in shortest
// round-trip form, so load(save(x)) == x bit for bit.

inline constexpr std::string_view kCheckpointFormat = "prefroute.checkpoint";
inline constexpr int kCheckpointVersion = 1;

struct PolicyCheckpoint {
  PolicyNetwork network;
  std::uint64_t seed = 0;
  std::int64_t step = 0;
  nlohmann::json meta = nlohmann::json::object();
};

inline nlohmann::json dims_to_json(const PolicyDims& d) {
  return {{"embed_dim", d.embed_dim},     {"arms", d.arms},
          {"pref_hidden", d.pref_hidden}, {"pref_dim", d.pref_dim},
          {"head_hidden", d.head_hidden}, {"bilinear_rank", d.bilinear_rank}};
}

inline PolicyDims dims_from_json(const nlohmann::json& j) {
  PolicyDims d;
  d.embed_dim = j.at("embed_dim").get<int>();
  d.arms = j.at("arms").get<int>();
  d.pref_hidden = j.at("pref_hidden").get<int>();
  d.pref_dim = j.at("pref_dim").get<int>();
  d.head_hidden = j.at("head_hidden").get<int>();
  d.bilinear_rank = j.at("bilinear_rank").get<int>();
  return d;
}

inline nlohmann::json checkpoint_to_json(const PolicyCheckpoint& c) {
  const auto& p = c.network.params();
  return {{"format", kCheckpointFormat},
          {"version", kCheckpointVersion},
          {"kind", "policy"},
          {"head_kind", to_string(c.network.kind())},
          {"dims", dims_to_json(c.network.dims())},
          {"seed", c.seed},
          {"step", c.step},
          {"params", std::vector<double>(p.data(), p.data() + p.size())},
          {"meta", c.meta}};
}

inline PolicyCheckpoint checkpoint_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kCheckpointFormat || j.at("kind").get<std::string>() != "policy") {
      throw DataError("not a policy checkpoint");
    }
    if (j.at("version").get<int>() != kCheckpointVersion) throw DataError("unsupported checkpoint version");
    PolicyNetwork net(parse_head_kind(j.at("head_kind").get<std::string>()), dims_from_json(j.at("dims")));
    const auto values = j.at("params").get<std::vector<double>>();
    net.set_params(ConstVecMap(values.data(), static_cast<Eigen::Index>(values.size())));
    PolicyCheckpoint c{std::move(net), j.at("seed").get<std::uint64_t>(), j.at("step").get<std::int64_t>(),
                       j.value("meta", nlohmann::json::object())};
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  }
}

}  // namespace prefroute
