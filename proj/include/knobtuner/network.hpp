#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace knobtuner {

/// Actor-critic network: a shared tanh layer feeding a policy head (one tanh
/// hidden layer, then 3 logits per knob) and a value head (one tanh hidden
/// layer, then a scalar). All parameters live in one flat vector.
struct ActorCriticShape {
  std::size_t inputs = 0;
  std::size_t shared = 128;
  std::size_t head = 64;

  std::size_t logits() const noexcept { return 3 * inputs; }

  // Offsets into the flat parameter vector.
  std::size_t w_shared() const noexcept { return 0; }
  std::size_t b_shared() const noexcept { return w_shared() + shared * inputs; }
  std::size_t w_policy() const noexcept { return b_shared() + shared; }
  std::size_t b_policy() const noexcept { return w_policy() + head * shared; }
  std::size_t w_logits() const noexcept { return b_policy() + head; }
  std::size_t b_logits() const noexcept { return w_logits() + logits() * head; }
  std::size_t w_value() const noexcept { return b_logits() + logits(); }
  std::size_t b_value() const noexcept { return w_value() + head * shared; }
  std::size_t w_out() const noexcept { return b_value() + head; }
  std::size_t b_out() const noexcept { return w_out() + head; }
  std::size_t parameter_count() const noexcept { return b_out() + 1; }

  bool operator==(const ActorCriticShape&) const = default;
};

struct ForwardCache {
  std::vector<double> input;
  std::vector<double> shared;
  std::vector<double> policy_hidden;
  std::vector<double> logits;
  std::vector<double> value_hidden;
  double value = 0.0;
};

namespace detail {

// out = tanh(W x + b) or W x + b; W is rows x cols, row-major.
inline void affine(std::span<const double> w, std::span<const double> b,
                   std::span<const double> x, std::span<double> out, bool squash) {
  const std::size_t cols = x.size();
  const std::size_t blocked = cols - cols % 4;
  for (std::size_t r = 0; r < out.size(); ++r) {
    const double* row = w.data() + r * cols;
    // Four fixed partial sums: vectorizable without reassociation flags.
    double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
    for (std::size_t c = 0; c < blocked; c += 4) {
      a0 += row[c] * x[c];
      a1 += row[c + 1] * x[c + 1];
      a2 += row[c + 2] * x[c + 2];
      a3 += row[c + 3] * x[c + 3];
    }
    double acc = b[r] + ((a0 + a1) + (a2 + a3));
    for (std::size_t c = blocked; c < cols; ++c) acc += row[c] * x[c];
    out[r] = squash ? std::tanh(acc) : acc;
  }
}

// Accumulates dW += g x^T, db += g and, if dx is non-empty, dx += W^T g.
inline void affine_backward(std::span<const double> w, std::span<const double> x,
                            std::span<const double> g, std::span<double> dw,
                            std::span<double> db, std::span<double> dx) {
  const std::size_t cols = x.size();
  for (std::size_t r = 0; r < g.size(); ++r) {
    const double gr = g[r];
    if (gr == 0.0) continue;
    db[r] += gr;
    double* drow = dw.data() + r * cols;
    const double* row = w.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) drow[c] += gr * x[c];
    if (!dx.empty())
      for (std::size_t c = 0; c < cols; ++c) dx[c] += gr * row[c];
  }
}

}  // namespace detail

inline void forward(const ActorCriticShape& shape, std::span<const double> params,
                    std::span<const double> state, ForwardCache& cache) {
  using detail::affine;
  cache.input.assign(state.begin(), state.end());
  cache.shared.resize(shape.shared);
  cache.policy_hidden.resize(shape.head);
  cache.logits.resize(shape.logits());
  cache.value_hidden.resize(shape.head);

  auto slice = [&](std::size_t off, std::size_t len) { return params.subspan(off, len); };
  affine(slice(shape.w_shared(), shape.shared * shape.inputs), slice(shape.b_shared(), shape.shared),
         cache.input, cache.shared, true);
  affine(slice(shape.w_policy(), shape.head * shape.shared), slice(shape.b_policy(), shape.head),
         cache.shared, cache.policy_hidden, true);
  affine(slice(shape.w_logits(), shape.logits() * shape.head), slice(shape.b_logits(), shape.logits()),
         cache.policy_hidden, cache.logits, false);
  affine(slice(shape.w_value(), shape.head * shape.shared), slice(shape.b_value(), shape.head),
         cache.shared, cache.value_hidden, true);
  double v = params[shape.b_out()];
  for (std::size_t i = 0; i < shape.head; ++i) v += params[shape.w_out() + i] * cache.value_hidden[i];
  cache.value = v;
}

/// Accumulates into `grad` the gradient for upstream derivatives d(loss)/d(logits)
/// and d(loss)/d(value) at the cached forward pass.
inline void backward(const ActorCriticShape& shape, std::span<const double> params,
                     const ForwardCache& cache, std::span<const double> dlogits, double dvalue,
                     std::span<double> grad) {
  using detail::affine_backward;
  auto slice = [&](std::size_t off, std::size_t len) { return params.subspan(off, len); };
  auto gslice = [&](std::size_t off, std::size_t len) { return grad.subspan(off, len); };

  std::vector<double> dshared(shape.shared, 0.0);

  // value head
  std::vector<double> dzv(shape.head);
  grad[shape.b_out()] += dvalue;
  for (std::size_t i = 0; i < shape.head; ++i) {
    grad[shape.w_out() + i] += dvalue * cache.value_hidden[i];
    const double a = cache.value_hidden[i];
    dzv[i] = dvalue * params[shape.w_out() + i] * (1.0 - a * a);
  }
  affine_backward(slice(shape.w_value(), shape.head * shape.shared), cache.shared, dzv,
                  gslice(shape.w_value(), shape.head * shape.shared),
                  gslice(shape.b_value(), shape.head), dshared);

  // policy head
  std::vector<double> dhidden(shape.head, 0.0);
  affine_backward(slice(shape.w_logits(), shape.logits() * shape.head), cache.policy_hidden,
                  dlogits, gslice(shape.w_logits(), shape.logits() * shape.head),
                  gslice(shape.b_logits(), shape.logits()), dhidden);
  for (std::size_t i = 0; i < shape.head; ++i) {
    const double a = cache.policy_hidden[i];
    dhidden[i] *= 1.0 - a * a;
  }
  affine_backward(slice(shape.w_policy(), shape.head * shape.shared), cache.shared, dhidden,
                  gslice(shape.w_policy(), shape.head * shape.shared),
                  gslice(shape.b_policy(), shape.head), dshared);

  // shared layer
  for (std::size_t i = 0; i < shape.shared; ++i) {
    const double a = cache.shared[i];
    dshared[i] *= 1.0 - a * a;
  }
  affine_backward(slice(shape.w_shared(), shape.shared * shape.inputs), cache.input, dshared,
                  gslice(shape.w_shared(), shape.shared * shape.inputs),
                  gslice(shape.b_shared(), shape.shared), {});
}

/// Numerically stable softmax over each consecutive triple of logits.
inline std::vector<double> triple_softmax(std::span<const double> logits) {
  std::vector<double> probs(logits.size());
  for (std::size_t d = 0; 3 * d < logits.size(); ++d) {
    const double* z = logits.data() + 3 * d;
    const double m = std::max({z[0], z[1], z[2]});
    const double e0 = std::exp(z[0] - m), e1 = std::exp(z[1] - m), e2 = std::exp(z[2] - m);
    const double s = e0 + e1 + e2;
    probs[3 * d] = e0 / s;
    probs[3 * d + 1] = e1 / s;
    probs[3 * d + 2] = e2 / s;
  }
  return probs;
}

}  // namespace knobtuner
