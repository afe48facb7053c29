#pragma once

// Random PPO / BC batches and central finite-difference checks against the
// analytic gradients.

#include <algorithm>
#include <cmath>
#include <vector>

#include "forage/policy.hpp"
#include "forage/rng.hpp"
#include "forage/train.hpp"

namespace gradcheck {

using namespace forage;

struct Batch {
  PolicyParams params;
  std::vector<StepSample> samples;
};

inline FeatureVector random_features(Rng& rng) {
  FeatureVector f{};
  f[0] = 1.0;
  for (std::size_t i = 1; i < kFeatureDim; ++i) f[i] = rng.uniform() * 2 - 1;
  return f;
}

// Ratios land either well inside the clip range or well outside it, never
// within 0.05 of a kink.
inline Batch random_batch(Rng& rng, double clip_eps) {
  Batch b;
  for (auto& t : b.params.theta) t = rng.uniform() * 2 - 1;
  for (auto& w : b.params.w) w = rng.uniform() * 2 - 1;
  const std::size_t n = 2 + rng.below(15);
  for (std::size_t k = 0; k < n; ++k) {
    StepSample s;
    const std::size_t n_actions = 2 + rng.below(7);
    for (std::size_t a = 0; a < n_actions; ++a) s.legal.push_back(random_features(rng));
    s.chosen = rng.below(n_actions);
    const double logp = log_softmax(b.params.theta, s.legal)[s.chosen];
    double ratio;
    switch (rng.below(3)) {
      case 0: ratio = 1.0 + (rng.uniform() * 2 - 1) * (clip_eps - 0.05); break;
      case 1: ratio = 1.0 + clip_eps + 0.05 + rng.uniform() * 0.5; break;
      default: ratio = (1.0 - clip_eps - 0.05) * (0.5 + 0.5 * rng.uniform()); break;
    }
    s.old_log_prob = logp - std::log(ratio);
    for (auto& v : s.value_features) v = rng.uniform();
    s.value_features[0] = 1.0;
    s.advantage = rng.uniform() * 4 - 2;
    s.ret = rng.uniform() * 2 - 0.5;
    b.samples.push_back(std::move(s));
  }
  return b;
}

template <std::size_t N>
double rel_error(const std::array<double, N>& analytic, const std::array<double, N>& numeric) {
  double diff = 0, na = 0, nn = 0;
  for (std::size_t i = 0; i < N; ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    na += analytic[i] * analytic[i];
    nn += numeric[i] * numeric[i];
  }
  const double scale = std::max(std::sqrt(std::max(na, nn)), 1e-12);
  return std::sqrt(diff) / scale;
}

template <std::size_t N, typename F>
std::array<double, N> central_diff(std::array<double, N> x, F&& f, double h = 1e-6) {
  std::array<double, N> g{};
  for (std::size_t i = 0; i < N; ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

struct Errors {
  double policy = 0;
  double value = 0;
  double bc = 0;
};

inline Errors check(const Batch& b, const TrainConfig& cfg) {
  Errors e;
  const auto analytic = ppo_loss_and_grad(b.samples, b.params, cfg);
  const auto fd_theta = central_diff(b.params.theta, [&](const FeatureVector& th) {
    PolicyParams p = b.params;
    p.theta = th;
    return ppo_loss_and_grad(b.samples, p, cfg).loss;
  });
  e.policy = rel_error(analytic.grad_theta, fd_theta);
  const auto fd_w = central_diff(b.params.w, [&](const ValueFeatures& w) {
    PolicyParams p = b.params;
    p.w = w;
    return ppo_loss_and_grad(b.samples, p, cfg).loss;
  });
  e.value = rel_error(analytic.grad_w, fd_w);

  std::vector<BcSample> bc;
  for (const auto& s : b.samples) bc.push_back(BcSample{s.legal, s.chosen});
  const auto fd_bc = central_diff(b.params.theta, [&](const FeatureVector& th) {
    PolicyParams p = b.params;
    p.theta = th;
    return bc_nll(p, bc);
  });
  e.bc = rel_error(bc_grad(b.params, bc), fd_bc);
  return e;
}

}  // namespace gradcheck
