#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "uninfo/common.hpp"
#include "uninfo/errors.hpp"

namespace uninfo {

struct AdamWConfig {
  double lr = 1e-3;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected adaptive moment step with decoupled weight decay on one
/// contiguous tensor. `step` is the 1-based count including this update.
template <typename Scalar>
void adamw_update(std::span<Scalar> theta, std::span<const Scalar> grad, std::span<Scalar> m, std::span<Scalar> v,
                  long step, const AdamWConfig& cfg) {
  require(theta.size() == grad.size() && theta.size() == m.size() && theta.size() == v.size(), ErrorCode::ShapeMismatch,
          "optimizer tensors differ in size");
  require(step >= 1, ErrorCode::InvalidArgument, "optimizer step counter starts at 1");
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double g = grad[i];
    const double mi = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
    const double vi = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
    m[i] = static_cast<Scalar>(mi);
    v[i] = static_cast<Scalar>(vi);
    const double t = theta[i];
    const double adaptive = (mi / c1) / (std::sqrt(vi / c2) + cfg.eps);
    theta[i] = static_cast<Scalar>(t - cfg.lr * cfg.weight_decay * t - cfg.lr * adaptive);
  }
}

/// Moment buffers for every tensor of a parameter container.
template <typename Scalar>
struct AdamWState {
  std::vector<std::vector<Scalar>> first;
  std::vector<std::vector<Scalar>> second;
  long step = 0;

  template <typename Params>
  static AdamWState for_params(const Params& params) {
    AdamWState st;
    params.for_each_tensor([&](const std::string&, const auto& t) {
      st.first.emplace_back(static_cast<std::size_t>(t.size()), Scalar(0));
      st.second.emplace_back(static_cast<std::size_t>(t.size()), Scalar(0));
    });
    return st;
  }
};

/// One AdamW step over every tensor of `params` (anything exposing
/// for_each_tensor), using the matching tensors of `grads`.
template <typename Scalar, typename Params>
void adamw_step(Params& params, const Params& grads, AdamWState<Scalar>& state, const AdamWConfig& cfg) {
  std::vector<std::span<const Scalar>> g;
  grads.for_each_tensor([&](const std::string&, const auto& t) {
    g.emplace_back(t.data(), static_cast<std::size_t>(t.size()));
  });
  ++state.step;
  std::size_t i = 0;
  params.for_each_tensor([&](const std::string&, auto& t) {
    require(i < g.size() && i < state.first.size(), ErrorCode::ShapeMismatch, "optimizer state does not match params");
    adamw_update<Scalar>(std::span<Scalar>(t.data(), static_cast<std::size_t>(t.size())), g[i], state.first[i],
                         state.second[i], state.step, cfg);
    ++i;
  });
  require(i == g.size(), ErrorCode::ShapeMismatch, "optimizer state does not match params");
}

}  // namespace uninfo
