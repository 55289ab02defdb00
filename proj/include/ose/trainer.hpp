#pragma once

// Backpropagation, shuffling-type SGD with a fixed learning rate, and the
// step-budget / smoothness helpers around it.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ose/errors.hpp"
#include "ose/metrics.hpp"
#include "ose/network.hpp"

namespace ose {

struct HyperParams {
  Dataset batch;
  double eta = 0.1;
  std::uint64_t shuffle_seed = 0;
  // Set when eta was derived from smoothness constants.
  std::optional<double> lipschitz, grad_bound, eps_sgd;

  // eta = sqrt(eps_sgd) / (L * G).
  static HyperParams from_constants(Dataset batch, double L, double G,
                                    double eps_sgd, std::uint64_t shuffle_seed = 0);
};

struct TrainTrace {
  std::vector<double> e_hat_per_epoch;
  std::size_t steps_taken = 0;
  bool diverged = false;
  std::string note;
};

struct TrainResult {
  Network network;
  TrainTrace trace;
};

// One gradient tensor list per layer, mirroring Network::layers[i].params.
using Gradients = std::vector<std::vector<Tensor>>;

struct LossAndGradient {
  double loss = 0.0;
  Gradients grads;
};

// Exact reverse-mode gradient of loss(forward(x), y). Throws NumericError on
// non-finite gradients.
LossAndGradient backprop(const Network& net, std::span<const double> x, int y,
                         const Loss& loss);

std::vector<double> flatten(const Gradients& g);

inline constexpr double kDivergenceThreshold = 1e6;

// Runs exactly `steps` single-example updates w <- w - eta * grad, drawing a
// fresh permutation of the batch at every epoch. Divergence marks the trace
// instead of throwing.
TrainResult sgd_shuffling_train(Network net, const HyperParams& theta,
                                std::size_t steps, const Loss& loss = {});

// floor(3 L G (F0 - F_inf) n / eps^(3/2)), with decimal inputs read from the
// shortest round-trip representation of each double.
std::uint64_t step_budget(double L, double G, double F0, double F_inf,
                          std::uint64_t n, double eps_sgd);

// sqrt(eps_sgd) / (L G).
double fixed_lr(double L, double G, double eps_sgd);

struct SmoothnessEstimate {
  double L_hat = 0.0;
  double G_hat = 0.0;
  std::size_t pairs_sampled = 0;
};

// Thrown when every sampled pair has (near) equal losses. Carries the gradient
// bound, which is still meaningful.
class EstimateUnavailableError : public Error {
 public:
  EstimateUnavailableError(const std::string& what, double g_hat)
      : Error(what), g_hat_(g_hat) {}
  double g_hat() const { return g_hat_; }

 private:
  double g_hat_;
};

// Empirical lower estimates of the smoothness constant L and gradient bound G
// from `num_pairs` random example pairs of `batch`.
SmoothnessEstimate estimate_smoothness(const Network& net, const Dataset& batch,
                                       const Loss& loss, std::size_t num_pairs,
                                       std::uint64_t seed);

}  // namespace ose
