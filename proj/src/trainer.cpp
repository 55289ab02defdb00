#include "ose/trainer.hpp"

#include <charconv>
#include <cmath>
#include <limits>

#include <boost/multiprecision/cpp_dec_float.hpp>

#include "ose/rng.hpp"

namespace ose {

namespace {

using Decimal = boost::multiprecision::cpp_dec_float_100;

Decimal to_decimal(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return Decimal(std::string(buf, res.ptr));
}

Gradients zero_gradients(const Network& net) {
  Gradients g(net.layers.size());
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    for (const auto& t : net.layers[i].params) {
      g[i].push_back(Tensor{t.shape, std::vector<double>(t.size(), 0.0)});
    }
  }
  return g;
}

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double d : v) s += d * d;
  return std::sqrt(s);
}

}  // namespace

HyperParams HyperParams::from_constants(Dataset batch, double L, double G,
                                        double eps_sgd, std::uint64_t shuffle_seed) {
  HyperParams h;
  h.batch = std::move(batch);
  h.eta = fixed_lr(L, G, eps_sgd);
  h.shuffle_seed = shuffle_seed;
  h.lipschitz = L;
  h.grad_bound = G;
  h.eps_sgd = eps_sgd;
  return h;
}

LossAndGradient backprop(const Network& net, std::span<const double> x, int y,
                         const Loss& loss) {
  ForwardCache cache;
  const double out = forward(net, x, cache);
  LossAndGradient result;
  result.loss = loss.value(out, y);
  result.grads = zero_gradients(net);
  std::vector<double> grad{loss.derivative(out, y)};
  for (std::size_t i = net.layers.size(); i-- > 0;) {
    grad = layer_backward(net.layers[i], cache.values[i], cache.values[i + 1], grad,
                          result.grads[i]);
  }
  for (const auto& layer : result.grads) {
    for (const auto& t : layer) {
      for (double d : t.data) {
        if (!std::isfinite(d)) throw NumericError("non-finite gradient");
      }
    }
  }
  return result;
}

std::vector<double> flatten(const Gradients& g) {
  std::vector<double> out;
  for (const auto& layer : g) {
    for (const auto& t : layer) out.insert(out.end(), t.data.begin(), t.data.end());
  }
  return out;
}

TrainResult sgd_shuffling_train(Network net, const HyperParams& theta,
                                std::size_t steps, const Loss& loss) {
  if (theta.batch.empty()) throw PreconditionError("training batch is empty");
  if (!(theta.eta > 0.0)) throw PreconditionError("learning rate must be positive");
  TrainResult result;
  Rng rng(theta.shuffle_seed);
  const std::size_t n = theta.batch.size();
  std::size_t done = 0;
  try {
    while (done < steps) {
      const auto order = rng.permutation(n);
      for (std::size_t k = 0; k < n && done < steps; ++k) {
        const auto& pt = theta.batch.points[order[k]];
        auto lg = backprop(net, pt.x, pt.y, loss);
        for (std::size_t i = 0; i < net.layers.size(); ++i) {
          auto& params = net.layers[i].params;
          for (std::size_t j = 0; j < params.size(); ++j) {
            auto& w = params[j].data;
            const auto& g = lg.grads[i][j].data;
            for (std::size_t e = 0; e < w.size(); ++e) w[e] -= theta.eta * g[e];
          }
        }
        ++done;
      }
      const double e_hat = surrogate_error(net, theta.batch, loss);
      result.trace.e_hat_per_epoch.push_back(e_hat);
      if (!std::isfinite(e_hat) || e_hat > kDivergenceThreshold) {
        throw NumericError("surrogate error diverged");
      }
    }
  } catch (const NumericError& e) {
    result.trace.diverged = true;
    result.trace.note = e.what();
  } catch (const LossContractError& e) {
    result.trace.diverged = true;
    result.trace.note = e.what();
  }
  result.trace.steps_taken = done;
  result.network = std::move(net);
  return result;
}

std::uint64_t step_budget(double L, double G, double F0, double F_inf,
                          std::uint64_t n, double eps_sgd) {
  if (!(L > 0.0) || !(G > 0.0) || !(eps_sgd > 0.0)) {
    throw PreconditionError("step budget needs positive L, G and eps");
  }
  if (!(F0 >= F_inf)) throw PreconditionError("step budget needs F0 >= F_inf");
  const Decimal eps = to_decimal(eps_sgd);
  const Decimal numerator = Decimal(3) * to_decimal(L) * to_decimal(G) *
                            (to_decimal(F0) - to_decimal(F_inf)) * Decimal(n);
  const Decimal value = numerator / (eps * boost::multiprecision::sqrt(eps));
  Decimal floor_value = boost::multiprecision::floor(value);
  // sqrt is rounded in the last digit; snap values within that noise upward.
  const Decimal ceil_value = floor_value + 1;
  if (ceil_value - value < Decimal("1e-80") * ceil_value) floor_value = ceil_value;
  if (floor_value > Decimal(std::numeric_limits<std::uint64_t>::max())) {
    throw SizeError("step budget overflows 64 bits");
  }
  return floor_value.convert_to<std::uint64_t>();
}

double fixed_lr(double L, double G, double eps_sgd) {
  if (!(L > 0.0) || !(G > 0.0) || !(eps_sgd > 0.0)) {
    throw PreconditionError("learning rate needs positive L, G and eps");
  }
  return std::sqrt(eps_sgd) / (L * G);
}

SmoothnessEstimate estimate_smoothness(const Network& net, const Dataset& batch,
                                       const Loss& loss, std::size_t num_pairs,
                                       std::uint64_t seed) {
  if (batch.size() < 2) throw PreconditionError("smoothness needs two examples");
  if (num_pairs == 0) throw PreconditionError("smoothness needs at least one pair");
  Rng rng(seed);
  std::vector<std::optional<std::pair<double, std::vector<double>>>> memo(batch.size());
  auto eval = [&](std::size_t k) -> const std::pair<double, std::vector<double>>& {
    if (!memo[k]) {
      auto lg = backprop(net, batch.points[k].x, batch.points[k].y, loss);
      memo[k].emplace(lg.loss, flatten(lg.grads));
    }
    return *memo[k];
  };
  SmoothnessEstimate est;
  for (std::size_t s = 0; s < num_pairs; ++s) {
    const std::size_t i = rng.below(batch.size());
    std::size_t j = rng.below(batch.size() - 1);
    if (j >= i) ++j;
    const auto& [li, gi] = eval(i);
    const auto& [lj, gj] = eval(j);
    est.G_hat = std::max({est.G_hat, norm(gi), norm(gj)});
    const double denom = std::abs(li - lj);
    if (denom < 1e-9) continue;
    std::vector<double> diff(gi.size());
    for (std::size_t k = 0; k < gi.size(); ++k) diff[k] = gi[k] - gj[k];
    est.L_hat = std::max(est.L_hat, norm(diff) / denom);
    ++est.pairs_sampled;
  }
  if (est.pairs_sampled == 0) {
    throw EstimateUnavailableError("every sampled pair has equal losses", est.G_hat);
  }
  return est;
}

}  // namespace ose
