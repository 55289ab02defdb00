#pragma once

// Concrete networks instantiated from an ArchTemplate at one assignment.

#include <cstdint>
#include <span>
#include <vector>

#include "ose/arch.hpp"

namespace ose {

struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;  // row-major

  std::size_t size() const { return data.size(); }
};

// A layer with every dimension evaluated.
struct LayerInstance {
  LayerKind kind = LayerKind::kDense;
  Activation activation = Activation::kSigmoid;
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t groups = 1;
  std::size_t mm_a = 0, mm_b = 0, mm_c = 0;
  double scale_factor = 1.0;
  bool has_bias = false;
  std::vector<Tensor> params;
};

struct Network {
  ParamAssignment assignment;
  std::size_t input_dim = 0;
  std::vector<LayerInstance> layers;

  std::size_t parameter_count() const;
  // All parameters concatenated in layer order, tensor order, row-major.
  std::vector<double> flat_parameters() const;
  void set_flat_parameters(std::span<const double> values);
};

struct InitScheme {
  enum class Kind { kUniformFanIn, kConstant };
  Kind kind = Kind::kUniformFanIn;
  double value = 0.0;  // for kConstant

  static InitScheme uniform_fan_in() { return {}; }
  static InitScheme constant(double v) { return {Kind::kConstant, v}; }
};

// Allocates and initializes weights. Uniform(-r, r) with r = 1/sqrt(fan_in) by
// default. Throws PreconditionError if `a` is not valid for `t`.
Network instantiate(const ArchTemplate& t, const ParamAssignment& a,
                    const InitScheme& init, std::uint64_t seed);

// Per-layer inputs plus the final output, kept for backpropagation.
struct ForwardCache {
  std::vector<std::vector<double>> values;  // values[i] feeds layer i
};

// Composed evaluation. Throws PreconditionError on a dimension mismatch and
// NumericError if any intermediate value is non-finite.
double forward(const Network& net, std::span<const double> x);
double forward(const Network& net, std::span<const double> x, ForwardCache& cache);

// Reverse pass through one layer. Accumulates parameter gradients into
// `grads` (same layout as layer.params) and returns the gradient w.r.t. input.
std::vector<double> layer_backward(const LayerInstance& layer,
                                   std::span<const double> input,
                                   std::span<const double> output,
                                   std::span<const double> grad_output,
                                   std::vector<Tensor>& grads);

std::vector<double> layer_forward(const LayerInstance& layer,
                                  std::span<const double> input);

// Classification rule: 1 iff output >= 0.5.
inline int classify(double output) { return output >= 0.5 ? 1 : 0; }

}  // namespace ose
