#pragma once

// Objective functions: parameter size, surrogate inference cost (operation
// census), 0-1 error rate and the loss-based surrogate error.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ose/arch.hpp"
#include "ose/network.hpp"
#include "ose/poly_expr.hpp"

namespace ose {

struct DataPoint {
  std::vector<double> x;
  int y = 0;  // 0 or 1

  friend bool operator==(const DataPoint&, const DataPoint&) = default;
};

struct Dataset {
  std::vector<DataPoint> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  std::size_t dim() const { return points.empty() ? 0 : points.front().x.size(); }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Per-example loss with values in [0, 1].
class Loss {
 public:
  enum class Kind { kBoundedQuadratic };

  Loss() = default;
  explicit Loss(Kind kind) : kind_(kind) {}

  // Accepts "quadratic" and "bounded_quadratic".
  static Loss from_name(const std::string& name);
  std::string name() const;

  // Throws LossContractError when the value leaves [0, 1].
  double value(double output, int label) const;
  // d loss / d output.
  double derivative(double output, int label) const;

 private:
  Kind kind_ = Kind::kBoundedQuadratic;
};

// Scalar operation counts of a layer or network as polynomials.
struct OpCensus {
  PolyExpr additions;
  PolyExpr multiplications;
  // (length, count) of every other elementwise operation.
  std::vector<std::pair<PolyExpr, PolyExpr>> others;

  OpCensus& operator+=(const OpCensus& o);
  OpCensus scaled_by(const PolyExpr& factor) const;
};

// Census rules per layer kind. Additions use the accumulate-from-zero
// convention, so a length-m reduction costs m additions.
//   dense in->out:        in*out mults, in*out adds
//   activation on m:      one other op of length m
//   softmax on m:         m adds, exponentials and divisions of length m
//   scale on m:           one other op of length m
//   matmul (a x b)(b x c): abc mults, abc adds
//   attention p->H:       three dense p->H, outer product (H x 1)(1 x H),
//                         scale of H^2 entries, matmul (H x H)(H x 1),
//                         softmax on H
struct CensusModel {
  std::int64_t precision = 1;  // cost multiplier for other operations

  OpCensus layer_census(const LayerTemplate& layer) const;
  OpCensus census(const ArchTemplate& t) const;
  PolyExpr cost(const OpCensus& c) const;

  // Direct integer count for a concrete layer (independent of polynomials).
  std::int64_t layer_cost(const LayerInstance& layer) const;
};

struct MetricsReport {
  std::int64_t p = 0;
  std::int64_t i_hat = 0;
  double e_hat = 0.0;
  Rational e = 0;
  PolyExpr p_poly;
  PolyExpr i_poly;
};

PolyExpr layer_param_poly(const LayerTemplate& layer);

// Parameter count by summing evaluated weight shapes over the expanded layers.
std::int64_t param_size(const ArchTemplate& t, const ParamAssignment& a);
PolyExpr param_size_poly(const ArchTemplate& t);

PolyExpr surrogate_inference_poly(const ArchTemplate& t,
                                  const CensusModel& model = {});
std::int64_t surrogate_inference(const ArchTemplate& t, const ParamAssignment& a,
                                 const CensusModel& model = {});

// Fraction of points whose thresholded output differs from the label.
Rational error_rate(const Network& net, const Dataset& data);

// Mean loss over `batch`.
double surrogate_error(const Network& net, const Dataset& batch, const Loss& loss);

}  // namespace ose
