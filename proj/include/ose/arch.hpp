#pragma once

// Architecture families, their search spaces, and well-posedness checks.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ose/poly_expr.hpp"

namespace ose {

enum class VarRole { kDimension, kDepth, kDivisor, kOther };

struct ArchParamVar {
  std::string name;
  VarRole role = VarRole::kDimension;
  std::vector<std::int64_t> domain;  // strictly ascending, positive
};

// One point of the search space, in variable declaration order.
class ParamAssignment {
 public:
  ParamAssignment() = default;
  explicit ParamAssignment(std::vector<std::pair<std::string, std::int64_t>> values)
      : values_(std::move(values)) {}

  const std::vector<std::pair<std::string, std::int64_t>>& values() const {
    return values_;
  }
  std::optional<std::int64_t> get(std::string_view name) const;
  std::int64_t at(std::string_view name) const;
  void set(const std::string& name, std::int64_t value);
  std::size_t size() const { return values_.size(); }

  VarLookup lookup() const;
  std::string to_string() const;

  friend bool operator==(const ParamAssignment&, const ParamAssignment&) = default;
  // Lexicographic over values in declaration order.
  friend bool operator<(const ParamAssignment& a, const ParamAssignment& b);

 private:
  std::vector<std::pair<std::string, std::int64_t>> values_;
};

struct Constraint {
  enum class Kind { kDivides, kEquals };
  Kind kind = Kind::kDivides;
  // kDivides: lhs divides rhs. kEquals: lhs == rhs.
  PolyExpr lhs;
  PolyExpr rhs;

  bool holds(const ParamAssignment& a) const;
  std::string describe() const;
};

struct SearchSpace {
  std::vector<ArchParamVar> variables;
  std::vector<Constraint> constraints;
  std::vector<ParamAssignment> assignments;

  std::size_t size() const { return assignments.size(); }
};

enum class LayerKind {
  kDense,
  kActivation,
  kSoftmax,
  kScale,
  kMatmulPair,
  kAttentionBlock,
};

enum class Activation { kSigmoid, kRelu, kTanh };

// Segment tag of the A B^n C decomposition.
enum class Segment { kNone, kA, kB, kC };

struct LayerTemplate {
  LayerKind kind = LayerKind::kDense;
  Activation activation = Activation::kSigmoid;
  PolyExpr in_dim;
  PolyExpr out_dim;
  // Softmax groups or attention heads; the layer's width must be divisible by it.
  PolyExpr groups = PolyExpr::constant(1);
  // Matmul-pair shapes: (a x b) times (b x c).
  PolyExpr mm_a, mm_b, mm_c;
  double scale_factor = 1.0;
  bool has_bias = false;
  Segment segment = Segment::kNone;
  std::vector<std::vector<PolyExpr>> weight_shapes;

  static LayerTemplate dense(PolyExpr in, PolyExpr out, bool bias = true);
  static LayerTemplate activation_layer(Activation fn, PolyExpr dim);
  static LayerTemplate softmax(PolyExpr dim, PolyExpr groups = PolyExpr::constant(1));
  static LayerTemplate scale(PolyExpr dim, double factor);
  static LayerTemplate matmul_pair(PolyExpr a, PolyExpr b, PolyExpr c);
  // Single-block attention: three projections of the input to `hidden`,
  // outer product of keys and queries scaled by 1/sqrt(hidden/heads), applied
  // to the values, then softmax over `heads` groups.
  static LayerTemplate attention(PolyExpr in, PolyExpr hidden, PolyExpr heads);

  LayerTemplate& tagged(Segment s) {
    segment = s;
    return *this;
  }

  std::string kind_name() const;
};

class ArchTemplate {
 public:
  ArchTemplate() = default;
  // Throws SchemaError when the output dimension is not 1, when segment tags
  // are malformed, or when expressions mention undeclared variables.
  ArchTemplate(std::vector<std::string> variable_order,
               std::vector<LayerTemplate> layers, std::int64_t input_dim,
               std::optional<std::string> depth_variable = std::nullopt,
               std::vector<Constraint> constraints = {});

  const std::vector<std::string>& variable_order() const { return order_; }
  const std::vector<LayerTemplate>& layers() const { return layers_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  std::int64_t input_dim() const { return input_dim_; }
  std::int64_t output_dim() const { return 1; }
  bool segmented() const { return depth_var_.has_value(); }
  const std::optional<std::string>& depth_variable() const { return depth_var_; }

  // Layers in evaluation order for an assignment, with the B segment repeated
  // depth-variable times.
  std::vector<const LayerTemplate*> expanded(const ParamAssignment& a) const;

  // Layer indices of each tagged segment (empty when untagged).
  std::vector<std::size_t> segment_layers(Segment s) const;

 private:
  std::vector<std::string> order_;
  std::vector<LayerTemplate> layers_;
  std::vector<Constraint> constraints_;
  std::int64_t input_dim_ = 1;
  std::optional<std::string> depth_var_;
};

struct ValidationReport {
  bool well_posed = true;
  std::vector<std::string> issues;
};

// Issues preventing `a` from instantiating `t`; empty when valid.
std::vector<std::string> assignment_issues(const ArchTemplate& t,
                                           const ParamAssignment& a);

// Well-posedness of every assignment in `space` for `t`. Throws SchemaError
// on variable-name mismatch and InvalidSpaceError on an empty space.
ValidationReport validate_search_space(const ArchTemplate& t,
                                       const SearchSpace& space);

inline constexpr std::size_t kDefaultEnumerationCap = 1'000'000;

// Filtered Cartesian product of the domains, first variable most significant.
// Throws SizeError above `cap` and InvalidSpaceError when nothing survives.
SearchSpace enumerate_space(const std::vector<ArchParamVar>& variables,
                            const std::vector<Constraint>& constraints,
                            std::size_t cap = kDefaultEnumerationCap);

}  // namespace ose
