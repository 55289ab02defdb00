#include "ose/metrics.hpp"

#include <cmath>

#include "ose/errors.hpp"

namespace ose {

namespace {

PolyExpr poly(std::int64_t c) { return PolyExpr::constant(Rational(c)); }

OpCensus dense_census(const PolyExpr& in, const PolyExpr& out) {
  OpCensus c;
  c.multiplications = in * out;
  c.additions = in * out;
  return c;
}

OpCensus matmul_census(const PolyExpr& a, const PolyExpr& b, const PolyExpr& c) {
  OpCensus out;
  out.multiplications = a * b * c;
  out.additions = a * b * c;
  return out;
}

OpCensus softmax_census(const PolyExpr& m) {
  OpCensus c;
  c.additions = m;
  c.others.emplace_back(m, poly(1));  // exponentials
  c.others.emplace_back(m, poly(1));  // divisions
  return c;
}

std::int64_t eval_int(const PolyExpr& p, const ParamAssignment& a) {
  return p.evaluate(a.lookup());
}

// Size and cost are sums over layers, so they only need every variable bound
// and every dimension positive; chaining and the output layer are not needed.
void check_measurable(const ArchTemplate& t, const ParamAssignment& a) {
  for (const auto& v : t.variable_order()) {
    const auto value = a.get(v);
    if (!value || *value <= 0) {
      throw PreconditionError("invalid assignment " + a.to_string() + ": variable '" + v +
                              "' must be bound to a positive value");
    }
  }
  for (const LayerTemplate* l : t.expanded(a)) {
    for (const PolyExpr* d : {&l->in_dim, &l->out_dim}) {
      if (eval_int(*d, a) <= 0) {
        throw PreconditionError("invalid assignment " + a.to_string() + ": " +
                                l->kind_name() + " layer has a non-positive dimension");
      }
    }
  }
}

}  // namespace

Loss Loss::from_name(const std::string& name) {
  if (name == "quadratic" || name == "bounded_quadratic") {
    return Loss(Kind::kBoundedQuadratic);
  }
  throw SchemaError("unknown loss '" + name + "'");
}

std::string Loss::name() const { return "bounded_quadratic"; }

double Loss::value(double output, int label) const {
  const double d = output - static_cast<double>(label);
  const double v = d * d;
  if (!(v >= 0.0 && v <= 1.0)) {
    throw LossContractError("loss value " + std::to_string(v) + " is outside [0, 1]");
  }
  return v;
}

double Loss::derivative(double output, int label) const {
  return 2.0 * (output - static_cast<double>(label));
}

OpCensus& OpCensus::operator+=(const OpCensus& o) {
  additions += o.additions;
  multiplications += o.multiplications;
  others.insert(others.end(), o.others.begin(), o.others.end());
  return *this;
}

OpCensus OpCensus::scaled_by(const PolyExpr& factor) const {
  OpCensus c;
  c.additions = additions * factor;
  c.multiplications = multiplications * factor;
  for (const auto& [len, count] : others) c.others.emplace_back(len, count * factor);
  return c;
}

OpCensus CensusModel::layer_census(const LayerTemplate& l) const {
  switch (l.kind) {
    case LayerKind::kDense:
      return dense_census(l.in_dim, l.out_dim);
    case LayerKind::kActivation:
    case LayerKind::kScale: {
      OpCensus c;
      c.others.emplace_back(l.out_dim, poly(1));
      return c;
    }
    case LayerKind::kSoftmax:
      return softmax_census(l.out_dim);
    case LayerKind::kMatmulPair:
      return matmul_census(l.mm_a, l.mm_b, l.mm_c);
    case LayerKind::kAttentionBlock: {
      const PolyExpr& h = l.out_dim;
      OpCensus c = dense_census(l.in_dim, h).scaled_by(poly(3));
      c += matmul_census(h, poly(1), h);
      OpCensus scale;
      scale.others.emplace_back(h * h, poly(1));
      c += scale;
      c += matmul_census(h, h, poly(1));
      c += softmax_census(h);
      return c;
    }
  }
  throw SchemaError("unsupported layer kind");
}

OpCensus CensusModel::census(const ArchTemplate& t) const {
  OpCensus total;
  const PolyExpr depth = t.segmented() ? PolyExpr::variable(*t.depth_variable())
                                       : poly(1);
  for (const auto& l : t.layers()) {
    OpCensus c = layer_census(l);
    if (l.segment == Segment::kB) c = c.scaled_by(depth);
    total += c;
  }
  return total;
}

PolyExpr CensusModel::cost(const OpCensus& c) const {
  PolyExpr total = c.additions + c.multiplications;
  PolyExpr other;
  for (const auto& [len, count] : c.others) other += len * count;
  return total + other.scaled(Rational(precision));
}

std::int64_t CensusModel::layer_cost(const LayerInstance& l) const {
  const auto in = static_cast<std::int64_t>(l.in);
  const auto out = static_cast<std::int64_t>(l.out);
  switch (l.kind) {
    case LayerKind::kDense:
      return 2 * in * out;
    case LayerKind::kActivation:
    case LayerKind::kScale:
      return precision * out;
    case LayerKind::kSoftmax:
      return out + precision * 2 * out;
    case LayerKind::kMatmulPair:
      return 2 * static_cast<std::int64_t>(l.mm_a * l.mm_b * l.mm_c);
    case LayerKind::kAttentionBlock: {
      const std::int64_t projections = 3 * 2 * in * out;
      const std::int64_t outer = 2 * out * out;
      const std::int64_t scale = precision * out * out;
      const std::int64_t apply = 2 * out * out;
      const std::int64_t soft = out + precision * 2 * out;
      return projections + outer + scale + apply + soft;
    }
  }
  throw SchemaError("unsupported layer kind");
}

PolyExpr layer_param_poly(const LayerTemplate& l) {
  PolyExpr total;
  for (const auto& shape : l.weight_shapes) {
    PolyExpr prod = poly(1);
    for (const auto& d : shape) prod *= d;
    total += prod;
  }
  return total;
}

std::int64_t param_size(const ArchTemplate& t, const ParamAssignment& a) {
  check_measurable(t, a);
  std::int64_t total = 0;
  for (const LayerTemplate* l : t.expanded(a)) {
    for (const auto& shape : l->weight_shapes) {
      std::int64_t prod = 1;
      for (const auto& d : shape) prod *= eval_int(d, a);
      total += prod;
    }
  }
  return total;
}

PolyExpr param_size_poly(const ArchTemplate& t) {
  PolyExpr total;
  const PolyExpr depth = t.segmented() ? PolyExpr::variable(*t.depth_variable())
                                       : poly(1);
  for (const auto& l : t.layers()) {
    PolyExpr p = layer_param_poly(l);
    if (l.segment == Segment::kB) p *= depth;
    total += p;
  }
  return total.reordered(t.variable_order());
}

PolyExpr surrogate_inference_poly(const ArchTemplate& t, const CensusModel& model) {
  return model.cost(model.census(t)).reordered(t.variable_order());
}

std::int64_t surrogate_inference(const ArchTemplate& t, const ParamAssignment& a,
                                 const CensusModel& model) {
  check_measurable(t, a);
  std::int64_t total = 0;
  for (const LayerTemplate* lt : t.expanded(a)) {
    LayerInstance li;
    li.kind = lt->kind;
    li.in = static_cast<std::size_t>(eval_int(lt->in_dim, a));
    li.out = static_cast<std::size_t>(eval_int(lt->out_dim, a));
    if (lt->kind == LayerKind::kMatmulPair) {
      li.mm_a = static_cast<std::size_t>(eval_int(lt->mm_a, a));
      li.mm_b = static_cast<std::size_t>(eval_int(lt->mm_b, a));
      li.mm_c = static_cast<std::size_t>(eval_int(lt->mm_c, a));
    }
    total += model.layer_cost(li);
  }
  return total;
}

Rational error_rate(const Network& net, const Dataset& data) {
  if (data.empty()) throw PreconditionError("error rate of an empty dataset");
  std::int64_t wrong = 0;
  ForwardCache cache;
  for (const auto& pt : data.points) {
    if (classify(forward(net, pt.x, cache)) != pt.y) ++wrong;
  }
  return Rational(wrong) / Rational(static_cast<std::int64_t>(data.size()));
}

double surrogate_error(const Network& net, const Dataset& batch, const Loss& loss) {
  if (batch.empty()) throw PreconditionError("surrogate error of an empty batch");
  double sum = 0.0;
  ForwardCache cache;
  for (const auto& pt : batch.points) sum += loss.value(forward(net, pt.x, cache), pt.y);
  return sum / static_cast<double>(batch.size());
}

}  // namespace ose
