#include "ose/arch.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "ose/errors.hpp"

namespace ose {

std::optional<std::int64_t> ParamAssignment::get(std::string_view name) const {
  for (const auto& [n, v] : values_) {
    if (n == name) return v;
  }
  return std::nullopt;
}

std::int64_t ParamAssignment::at(std::string_view name) const {
  auto v = get(name);
  if (!v) throw SchemaError("assignment has no variable '" + std::string(name) + "'");
  return *v;
}

void ParamAssignment::set(const std::string& name, std::int64_t value) {
  for (auto& [n, v] : values_) {
    if (n == name) {
      v = value;
      return;
    }
  }
  values_.emplace_back(name, value);
}

VarLookup ParamAssignment::lookup() const {
  // Captures a copy so the lookup may outlive a temporary assignment.
  return [values = values_](std::string_view name) -> std::optional<std::int64_t> {
    for (const auto& [n, v] : values) {
      if (n == name) return v;
    }
    return std::nullopt;
  };
}

std::string ParamAssignment::to_string() const {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (i) os << ", ";
    os << values_[i].first << '=' << values_[i].second;
  }
  os << ')';
  return os.str();
}

bool operator<(const ParamAssignment& a, const ParamAssignment& b) {
  const std::size_t n = std::min(a.values_.size(), b.values_.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (a.values_[i].second != b.values_[i].second) {
      return a.values_[i].second < b.values_[i].second;
    }
  }
  return a.values_.size() < b.values_.size();
}

bool Constraint::holds(const ParamAssignment& a) const {
  const auto look = a.lookup();
  const std::int64_t l = lhs.evaluate(look);
  const std::int64_t r = rhs.evaluate(look);
  if (kind == Kind::kEquals) return l == r;
  return l != 0 && r % l == 0;
}

std::string Constraint::describe() const {
  if (kind == Kind::kEquals) return lhs.to_string() + " == " + rhs.to_string();
  return lhs.to_string() + " | " + rhs.to_string();
}

LayerTemplate LayerTemplate::dense(PolyExpr in, PolyExpr out, bool bias) {
  LayerTemplate l;
  l.kind = LayerKind::kDense;
  l.in_dim = std::move(in);
  l.out_dim = std::move(out);
  l.has_bias = bias;
  l.weight_shapes.push_back({l.out_dim, l.in_dim});
  if (bias) l.weight_shapes.push_back({l.out_dim});
  return l;
}

LayerTemplate LayerTemplate::activation_layer(Activation fn, PolyExpr dim) {
  LayerTemplate l;
  l.kind = LayerKind::kActivation;
  l.activation = fn;
  l.in_dim = dim;
  l.out_dim = std::move(dim);
  return l;
}

LayerTemplate LayerTemplate::softmax(PolyExpr dim, PolyExpr groups) {
  LayerTemplate l;
  l.kind = LayerKind::kSoftmax;
  l.in_dim = dim;
  l.out_dim = std::move(dim);
  l.groups = std::move(groups);
  return l;
}

LayerTemplate LayerTemplate::scale(PolyExpr dim, double factor) {
  LayerTemplate l;
  l.kind = LayerKind::kScale;
  l.in_dim = dim;
  l.out_dim = std::move(dim);
  l.scale_factor = factor;
  return l;
}

LayerTemplate LayerTemplate::matmul_pair(PolyExpr a, PolyExpr b, PolyExpr c) {
  LayerTemplate l;
  l.kind = LayerKind::kMatmulPair;
  l.in_dim = a * b + b * c;
  l.out_dim = a * c;
  l.mm_a = std::move(a);
  l.mm_b = std::move(b);
  l.mm_c = std::move(c);
  return l;
}

LayerTemplate LayerTemplate::attention(PolyExpr in, PolyExpr hidden,
                                       PolyExpr heads) {
  LayerTemplate l;
  l.kind = LayerKind::kAttentionBlock;
  l.in_dim = std::move(in);
  l.out_dim = std::move(hidden);
  l.groups = std::move(heads);
  l.has_bias = true;
  for (int i = 0; i < 3; ++i) l.weight_shapes.push_back({l.out_dim, l.in_dim});
  for (int i = 0; i < 3; ++i) l.weight_shapes.push_back({l.out_dim});
  return l;
}

std::string LayerTemplate::kind_name() const {
  switch (kind) {
    case LayerKind::kDense:
      return "dense";
    case LayerKind::kActivation:
      switch (activation) {
        case Activation::kSigmoid:
          return "sigmoid";
        case Activation::kRelu:
          return "relu";
        case Activation::kTanh:
          return "tanh";
      }
      break;
    case LayerKind::kSoftmax:
      return "softmax";
    case LayerKind::kScale:
      return "scale";
    case LayerKind::kMatmulPair:
      return "matmul_pair";
    case LayerKind::kAttentionBlock:
      return "attention";
  }
  return "unknown";
}

namespace {

void check_declared(const PolyExpr& p, const std::set<std::string>& declared,
                    const std::string& where) {
  for (const auto& v : p.used_variables()) {
    if (!declared.count(v)) {
      throw SchemaError("unknown variable '" + v + "' in " + where);
    }
  }
}

PolyExpr reorder(const PolyExpr& p, const std::vector<std::string>& order) {
  return p.reordered(order);
}

}  // namespace

ArchTemplate::ArchTemplate(std::vector<std::string> variable_order,
                           std::vector<LayerTemplate> layers,
                           std::int64_t input_dim,
                           std::optional<std::string> depth_variable,
                           std::vector<Constraint> constraints)
    : order_(std::move(variable_order)),
      layers_(std::move(layers)),
      constraints_(std::move(constraints)),
      input_dim_(input_dim),
      depth_var_(std::move(depth_variable)) {
  std::set<std::string> declared(order_.begin(), order_.end());
  if (declared.size() != order_.size()) {
    throw SchemaError("variable names must be unique");
  }
  if (input_dim_ <= 0) throw SchemaError("input dimension must be positive");

  for (std::size_t i = 0; i < layers_.size(); ++i) {
    auto& l = layers_[i];
    const std::string where = "layer " + std::to_string(i);
    for (PolyExpr* p : {&l.in_dim, &l.out_dim, &l.groups, &l.mm_a, &l.mm_b, &l.mm_c}) {
      check_declared(*p, declared, where);
      *p = reorder(*p, order_);
    }
    for (auto& shape : l.weight_shapes) {
      for (auto& d : shape) d = reorder(d, order_);
    }
  }
  for (auto& c : constraints_) {
    check_declared(c.lhs, declared, "constraint");
    check_declared(c.rhs, declared, "constraint");
    c.lhs = reorder(c.lhs, order_);
    c.rhs = reorder(c.rhs, order_);
  }

  if (!depth_var_) {
    for (const auto& l : layers_) {
      if (l.segment != Segment::kNone) {
        throw SchemaError("segment tags require a depth variable");
      }
    }
    return;
  }
  if (!declared.count(*depth_var_)) {
    throw SchemaError("unknown depth variable '" + *depth_var_ + "'");
  }
  // Tags must read A+ B+ C+ in order.
  int stage = 0;
  std::size_t counts[4] = {0, 0, 0, 0};
  for (const auto& l : layers_) {
    int s = static_cast<int>(l.segment);
    if (l.segment == Segment::kNone) {
      throw SchemaError("every layer of a segmented template needs a tag");
    }
    if (s < stage) throw SchemaError("segments must appear in order A, B, C");
    stage = s;
    ++counts[s];
  }
  if (counts[1] == 0) throw SchemaError("segmented template has no A segment");
  if (counts[2] == 0) throw SchemaError("segmented template has no B segment");
  if (counts[3] == 0) throw SchemaError("segmented template has no C segment");
}

std::vector<const LayerTemplate*> ArchTemplate::expanded(
    const ParamAssignment& a) const {
  std::vector<const LayerTemplate*> out;
  if (!depth_var_) {
    for (const auto& l : layers_) out.push_back(&l);
    return out;
  }
  const std::int64_t n = a.at(*depth_var_);
  std::vector<const LayerTemplate*> block;
  for (const auto& l : layers_) {
    if (l.segment == Segment::kB) block.push_back(&l);
  }
  bool emitted_b = false;
  for (const auto& l : layers_) {
    if (l.segment != Segment::kB) {
      out.push_back(&l);
    } else if (!emitted_b) {
      for (std::int64_t r = 0; r < n; ++r) {
        out.insert(out.end(), block.begin(), block.end());
      }
      emitted_b = true;
    }
  }
  return out;
}

std::vector<std::size_t> ArchTemplate::segment_layers(Segment s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].segment == s) out.push_back(i);
  }
  return out;
}

std::vector<std::string> assignment_issues(const ArchTemplate& t,
                                           const ParamAssignment& a) {
  std::vector<std::string> issues;
  for (const auto& v : t.variable_order()) {
    auto value = a.get(v);
    if (!value) {
      issues.push_back("variable '" + v + "' is unassigned");
    } else if (*value <= 0) {
      issues.push_back("variable '" + v + "' must be positive");
    }
  }
  if (!issues.empty()) return issues;

  const auto look = a.lookup();
  for (const auto& c : t.constraints()) {
    if (!c.holds(a)) issues.push_back("constraint violated: " + c.describe());
  }
  const auto layers = t.expanded(a);
  if (layers.empty()) {
    issues.push_back("template has no layers");
    return issues;
  }

  auto eval = [&](const PolyExpr& p, const std::string& what,
                  std::size_t i) -> std::optional<std::int64_t> {
    try {
      std::int64_t v = p.evaluate(look);
      if (v <= 0) {
        issues.push_back("layer " + std::to_string(i) + " " + what +
                         " is not positive");
        return std::nullopt;
      }
      return v;
    } catch (const Error& e) {
      issues.push_back("layer " + std::to_string(i) + " " + what + ": " + e.what());
      return std::nullopt;
    }
  };

  std::optional<std::int64_t> prev_out = t.input_dim();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerTemplate& l = *layers[i];
    auto in = eval(l.in_dim, "input dimension", i);
    auto out = eval(l.out_dim, "output dimension", i);
    if (in && prev_out && *in != *prev_out) {
      if (i == 0) {
        issues.push_back("first layer expects " + std::to_string(*in) +
                         " inputs but the network input has " +
                         std::to_string(*prev_out));
      } else {
        issues.push_back("layer " + std::to_string(i) + " expects " +
                         std::to_string(*in) + " inputs but layer " +
                         std::to_string(i - 1) + " produces " +
                         std::to_string(*prev_out));
      }
    }
    if (l.kind == LayerKind::kSoftmax || l.kind == LayerKind::kAttentionBlock) {
      auto g = eval(l.groups, "group count", i);
      if (g && out && *out % *g != 0) {
        issues.push_back("layer " + std::to_string(i) + " width " +
                         std::to_string(*out) + " is not divisible by " +
                         std::to_string(*g) + " groups");
      }
    }
    if (l.kind == LayerKind::kMatmulPair) {
      eval(l.mm_a, "matmul rows", i);
      eval(l.mm_b, "matmul inner dimension", i);
      eval(l.mm_c, "matmul columns", i);
    }
    prev_out = out;
  }
  if (prev_out && *prev_out != t.output_dim()) {
    issues.push_back("last layer produces " + std::to_string(*prev_out) +
                     " outputs, expected 1");
  }
  const LayerTemplate& last = *layers.back();
  if (last.kind != LayerKind::kActivation ||
      last.activation != Activation::kSigmoid) {
    issues.push_back("last layer must be a sigmoid activation");
  }
  return issues;
}

ValidationReport validate_search_space(const ArchTemplate& t,
                                       const SearchSpace& space) {
  std::set<std::string> declared;
  for (const auto& v : space.variables) declared.insert(v.name);
  for (const auto& v : t.variable_order()) {
    if (!declared.count(v)) {
      throw SchemaError("template variable '" + v +
                        "' is not declared by the search space");
    }
  }
  for (const auto& v : space.variables) {
    const auto& order = t.variable_order();
    if (std::find(order.begin(), order.end(), v.name) == order.end()) {
      throw SchemaError("search space variable '" + v.name +
                        "' is unknown to the template");
    }
  }
  if (space.assignments.empty()) {
    throw InvalidSpaceError("search space has no assignments");
  }

  ValidationReport report;
  for (std::size_t i = 0; i < space.assignments.size(); ++i) {
    const auto& a = space.assignments[i];
    const std::string prefix =
        "assignment #" + std::to_string(i) + " " + a.to_string() + ": ";
    if (a.size() != space.variables.size()) {
      report.issues.push_back(prefix + "wrong number of variables");
    }
    for (const auto& [name, value] : a.values()) {
      if (!declared.count(name)) {
        throw SchemaError("assignment uses unknown variable '" + name + "'");
      }
    }
    for (const auto& v : space.variables) {
      auto value = a.get(v.name);
      if (value && !std::binary_search(v.domain.begin(), v.domain.end(), *value)) {
        report.issues.push_back(prefix + v.name + "=" + std::to_string(*value) +
                                " is outside its domain");
      }
    }
    for (const auto& c : space.constraints) {
      bool ok = false;
      try {
        ok = c.holds(a);
      } catch (const Error&) {
      }
      if (!ok) report.issues.push_back(prefix + "constraint violated: " + c.describe());
    }
    for (auto& issue : assignment_issues(t, a)) {
      report.issues.push_back(prefix + issue);
    }
  }
  // De-duplicate constraint messages reported by both space and template.
  std::vector<std::string> unique;
  for (auto& s : report.issues) {
    if (std::find(unique.begin(), unique.end(), s) == unique.end()) {
      unique.push_back(std::move(s));
    }
  }
  report.issues = std::move(unique);
  report.well_posed = report.issues.empty();
  return report;
}

SearchSpace enumerate_space(const std::vector<ArchParamVar>& variables,
                            const std::vector<Constraint>& constraints,
                            std::size_t cap) {
  std::set<std::string> names;
  std::size_t total = 1;
  for (const auto& v : variables) {
    if (!names.insert(v.name).second) {
      throw SchemaError("duplicate variable '" + v.name + "'");
    }
    if (v.domain.empty()) throw SchemaError("variable '" + v.name + "' has an empty domain");
    for (std::size_t i = 0; i < v.domain.size(); ++i) {
      if (v.domain[i] <= 0) {
        throw SchemaError("variable '" + v.name + "' has a non-positive value");
      }
      if (i && v.domain[i] <= v.domain[i - 1]) {
        throw SchemaError("domain of '" + v.name + "' must be strictly ascending");
      }
    }
    if (v.domain.size() > cap / total) {
      throw SizeError("search space product exceeds the cap of " +
                      std::to_string(cap) + " assignments");
    }
    total *= v.domain.size();
  }
  for (const auto& c : constraints) {
    for (const auto* p : {&c.lhs, &c.rhs}) {
      for (const auto& u : p->used_variables()) {
        if (!names.count(u)) throw SchemaError("constraint uses unknown variable '" + u + "'");
      }
    }
  }

  SearchSpace space;
  space.variables = variables;
  space.constraints = constraints;
  std::vector<std::size_t> idx(variables.size(), 0);
  for (std::size_t n = 0; n < total; ++n) {
    std::vector<std::pair<std::string, std::int64_t>> values;
    values.reserve(variables.size());
    for (std::size_t k = 0; k < variables.size(); ++k) {
      values.emplace_back(variables[k].name, variables[k].domain[idx[k]]);
    }
    ParamAssignment a(std::move(values));
    bool ok = true;
    for (const auto& c : constraints) {
      if (!c.holds(a)) {
        ok = false;
        break;
      }
    }
    if (ok) space.assignments.push_back(std::move(a));
    // Odometer increment, last variable fastest.
    for (std::size_t k = variables.size(); k-- > 0;) {
      if (++idx[k] < variables[k].domain.size()) break;
      idx[k] = 0;
    }
  }
  if (space.assignments.empty()) {
    throw InvalidSpaceError("no assignment satisfies the constraints");
  }
  return space;
}

}  // namespace ose
