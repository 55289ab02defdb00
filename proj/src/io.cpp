#include "ose/io.hpp"

#include <bit>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "ose/rng.hpp"

namespace ose {

namespace {

PolyExpr dim_expr(const Json& layer, const char* key,
                  const std::vector<std::string>& order) {
  if (!layer.contains(key)) {
    throw SchemaError(std::string("layer is missing '") + key + "'");
  }
  const Json& v = layer.at(key);
  if (v.is_number_integer()) {
    const auto n = v.get<std::int64_t>();
    if (n <= 0) throw SchemaError(std::string("'") + key + "' must be positive");
    return PolyExpr::constant(n);
  }
  if (v.is_string()) return PolyExpr::parse(v.get<std::string>(), order);
  throw SchemaError(std::string("'") + key + "' must be an integer or expression string");
}

PolyExpr opt_dim_expr(const Json& layer, const char* key,
                      const std::vector<std::string>& order, std::int64_t fallback) {
  if (!layer.contains(key)) return PolyExpr::constant(fallback);
  return dim_expr(layer, key, order);
}

VarRole role_from_name(const std::string& s) {
  if (s == "dimension") return VarRole::kDimension;
  if (s == "depth") return VarRole::kDepth;
  if (s == "divisor") return VarRole::kDivisor;
  if (s == "other") return VarRole::kOther;
  throw SchemaError("unknown variable role '" + s + "'");
}

Segment segment_from_name(const std::string& s) {
  if (s == "A") return Segment::kA;
  if (s == "B") return Segment::kB;
  if (s == "C") return Segment::kC;
  throw SchemaError("unknown segment '" + s + "'");
}

LayerTemplate parse_layer(const Json& j, const std::vector<std::string>& order) {
  if (!j.is_object() || !j.contains("kind")) throw SchemaError("layer needs a 'kind'");
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "activation") kind = j.value("fn", std::string("sigmoid"));
  LayerTemplate l;
  if (kind == "dense") {
    l = LayerTemplate::dense(dim_expr(j, "in", order), dim_expr(j, "out", order),
                             j.value("bias", true));
  } else if (kind == "sigmoid" || kind == "relu" || kind == "tanh") {
    const Activation fn = kind == "sigmoid" ? Activation::kSigmoid
                          : kind == "relu"  ? Activation::kRelu
                                            : Activation::kTanh;
    l = LayerTemplate::activation_layer(fn, dim_expr(j, "dim", order));
  } else if (kind == "softmax") {
    l = LayerTemplate::softmax(dim_expr(j, "dim", order),
                               opt_dim_expr(j, "groups", order, 1));
  } else if (kind == "scale") {
    l = LayerTemplate::scale(dim_expr(j, "dim", order), j.value("factor", 1.0));
  } else if (kind == "matmul_pair") {
    l = LayerTemplate::matmul_pair(dim_expr(j, "a", order), dim_expr(j, "b", order),
                                   dim_expr(j, "c", order));
  } else if (kind == "attention") {
    l = LayerTemplate::attention(dim_expr(j, "in", order), dim_expr(j, "hidden", order),
                                 opt_dim_expr(j, "heads", order, 1));
  } else {
    throw SchemaError("unknown layer kind '" + kind + "'");
  }
  if (j.contains("segment")) l.tagged(segment_from_name(j.at("segment").get<std::string>()));
  return l;
}

Json poly_json(const PolyExpr& p) { return p.to_string(); }

}  // namespace

TemplateDoc parse_template(const Json& doc) {
  try {
    if (!doc.is_object()) throw SchemaError("template must be a JSON object");
    TemplateDoc out;
    std::vector<std::string> order;
    for (const auto& v : doc.at("variables")) {
      ArchParamVar var;
      var.name = v.at("name").get<std::string>();
      var.role = role_from_name(v.value("role", std::string("dimension")));
      var.domain = v.at("domain").get<std::vector<std::int64_t>>();
      if (var.domain.empty()) throw SchemaError("variable '" + var.name + "' has an empty domain");
      for (std::size_t k = 0; k < var.domain.size(); ++k) {
        if (var.domain[k] <= 0) {
          throw SchemaError("domain of '" + var.name + "' must be positive");
        }
        if (k > 0 && var.domain[k] <= var.domain[k - 1]) {
          throw SchemaError("domain of '" + var.name + "' must be strictly ascending");
        }
      }
      order.push_back(var.name);
      out.variables.push_back(std::move(var));
    }
    std::vector<Constraint> constraints;
    if (doc.contains("constraints")) {
      for (const auto& c : doc.at("constraints")) {
        Constraint con;
        const auto kind = c.at("kind").get<std::string>();
        if (kind == "divides") {
          con.kind = Constraint::Kind::kDivides;
        } else if (kind == "equals") {
          con.kind = Constraint::Kind::kEquals;
        } else {
          throw SchemaError("unknown constraint kind '" + kind + "'");
        }
        con.lhs = dim_expr(c, "lhs", order);
        con.rhs = dim_expr(c, "rhs", order);
        constraints.push_back(std::move(con));
      }
    }
    std::vector<LayerTemplate> layers;
    for (const auto& l : doc.at("layers")) layers.push_back(parse_layer(l, order));
    std::optional<std::string> depth;
    if (doc.contains("depth_variable") && !doc.at("depth_variable").is_null()) {
      depth = doc.at("depth_variable").get<std::string>();
    }
    const auto input_dim = doc.at("input_dim").get<std::int64_t>();
    if (input_dim <= 0) throw SchemaError("input_dim must be positive");
    out.arch = ArchTemplate(order, std::move(layers), input_dim, depth, std::move(constraints));
    return out;
  } catch (const Json::exception& e) {
    throw SchemaError(std::string("malformed template: ") + e.what());
  }
}

TemplateDoc load_template(const std::filesystem::path& path) {
  Json doc;
  try {
    doc = Json::parse(read_text(path));
  } catch (const Json::parse_error& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
  return parse_template(doc);
}

SearchSpace template_space(const TemplateDoc& doc, std::size_t cap) {
  return enumerate_space(doc.variables, doc.arch.constraints(), cap);
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    std::string_view f = line.substr(start, comma == std::string_view::npos
                                                ? std::string_view::npos
                                                : comma - start);
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) {
      f.remove_suffix(1);
    }
    out.push_back(f);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

bool parse_number(std::string_view f, double& out) {
  if (!f.empty() && f.front() == '+') f.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), out);
  return ec == std::errc() && ptr == f.data() + f.size() && !f.empty();
}

}  // namespace

Dataset parse_dataset_csv(const std::string& text) {
  Dataset data;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
    if (view.find_first_not_of(" \t") == std::string_view::npos) continue;
    const auto fields = split_fields(view);
    std::vector<double> values(fields.size());
    bool numeric = true;
    for (std::size_t k = 0; k < fields.size(); ++k) {
      numeric = numeric && parse_number(fields[k], values[k]);
    }
    if (first) {
      first = false;
      width = fields.size();
      if (width < 2) {
        throw FormatError("line " + std::to_string(line_no) +
                          ": need at least one feature and a label");
      }
      if (!numeric) continue;  // header
    }
    if (fields.size() != width) {
      throw FormatError("line " + std::to_string(line_no) + ": expected " +
                        std::to_string(width) + " fields, found " +
                        std::to_string(fields.size()));
    }
    if (!numeric) throw FormatError("line " + std::to_string(line_no) + ": non-numeric field");
    const double label = values.back();
    if (label != 0.0 && label != 1.0) {
      throw FormatError("line " + std::to_string(line_no) + ": label must be 0 or 1");
    }
    values.pop_back();
    data.points.push_back({std::move(values), static_cast<int>(label)});
  }
  if (data.empty()) throw FormatError("dataset has no rows");
  return data;
}

Dataset load_dataset(const std::filesystem::path& path) {
  return parse_dataset_csv(read_text(path));
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw FormatError("cannot format number");
  return std::string(buf, ptr);
}

std::string format_rational(const Rational& r) {
  std::ostringstream os;
  os << numerator(r);
  if (denominator(r) != 1) os << '/' << denominator(r);
  return os.str();
}

std::string dataset_to_csv(const Dataset& data) {
  std::string out;
  const std::size_t p = data.dim();
  for (std::size_t k = 0; k < p; ++k) out += "x" + std::to_string(k) + ",";
  out += "y\n";
  for (const auto& pt : data.points) {
    for (double v : pt.x) out += format_double(v) + ",";
    out += std::to_string(pt.y) + "\n";
  }
  return out;
}

void save_dataset(const Dataset& data, const std::filesystem::path& path) {
  write_text(path, dataset_to_csv(data));
}

DataKind data_kind_from_name(const std::string& name) {
  if (name == "blobs") return DataKind::kBlobs;
  if (name == "xor") return DataKind::kXor;
  if (name == "linear") return DataKind::kLinear;
  throw SchemaError("unknown dataset kind '" + name + "'");
}

Dataset gen_data(DataKind kind, std::size_t n, std::size_t p, double noise,
                 std::uint64_t seed) {
  if (n < 1 || p < 1) throw PreconditionError("n and p must be at least 1");
  if (kind == DataKind::kXor && p < 2) throw PreconditionError("xor needs p >= 2");
  if (!(noise >= 0.0)) throw PreconditionError("noise must be non-negative");
  Rng rng(seed);
  std::vector<double> normal_vec;
  if (kind == DataKind::kLinear) {
    for (std::size_t k = 0; k < p; ++k) normal_vec.push_back(rng.normal());
  }
  Dataset data;
  data.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    DataPoint pt;
    pt.x.resize(p);
    switch (kind) {
      case DataKind::kBlobs: {
        pt.y = static_cast<int>(rng.below(2));
        const double c = pt.y == 1 ? 1.0 : -1.0;
        for (auto& v : pt.x) v = c;
        break;
      }
      case DataKind::kXor: {
        for (auto& v : pt.x) v = rng.uniform(-1.0, 1.0);
        pt.y = (pt.x[0] > 0.0) != (pt.x[1] > 0.0) ? 1 : 0;
        break;
      }
      case DataKind::kLinear: {
        double dot = 0.0;
        for (std::size_t k = 0; k < p; ++k) {
          pt.x[k] = rng.uniform(-1.0, 1.0);
          dot += normal_vec[k] * pt.x[k];
        }
        pt.y = dot >= 0.0 ? 1 : 0;
        break;
      }
    }
    if (noise > 0.0) {
      for (auto& v : pt.x) v += noise * rng.normal();
    }
    data.points.push_back(std::move(pt));
  }
  return data;
}

Json to_json(const ParamAssignment& a) {
  Json j = Json::object();
  for (const auto& [name, value] : a.values()) j[name] = value;
  return j;
}

Json to_json(const MetricsReport& m) {
  Json j;
  j["p"] = m.p;
  j["i_hat"] = m.i_hat;
  j["e_hat"] = m.e_hat;
  j["e"] = format_rational(m.e);
  j["e_value"] = static_cast<double>(m.e);
  if (!m.p_poly.is_zero()) j["p_poly"] = poly_json(m.p_poly);
  if (!m.i_poly.is_zero()) j["i_poly"] = poly_json(m.i_poly);
  return j;
}

Json to_json(const CandidateRecord& r) {
  Json j;
  j["theta_index"] = r.theta_index;
  j["sorted_index"] = r.sorted_index;
  j["assignment"] = to_json(r.assignment);
  j["metrics"] = to_json(r.metrics);
  j["w"] = r.w;
  j["status"] = r.status == CandidateStatus::kOk ? "ok" : "failed";
  j["steps_taken"] = r.steps_taken;
  j["init_seed"] = r.init_seed;
  j["shuffle_seed"] = r.shuffle_seed;
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

Json to_json(const WeakResult& w) {
  Json j;
  j["holds"] = w.holds;
  j["comparisons"] = Json::array();
  for (const auto& c : w.comparisons) {
    j["comparisons"].push_back({{"variable", c.variable},
                                {"metric", c.metric},
                                {"segment", c.segment},
                                {"outer_degree", c.outer_degree},
                                {"block_degree", c.block_degree},
                                {"ok", c.ok}});
  }
  return j;
}

Json to_json(const AbncReport& r) {
  Json j;
  j["weak"] = to_json(r.weak);
  if (r.strong_estimate) {
    j["strong"] = {{"L_hat", r.strong_estimate->L_hat},
                   {"G_hat", r.strong_estimate->G_hat},
                   {"pairs_sampled", r.strong_estimate->pairs_sampled},
                   {"consistent", r.strong_consistent}};
  } else {
    j["strong"] = nullptr;
  }
  j["samples_used"] = r.samples_used;
  if (r.ordering_concordance) j["ordering_concordance"] = *r.ordering_concordance;
  j["notes"] = r.notes;
  return j;
}

Json to_json(const OrderingResult& r) {
  Json j;
  j["concordance"] = r.concordance;
  j["per_seed"] = r.per_seed;
  j["pairs_compared"] = r.pairs_compared;
  j["notes"] = r.notes;
  return j;
}

Json to_json(const DecResult& r) {
  Json j;
  j["answer"] = r.yes ? "yes" : "no";
  j["evaluations"] = r.evaluations;
  if (r.witness) {
    j["witness"] = {{"space_index", r.witness->space_index},
                    {"assignment", to_json(r.witness->assignment)},
                    {"weights", r.witness->weights},
                    {"p", r.witness->p},
                    {"i_hat", r.witness->i_hat},
                    {"e", format_rational(r.witness->e)}};
  }
  return j;
}

Json to_json(const ShortestPathResult& r) {
  return {{"index", r.index},
          {"assignment", to_json(r.assignment)},
          {"cost", r.cost},
          {"vertex_count", r.vertex_count},
          {"edge_count", r.edge_count}};
}

Json extraction_report(const ExtractionResult& result, const Json& config_echo) {
  Json j;
  j["config"] = config_echo;
  j["config_hash"] = config_hash(config_echo);
  j["master_seed"] = result.config.master_seed;
  j["epsilon"] = result.config.epsilon;
  j["steps"] = result.config.steps;
  j["loss"] = result.config.loss.name();
  j["p_poly"] = poly_json(result.p_poly);
  j["i_poly"] = poly_json(result.i_poly);
  j["sort_key"] = result.sort_key.to_string();
  j["max_point"] = {{"assignment", to_json(result.max_point.assignment)},
                    {"p_T", result.max_point.p_T},
                    {"i_T", result.max_point.i_T}};
  j["candidates_trained"] = result.trace.size();
  j["best"] = to_json(result.best);
  j["pareto_consistent"] = result.pareto_consistent;
  j["sorted_space"] = Json::array();
  for (const auto& a : result.sorted) j["sorted_space"].push_back(to_json(a));
  j["trace"] = Json::array();
  for (const auto& r : result.trace) j["trace"].push_back(to_json(r));
  return j;
}

std::uint64_t config_hash(const Json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void write_weight_sidecar(const Network& net, const std::filesystem::path& bin_path,
                          const std::filesystem::path& manifest_path) {
  std::string bytes;
  Json manifest;
  manifest["dtype"] = "float64";
  manifest["byte_order"] = "little";
  manifest["layout"] = "row-major";
  manifest["assignment"] = to_json(net.assignment);
  manifest["tensors"] = Json::array();
  std::size_t offset = 0;
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    for (std::size_t ti = 0; ti < net.layers[li].params.size(); ++ti) {
      const Tensor& t = net.layers[li].params[ti];
      manifest["tensors"].push_back(
          {{"layer", li}, {"index", ti}, {"shape", t.shape}, {"offset", offset}});
      for (double v : t.data) {
        auto u = std::bit_cast<std::uint64_t>(v);
        for (int b = 0; b < 8; ++b) bytes.push_back(static_cast<char>((u >> (8 * b)) & 0xff));
      }
      offset += t.size();
    }
  }
  manifest["count"] = offset;
  write_text(bin_path, bytes);
  write_text(manifest_path, manifest.dump(2) + "\n");
}

void read_weight_sidecar(Network& net, const std::filesystem::path& bin_path,
                         const std::filesystem::path& manifest_path) {
  const Json manifest = Json::parse(read_text(manifest_path));
  const std::string bytes = read_text(bin_path);
  const auto count = manifest.at("count").get<std::size_t>();
  if (count != net.parameter_count() || bytes.size() != 8 * count) {
    throw FormatError("weight sidecar does not match the network layout");
  }
  std::vector<double> values(count);
  for (std::size_t k = 0; k < count; ++k) {
    std::uint64_t u = 0;
    for (int b = 0; b < 8; ++b) {
      u |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[8 * k + b])) << (8 * b);
    }
    values[k] = std::bit_cast<double>(u);
  }
  net.set_flat_parameters(values);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
  if (!out) throw FormatError("failed writing " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace ose
