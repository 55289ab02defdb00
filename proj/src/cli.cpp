#include "ose/cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "ose/abnc.hpp"
#include "ose/extractor.hpp"
#include "ose/io.hpp"
#include "ose/oracle.hpp"

namespace fs = std::filesystem;

namespace ose {

namespace {

struct Overrides {
  std::string config;
  std::optional<std::size_t> epsilon;
  std::optional<std::size_t> steps;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  std::string out;
};

// Loaded configuration with flag overrides applied. `echo` excludes the
// output path and parallelism, which do not affect results; both are reported
// under "runtime" instead.
struct RunConfig {
  Json echo;
  fs::path base;
  TemplateDoc doc;
  SearchSpace space;
  std::size_t jobs = 1;

  const Json* find(const char* key) const {
    return echo.contains(key) ? &echo.at(key) : nullptr;
  }
  fs::path resolve(const std::string& p) const {
    fs::path path(p);
    return path.is_absolute() ? path : base / path;
  }
};

RunConfig load_config(const Overrides& o) {
  if (o.config.empty()) throw SchemaError("--config is required");
  RunConfig rc;
  const fs::path path(o.config);
  if (!fs::exists(path)) throw FormatError("config file not found: " + path.string());
  rc.base = path.parent_path();
  try {
    rc.echo = Json::parse(read_text(path));
  } catch (const Json::parse_error& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
  if (!rc.echo.is_object()) throw SchemaError("config must be a JSON object");
  if (o.epsilon) rc.echo["epsilon"] = *o.epsilon;
  if (o.steps) rc.echo["steps"] = *o.steps;
  if (o.seed) rc.echo["seed"] = *o.seed;
  rc.jobs = o.jobs.value_or(rc.echo.value("jobs", std::size_t{1}));
  rc.echo.erase("jobs");
  rc.echo.erase("out");
  if (rc.jobs == 0) rc.jobs = 1;

  const Json* t = rc.find("template");
  if (!t) throw SchemaError("config has no 'template'");
  if (t->is_string()) {
    const fs::path tp = rc.resolve(t->get<std::string>());
    if (!fs::exists(tp)) throw FormatError("template file not found: " + tp.string());
    rc.doc = load_template(tp);
  } else {
    rc.doc = parse_template(*t);
  }
  rc.space = template_space(rc.doc);
  return rc;
}

Dataset config_dataset(const RunConfig& rc) {
  const Json* d = rc.find("dataset");
  if (!d) throw SchemaError("config has no 'dataset'");
  const fs::path p = rc.resolve(d->get<std::string>());
  if (!fs::exists(p)) throw FormatError("dataset file not found: " + p.string());
  Dataset data = load_dataset(p);
  if (data.dim() != static_cast<std::size_t>(rc.doc.arch.input_dim())) {
    throw SchemaError("dataset has " + std::to_string(data.dim()) +
                      " features but the template expects " +
                      std::to_string(rc.doc.arch.input_dim()));
  }
  return data;
}

std::vector<HyperParams> config_thetas(const RunConfig& rc, const Dataset& data) {
  std::vector<HyperParams> out;
  const Json* list = rc.find("thetas");
  if (!list || !list->is_array() || list->empty()) {
    throw SchemaError("config needs a nonempty 'thetas' list");
  }
  for (const auto& j : *list) {
    Dataset batch = data;
    if (j.contains("batch_size")) {
      const auto b = j.at("batch_size").get<std::size_t>();
      if (b == 0 || b > data.size()) throw SchemaError("batch_size out of range");
      batch.points.resize(b);
    }
    if (j.contains("eta")) {
      HyperParams h;
      h.batch = std::move(batch);
      h.eta = j.at("eta").get<double>();
      if (!(h.eta > 0.0)) throw SchemaError("eta must be positive");
      out.push_back(std::move(h));
    } else {
      out.push_back(HyperParams::from_constants(std::move(batch), j.at("L").get<double>(),
                                                j.at("G").get<double>(),
                                                j.at("eps_sgd").get<double>()));
    }
  }
  return out;
}

CensusModel config_census(const RunConfig& rc) {
  CensusModel c;
  c.precision = rc.echo.value("precision", std::int64_t{1});
  if (c.precision <= 0) throw SchemaError("precision must be positive");
  return c;
}

// "init": "uniform_fan_in" (default) or {"constant": v}.
InitScheme config_init(const RunConfig& rc) {
  const Json* j = rc.find("init");
  if (!j || (j->is_string() && j->get<std::string>() == "uniform_fan_in")) {
    return InitScheme::uniform_fan_in();
  }
  if (j->is_object() && j->contains("constant")) {
    return InitScheme::constant(j->at("constant").get<double>());
  }
  throw SchemaError("init must be \"uniform_fan_in\" or {\"constant\": value}");
}

ExtractionConfig extraction_config(const RunConfig& rc) {
  ExtractionConfig c;
  c.epsilon = rc.echo.value("epsilon", std::size_t{1});
  c.steps = rc.echo.value("steps", std::size_t{100});
  c.loss = Loss::from_name(rc.echo.value("loss", std::string("bounded_quadratic")));
  c.master_seed = rc.echo.value("seed", std::uint64_t{0});
  c.jobs = rc.jobs;
  c.census = config_census(rc);
  c.init = config_init(rc);
  return c;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

void add_runtime(Json& report, std::size_t jobs) {
  report["runtime"] = {{"timestamp", utc_timestamp()}, {"jobs", jobs}};
}

void emit(const Json& report, const std::string& out_path, std::ostream& out) {
  const std::string text = report.dump(2) + "\n";
  if (out_path.empty()) {
    out << text;
  } else {
    write_text(out_path, text);
  }
}

int cmd_validate(const Overrides& o, std::ostream& out) {
  const RunConfig rc = load_config(o);
  const ValidationReport v = validate_search_space(rc.doc.arch, rc.space);
  Json r;
  r["well_posed"] = v.well_posed;
  r["space_size"] = rc.space.size();
  r["issues"] = v.issues;
  emit(r, o.out, out);
  return v.well_posed ? kExitOk : kExitInvalid;
}

int cmd_metrics(const Overrides& o, std::ostream& out) {
  const RunConfig rc = load_config(o);
  const CensusModel census = config_census(rc);
  const auto v = validate_search_space(rc.doc.arch, rc.space);
  if (!v.well_posed) throw InvalidSpaceError(v.issues.front());
  Json r;
  r["p_poly"] = param_size_poly(rc.doc.arch).to_string();
  r["i_poly"] = surrogate_inference_poly(rc.doc.arch, census).to_string();
  r["assignments"] = Json::array();
  for (const auto& a : rc.space.assignments) {
    r["assignments"].push_back({{"assignment", to_json(a)},
                                {"p", param_size(rc.doc.arch, a)},
                                {"i_hat", surrogate_inference(rc.doc.arch, a, census)}});
  }
  emit(r, o.out, out);
  return kExitOk;
}

int cmd_extract(const Overrides& o, std::ostream& out, std::ostream& err) {
  const RunConfig rc = load_config(o);
  const Dataset data = config_dataset(rc);
  const auto thetas = config_thetas(rc, data);
  const ExtractionConfig cfg = extraction_config(rc);
  const std::string out_path = o.out.empty() ? "report.json" : o.out;
  try {
    ExtractionResult result = extract(rc.doc.arch, data, rc.space, thetas, cfg);
    if (!result.pareto_consistent) {
      err << "warning: best candidate is dominated by another trained candidate\n";
    }
    Json report = extraction_report(result, rc.echo);
    const fs::path bin = out_path + ".weights.bin";
    const fs::path manifest = out_path + ".weights.json";
    add_runtime(report, rc.jobs);
    report["runtime"]["weights"] = {{"data", bin.filename().string()},
                                    {"manifest", manifest.filename().string()}};
    write_weight_sidecar(result.best_weights, bin, manifest);
    emit(report, out_path, out);
    return kExitOk;
  } catch (const ExtractionFailedError& e) {
    Json report;
    report["config"] = rc.echo;
    report["config_hash"] = config_hash(rc.echo);
    report["error"] = e.what();
    report["trace"] = Json::array();
    for (const auto& r : e.trace()) report["trace"].push_back(to_json(r));
    add_runtime(report, rc.jobs);
    emit(report, out_path, out);
    err << "extraction failed: " << e.what() << "\n";
    return kExitExtractionFailed;
  }
}

std::vector<std::string> growth_variables(const RunConfig& rc) {
  if (const Json* g = rc.find("growth_variables")) return g->get<std::vector<std::string>>();
  std::vector<std::string> out;
  for (const auto& v : rc.doc.variables) {
    if (v.role == VarRole::kDimension && v.domain.size() > 1) out.push_back(v.name);
  }
  return out;
}

int cmd_abnc(const Overrides& o, std::ostream& out) {
  const RunConfig rc = load_config(o);
  const Dataset data = config_dataset(rc);
  const auto thetas = config_thetas(rc, data);
  const ExtractionConfig cfg = extraction_config(rc);
  const auto pairs = rc.echo.value("smoothness_pairs", std::size_t{64});
  AbncReport report = check_strong(rc.doc.arch, rc.space, growth_variables(rc), data,
                                   cfg.loss, thetas.front(), cfg.master_seed, pairs,
                                   cfg.census);
  const auto seeds = rc.echo.value("ordering_seeds", std::size_t{0});
  Json r;
  if (seeds > 0) {
    const OrderingResult ord = check_ordering(rc.doc.arch, rc.space, data, thetas.front(),
                                              cfg.steps, seeds, cfg.master_seed, cfg.loss,
                                              rc.jobs, cfg.init);
    report.ordering_concordance = ord.concordance;
    r["ordering"] = to_json(ord);
  }
  r["abnc"] = to_json(report);
  emit(r, o.out, out);
  return kExitOk;
}

int cmd_oracle(const Overrides& o, const std::string& mode, std::ostream& out) {
  const RunConfig rc = load_config(o);
  const CensusModel census = config_census(rc);
  const Json oc = rc.echo.value("oracle", Json::object());
  auto grid = [&] {
    return oc.contains("grid") ? WeightGrid(oc.at("grid").get<std::vector<double>>())
                               : WeightGrid();
  };
  auto opt_threshold = [&](const char* key) -> std::optional<std::int64_t> {
    if (!oc.contains(key) || oc.at(key).is_null()) return std::nullopt;
    return oc.at(key).get<std::int64_t>();
  };
  Json r;
  r["mode"] = mode;
  if (mode == "shortest-path") {
    r["result"] = to_json(equal_error_shortest_path(rc.doc.arch, rc.space, census));
  } else if (mode == "exhaustive") {
    const Dataset data = config_dataset(rc);
    const auto res = exhaustive_opt(rc.doc.arch, data, rc.space, config_thetas(rc, data),
                                    extraction_config(rc));
    r["sorted_index"] = res.sorted_index;
    r["best"] = to_json(res.best);
  } else if (mode == "dec" || mode == "reduce") {
    const Dataset data = config_dataset(rc);
    OseDecInstance inst;
    if (mode == "dec") {
      inst.arch = rc.doc.arch;
      inst.data = data;
      inst.grid = grid();
      inst.space = rc.space;
      inst.k_p = opt_threshold("k_p");
      inst.k_i = opt_threshold("k_i");
      inst.k_e = oc.value("k_e", 0.0);
    } else {
      inst = reduce_nn_training(rc.doc.arch, rc.space, data, grid(), oc.value("k", 0.0));
    }
    r["k_p"] = inst.k_p ? Json(*inst.k_p) : Json("unbounded");
    r["k_i"] = inst.k_i ? Json(*inst.k_i) : Json("unbounded");
    r["k_e"] = inst.k_e;
    r["result"] = to_json(brute_force_ose_dec(inst, census));
  } else {
    throw SchemaError("unknown oracle mode '" + mode + "'");
  }
  emit(r, o.out, out);
  return kExitOk;
}

struct GenArgs {
  std::string kind = "blobs";
  std::size_t n = 100;
  std::size_t p = 2;
  double noise = 0.0;
  std::uint64_t seed = 0;
};

int cmd_gen_data(const GenArgs& g, const std::string& out_path, std::ostream& out) {
  const Dataset d = gen_data(data_kind_from_name(g.kind), g.n, g.p, g.noise, g.seed);
  if (out_path.empty()) {
    out << dataset_to_csv(d);
  } else {
    save_dataset(d, out_path);
  }
  return kExitOk;
}

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "Run configuration (JSON)");
  cmd->add_option("--epsilon", o.epsilon, "Search stride");
  cmd->add_option("--steps", o.steps, "Training steps per candidate");
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("--jobs", o.jobs, "Parallel candidate evaluations");
  cmd->add_option("--out", o.out, "Output path (extract: report.json, others: standard output)");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Optimal subarchitecture extraction"};
  app.require_subcommand(1);
  Overrides o;
  std::string mode;
  GenArgs gen;

  auto* validate = app.add_subcommand("validate", "Check well-posedness of the search space");
  auto* metrics = app.add_subcommand("metrics", "Parameter size and inference cost per assignment");
  auto* extract_cmd = app.add_subcommand("extract", "Run the strided W-coefficient search");
  auto* abnc = app.add_subcommand("abnc-check", "Weak/strong AB^nC diagnostics");
  auto* oracle = app.add_subcommand("oracle", "Reference solvers for small instances");
  auto* gen_cmd = app.add_subcommand("gen-data", "Write a synthetic binary dataset as CSV");
  for (auto* c : {validate, metrics, extract_cmd, abnc, oracle}) add_common(c, o);
  oracle->add_option("--mode", mode, "dec | exhaustive | reduce | shortest-path")->required();
  gen_cmd->add_option("--kind", gen.kind, "blobs | xor | linear");
  gen_cmd->add_option("--n", gen.n, "Number of points");
  gen_cmd->add_option("--p", gen.p, "Number of features");
  gen_cmd->add_option("--noise", gen.noise, "Feature noise standard deviation");
  gen_cmd->add_option("--seed", gen.seed, "Random seed");
  gen_cmd->add_option("--out", o.out, "Output CSV (default: standard output)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (*validate) return cmd_validate(o, out);
    if (*metrics) return cmd_metrics(o, out);
    if (*extract_cmd) return cmd_extract(o, out, err);
    if (*abnc) return cmd_abnc(o, out);
    if (*oracle) return cmd_oracle(o, mode, out);
    if (*gen_cmd) return cmd_gen_data(gen, o.out, out);
  } catch (const SchemaError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const InvalidSpaceError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const PreconditionError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const SizeError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const Json::exception& e) {
    err << "error: malformed config: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}

}  // namespace ose
