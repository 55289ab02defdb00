#include "ose/oracle.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <limits>
#include <queue>
#include <string>

namespace ose {

namespace {

// The threshold as the decimal it was written as, so that 0.6 admits an
// error of exactly 3/5.
Rational shortest_decimal(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  const std::string s(buf, res.ptr);
  const auto e = s.find_first_of("eE");
  std::string mantissa = s.substr(0, e);
  int exponent = e == std::string::npos ? 0 : std::stoi(s.substr(e + 1));
  if (const auto dot = mantissa.find('.'); dot != std::string::npos) {
    exponent -= static_cast<int>(mantissa.size() - dot - 1);
    mantissa.erase(dot, 1);
  }
  // A leading zero would read as octal.
  mantissa.erase(0, std::min(mantissa.find_first_not_of('0'), mantissa.size() - 1));
  Rational r{boost::multiprecision::cpp_int(mantissa)};
  const boost::multiprecision::cpp_int scale =
      boost::multiprecision::pow(boost::multiprecision::cpp_int(10), std::abs(exponent));
  if (exponent >= 0) return r * scale;
  return r / scale;
}

}  // namespace

WeightGrid::WeightGrid(std::vector<double> levels) : levels_(std::move(levels)) {
  if (levels_.empty()) throw PreconditionError("weight grid is empty");
  for (std::size_t k = 1; k < levels_.size(); ++k) {
    if (!(levels_[k - 1] < levels_[k])) {
      throw PreconditionError("weight grid levels must be strictly ascending");
    }
  }
}

DecResult brute_force_ose_dec(const OseDecInstance& inst, const CensusModel& census,
                              std::uint64_t cap) {
  if (inst.k_p && *inst.k_p < 0) throw PreconditionError("k_p must be non-negative");
  if (inst.k_i && *inst.k_i < 0) throw PreconditionError("k_i must be non-negative");
  if (!(inst.k_e >= 0.0)) throw PreconditionError("k_e must be non-negative");

  struct Eligible {
    std::size_t index;
    std::int64_t p;
    std::int64_t i_hat;
  };
  std::vector<Eligible> eligible;
  std::uint64_t total = 0;
  const std::uint64_t g = inst.grid.size();
  for (std::size_t k = 0; k < inst.space.size(); ++k) {
    const auto& a = inst.space.assignments[k];
    const std::int64_t p = param_size(inst.arch, a);
    const std::int64_t i_hat = surrogate_inference(inst.arch, a, census);
    if ((inst.k_p && p > *inst.k_p) || (inst.k_i && i_hat > *inst.k_i)) continue;
    std::uint64_t count = 1;
    for (std::int64_t w = 0; w < p; ++w) {
      if (count > cap / g) throw SizeError("weight enumeration exceeds the evaluation cap");
      count *= g;
    }
    if (total > cap - count) throw SizeError("weight enumeration exceeds the evaluation cap");
    total += count;
    eligible.push_back({k, p, i_hat});
  }

  DecResult result;
  const Rational k_e = shortest_decimal(inst.k_e);
  const auto& levels = inst.grid.levels();
  for (const auto& el : eligible) {
    const auto& a = inst.space.assignments[el.index];
    Network net = instantiate(inst.arch, a, InitScheme::constant(0.0), 0);
    std::vector<std::size_t> digits(static_cast<std::size_t>(el.p), 0);
    std::vector<double> weights(digits.size(), levels.front());
    for (;;) {
      net.set_flat_parameters(weights);
      ++result.evaluations;
      std::optional<Rational> e;
      try {
        e = error_rate(net, inst.data);
      } catch (const NumericError&) {
      }
      if (e && *e <= k_e) {
        result.yes = true;
        result.witness = DecWitness{el.index, a, weights, el.p, el.i_hat, *e};
        return result;
      }
      // Odometer with the last weight least significant.
      std::size_t pos = digits.size();
      while (pos > 0 && digits[pos - 1] + 1 == levels.size()) {
        digits[pos - 1] = 0;
        weights[pos - 1] = levels.front();
        --pos;
      }
      if (pos == 0) break;
      ++digits[pos - 1];
      weights[pos - 1] = levels[digits[pos - 1]];
    }
  }
  return result;
}

ExhaustiveResult exhaustive_opt(const ArchTemplate& t, const Dataset& data,
                                const SearchSpace& space,
                                const std::vector<HyperParams>& thetas,
                                const ExtractionConfig& config) {
  const ValidationReport report = validate_search_space(t, space);
  if (!report.well_posed) {
    throw PreconditionError("search space is not well-posed: " + report.issues.front());
  }
  if (config.steps == 0) throw PreconditionError("training steps must be positive");
  if (thetas.empty()) throw PreconditionError("at least one hyperparameter set is required");

  const MaxPoint mp = find_max_point(t, space, config.census);
  const auto sorted = sort_space(space.assignments, param_size_poly(t),
                                 surrogate_inference_poly(t, config.census))
                          .order;
  ExhaustiveResult result;
  std::optional<CandidateOutcome> best;
  for (std::size_t th = 0; th < thetas.size(); ++th) {
    for (std::size_t k = 0; k < sorted.size(); ++k) {
      CandidateOutcome out =
          evaluate_candidate(t, data, thetas[th], th, sorted[k], k, mp, config);
      result.trace.push_back(out.record);
      if (out.record.status != CandidateStatus::kOk) continue;
      if (!best || out.record.w > best->record.w) best = std::move(out);
    }
  }
  if (!best) throw ExtractionFailedError("every candidate failed to train", result.trace);
  result.sorted_index = best->record.sorted_index;
  result.best = best->record;
  result.best_weights = std::move(best->network);
  return result;
}

OseDecInstance reduce_nn_training(const ArchTemplate& t, const SearchSpace& space,
                                  const Dataset& data, const WeightGrid& grid,
                                  double k) {
  if (space.size() != 1) {
    throw PreconditionError("reduction needs a single fixed assignment");
  }
  OseDecInstance inst;
  inst.arch = t;
  inst.data = data;
  inst.grid = grid;
  inst.space = space;
  inst.k_p = std::nullopt;
  inst.k_i = std::nullopt;
  inst.k_e = k;
  return inst;
}

ShortestPathResult equal_error_shortest_path(const ArchTemplate& t,
                                             const SearchSpace& space,
                                             const CensusModel& census) {
  if (space.assignments.empty()) throw PreconditionError("search space is empty");

  // Vertex 0 is the source, 1 the target; chains follow in space order.
  struct Edge {
    std::size_t to;
    std::int64_t weight;
  };
  std::vector<std::vector<Edge>> adj(2);
  std::vector<std::size_t> owner(2, 0);
  std::size_t edges = 0;
  auto add_edge = [&](std::size_t from, std::size_t to, std::int64_t w) {
    adj[from].push_back({to, w});
    ++edges;
  };
  for (std::size_t k = 0; k < space.size(); ++k) {
    const auto& a = space.assignments[k];
    if (a.size() == 0) throw PreconditionError("assignment binds no variables");
    const std::size_t head = adj.size();
    for (std::size_t j = 0; j < a.size(); ++j) {
      adj.emplace_back();
      owner.push_back(k);
      if (j > 0) add_edge(head + j - 1, head + j, 0);
    }
    add_edge(0, head, 0);
    const std::int64_t cost = param_size(t, a) + surrogate_inference(t, a, census);
    add_edge(adj.size() - 1, 1, cost);
  }

  constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max();
  std::vector<std::int64_t> dist(adj.size(), kInf);
  std::vector<std::size_t> parent(adj.size(), 0);
  using Item = std::pair<std::int64_t, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist[0] = 0;
  queue.push({0, 0});
  while (!queue.empty()) {
    const auto [d, u] = queue.top();
    queue.pop();
    if (d != dist[u]) continue;
    for (const Edge& e : adj[u]) {
      // Strict relaxation: among equal-cost paths the first one found stays.
      if (d + e.weight < dist[e.to]) {
        dist[e.to] = d + e.weight;
        parent[e.to] = u;
        queue.push({dist[e.to], e.to});
      }
    }
  }

  ShortestPathResult r;
  r.index = owner[parent[1]];
  r.assignment = space.assignments[r.index];
  r.cost = dist[1];
  r.vertex_count = adj.size();
  r.edge_count = edges;
  return r;
}

}  // namespace ose
