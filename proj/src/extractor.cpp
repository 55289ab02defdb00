#include "ose/extractor.hpp"

#include <algorithm>
#include <optional>

#include "ose/parallel.hpp"
#include "ose/rng.hpp"

namespace ose {

namespace {

std::uint64_t assignment_hash(const ParamAssignment& a) {
  // FNV-1a over names and values.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t byte) {
    h ^= byte;
    h *= 0x100000001b3ULL;
  };
  for (const auto& [name, value] : a.values()) {
    for (char c : name) mix(static_cast<unsigned char>(c));
    mix(0xff);
    auto u = static_cast<std::uint64_t>(value);
    for (int i = 0; i < 8; ++i) mix((u >> (8 * i)) & 0xff);
  }
  return h;
}

bool strictly_dominates(const CandidateRecord& a, const CandidateRecord& b) {
  const bool le = a.metrics.p <= b.metrics.p && a.metrics.i_hat <= b.metrics.i_hat &&
                  a.metrics.e_hat <= b.metrics.e_hat;
  const bool lt = a.metrics.p < b.metrics.p || a.metrics.i_hat < b.metrics.i_hat ||
                  a.metrics.e_hat < b.metrics.e_hat;
  return le && lt;
}

}  // namespace

MaxPoint find_max_point(const ArchTemplate& t, const SearchSpace& space,
                        const CensusModel& census) {
  if (space.assignments.empty()) {
    throw PreconditionError("maximum point of an empty search space");
  }
  std::vector<std::pair<std::int64_t, std::int64_t>> values;
  values.reserve(space.size());
  for (const auto& a : space.assignments) {
    values.emplace_back(param_size(t, a), surrogate_inference(t, a, census));
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < values.size(); ++k) {
    if (values[k] > values[best]) best = k;
  }
  MaxPoint mp{space.assignments[best], best, values[best].first, values[best].second};
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (values[k].second > mp.i_T) {
      throw DominationError("assignment " + space.assignments[k].to_string() +
                            " exceeds the inference cost of the largest network " +
                            mp.assignment.to_string() +
                            "; no maximum point exists");
    }
  }
  if (mp.p_T <= 0 || mp.i_T <= 0) {
    throw PreconditionError("maximum point has zero size or cost");
  }
  return mp;
}

double w_coefficient(std::int64_t p_f, std::int64_t i_f, double e_hat,
                     const MaxPoint& mp) {
  if (p_f > mp.p_T || i_f > mp.i_T) {
    throw DominationError("candidate exceeds the maximum point");
  }
  if (!(e_hat >= 0.0 && e_hat <= 1.0)) {
    throw PreconditionError("surrogate error must lie in [0, 1]");
  }
  const double size_gain =
      static_cast<double>(mp.p_T - p_f) / static_cast<double>(mp.p_T);
  const double cost_gain =
      static_cast<double>(mp.i_T - i_f) / static_cast<double>(mp.i_T);
  return size_gain * cost_gain / std::max(e_hat, kErrorFloor);
}

SortedSpace sort_space(const std::vector<ParamAssignment>& assignments,
                       const PolyExpr& p_poly, const PolyExpr& i_poly) {
  const Monomial lead = p_poly.leading_term();
  PolyExpr lead_poly = PolyExpr::constant(lead.coefficient);
  for (const auto& [v, k] : lead.exponents) {
    for (int e = 0; e < k; ++e) lead_poly *= PolyExpr::variable(v);
  }
  struct Key {
    Rational lead;
    std::int64_t p;
    std::int64_t i;
  };
  std::vector<Key> keys;
  keys.reserve(assignments.size());
  for (const auto& a : assignments) {
    const auto look = a.lookup();
    keys.push_back({lead_poly.evaluate_rational(look), p_poly.evaluate(look),
                    i_poly.evaluate(look)});
  }
  std::vector<std::size_t> idx(assignments.size());
  for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) {
    const Key& a = keys[x];
    const Key& b = keys[y];
    if (a.lead != b.lead) return a.lead < b.lead;
    if (a.p != b.p) return a.p < b.p;
    if (a.i != b.i) return a.i < b.i;
    return assignments[x] < assignments[y];
  });
  SortedSpace out;
  out.source_index = idx;
  for (std::size_t k : idx) out.order.push_back(assignments[k]);
  return out;
}

std::uint64_t candidate_init_seed(std::uint64_t master, std::size_t theta_index,
                                  const ParamAssignment& a) {
  return derive_seed(master, {theta_index, assignment_hash(a), 1});
}

std::uint64_t candidate_shuffle_seed(std::uint64_t master, std::size_t theta_index,
                                     const ParamAssignment& a) {
  return derive_seed(master, {theta_index, assignment_hash(a), 2});
}

CandidateOutcome evaluate_candidate(const ArchTemplate& t, const Dataset& data,
                                    const HyperParams& theta, std::size_t theta_index,
                                    const ParamAssignment& a, std::size_t sorted_index,
                                    const MaxPoint& max_point,
                                    const ExtractionConfig& config) {
  CandidateOutcome out;
  CandidateRecord& r = out.record;
  r.theta_index = theta_index;
  r.sorted_index = sorted_index;
  r.assignment = a;
  r.init_seed = candidate_init_seed(config.master_seed, theta_index, a);
  r.shuffle_seed = candidate_shuffle_seed(config.master_seed, theta_index, a);
  r.metrics.p = param_size(t, a);
  r.metrics.i_hat = surrogate_inference(t, a, config.census);

  HyperParams local = theta;
  local.shuffle_seed = r.shuffle_seed;
  Network net = instantiate(t, a, config.init, r.init_seed);
  TrainResult trained = sgd_shuffling_train(std::move(net), local, config.steps, config.loss);
  r.steps_taken = trained.trace.steps_taken;
  out.network = std::move(trained.network);
  if (trained.trace.diverged) {
    r.status = CandidateStatus::kFailed;
    r.note = trained.trace.note;
    r.w = 0.0;
    return out;
  }
  try {
    r.metrics.e_hat = surrogate_error(out.network, theta.batch, config.loss);
    r.metrics.e = error_rate(out.network, data);
    r.w = w_coefficient(r.metrics.p, r.metrics.i_hat, r.metrics.e_hat, max_point);
  } catch (const NumericError& e) {
    r.status = CandidateStatus::kFailed;
    r.note = e.what();
    r.w = 0.0;
  }
  return out;
}

std::size_t candidate_count(std::size_t space_size, std::size_t epsilon,
                            std::size_t num_thetas) {
  return (space_size + epsilon - 1) / epsilon * num_thetas;
}

ExtractionResult extract(const ArchTemplate& t, const Dataset& data,
                         const SearchSpace& space,
                         const std::vector<HyperParams>& thetas,
                         const ExtractionConfig& config) {
  const ValidationReport report = validate_search_space(t, space);
  if (!report.well_posed) {
    throw PreconditionError("search space is not well-posed: " + report.issues.front());
  }
  if (config.epsilon < 1 || config.epsilon > space.size()) {
    throw PreconditionError("epsilon must lie in [1, |space|]");
  }
  if (config.steps == 0) throw PreconditionError("training steps must be positive");
  if (thetas.empty()) throw PreconditionError("at least one hyperparameter set is required");

  ExtractionResult result;
  result.config = config;
  result.max_point = find_max_point(t, space, config.census);
  result.p_poly = param_size_poly(t);
  result.i_poly = surrogate_inference_poly(t, config.census);
  result.sort_key = result.p_poly.leading_term();
  result.sorted = sort_space(space.assignments, result.p_poly, result.i_poly).order;

  struct Slot {
    std::size_t theta;
    std::size_t index;
  };
  std::vector<Slot> slots;
  for (std::size_t th = 0; th < thetas.size(); ++th) {
    for (std::size_t k = 0; k < result.sorted.size(); k += config.epsilon) {
      slots.push_back({th, k});
    }
  }
  std::vector<std::optional<CandidateOutcome>> outcomes(slots.size());
  parallel_for(slots.size(), config.jobs, [&](std::size_t n) {
    const Slot& s = slots[n];
    outcomes[n] = evaluate_candidate(t, data, thetas[s.theta], s.theta,
                                     result.sorted[s.index], s.index,
                                     result.max_point, config);
  });

  // Reduction in (theta, index) order keeps the first recorded argmax.
  std::optional<std::size_t> best;
  for (std::size_t n = 0; n < outcomes.size(); ++n) {
    const CandidateRecord& r = outcomes[n]->record;
    result.trace.push_back(r);
    if (r.status != CandidateStatus::kOk) continue;
    if (!best || r.w > outcomes[*best]->record.w) best = n;
  }
  if (!best) {
    throw ExtractionFailedError("every candidate failed to train", result.trace);
  }
  result.best = outcomes[*best]->record;
  result.best_weights = std::move(outcomes[*best]->network);
  for (const auto& r : result.trace) {
    if (r.status == CandidateStatus::kOk && strictly_dominates(r, result.best)) {
      result.pareto_consistent = false;
    }
  }
  return result;
}

}  // namespace ose
