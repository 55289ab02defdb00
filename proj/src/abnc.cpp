#include "ose/abnc.hpp"

#include <algorithm>
#include <cmath>

#include "ose/parallel.hpp"
#include "ose/rng.hpp"

namespace ose {

PolyExpr segment_param_poly(const ArchTemplate& t, Segment s) {
  PolyExpr total;
  for (std::size_t i : t.segment_layers(s)) total += layer_param_poly(t.layers()[i]);
  return total.reordered(t.variable_order());
}

PolyExpr segment_inference_poly(const ArchTemplate& t, Segment s,
                                const CensusModel& census) {
  OpCensus c;
  for (std::size_t i : t.segment_layers(s)) c += census.layer_census(t.layers()[i]);
  return census.cost(c).reordered(t.variable_order());
}

WeakResult check_weak(const ArchTemplate& t, const std::vector<std::string>& growth_vars,
                      const CensusModel& census) {
  if (!t.segmented()) throw SchemaError("template has no A/B/C segment tags");
  if (t.segment_layers(Segment::kB).empty()) throw SchemaError("template has no B segment");
  if (growth_vars.empty()) throw PreconditionError("no growth variables given");
  const auto& order = t.variable_order();
  for (const auto& v : growth_vars) {
    if (std::find(order.begin(), order.end(), v) == order.end()) {
      throw SchemaError("unknown growth variable '" + v + "'");
    }
  }

  struct MetricPolys {
    std::string name;
    PolyExpr a, b, c;
  };
  const MetricPolys metrics[] = {
      {"p", segment_param_poly(t, Segment::kA), segment_param_poly(t, Segment::kB),
       segment_param_poly(t, Segment::kC)},
      {"i_hat", segment_inference_poly(t, Segment::kA, census),
       segment_inference_poly(t, Segment::kB, census),
       segment_inference_poly(t, Segment::kC, census)},
  };

  WeakResult result;
  result.holds = true;
  for (const auto& v : growth_vars) {
    for (const auto& m : metrics) {
      // A zero polynomial has degree -1, which any block dominates; a block
      // without the variable has degree 0 and dominates nothing of degree 0.
      const int block = std::max(m.b.degree_in(v), m.b.is_zero() ? -1 : 0);
      for (const auto& [seg, poly] : {std::pair{"A", &m.a}, std::pair{"C", &m.c}}) {
        DegreeComparison cmp;
        cmp.variable = v;
        cmp.metric = m.name;
        cmp.segment = seg;
        cmp.outer_degree = poly->is_zero() ? -1 : std::max(poly->degree_in(v), 0);
        cmp.block_degree = block;
        cmp.ok = cmp.outer_degree < cmp.block_degree && cmp.block_degree > 0;
        result.holds = result.holds && cmp.ok;
        result.comparisons.push_back(cmp);
      }
    }
  }
  return result;
}

AbncReport check_strong(const ArchTemplate& t, const SearchSpace& space,
                        const std::vector<std::string>& growth_vars,
                        const Dataset& data, const Loss& loss,
                        const HyperParams& theta, std::uint64_t seed,
                        std::size_t num_pairs, const CensusModel& census) {
  AbncReport report;
  report.weak = check_weak(t, growth_vars, census);
  if (!report.weak.holds) {
    report.notes.push_back("weak property fails; smoothness not estimated");
    return report;
  }
  const Dataset& batch = theta.batch.empty() ? data : theta.batch;

  Rng rng(seed);
  std::vector<std::size_t> picks(space.size());
  for (std::size_t k = 0; k < picks.size(); ++k) picks[k] = k;
  if (picks.size() > kStrongSampleLimit) {
    auto perm = rng.permutation(picks.size());
    picks.assign(perm.begin(), perm.begin() + kStrongSampleLimit);
    std::sort(picks.begin(), picks.end());
  }

  SmoothnessEstimate combined;
  bool all_finite = true;
  for (std::size_t k : picks) {
    const ParamAssignment& a = space.assignments[k];
    Network net = instantiate(t, a, InitScheme::uniform_fan_in(), derive_seed(seed, {k, 1}));
    try {
      auto est = estimate_smoothness(net, batch, loss, num_pairs, derive_seed(seed, {k, 2}));
      all_finite = all_finite && std::isfinite(est.L_hat) && std::isfinite(est.G_hat);
      combined.L_hat = std::max(combined.L_hat, est.L_hat);
      combined.G_hat = std::max(combined.G_hat, est.G_hat);
      combined.pairs_sampled += est.pairs_sampled;
      ++report.samples_used;
    } catch (const EstimateUnavailableError& e) {
      report.notes.push_back("sample " + a.to_string() + " skipped: " + e.what());
    }
  }
  if (report.samples_used > 0) {
    report.strong_estimate = combined;
    report.strong_consistent = all_finite;
  } else {
    report.notes.push_back("no sample produced a smoothness estimate");
  }
  return report;
}

OrderingResult check_ordering(const ArchTemplate& t, const SearchSpace& space,
                              const Dataset& data, const HyperParams& theta,
                              std::size_t steps, std::size_t num_seeds,
                              std::uint64_t master_seed, const Loss& loss,
                              std::size_t jobs, const InitScheme& init) {
  const auto report = validate_search_space(t, space);
  if (!report.well_posed) {
    throw PreconditionError("search space is not well-posed: " + report.issues.front());
  }
  if (steps == 0) throw PreconditionError("training steps must be positive");
  if (num_seeds == 0) throw PreconditionError("at least one seed is required");
  (void)data;

  const std::size_t n = space.size();
  std::vector<std::int64_t> sizes(n);
  for (std::size_t k = 0; k < n; ++k) sizes[k] = param_size(t, space.assignments[k]);

  OrderingResult result;
  for (std::size_t s = 0; s < num_seeds; ++s) {
    const std::uint64_t master = master_seed + s;
    std::vector<std::optional<double>> e_hat(n);
    parallel_for(n, jobs, [&](std::size_t k) {
      const ParamAssignment& a = space.assignments[k];
      HyperParams local = theta;
      local.shuffle_seed = candidate_shuffle_seed(master, 0, a);
      Network net = instantiate(t, a, init,
                                candidate_init_seed(master, 0, a));
      auto trained = sgd_shuffling_train(std::move(net), local, steps, loss);
      if (!trained.trace.diverged) {
        e_hat[k] = surrogate_error(trained.network, theta.batch, loss);
      }
    });
    for (std::size_t k = 0; k < n; ++k) {
      if (!e_hat[k]) {
        result.notes.push_back("seed " + std::to_string(master) + ": " +
                               space.assignments[k].to_string() +
                               " failed to train and is excluded");
      }
    }
    std::size_t pairs = 0;
    std::size_t concordant = 0;
    for (std::size_t f = 0; f < n; ++f) {
      for (std::size_t g = 0; g < n; ++g) {
        if (f == g || !e_hat[f] || !e_hat[g] || sizes[f] > sizes[g]) continue;
        ++pairs;
        if (*e_hat[f] <= *e_hat[g] + kOrderingTolerance) ++concordant;
      }
    }
    result.pairs_compared += pairs;
    result.per_seed.push_back(pairs == 0 ? 1.0
                                         : static_cast<double>(concordant) /
                                               static_cast<double>(pairs));
  }
  double sum = 0.0;
  for (double c : result.per_seed) sum += c;
  result.concordance = sum / static_cast<double>(result.per_seed.size());
  return result;
}

}  // namespace ose
