#pragma once

// Diagnostics for the weak and strong A B^n C properties and the error
// ordering they induce.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ose/arch.hpp"
#include "ose/extractor.hpp"
#include "ose/metrics.hpp"
#include "ose/trainer.hpp"

namespace ose {

struct DegreeComparison {
  std::string variable;
  std::string metric;   // "p" or "i_hat"
  std::string segment;  // "A" or "C", compared against "B"
  int outer_degree = -1;
  int block_degree = -1;
  bool ok = false;
};

struct WeakResult {
  bool holds = false;
  std::vector<DegreeComparison> comparisons;
};

struct AbncReport {
  WeakResult weak;
  std::optional<SmoothnessEstimate> strong_estimate;
  bool strong_consistent = false;
  std::size_t samples_used = 0;
  std::optional<double> ordering_concordance;
  std::vector<std::string> notes;
};

// Per-segment polynomials for one copy of each segment.
PolyExpr segment_param_poly(const ArchTemplate& t, Segment s);
PolyExpr segment_inference_poly(const ArchTemplate& t, Segment s,
                                const CensusModel& census = {});

// Strict degree dominance of the B block over A and C in every growth
// variable, for both parameter size and inference cost. Throws SchemaError
// when the template has no segment tags.
WeakResult check_weak(const ArchTemplate& t, const std::vector<std::string>& growth_vars,
                      const CensusModel& census = {});

inline constexpr std::size_t kStrongSampleLimit = 5;

// Runs check_weak; if it holds, estimates (L, G) on up to five sampled
// assignments. Samples whose losses are all equal are skipped with a note.
AbncReport check_strong(const ArchTemplate& t, const SearchSpace& space,
                        const std::vector<std::string>& growth_vars,
                        const Dataset& data, const Loss& loss,
                        const HyperParams& theta, std::uint64_t seed,
                        std::size_t num_pairs = 64, const CensusModel& census = {});

struct OrderingResult {
  double concordance = 1.0;
  std::vector<double> per_seed;
  std::size_t pairs_compared = 0;
  std::vector<std::string> notes;
};

inline constexpr double kOrderingTolerance = 1e-6;

// Trains every assignment for `steps` steps under each of `num_seeds` master
// seeds (master_seed, master_seed + 1, ...) and returns the fraction of
// ordered pairs with p(f) <= p(g) whose surrogate errors satisfy
// e_hat(f) <= e_hat(g) + 1e-6, averaged over seeds. Candidates are built with
// `init` and the extractor's per-candidate seeds for theta index 0, so a run
// under seed m trains exactly what extract trains under master seed m.
OrderingResult check_ordering(const ArchTemplate& t, const SearchSpace& space,
                              const Dataset& data, const HyperParams& theta,
                              std::size_t steps, std::size_t num_seeds,
                              std::uint64_t master_seed, const Loss& loss = {},
                              std::size_t jobs = 1, const InitScheme& init = {});

}  // namespace ose
