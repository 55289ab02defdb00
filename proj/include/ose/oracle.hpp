#pragma once

// Reference machinery for small instances: the training-free OSE-DEC table
// scan, the exhaustive epsilon = 1 search, the NN-TRAINING-DEC reduction and
// the equal-error shortest-path construction.

#include <cstdint>
#include <optional>
#include <vector>

#include "ose/arch.hpp"
#include "ose/extractor.hpp"
#include "ose/metrics.hpp"
#include "ose/network.hpp"
#include "ose/trainer.hpp"

namespace ose {

class WeightGrid {
 public:
  WeightGrid() : levels_{-1.0, -0.5, 0.0, 0.5, 1.0} {}
  // Throws PreconditionError unless `levels` is nonempty and strictly ascending.
  explicit WeightGrid(std::vector<double> levels);
  const std::vector<double>& levels() const { return levels_; }
  std::size_t size() const { return levels_.size(); }

 private:
  std::vector<double> levels_;
};

struct OseDecInstance {
  ArchTemplate arch;
  Dataset data;
  WeightGrid grid;
  SearchSpace space;
  std::vector<HyperParams> thetas;
  std::optional<std::int64_t> k_p;  // nullopt: unbounded
  std::optional<std::int64_t> k_i;  // nullopt: unbounded
  double k_e = 0.0;
};

struct DecWitness {
  std::size_t space_index = 0;
  ParamAssignment assignment;
  std::vector<double> weights;  // flat, in Network::flat_parameters order
  std::int64_t p = 0;
  std::int64_t i_hat = 0;
  Rational e = 0;
};

struct DecResult {
  bool yes = false;
  std::optional<DecWitness> witness;
  std::uint64_t evaluations = 0;
};

inline constexpr std::uint64_t kDecEvaluationCap = 10'000'000;

// Scans assignments in space order and, for those within k_p and k_i, every
// grid weight vector in lexicographic order (first weight most significant),
// evaluating e on the dataset directly. Returns the first witness with
// p <= k_p, i_hat <= k_i and e <= k_e. Throws SizeError when the scan would
// exceed `cap` evaluations.
DecResult brute_force_ose_dec(const OseDecInstance& instance,
                              const CensusModel& census = {},
                              std::uint64_t cap = kDecEvaluationCap);

struct ExhaustiveResult {
  std::size_t sorted_index = 0;
  CandidateRecord best;
  Network best_weights;
  std::vector<CandidateRecord> trace;
};

// Trains every (theta, assignment) pair sequentially with the extractor's seed
// derivation and returns the first strict argmax of w in sorted order.
ExhaustiveResult exhaustive_opt(const ArchTemplate& t, const Dataset& data,
                                const SearchSpace& space,
                                const std::vector<HyperParams>& thetas,
                                const ExtractionConfig& config);

// Reduces "is there a grid weight vector with error at most k" for a fixed
// architecture to OSE-DEC. Throws PreconditionError unless `space` has exactly
// one assignment.
OseDecInstance reduce_nn_training(const ArchTemplate& t, const SearchSpace& space,
                                  const Dataset& data, const WeightGrid& grid,
                                  double k);

struct ShortestPathResult {
  std::size_t index = 0;  // position in the search space
  ParamAssignment assignment;
  std::int64_t cost = 0;  // p + i_hat of the winner
  std::size_t vertex_count = 0;
  std::size_t edge_count = 0;
};

// Source, target and one vertex per variable of each assignment chained with
// zero-weight edges; each chain tail reaches the target with weight p + i_hat.
ShortestPathResult equal_error_shortest_path(const ArchTemplate& t,
                                             const SearchSpace& space,
                                             const CensusModel& census = {});

}  // namespace ose
