#pragma once

// Maximum point, W-coefficient and the strided search over the sorted space.

#include <cstdint>
#include <string>
#include <vector>

#include "ose/arch.hpp"
#include "ose/errors.hpp"
#include "ose/metrics.hpp"
#include "ose/network.hpp"
#include "ose/trainer.hpp"

namespace ose {

// The assignment with lexicographically largest (p, i_hat), which must
// dominate every other assignment in both.
struct MaxPoint {
  ParamAssignment assignment;
  std::size_t index = 0;  // position in the search space
  std::int64_t p_T = 0;
  std::int64_t i_T = 0;
};

enum class CandidateStatus { kOk, kFailed };

struct CandidateRecord {
  std::size_t theta_index = 0;
  std::size_t sorted_index = 0;
  ParamAssignment assignment;
  MetricsReport metrics;
  double w = 0.0;
  CandidateStatus status = CandidateStatus::kOk;
  std::size_t steps_taken = 0;
  std::uint64_t init_seed = 0;
  std::uint64_t shuffle_seed = 0;
  std::string note;
};

struct CandidateOutcome {
  CandidateRecord record;
  Network network;
};

struct ExtractionConfig {
  std::size_t epsilon = 1;
  std::size_t steps = 1;
  Loss loss;
  std::uint64_t master_seed = 0;
  std::size_t jobs = 1;
  CensusModel census;
  InitScheme init;
};

struct ExtractionResult {
  CandidateRecord best;
  Network best_weights;
  std::vector<CandidateRecord> trace;
  MaxPoint max_point;
  std::vector<ParamAssignment> sorted;
  PolyExpr p_poly;
  PolyExpr i_poly;
  Monomial sort_key;
  ExtractionConfig config;
  // Best record is not strictly dominated in (p, i_hat, e_hat) by any other
  // successful record.
  bool pareto_consistent = true;
};

class ExtractionFailedError : public Error {
 public:
  ExtractionFailedError(const std::string& what, std::vector<CandidateRecord> trace)
      : Error(what), trace_(std::move(trace)) {}
  const std::vector<CandidateRecord>& trace() const { return trace_; }

 private:
  std::vector<CandidateRecord> trace_;
};

inline constexpr double kErrorFloor = 1e-9;

// Full scan. Throws PreconditionError on an empty space and DominationError
// when the lexicographic maximum does not dominate every assignment.
MaxPoint find_max_point(const ArchTemplate& t, const SearchSpace& space,
                        const CensusModel& census = {});

// ((p_T - p_f)/p_T) ((i_T - i_f)/i_T) / max(e_hat, 1e-9).
double w_coefficient(std::int64_t p_f, std::int64_t i_f, double e_hat,
                     const MaxPoint& max_point);

struct SortedSpace {
  std::vector<ParamAssignment> order;
  std::vector<std::size_t> source_index;  // position in the input list
};

// Ascending by the leading term of `p_poly` evaluated at each assignment, then
// by p, then i_hat, then lexicographic values.
SortedSpace sort_space(const std::vector<ParamAssignment>& assignments,
                       const PolyExpr& p_poly, const PolyExpr& i_poly);

// Seeds of one candidate. They depend on the assignment values rather than
// on its position, so every search that trains the same (theta, assignment)
// pair starts from the same weights and permutation stream.
std::uint64_t candidate_init_seed(std::uint64_t master, std::size_t theta_index,
                                  const ParamAssignment& a);
std::uint64_t candidate_shuffle_seed(std::uint64_t master, std::size_t theta_index,
                                     const ParamAssignment& a);

// Instantiates, trains and scores one candidate.
CandidateOutcome evaluate_candidate(const ArchTemplate& t, const Dataset& data,
                                    const HyperParams& theta, std::size_t theta_index,
                                    const ParamAssignment& a, std::size_t sorted_index,
                                    const MaxPoint& max_point,
                                    const ExtractionConfig& config);

ExtractionResult extract(const ArchTemplate& t, const Dataset& data,
                         const SearchSpace& space,
                         const std::vector<HyperParams>& thetas,
                         const ExtractionConfig& config);

// Number of candidates extract trains: ceil(|space| / epsilon) * |thetas|.
std::size_t candidate_count(std::size_t space_size, std::size_t epsilon,
                            std::size_t num_thetas);

}  // namespace ose
