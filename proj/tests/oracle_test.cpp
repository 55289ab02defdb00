#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "ose/errors.hpp"
#include "ose/oracle.hpp"

using namespace ose;
using namespace ose::testing;

namespace {

// dense 1->1 (no bias) then sigmoid: one weight.
ArchTemplate one_weight() {
  return ArchTemplate({}, {LayerTemplate::dense(PolyExpr::constant(1), PolyExpr::constant(1), false),
                           LayerTemplate::activation_layer(Activation::kSigmoid,
                                                           PolyExpr::constant(1))},
                      1);
}

Dataset toy() {
  Dataset d;
  d.points = {{{1.0}, 1}, {{-1.0}, 0}};
  return d;
}

SearchSpace singleton() { return enumerate_space({}, {}); }

OseDecInstance toy_instance(double k_e) {
  OseDecInstance inst{one_weight(), toy(), WeightGrid({-1, 0, 1}), singleton(), {},
                      std::nullopt, std::nullopt, k_e};
  return inst;
}

// Smallest error over all grid weight vectors, by recursion on the weight
// index; independent of the odometer in the oracle.
Rational best_grid_error(const Network& net, const Dataset& d, const WeightGrid& g,
                         std::vector<double>& w, std::size_t k) {
  if (k == w.size()) {
    Network probe = net;
    probe.set_flat_parameters(w);
    return error_rate(probe, d);
  }
  Rational best = 2;
  for (double v : g.levels()) {
    w[k] = v;
    best = std::min(best, best_grid_error(net, d, g, w, k + 1));
  }
  return best;
}

std::vector<HyperParams> thetas_for(const Dataset& d, std::vector<double> etas) {
  std::vector<HyperParams> out;
  for (double eta : etas) {
    HyperParams h;
    h.batch = d;
    h.eta = eta;
    out.push_back(h);
  }
  return out;
}

}  // namespace

TEST(Oracle, GridValidation) {
  EXPECT_EQ(WeightGrid().size(), 5u);
  EXPECT_THROW(WeightGrid(std::vector<double>{}), PreconditionError);
  EXPECT_THROW(WeightGrid({0.0, 0.0}), PreconditionError);
  EXPECT_THROW(WeightGrid({1.0, -1.0}), PreconditionError);
}

TEST(Oracle, DecToyYes) {
  const DecResult r = brute_force_ose_dec(toy_instance(0.0));
  ASSERT_TRUE(r.yes);
  ASSERT_TRUE(r.witness.has_value());
  EXPECT_EQ(r.witness->weights, std::vector<double>{1.0});
  EXPECT_EQ(r.witness->e, 0);
  EXPECT_EQ(r.witness->p, 1);
  // -1 and 0 are tried first.
  EXPECT_EQ(r.evaluations, 3u);
}

TEST(Oracle, DecSizeBoundExcludesEverything) {
  OseDecInstance inst = toy_instance(1.0);
  inst.k_p = 0;
  const DecResult r = brute_force_ose_dec(inst);
  EXPECT_FALSE(r.yes);
  EXPECT_EQ(r.evaluations, 0u);
  inst.k_p = std::nullopt;
  inst.k_i = 0;
  EXPECT_FALSE(brute_force_ose_dec(inst).yes);
}

TEST(Oracle, DecNoOnContradictoryData) {
  OseDecInstance inst = toy_instance(0.0);
  inst.data.points = {{{1.0}, 1}, {{1.0}, 0}};
  const DecResult r = brute_force_ose_dec(inst);
  EXPECT_FALSE(r.yes);
  EXPECT_EQ(r.evaluations, 3u);
  inst.k_e = 0.5;
  EXPECT_TRUE(brute_force_ose_dec(inst).yes);
}

TEST(Oracle, DecCapThrows) {
  OseDecInstance inst{dense_chain(3), toy(), WeightGrid(), enumerate_space({var("h", {8})}, {}),
                      {}, std::nullopt, std::nullopt, 0.0};
  inst.data.points = {{{1.0, 1.0, 1.0}, 1}};
  // 41 weights over 5 levels.
  EXPECT_THROW(brute_force_ose_dec(inst, {}, 1000), SizeError);
}

TEST(Oracle, DecMonotoneInThresholds) {
  Rng rng(17);
  const auto vars = std::vector<ArchParamVar>{var("h", {1, 2})};
  for (int trial = 0; trial < 10; ++trial) {
    const Dataset d = random_dataset(rng, 6, 1);
    OseDecInstance inst{dense_chain(1), d, WeightGrid({-1, 0, 1}), enumerate_space(vars, {}),
                        {}, std::nullopt, std::nullopt, 0.0};
    bool prev = false;
    for (double k : {0.0, 1.0 / 6, 2.0 / 6, 0.5, 4.0 / 6, 1.0}) {
      inst.k_e = k;
      const bool yes = brute_force_ose_dec(inst).yes;
      if (prev) EXPECT_TRUE(yes);
      prev = yes;
    }
    EXPECT_TRUE(prev);
    inst.k_e = 1.0;
    bool prev_p = false;
    for (std::int64_t kp : {0, 4, 5, 7, 9, 100}) {
      inst.k_p = kp;
      const bool yes = brute_force_ose_dec(inst).yes;
      if (prev_p) EXPECT_TRUE(yes);
      prev_p = yes;
    }
  }
}

TEST(Oracle, DecWitnessIsGenuine) {
  Rng rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const Dataset d = random_dataset(rng, 8, 1);
    const auto space = enumerate_space({var("h", {1, 2})}, {});
    OseDecInstance inst{dense_chain(1), d, WeightGrid({-1, 0, 1}), space,
                        {}, std::nullopt, std::nullopt, 0.25};
    const DecResult r = brute_force_ose_dec(inst);
    if (!r.yes) continue;
    Network net = instantiate(inst.arch, r.witness->assignment, InitScheme::constant(0), 0);
    net.set_flat_parameters(r.witness->weights);
    EXPECT_EQ(error_rate(net, d), r.witness->e);
    EXPECT_LE(static_cast<double>(r.witness->e), 0.25);
  }
}

TEST(Oracle, ExhaustiveMatchesExtractAtUnitStride) {
  const Dataset d = blobs(24, 3, 0.5, 3);
  const auto space = enumerate_space({var("h", {2, 3, 4, 5}), var("n", {1, 2})}, {});
  ExtractionConfig c;
  c.epsilon = 1;
  c.steps = 60;
  c.master_seed = 5;
  const auto thetas = thetas_for(d, {0.3, 0.8});
  const ExhaustiveResult ex = exhaustive_opt(abnc_family(3), d, space, thetas, c);
  c.jobs = 3;
  const ExtractionResult res = extract(abnc_family(3), d, space, thetas, c);
  EXPECT_EQ(ex.best.assignment, res.best.assignment);
  EXPECT_EQ(ex.best.theta_index, res.best.theta_index);
  EXPECT_EQ(ex.best.w, res.best.w);
  EXPECT_EQ(ex.best_weights.flat_parameters(), res.best_weights.flat_parameters());
  ASSERT_EQ(ex.trace.size(), res.trace.size());
}

TEST(Oracle, ReductionShape) {
  const auto space = enumerate_space({var("h", {2})}, {});
  const OseDecInstance inst = reduce_nn_training(dense_chain(1), space, toy(), WeightGrid(), 0.5);
  EXPECT_FALSE(inst.k_p.has_value());
  EXPECT_FALSE(inst.k_i.has_value());
  EXPECT_EQ(inst.k_e, 0.5);
  EXPECT_TRUE(inst.thetas.empty());
  EXPECT_EQ(inst.space.size(), 1u);
  EXPECT_THROW(reduce_nn_training(dense_chain(1), enumerate_space({var("h", {1, 2})}, {}), toy(),
                                  WeightGrid(), 0.5),
               PreconditionError);
}

TEST(Oracle, ReductionAgreesWithDirectEnumeration) {
  Rng rng(41);
  const WeightGrid grid({-1, 0, 1});
  for (int trial = 0; trial < 12; ++trial) {
    const Dataset d = random_dataset(rng, 5, 1);
    const auto space = enumerate_space({var("h", {1 + static_cast<std::int64_t>(trial % 2)})}, {});
    const Network net =
        instantiate(dense_chain(1), space.assignments[0], InitScheme::constant(0), 0);
    std::vector<double> w(net.parameter_count(), 0.0);
    const Rational best = best_grid_error(net, d, grid, w, 0);
    for (int num = 0; num <= 5; ++num) {
      const double k = num / 5.0;
      const bool direct = best <= Rational(num, 5);
      const bool via = brute_force_ose_dec(reduce_nn_training(dense_chain(1), space, d, grid, k)).yes;
      EXPECT_EQ(direct, via) << "trial " << trial << " k " << k;
    }
  }
}

TEST(Oracle, ShortestPathMatchesArgmin) {
  Rng rng(59);
  for (int trial = 0; trial < 50; ++trial) {
    const RandomFamily fam = random_family(rng, 4);
    const SearchSpace space = enumerate_space(fam.variables, {});
    const CensusModel census{1 + static_cast<std::int64_t>(rng.below(2))};
    const ShortestPathResult r = equal_error_shortest_path(fam.arch, space, census);
    std::size_t best = 0;
    std::int64_t best_cost = std::numeric_limits<std::int64_t>::max();
    std::size_t chain_vertices = 0;
    for (std::size_t k = 0; k < space.size(); ++k) {
      const auto& a = space.assignments[k];
      const std::int64_t c = param_size(fam.arch, a) + surrogate_inference(fam.arch, a, census);
      if (c < best_cost) {
        best_cost = c;
        best = k;
      }
      chain_vertices += a.size();
    }
    EXPECT_EQ(r.cost, best_cost);
    EXPECT_EQ(r.index, best);
    EXPECT_EQ(r.assignment, space.assignments[best]);
    EXPECT_EQ(r.vertex_count, chain_vertices + 2);
    EXPECT_EQ(r.edge_count, chain_vertices + space.size());
  }
}

TEST(Oracle, ShortestPathSingleton) {
  const auto space = enumerate_space({var("h", {4})}, {});
  const ShortestPathResult r = equal_error_shortest_path(dense_chain(3), space);
  EXPECT_EQ(r.index, 0u);
  EXPECT_EQ(r.cost, param_size(dense_chain(3), space.assignments[0]) +
                        surrogate_inference(dense_chain(3), space.assignments[0]));
  EXPECT_EQ(r.vertex_count, 3u);
  EXPECT_THROW(equal_error_shortest_path(dense_chain(3), SearchSpace{}), PreconditionError);
}

TEST(Oracle, DecimalThresholdIsInclusive) {
  // Best grid error here is 3/5; the double 0.6 lies just below 3/5.
  OseDecInstance inst = toy_instance(0.6);
  inst.data.points = {{{1.0}, 1}, {{1.0}, 0}, {{1.0}, 0}, {{2.0}, 1}, {{2.0}, 0}};
  inst.grid = WeightGrid({1.0});
  const DecResult r = brute_force_ose_dec(inst);
  ASSERT_TRUE(r.yes);
  EXPECT_EQ(r.witness->e, Rational(3, 5));
  inst.k_e = 0.59;
  EXPECT_FALSE(brute_force_ose_dec(inst).yes);
}
