#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "ose/abnc.hpp"
#include "ose/errors.hpp"

using namespace ose;
using namespace ose::testing;

namespace {

ArchTemplate abc(LayerTemplate a, LayerTemplate b, LayerTemplate c,
                 std::vector<std::string> order = {"h", "n"}) {
  return ArchTemplate(std::move(order),
                      {a.tagged(Segment::kA), b.tagged(Segment::kB), c.tagged(Segment::kC),
                       LayerTemplate::activation_layer(Activation::kSigmoid, P("1"))
                           .tagged(Segment::kC)},
                      1, std::string("n"));
}

HyperParams theta_of(const Dataset& d, double eta = 0.5) {
  HyperParams h;
  h.batch = d;
  h.eta = eta;
  return h;
}

}  // namespace

TEST(Abnc, WeakHoldsForDenseChain) {
  const WeakResult w = check_weak(abnc_family(3), {"h"});
  EXPECT_TRUE(w.holds);
  ASSERT_EQ(w.comparisons.size(), 4u);
  for (const auto& c : w.comparisons) {
    EXPECT_EQ(c.outer_degree, 1);
    EXPECT_EQ(c.block_degree, 2);
    EXPECT_TRUE(c.ok);
  }
}

TEST(Abnc, WeakFailsOnEqualDegrees) {
  const ArchTemplate t({"h", "n"},
                       {LayerTemplate::dense(P("h"), P("h")).tagged(Segment::kA),
                        LayerTemplate::dense(P("h"), P("h")).tagged(Segment::kB),
                        LayerTemplate::dense(P("h"), P("h")).tagged(Segment::kC),
                        LayerTemplate::dense(P("h"), P("1")).tagged(Segment::kC),
                        LayerTemplate::activation_layer(Activation::kSigmoid, P("1"))
                            .tagged(Segment::kC)},
                       1, std::string("n"));
  EXPECT_FALSE(check_weak(t, {"h"}).holds);
}

TEST(Abnc, WeakFailsWhenBlockIgnoresVariable) {
  // B does not depend on g, so nothing of degree >= 0 is dominated.
  const ArchTemplate t = abc(LayerTemplate::dense(P("1"), P("g")),
                             LayerTemplate::activation_layer(Activation::kTanh, P("g")),
                             LayerTemplate::dense(P("g"), P("1")), {"g", "n"});
  const WeakResult w = check_weak(t, {"g"});
  EXPECT_TRUE(w.holds == false);
  const ArchTemplate u = abc(LayerTemplate::dense(P("1"), P("h")),
                             LayerTemplate::scale(P("h"), 2.0),
                             LayerTemplate::dense(P("h"), P("1")), {"h", "n", "k"});
  EXPECT_FALSE(check_weak(u, {"k"}).holds);
}

TEST(Abnc, WeakRequiresTags) {
  EXPECT_THROW(check_weak(dense_chain(3), {"h"}), SchemaError);
  EXPECT_THROW(check_weak(abnc_family(3), {"zzz"}), SchemaError);
  EXPECT_THROW(check_weak(abnc_family(3), {}), PreconditionError);
}

TEST(Abnc, WeakInvariantUnderRenamingOtherVariables) {
  auto build = [](const std::string& other) {
    return ArchTemplate({"h", other, "n"},
                        {LayerTemplate::dense(P("1"), P("h*" + other)).tagged(Segment::kA),
                         LayerTemplate::dense(P("h*" + other), P("h*" + other)).tagged(Segment::kB),
                         LayerTemplate::dense(P("h*" + other), P("1")).tagged(Segment::kC),
                         LayerTemplate::activation_layer(Activation::kSigmoid, P("1"))
                             .tagged(Segment::kC)},
                        1, std::string("n"));
  };
  const WeakResult a = check_weak(build("q"), {"h"});
  const WeakResult b = check_weak(build("zeta"), {"h"});
  EXPECT_EQ(a.holds, b.holds);
  ASSERT_EQ(a.comparisons.size(), b.comparisons.size());
  for (std::size_t k = 0; k < a.comparisons.size(); ++k) {
    EXPECT_EQ(a.comparisons[k].outer_degree, b.comparisons[k].outer_degree);
    EXPECT_EQ(a.comparisons[k].block_degree, b.comparisons[k].block_degree);
  }
}

TEST(Abnc, StrongGatedOnWeak) {
  const Dataset d = blobs(20, 1, 0.3, 1);
  const ArchTemplate t({"h", "n"},
                       {LayerTemplate::dense(P("1"), P("h")).tagged(Segment::kA),
                        LayerTemplate::dense(P("h"), P("h")).tagged(Segment::kA),
                        LayerTemplate::dense(P("h"), P("h")).tagged(Segment::kB),
                        LayerTemplate::dense(P("h"), P("1")).tagged(Segment::kC),
                        LayerTemplate::activation_layer(Activation::kSigmoid, P("1"))
                            .tagged(Segment::kC)},
                       1, std::string("n"));
  const auto space = enumerate_space({var("h", {2, 3}), var("n", {1, 2})}, {});
  const AbncReport r = check_strong(t, space, {"h"}, d, Loss{}, theta_of(d), 5);
  EXPECT_FALSE(r.weak.holds);
  EXPECT_FALSE(r.strong_estimate.has_value());
}

TEST(Abnc, StrongFiniteOnDenseFamily) {
  const Dataset d = blobs(30, 3, 0.4, 2);
  const auto space = enumerate_space({var("h", {2, 3, 4, 5}), var("n", {1, 2})}, {});
  const AbncReport r = check_strong(abnc_family(3), space, {"h"}, d, Loss{}, theta_of(d), 7);
  EXPECT_TRUE(r.weak.holds);
  ASSERT_TRUE(r.strong_estimate.has_value());
  EXPECT_TRUE(r.strong_consistent);
  EXPECT_EQ(r.samples_used, kStrongSampleLimit);
  EXPECT_TRUE(std::isfinite(r.strong_estimate->L_hat));
  EXPECT_GT(r.strong_estimate->G_hat, 0.0);
}

TEST(Abnc, StrongSkipsDegenerateSample) {
  // A single-point batch repeated: every pair has equal losses.
  Dataset d;
  d.points = {{{0.5, 0.5, 0.5}, 1}, {{0.5, 0.5, 0.5}, 1}};
  const auto space = enumerate_space({var("h", {2}), var("n", {1})}, {});
  const AbncReport r = check_strong(abnc_family(3), space, {"h"}, d, Loss{}, theta_of(d), 1);
  EXPECT_TRUE(r.weak.holds);
  EXPECT_EQ(r.samples_used, 0u);
  EXPECT_FALSE(r.strong_estimate.has_value());
  EXPECT_FALSE(r.notes.empty());
}

TEST(Abnc, OrderingVacuousOnSingleton) {
  const Dataset d = blobs(10, 3, 0.3, 3);
  const auto space = enumerate_space({var("h", {3}), var("n", {2})}, {});
  const auto r = check_ordering(abnc_family(3), space, d, theta_of(d), 20, 2, 0);
  EXPECT_EQ(r.concordance, 1.0);
  EXPECT_EQ(r.pairs_compared, 0u);
}

TEST(Abnc, OrderingTiesCountAsConcordant) {
  const Dataset d = blobs(10, 3, 0.3, 4);
  SearchSpace space;
  space.variables = {var("h", {3}), var("n", {1})};
  space.assignments = {assign({{"h", 3}, {"n", 1}}), assign({{"h", 3}, {"n", 1}})};
  const auto r = check_ordering(abnc_family(3), space, d, theta_of(d), 30, 1, 5);
  EXPECT_EQ(r.pairs_compared, 2u);
  EXPECT_EQ(r.concordance, 1.0);
}

TEST(Abnc, OrderingReportsPerSeed) {
  const Dataset d = blobs(40, 3, 0.5, 5);
  const auto space = enumerate_space({var("h", {3}), var("n", {1, 2, 3})}, {});
  const auto r = check_ordering(abnc_family(3), space, d, theta_of(d), 100, 3, 10, Loss{}, 2);
  ASSERT_EQ(r.per_seed.size(), 3u);
  EXPECT_GE(r.concordance, 0.0);
  EXPECT_LE(r.concordance, 1.0);
  const auto again = check_ordering(abnc_family(3), space, d, theta_of(d), 100, 3, 10);
  EXPECT_EQ(r.per_seed, again.per_seed);
}

TEST(Abnc, SizeAndCostOrderingsAgreeOnGrowthVariables) {
  for (std::int64_t p : {1, 2, 5}) {
    const ArchTemplate t = abnc_family(p);
    ASSERT_TRUE(check_weak(t, {"h"}).holds);
    const auto space = enumerate_space({var("h", {1, 2, 3, 5, 8, 13}), var("n", {2})}, {});
    const auto by_p = sort_space(space.assignments, param_size_poly(t), param_size_poly(t));
    const auto by_i = sort_space(space.assignments, surrogate_inference_poly(t),
                                 surrogate_inference_poly(t));
    EXPECT_EQ(by_p.source_index, by_i.source_index);
  }
}
