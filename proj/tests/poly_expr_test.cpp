#include <algorithm>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "ose/errors.hpp"
#include "ose/poly_expr.hpp"
#include "ose/rng.hpp"

using namespace ose;
using ose::testing::P;

namespace {

VarLookup bind(std::map<std::string, std::int64_t> values) {
  return [values](std::string_view name) -> std::optional<std::int64_t> {
    auto it = values.find(std::string(name));
    if (it == values.end()) return std::nullopt;
    return it->second;
  };
}

PolyExpr random_poly(Rng& rng) {
  const char* vars[] = {"x", "y", "z"};
  PolyExpr out;
  const std::size_t terms = rng.below(4);
  for (std::size_t t = 0; t < terms; ++t) {
    PolyExpr m = PolyExpr::constant(Rational(1 + static_cast<int>(rng.below(5)),
                                             1 + static_cast<int>(rng.below(3))));
    for (const char* v : vars) {
      for (std::uint64_t e = rng.below(3); e > 0; --e) m *= PolyExpr::variable(v);
    }
    out += m;
  }
  return out;
}

}  // namespace

TEST(PolyExpr, AddMergesLikeTerms) {
  EXPECT_EQ(P("x") + P("x"), P("2*x"));
  EXPECT_EQ((P("x") + P("x")).terms().size(), 1u);
  EXPECT_EQ(P("x^2 + 1") + PolyExpr(), P("x^2 + 1"));
}

TEST(PolyExpr, NegativeCoefficientsRejected) {
  EXPECT_THROW(P("1 - x^2"), SchemaError);
  EXPECT_THROW(PolyExpr::constant(2).scaled(-1), Error);
  // Cancellation to a positive result is fine.
  EXPECT_EQ(P("2*x - x"), P("x"));
}

TEST(PolyExpr, MulDistributes) {
  EXPECT_EQ(P("x") * P("x + 1"), P("x^2 + x"));
  EXPECT_EQ(PolyExpr::constant(1) * P("3*H*p + H"), P("3*H*p + H"));
  const PolyExpr hp = P("H") * P("p");
  ASSERT_EQ(hp.terms().size(), 1u);
  EXPECT_EQ(hp.terms()[0].total_degree(), 2);
}

TEST(PolyExpr, ParserSyntax) {
  EXPECT_EQ(P("2 H p"), P("2*H*p"));
  EXPECT_EQ(P("(h + 1)^2"), P("h^2 + 2*h + 1"));
  EXPECT_EQ(P("h/2 + h/2"), P("h"));
  EXPECT_EQ(P("3/4*x").terms()[0].coefficient, Rational(3, 4));
  EXPECT_THROW(P("h +"), SchemaError);
  EXPECT_THROW(P("h ** 2"), SchemaError);
  EXPECT_THROW(P("(h"), SchemaError);
}

TEST(PolyExpr, LeadingTermGradedLex) {
  EXPECT_EQ(PolyExpr::parse("x^2*y + x^3", {"x", "y"}).leading_term().to_string(), "x^3");
  const PolyExpr ex1 = PolyExpr::parse("3*H*p + 3*H + J*H + J", {"H", "p", "J"});
  const Monomial lt = ex1.leading_term();
  EXPECT_EQ(lt.coefficient, 3);
  EXPECT_EQ(lt.degree_in("H"), 1);
  EXPECT_EQ(lt.degree_in("p"), 1);
  EXPECT_EQ(lt.degree_in("J"), 0);
  const Monomial five = PolyExpr::constant(5).leading_term();
  EXPECT_EQ(five.coefficient, 5);
  EXPECT_TRUE(five.exponents.empty());
  EXPECT_THROW(PolyExpr().leading_term(), PreconditionError);
}

TEST(PolyExpr, LeadingTermRespectsOrder) {
  const PolyExpr a = PolyExpr::parse("x*y^2 + x^2*y", {"y", "x"});
  EXPECT_EQ(a.leading_term().degree_in("y"), 2);
  EXPECT_EQ(a.reordered({"x", "y"}).leading_term().degree_in("x"), 2);
}

TEST(PolyExpr, LeadingTermInvariantUnderTermShuffle) {
  std::vector<std::string> terms{"3*H*p", "3*H", "J*H", "J", "H^2", "p^2*J"};
  const std::vector<std::string> order{"H", "p", "J"};
  std::string first;
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    auto perm = rng.permutation(terms.size());
    std::string text;
    for (std::size_t k : perm) text += (text.empty() ? "" : " + ") + terms[k];
    const std::string lt = PolyExpr::parse(text, order).leading_term().to_string();
    if (first.empty()) first = lt;
    EXPECT_EQ(lt, first);
  }
  EXPECT_EQ(first, "J*p^2");  // the only degree-3 term
}

TEST(PolyExpr, EvaluateExample1) {
  const PolyExpr ex1 = P("3*H*p + 3*H + J*H + J");
  EXPECT_EQ(ex1.evaluate(bind({{"H", 2}, {"p", 3}, {"J", 1}})), 27);
  EXPECT_EQ(PolyExpr::constant(1).evaluate(bind({})), 1);
  EXPECT_EQ(P("x^2").evaluate(bind({{"x", 0}})), 0);
}

TEST(PolyExpr, EvaluateErrors) {
  EXPECT_THROW(P("x + y").evaluate(bind({{"x", 1}})), SchemaError);
  EXPECT_THROW(P("x/2").evaluate(bind({{"x", 3}})), ConsistencyError);
  EXPECT_EQ(P("x/2").evaluate_rational(bind({{"x", 3}})), Rational(3, 2));
  EXPECT_THROW(P("x^5").evaluate(bind({{"x", 100000}})), ConsistencyError);
}

TEST(PolyExpr, DegreeQueries) {
  const PolyExpr p = P("h^2*n + h + 7");
  EXPECT_EQ(p.total_degree(), 3);
  EXPECT_EQ(p.degree_in("h"), 2);
  EXPECT_EQ(p.degree_in("n"), 1);
  EXPECT_EQ(p.degree_in("q"), 0);
  EXPECT_EQ(PolyExpr().degree_in("h"), -1);
}

TEST(PolyExpr, RingLawsByEvaluation) {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const PolyExpr a = random_poly(rng);
    const PolyExpr b = random_poly(rng);
    const PolyExpr c = random_poly(rng);
    EXPECT_EQ(a + b, b + a);
    EXPECT_EQ(a * b, b * a);
    EXPECT_EQ((a + b) + c, a + (b + c));
    EXPECT_EQ((a * b) * c, a * (b * c));
    EXPECT_EQ(a * (b + c), a * b + a * c);
    for (int pt = 0; pt < 10; ++pt) {
      const auto look = bind({{"x", static_cast<std::int64_t>(rng.below(7))},
                              {"y", static_cast<std::int64_t>(rng.below(7))},
                              {"z", static_cast<std::int64_t>(rng.below(7))}});
      const Rational va = a.evaluate_rational(look);
      const Rational vb = b.evaluate_rational(look);
      const Rational vc = c.evaluate_rational(look);
      ASSERT_EQ((a * b).evaluate_rational(look), va * vb);
      ASSERT_EQ((a + b).evaluate_rational(look), va + vb);
      ASSERT_EQ((a * (b + c)).evaluate_rational(look), va * (vb + vc));
    }
  }
}

TEST(PolyExpr, ToStringRoundTrips) {
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const PolyExpr a = random_poly(rng);
    EXPECT_EQ(PolyExpr::parse(a.to_string(), a.variable_order()), a) << a.to_string();
  }
}
