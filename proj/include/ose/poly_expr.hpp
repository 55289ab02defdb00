#pragma once

// Canonical multivariate polynomials with positive rational coefficients over
// architectural-parameter variables.
//
// A PolyExpr carries its own variable precedence list. Monomials are kept in
// descending graded-lexicographic order with respect to that list; merging two
// polynomials appends the right operand's unseen variables after the left's.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace ose {

using Rational = boost::multiprecision::cpp_rational;

// Lookup of a variable's integer value; returns nullopt when unbound.
using VarLookup = std::function<std::optional<std::int64_t>(std::string_view)>;

struct Monomial {
  Rational coefficient{1};
  // Variable name -> exponent, zero exponents omitted.
  std::map<std::string, int> exponents;

  int total_degree() const;
  int degree_in(std::string_view var) const;
  std::string to_string() const;

  friend bool operator==(const Monomial&, const Monomial&) = default;
};

class PolyExpr {
 public:
  PolyExpr() = default;

  static PolyExpr constant(const Rational& c);
  static PolyExpr variable(const std::string& name);

  // Parses `term + term - term`, where terms are products of rational
  // constants, `var` and `var^k`, with optional parentheses. Variables are
  // ordered by `order`, then by first appearance. Throws SchemaError on syntax
  // errors and on results with non-positive coefficients.
  static PolyExpr parse(std::string_view text,
                        const std::vector<std::string>& order = {});

  bool is_zero() const { return terms_.empty(); }
  const std::vector<Monomial>& terms() const { return terms_; }
  const std::vector<std::string>& variable_order() const { return vars_; }

  // Variables that actually occur in some monomial.
  std::vector<std::string> used_variables() const;

  // Maximal monomial under graded-lex order. Throws PreconditionError when
  // the polynomial is zero.
  const Monomial& leading_term() const;

  int total_degree() const;
  // Degree in a single variable; -1 for the zero polynomial.
  int degree_in(std::string_view var) const;

  // Exact integer evaluation. Throws SchemaError on unbound variables and
  // ConsistencyError when the value is not an integer.
  std::int64_t evaluate(const VarLookup& lookup) const;
  Rational evaluate_rational(const VarLookup& lookup) const;
  double evaluate_real(const VarLookup& lookup) const;

  // Rebuilds the polynomial under a different precedence list.
  PolyExpr reordered(const std::vector<std::string>& order) const;
  PolyExpr scaled(const Rational& factor) const;

  std::string to_string() const;

  friend PolyExpr operator+(const PolyExpr& a, const PolyExpr& b);
  friend PolyExpr operator*(const PolyExpr& a, const PolyExpr& b);
  PolyExpr& operator+=(const PolyExpr& other);
  PolyExpr& operator*=(const PolyExpr& other);

  // Equality of the represented polynomial, independent of variable order.
  friend bool operator==(const PolyExpr& a, const PolyExpr& b);

 private:
  PolyExpr(std::vector<std::string> vars, std::vector<Monomial> terms);
  void canonicalize();

  std::vector<std::string> vars_;
  std::vector<Monomial> terms_;
};

// Graded-lex comparison under `order`: negative if a < b, 0 if equal
// exponents, positive if a > b. Variables missing from `order` sort after it
// by name.
int compare_monomials(const Monomial& a, const Monomial& b,
                      const std::vector<std::string>& order);

Monomial monomial_product(const Monomial& a, const Monomial& b);

// Shorthands used by the census and tests.
PolyExpr add(const PolyExpr& a, const PolyExpr& b);
PolyExpr mul(const PolyExpr& a, const PolyExpr& b);
Monomial leading_term(const PolyExpr& p);

}  // namespace ose
