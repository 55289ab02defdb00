#include "ose/poly_expr.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <sstream>

#include "ose/errors.hpp"

namespace ose {

namespace {

using ExponentMap = std::map<std::string, int>;
// Signed accumulation used while parsing; canonical polynomials never expose it.
using SignedTerms = std::map<ExponentMap, Rational>;

void append_missing(std::vector<std::string>& order,
                    const std::vector<std::string>& extra) {
  for (const auto& v : extra) {
    if (std::find(order.begin(), order.end(), v) == order.end()) {
      order.push_back(v);
    }
  }
}

int exponent_of(const ExponentMap& m, std::string_view var) {
  auto it = m.find(std::string(var));
  return it == m.end() ? 0 : it->second;
}

SignedTerms signed_mul(const SignedTerms& a, const SignedTerms& b) {
  SignedTerms out;
  for (const auto& [ea, ca] : a) {
    for (const auto& [eb, cb] : b) {
      ExponentMap e = ea;
      for (const auto& [v, k] : eb) e[v] += k;
      out[e] += ca * cb;
    }
  }
  return out;
}

void signed_add(SignedTerms& into, const SignedTerms& b, int sign) {
  for (const auto& [e, c] : b) into[e] += sign > 0 ? c : Rational(-c);
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  SignedTerms parse_all(std::vector<std::string>& seen) {
    seen_ = &seen;
    SignedTerms result = parse_sum();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected character");
    return result;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw SchemaError("polynomial syntax error at offset " +
                      std::to_string(pos_) + " in \"" + std::string(text_) +
                      "\": " + what);
  }

  void skip_ws() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  SignedTerms parse_sum() {
    int sign = 1;
    if (accept('-')) sign = -1;
    else accept('+');
    SignedTerms total;
    signed_add(total, parse_product(), sign);
    for (;;) {
      if (accept('+')) {
        signed_add(total, parse_product(), 1);
      } else if (accept('-')) {
        signed_add(total, parse_product(), -1);
      } else {
        break;
      }
    }
    return total;
  }

  SignedTerms parse_product() {
    SignedTerms acc = parse_power();
    for (;;) {
      skip_ws();
      if (accept('*')) {
        acc = signed_mul(acc, parse_power());
      } else if (accept('/')) {
        SignedTerms d = parse_power();
        if (d.size() != 1 || !d.begin()->first.empty() ||
            d.begin()->second == 0) {
          fail("division only by nonzero constants");
        }
        Rational inv = 1 / d.begin()->second;
        for (auto& [e, c] : acc) c *= inv;
      } else if (pos_ < text_.size() &&
                 (std::isalpha(static_cast<unsigned char>(text_[pos_])) ||
                  text_[pos_] == '_' || text_[pos_] == '(')) {
        // Implicit multiplication such as "3H" or "2(a+b)".
        acc = signed_mul(acc, parse_power());
      } else {
        break;
      }
    }
    return acc;
  }

  SignedTerms parse_power() {
    SignedTerms base = parse_atom();
    if (accept('^')) {
      skip_ws();
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        ++pos_;
      }
      if (start == pos_) fail("expected integer exponent");
      int k = std::stoi(std::string(text_.substr(start, pos_ - start)));
      SignedTerms out{{ExponentMap{}, Rational(1)}};
      for (int i = 0; i < k; ++i) out = signed_mul(out, base);
      return out;
    }
    return base;
  }

  SignedTerms parse_atom() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      SignedTerms inner = parse_sum();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        ++pos_;
      }
      Rational value(
          boost::multiprecision::cpp_int(std::string(text_.substr(start, pos_ - start))));
      return {{ExponentMap{}, value}};
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
              text_[pos_] == '_')) {
        ++pos_;
      }
      std::string name(text_.substr(start, pos_ - start));
      append_missing(*seen_, {name});
      return {{ExponentMap{{name, 1}}, Rational(1)}};
    }
    fail(std::string("unexpected '") + c + "'");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::vector<std::string>* seen_ = nullptr;
};

}  // namespace

int Monomial::total_degree() const {
  int d = 0;
  for (const auto& [v, k] : exponents) d += k;
  return d;
}

int Monomial::degree_in(std::string_view var) const {
  return exponent_of(exponents, var);
}

std::string Monomial::to_string() const {
  std::ostringstream os;
  bool coeff_shown = false;
  if (coefficient != 1 || exponents.empty()) {
    os << coefficient;
    coeff_shown = true;
  }
  bool first = !coeff_shown;
  for (const auto& [v, k] : exponents) {
    if (!first) os << '*';
    os << v;
    if (k != 1) os << '^' << k;
    first = false;
  }
  return os.str();
}

int compare_monomials(const Monomial& a, const Monomial& b,
                      const std::vector<std::string>& order) {
  int da = a.total_degree();
  int db = b.total_degree();
  if (da != db) return da < db ? -1 : 1;
  for (const auto& v : order) {
    int ea = a.degree_in(v);
    int eb = b.degree_in(v);
    if (ea != eb) return ea < eb ? -1 : 1;
  }
  // Remaining variables (not in the order) by name.
  std::vector<std::string> rest;
  for (const auto* m : {&a, &b}) {
    for (const auto& [v, k] : m->exponents) {
      if (std::find(order.begin(), order.end(), v) == order.end()) {
        rest.push_back(v);
      }
    }
  }
  std::sort(rest.begin(), rest.end());
  rest.erase(std::unique(rest.begin(), rest.end()), rest.end());
  for (const auto& v : rest) {
    int ea = a.degree_in(v);
    int eb = b.degree_in(v);
    if (ea != eb) return ea < eb ? -1 : 1;
  }
  return 0;
}

Monomial monomial_product(const Monomial& a, const Monomial& b) {
  Monomial out;
  out.coefficient = a.coefficient * b.coefficient;
  out.exponents = a.exponents;
  for (const auto& [v, k] : b.exponents) out.exponents[v] += k;
  return out;
}

PolyExpr::PolyExpr(std::vector<std::string> vars, std::vector<Monomial> terms)
    : vars_(std::move(vars)), terms_(std::move(terms)) {
  canonicalize();
}

void PolyExpr::canonicalize() {
  std::map<ExponentMap, Rational> merged;
  for (auto& m : terms_) {
    for (auto it = m.exponents.begin(); it != m.exponents.end();) {
      if (it->second == 0) it = m.exponents.erase(it);
      else ++it;
    }
    merged[m.exponents] += m.coefficient;
  }
  terms_.clear();
  for (auto& [e, c] : merged) {
    if (c == 0) continue;
    if (c < 0) {
      throw SchemaError("polynomial coefficients must be positive");
    }
    terms_.push_back(Monomial{c, e});
  }
  for (const auto& m : terms_) {
    for (const auto& [v, k] : m.exponents) append_missing(vars_, {v});
  }
  std::sort(terms_.begin(), terms_.end(),
            [this](const Monomial& a, const Monomial& b) {
              return compare_monomials(a, b, vars_) > 0;
            });
}

PolyExpr PolyExpr::constant(const Rational& c) {
  if (c == 0) return PolyExpr{};
  if (c < 0) throw SchemaError("polynomial coefficients must be positive");
  return PolyExpr({}, {Monomial{c, {}}});
}

PolyExpr PolyExpr::variable(const std::string& name) {
  return PolyExpr({name}, {Monomial{Rational(1), {{name, 1}}}});
}

PolyExpr PolyExpr::parse(std::string_view text,
                         const std::vector<std::string>& order) {
  std::vector<std::string> seen;
  SignedTerms terms = Parser(text).parse_all(seen);
  std::vector<std::string> vars = order;
  append_missing(vars, seen);
  std::vector<Monomial> monomials;
  for (auto& [e, c] : terms) {
    if (c == 0) continue;
    if (c < 0) {
      throw SchemaError("expression \"" + std::string(text) +
                        "\" has a negative coefficient");
    }
    monomials.push_back(Monomial{c, e});
  }
  return PolyExpr(std::move(vars), std::move(monomials));
}

std::vector<std::string> PolyExpr::used_variables() const {
  std::vector<std::string> out;
  for (const auto& v : vars_) {
    for (const auto& m : terms_) {
      if (m.degree_in(v) > 0) {
        out.push_back(v);
        break;
      }
    }
  }
  return out;
}

const Monomial& PolyExpr::leading_term() const {
  if (terms_.empty()) {
    throw PreconditionError("leading term of the zero polynomial");
  }
  return terms_.front();
}

int PolyExpr::total_degree() const {
  int d = -1;
  for (const auto& m : terms_) d = std::max(d, m.total_degree());
  return d;
}

int PolyExpr::degree_in(std::string_view var) const {
  int d = -1;
  for (const auto& m : terms_) d = std::max(d, m.degree_in(var));
  return d;
}

Rational PolyExpr::evaluate_rational(const VarLookup& lookup) const {
  Rational total = 0;
  for (const auto& m : terms_) {
    Rational term = m.coefficient;
    for (const auto& [v, k] : m.exponents) {
      auto value = lookup(v);
      if (!value) throw SchemaError("variable '" + v + "' is not bound");
      Rational base(*value);
      for (int i = 0; i < k; ++i) term *= base;
    }
    total += term;
  }
  return total;
}

std::int64_t PolyExpr::evaluate(const VarLookup& lookup) const {
  Rational value = evaluate_rational(lookup);
  if (denominator(value) != 1) {
    throw ConsistencyError("polynomial " + to_string() +
                           " does not evaluate to an integer");
  }
  const auto& num = numerator(value);
  if (num > std::numeric_limits<std::int64_t>::max() ||
      num < std::numeric_limits<std::int64_t>::min()) {
    throw ConsistencyError("polynomial value overflows 64 bits");
  }
  return num.convert_to<std::int64_t>();
}

double PolyExpr::evaluate_real(const VarLookup& lookup) const {
  return evaluate_rational(lookup).convert_to<double>();
}

PolyExpr PolyExpr::reordered(const std::vector<std::string>& order) const {
  std::vector<std::string> vars = order;
  append_missing(vars, vars_);
  return PolyExpr(std::move(vars), terms_);
}

PolyExpr PolyExpr::scaled(const Rational& factor) const {
  if (factor < 0) {
    throw SchemaError("polynomial coefficients must be positive");
  }
  if (factor == 0) return PolyExpr(vars_, {});
  std::vector<Monomial> t = terms_;
  for (auto& m : t) m.coefficient *= factor;
  return PolyExpr(vars_, std::move(t));
}

std::string PolyExpr::to_string() const {
  if (terms_.empty()) return "0";
  std::string out;
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    if (i) out += " + ";
    out += terms_[i].to_string();
  }
  return out;
}

PolyExpr operator+(const PolyExpr& a, const PolyExpr& b) {
  std::vector<std::string> vars = a.vars_;
  append_missing(vars, b.vars_);
  std::vector<Monomial> t = a.terms_;
  t.insert(t.end(), b.terms_.begin(), b.terms_.end());
  return PolyExpr(std::move(vars), std::move(t));
}

PolyExpr operator*(const PolyExpr& a, const PolyExpr& b) {
  std::vector<std::string> vars = a.vars_;
  append_missing(vars, b.vars_);
  std::vector<Monomial> t;
  t.reserve(a.terms_.size() * b.terms_.size());
  for (const auto& x : a.terms_) {
    for (const auto& y : b.terms_) t.push_back(monomial_product(x, y));
  }
  return PolyExpr(std::move(vars), std::move(t));
}

PolyExpr& PolyExpr::operator+=(const PolyExpr& other) {
  *this = *this + other;
  return *this;
}

PolyExpr& PolyExpr::operator*=(const PolyExpr& other) {
  *this = *this * other;
  return *this;
}

bool operator==(const PolyExpr& a, const PolyExpr& b) {
  if (a.terms_.size() != b.terms_.size()) return false;
  std::map<ExponentMap, Rational> ma;
  for (const auto& m : a.terms_) ma[m.exponents] = m.coefficient;
  for (const auto& m : b.terms_) {
    auto it = ma.find(m.exponents);
    if (it == ma.end() || it->second != m.coefficient) return false;
  }
  return true;
}

PolyExpr add(const PolyExpr& a, const PolyExpr& b) { return a + b; }
PolyExpr mul(const PolyExpr& a, const PolyExpr& b) { return a * b; }
Monomial leading_term(const PolyExpr& p) { return p.leading_term(); }

}  // namespace ose
