#pragma once

// Shared builders for tests and the acceptance binary.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "ose/arch.hpp"
#include "ose/metrics.hpp"
#include "ose/network.hpp"
#include "ose/rng.hpp"
#include "ose/trainer.hpp"

namespace ose::testing {

inline PolyExpr P(const std::string& s) { return PolyExpr::parse(s); }

inline ArchParamVar var(std::string name, std::vector<std::int64_t> domain,
                        VarRole role = VarRole::kDimension) {
  return ArchParamVar{std::move(name), role, std::move(domain)};
}

inline Constraint divides(const std::string& lhs, const std::string& rhs) {
  return Constraint{Constraint::Kind::kDivides, P(lhs), P(rhs)};
}

inline ParamAssignment assign(std::vector<std::pair<std::string, std::int64_t>> v) {
  return ParamAssignment(std::move(v));
}

// Example 1: attention block p -> H with A heads, dense H -> J, sigmoid.
inline ArchTemplate example1(std::int64_t p) {
  std::vector<LayerTemplate> layers{
      LayerTemplate::attention(P("p"), P("H"), P("A")),
      LayerTemplate::dense(P("H"), P("J")),
      LayerTemplate::activation_layer(Activation::kSigmoid, P("J")),
  };
  return ArchTemplate({"p", "H", "A", "J"}, std::move(layers), p, std::nullopt,
                      {divides("A", "H")});
}

inline std::vector<ArchParamVar> example1_vars(std::int64_t p,
                                               std::vector<std::int64_t> hs,
                                               std::vector<std::int64_t> as) {
  return {var("p", {p}, VarRole::kOther), var("H", std::move(hs)),
          var("A", std::move(as), VarRole::kDivisor), var("J", {1}, VarRole::kOther)};
}

// dense p->h, sigmoid, dense h->1, sigmoid.
inline ArchTemplate dense_chain(std::int64_t p) {
  std::vector<LayerTemplate> layers{
      LayerTemplate::dense(PolyExpr::constant(p), P("h")),
      LayerTemplate::activation_layer(Activation::kSigmoid, P("h")),
      LayerTemplate::dense(P("h"), PolyExpr::constant(1)),
      LayerTemplate::activation_layer(Activation::kSigmoid, PolyExpr::constant(1)),
  };
  return ArchTemplate({"h"}, std::move(layers), p);
}

// A = dense(p->h)+act, B = (dense(h->h)+act) repeated n times,
// C = dense(h->1)+sigmoid.
inline ArchTemplate abnc_family(std::int64_t p, Activation act = Activation::kSigmoid) {
  std::vector<LayerTemplate> layers{
      LayerTemplate::dense(PolyExpr::constant(p), P("h")).tagged(Segment::kA),
      LayerTemplate::activation_layer(act, P("h")).tagged(Segment::kA),
      LayerTemplate::dense(P("h"), P("h")).tagged(Segment::kB),
      LayerTemplate::activation_layer(act, P("h")).tagged(Segment::kB),
      LayerTemplate::dense(P("h"), PolyExpr::constant(1)).tagged(Segment::kC),
      LayerTemplate::activation_layer(Activation::kSigmoid, PolyExpr::constant(1))
          .tagged(Segment::kC),
  };
  return ArchTemplate({"h", "n"}, std::move(layers), p, std::string("n"));
}

struct RandomFamily {
  ArchTemplate arch;
  std::vector<ArchParamVar> variables;
};

// Random well-posed chain over variables h and k, mixing every layer kind.
// Relu is excluded when `smooth` is set, so finite differences stay away from
// kinks.
inline RandomFamily random_family(Rng& rng, std::size_t max_layers = 4, bool smooth = false) {
  const std::vector<std::string> widths{"h", "k", "2*h", "h*k", "h + k", "3"};
  auto pick_width = [&] { return P(widths[rng.below(widths.size())]); };
  const std::int64_t input = 1 + static_cast<std::int64_t>(rng.below(3));
  PolyExpr w = PolyExpr::constant(input);
  std::vector<LayerTemplate> layers;
  auto add_activation = [&] {
    const std::size_t n = smooth ? 2 : 3;
    const Activation fns[] = {Activation::kSigmoid, Activation::kTanh, Activation::kRelu};
    layers.push_back(LayerTemplate::activation_layer(fns[rng.below(n)], w));
  };
  const std::size_t count = 1 + rng.below(max_layers);
  for (std::size_t i = 0; i < count; ++i) {
    switch (rng.below(6)) {
      case 0: {
        const PolyExpr out = pick_width();
        layers.push_back(LayerTemplate::dense(w, out, rng.below(2) == 0));
        w = out;
        add_activation();
        break;
      }
      case 1: {
        const PolyExpr out = P("2*h");
        layers.push_back(LayerTemplate::dense(w, out));
        layers.push_back(LayerTemplate::softmax(out, rng.below(2) == 0 ? P("2") : P("h")));
        w = out;
        break;
      }
      case 2:
        layers.push_back(LayerTemplate::scale(w, 0.5 + rng.uniform01()));
        break;
      case 3: {
        const char* dims[] = {"1", "2", "h", "k"};
        const PolyExpr a = P(dims[rng.below(4)]);
        const PolyExpr b = P(dims[rng.below(4)]);
        const PolyExpr c = P(dims[rng.below(4)]);
        const PolyExpr in = a * b + b * c;
        layers.push_back(LayerTemplate::dense(w, in));
        layers.push_back(LayerTemplate::matmul_pair(a, b, c));
        w = a * c;
        break;
      }
      case 4: {
        const bool multi = rng.below(2) == 0;
        const PolyExpr hidden = multi ? P("2*h") : P("h");
        layers.push_back(LayerTemplate::attention(w, hidden, multi ? P("2") : P("1")));
        w = hidden;
        break;
      }
      default:
        add_activation();
        break;
    }
  }
  layers.push_back(LayerTemplate::dense(w, PolyExpr::constant(1), rng.below(2) == 0));
  layers.push_back(LayerTemplate::activation_layer(Activation::kSigmoid, PolyExpr::constant(1)));
  RandomFamily fam{ArchTemplate({"h", "k"}, std::move(layers), input),
                   {var("h", {1, 2, 3}), var("k", {1, 2, 4})}};
  return fam;
}

inline ParamAssignment random_assignment(Rng& rng, const std::vector<ArchParamVar>& vars) {
  std::vector<std::pair<std::string, std::int64_t>> v;
  for (const auto& x : vars) v.emplace_back(x.name, x.domain[rng.below(x.domain.size())]);
  return ParamAssignment(std::move(v));
}

// Two Gaussian clusters centered at -1 and +1.
inline Dataset blobs(std::size_t n, std::size_t p, double noise, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d;
  for (std::size_t i = 0; i < n; ++i) {
    DataPoint pt;
    pt.y = static_cast<int>(i % 2);
    for (std::size_t k = 0; k < p; ++k) {
      pt.x.push_back((pt.y == 1 ? 1.0 : -1.0) + noise * rng.normal());
    }
    d.points.push_back(std::move(pt));
  }
  return d;
}

inline Dataset random_dataset(Rng& rng, std::size_t n, std::size_t p) {
  Dataset d;
  for (std::size_t i = 0; i < n; ++i) {
    DataPoint pt;
    for (std::size_t k = 0; k < p; ++k) pt.x.push_back(rng.uniform(-2.0, 2.0));
    pt.y = static_cast<int>(rng.below(2));
    d.points.push_back(std::move(pt));
  }
  return d;
}

// True when some relu input lies within `margin` of its kink, where finite
// differences are meaningless.
inline bool near_relu_kink(const Network& net, const std::vector<double>& x, double margin) {
  ForwardCache cache;
  forward(net, x, cache);
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const auto& l = net.layers[i];
    if (l.kind != LayerKind::kActivation || l.activation != Activation::kRelu) continue;
    for (double v : cache.values[i]) {
      if (std::abs(v) < margin) return true;
    }
  }
  return false;
}

// Largest relative difference between backprop and central differences over
// all parameters, with |a - b| / max(|a|, |b|, floor).
inline double finite_difference_error(const Network& net, const std::vector<double>& x,
                                      int y, const Loss& loss, double h, double floor) {
  const std::vector<double> grad = flatten(backprop(net, x, y, loss).grads);
  Network probe = net;
  std::vector<double> w = net.flat_parameters();
  double worst = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double saved = w[k];
    w[k] = saved + h;
    probe.set_flat_parameters(w);
    const double up = loss.value(forward(probe, x), y);
    w[k] = saved - h;
    probe.set_flat_parameters(w);
    const double down = loss.value(forward(probe, x), y);
    w[k] = saved;
    const double fd = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(fd), std::abs(grad[k]), floor});
    worst = std::max(worst, std::abs(fd - grad[k]) / denom);
  }
  return worst;
}

inline Rational exact_decimal(double v) {
  // Shortest round-trip decimal, read digit by digit into an exact rational.
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific);
  std::string s(buf, end);
  const auto e_pos = s.find('e');
  const int exponent = std::stoi(s.substr(e_pos + 1));
  std::string mant = s.substr(0, e_pos);
  bool negative = false;
  if (mant[0] == '-') {
    negative = true;
    mant.erase(0, 1);
  }
  boost::multiprecision::cpp_int digits = 0;
  int frac = 0;
  bool after_point = false;
  for (char c : mant) {
    if (c == '.') {
      after_point = true;
      continue;
    }
    digits = digits * 10 + (c - '0');
    if (after_point) ++frac;
  }
  const int shift = exponent - frac;
  boost::multiprecision::cpp_int scale = 1;
  for (int k = 0; k < std::abs(shift); ++k) scale *= 10;
  Rational r = shift >= 0 ? Rational(digits * scale) : Rational(digits, scale);
  return negative ? -r : r;
}

// Largest T >= 0 with T <= X / eps^(3/2), i.e. T^2 eps^3 <= X^2.
inline std::uint64_t oracle_budget(double L, double G, double F0, double Finf, std::uint64_t n,
                            double eps) {
  const Rational X = 3 * exact_decimal(L) * exact_decimal(G) *
                     (exact_decimal(F0) - exact_decimal(Finf)) * Rational(n);
  const Rational e = exact_decimal(eps);
  const Rational e3 = e * e * e;
  auto fits = [&](const boost::multiprecision::cpp_int& T) {
    return Rational(T) * Rational(T) * e3 <= X * X;
  };
  boost::multiprecision::cpp_int lo = 0, hi = 1;
  while (fits(hi)) hi *= 2;
  while (hi - lo > 1) {
    const boost::multiprecision::cpp_int mid = (lo + hi) / 2;
    (fits(mid) ? lo : hi) = mid;
  }
  return lo.convert_to<std::uint64_t>();
}

}  // namespace ose::testing
