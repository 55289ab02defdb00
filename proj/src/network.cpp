#include "ose/network.hpp"

#include <algorithm>
#include <cmath>

#include "ose/errors.hpp"
#include "ose/rng.hpp"

namespace ose {

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::size_t eval_size(const PolyExpr& p, const ParamAssignment& a) {
  return static_cast<std::size_t>(p.evaluate(a.lookup()));
}

Tensor make_tensor(std::vector<std::size_t> shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return Tensor{std::move(shape), std::vector<double>(n, 0.0)};
}

void softmax_groups(std::span<const double> in, std::size_t groups,
                    std::vector<double>& out) {
  const std::size_t width = in.size() / groups;
  out.resize(in.size());
  for (std::size_t g = 0; g < groups; ++g) {
    const std::size_t base = g * width;
    double mx = in[base];
    for (std::size_t i = 1; i < width; ++i) mx = std::max(mx, in[base + i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < width; ++i) {
      out[base + i] = std::exp(in[base + i] - mx);
      sum += out[base + i];
    }
    for (std::size_t i = 0; i < width; ++i) out[base + i] /= sum;
  }
}

void softmax_groups_backward(std::span<const double> y,
                             std::span<const double> dy, std::size_t groups,
                             std::vector<double>& dx) {
  const std::size_t width = y.size() / groups;
  dx.assign(y.size(), 0.0);
  for (std::size_t g = 0; g < groups; ++g) {
    const std::size_t base = g * width;
    double dot = 0.0;
    for (std::size_t i = 0; i < width; ++i) dot += y[base + i] * dy[base + i];
    for (std::size_t i = 0; i < width; ++i) {
      dx[base + i] = y[base + i] * (dy[base + i] - dot);
    }
  }
}

// y = W x + b for W rows x cols.
void affine(const Tensor& w, const Tensor* b, std::span<const double> x,
            std::vector<double>& y) {
  const std::size_t rows = w.shape[0];
  const std::size_t cols = w.shape[1];
  y.assign(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = b ? b->data[r] : 0.0;
    const double* row = &w.data[r * cols];
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
}

// Accumulates dW += dy x^T, db += dy and dx += W^T dy.
void affine_backward(const Tensor& w, std::span<const double> x,
                     std::span<const double> dy, Tensor& dw, Tensor* db,
                     std::vector<double>& dx) {
  const std::size_t rows = w.shape[0];
  const std::size_t cols = w.shape[1];
  for (std::size_t r = 0; r < rows; ++r) {
    const double g = dy[r];
    double* drow = &dw.data[r * cols];
    const double* row = &w.data[r * cols];
    for (std::size_t c = 0; c < cols; ++c) {
      drow[c] += g * x[c];
      dx[c] += row[c] * g;
    }
    if (db) db->data[r] += g;
  }
}

struct AttentionParts {
  std::vector<double> k, q, v, z;
  double scale = 1.0;
  double qv = 0.0;
};

AttentionParts attention_parts(const LayerInstance& l, std::span<const double> x) {
  AttentionParts p;
  affine(l.params[0], &l.params[3], x, p.k);
  affine(l.params[1], &l.params[4], x, p.q);
  affine(l.params[2], &l.params[5], x, p.v);
  p.scale = 1.0 / std::sqrt(static_cast<double>(l.out) / static_cast<double>(l.groups));
  for (std::size_t i = 0; i < l.out; ++i) p.qv += p.q[i] * p.v[i];
  // (k q^T / sqrt(H/A)) v, evaluated as k (q . v) / sqrt(H/A).
  p.z.resize(l.out);
  for (std::size_t i = 0; i < l.out; ++i) p.z[i] = p.scale * p.k[i] * p.qv;
  return p;
}

void check_finite(std::span<const double> v, std::size_t layer) {
  for (double d : v) {
    if (!std::isfinite(d)) {
      throw NumericError("non-finite value after layer " + std::to_string(layer));
    }
  }
}

}  // namespace

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) {
    for (const auto& t : l.params) n += t.size();
  }
  return n;
}

std::vector<double> Network::flat_parameters() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const auto& l : layers) {
    for (const auto& t : l.params) out.insert(out.end(), t.data.begin(), t.data.end());
  }
  return out;
}

void Network::set_flat_parameters(std::span<const double> values) {
  if (values.size() != parameter_count()) {
    throw PreconditionError("parameter vector has the wrong length");
  }
  std::size_t off = 0;
  for (auto& l : layers) {
    for (auto& t : l.params) {
      std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(off), t.size(), t.data.begin());
      off += t.size();
    }
  }
}

Network instantiate(const ArchTemplate& t, const ParamAssignment& a,
                    const InitScheme& init, std::uint64_t seed) {
  auto issues = assignment_issues(t, a);
  if (!issues.empty()) {
    throw PreconditionError("invalid assignment " + a.to_string() + ": " + issues.front());
  }
  Network net;
  net.assignment = a;
  net.input_dim = static_cast<std::size_t>(t.input_dim());
  Rng rng(seed);
  for (const LayerTemplate* lt : t.expanded(a)) {
    LayerInstance li;
    li.kind = lt->kind;
    li.activation = lt->activation;
    li.in = eval_size(lt->in_dim, a);
    li.out = eval_size(lt->out_dim, a);
    li.has_bias = lt->has_bias;
    li.scale_factor = lt->scale_factor;
    if (lt->kind == LayerKind::kSoftmax || lt->kind == LayerKind::kAttentionBlock) {
      li.groups = eval_size(lt->groups, a);
    }
    if (lt->kind == LayerKind::kMatmulPair) {
      li.mm_a = eval_size(lt->mm_a, a);
      li.mm_b = eval_size(lt->mm_b, a);
      li.mm_c = eval_size(lt->mm_c, a);
    }
    for (const auto& shape : lt->weight_shapes) {
      std::vector<std::size_t> dims;
      for (const auto& d : shape) dims.push_back(eval_size(d, a));
      li.params.push_back(make_tensor(std::move(dims)));
    }
    const double r = 1.0 / std::sqrt(static_cast<double>(li.in));
    for (auto& tensor : li.params) {
      for (auto& w : tensor.data) {
        w = init.kind == InitScheme::Kind::kConstant ? init.value : rng.uniform(-r, r);
      }
    }
    net.layers.push_back(std::move(li));
  }
  return net;
}

std::vector<double> layer_forward(const LayerInstance& l, std::span<const double> x) {
  std::vector<double> y;
  switch (l.kind) {
    case LayerKind::kDense:
      affine(l.params[0], l.has_bias ? &l.params[1] : nullptr, x, y);
      break;
    case LayerKind::kActivation:
      y.resize(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) {
        switch (l.activation) {
          case Activation::kSigmoid:
            y[i] = sigmoid(x[i]);
            break;
          case Activation::kRelu:
            y[i] = x[i] > 0 ? x[i] : 0.0;
            break;
          case Activation::kTanh:
            y[i] = std::tanh(x[i]);
            break;
        }
      }
      break;
    case LayerKind::kSoftmax:
      softmax_groups(x, l.groups, y);
      break;
    case LayerKind::kScale:
      y.resize(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) y[i] = l.scale_factor * x[i];
      break;
    case LayerKind::kMatmulPair: {
      const double* lhs = x.data();
      const double* rhs = x.data() + l.mm_a * l.mm_b;
      y.assign(l.mm_a * l.mm_c, 0.0);
      for (std::size_t i = 0; i < l.mm_a; ++i) {
        for (std::size_t k = 0; k < l.mm_b; ++k) {
          const double u = lhs[i * l.mm_b + k];
          for (std::size_t j = 0; j < l.mm_c; ++j) {
            y[i * l.mm_c + j] += u * rhs[k * l.mm_c + j];
          }
        }
      }
      break;
    }
    case LayerKind::kAttentionBlock: {
      auto parts = attention_parts(l, x);
      softmax_groups(parts.z, l.groups, y);
      break;
    }
  }
  return y;
}

std::vector<double> layer_backward(const LayerInstance& l,
                                   std::span<const double> x,
                                   std::span<const double> y,
                                   std::span<const double> dy,
                                   std::vector<Tensor>& grads) {
  std::vector<double> dx(x.size(), 0.0);
  switch (l.kind) {
    case LayerKind::kDense:
      affine_backward(l.params[0], x, dy, grads[0], l.has_bias ? &grads[1] : nullptr, dx);
      break;
    case LayerKind::kActivation:
      for (std::size_t i = 0; i < x.size(); ++i) {
        switch (l.activation) {
          case Activation::kSigmoid:
            dx[i] = dy[i] * y[i] * (1.0 - y[i]);
            break;
          case Activation::kRelu:
            dx[i] = x[i] > 0 ? dy[i] : 0.0;
            break;
          case Activation::kTanh:
            dx[i] = dy[i] * (1.0 - y[i] * y[i]);
            break;
        }
      }
      break;
    case LayerKind::kSoftmax:
      softmax_groups_backward(y, dy, l.groups, dx);
      break;
    case LayerKind::kScale:
      for (std::size_t i = 0; i < x.size(); ++i) dx[i] = l.scale_factor * dy[i];
      break;
    case LayerKind::kMatmulPair: {
      const double* lhs = x.data();
      const double* rhs = x.data() + l.mm_a * l.mm_b;
      double* dlhs = dx.data();
      double* drhs = dx.data() + l.mm_a * l.mm_b;
      for (std::size_t i = 0; i < l.mm_a; ++i) {
        for (std::size_t k = 0; k < l.mm_b; ++k) {
          for (std::size_t j = 0; j < l.mm_c; ++j) {
            const double g = dy[i * l.mm_c + j];
            dlhs[i * l.mm_b + k] += g * rhs[k * l.mm_c + j];
            drhs[k * l.mm_c + j] += g * lhs[i * l.mm_b + k];
          }
        }
      }
      break;
    }
    case LayerKind::kAttentionBlock: {
      auto p = attention_parts(l, x);
      std::vector<double> dz;
      softmax_groups_backward(y, dy, l.groups, dz);
      const std::size_t h = l.out;
      std::vector<double> dk(h), dq(h), dv(h);
      double dqv = 0.0;
      for (std::size_t i = 0; i < h; ++i) {
        dk[i] = p.scale * p.qv * dz[i];
        dqv += p.scale * p.k[i] * dz[i];
      }
      for (std::size_t i = 0; i < h; ++i) {
        dq[i] = dqv * p.v[i];
        dv[i] = dqv * p.q[i];
      }
      affine_backward(l.params[0], x, dk, grads[0], &grads[3], dx);
      affine_backward(l.params[1], x, dq, grads[1], &grads[4], dx);
      affine_backward(l.params[2], x, dv, grads[2], &grads[5], dx);
      break;
    }
  }
  return dx;
}

double forward(const Network& net, std::span<const double> x, ForwardCache& cache) {
  if (x.size() != net.input_dim) {
    throw PreconditionError("input has " + std::to_string(x.size()) +
                            " features, network expects " +
                            std::to_string(net.input_dim));
  }
  if (net.layers.empty()) throw PreconditionError("network has no layers");
  cache.values.resize(net.layers.size() + 1);
  cache.values[0].assign(x.begin(), x.end());
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    cache.values[i + 1] = layer_forward(net.layers[i], cache.values[i]);
    check_finite(cache.values[i + 1], i);
  }
  const auto& out = cache.values.back();
  if (out.size() != 1) throw PreconditionError("network output is not scalar");
  return out[0];
}

double forward(const Network& net, std::span<const double> x) {
  ForwardCache cache;
  return forward(net, x, cache);
}

}  // namespace ose
