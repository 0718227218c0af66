#include "cogat/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "cogat/errors.hpp"

namespace cogat {

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  std::vector<double>& ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), 0.0);
    return grad;
  }
};

}  // namespace detail

using detail::Node;
using NodePtr = std::shared_ptr<Node>;

namespace {

std::atomic<std::uint64_t> g_log_floor_events{0};

std::size_t product(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

void validate_shape(const Shape& shape) {
  if (shape.empty() || shape.size() > 2) {
    throw ShapeError("tensor rank must be 1 or 2, got shape " + shape_string(shape));
  }
  for (auto d : shape) {
    if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_string(shape));
  }
}

[[noreturn]] void shape_mismatch(const char* op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_string(a) + " and " +
                   shape_string(b));
}

std::size_t rows_of(const Shape& s) { return s.size() == 2 ? s[0] : 1; }
std::size_t cols_of(const Shape& s) { return s.size() == 2 ? s[1] : s[0]; }

}  // namespace

// Builds result nodes and wires their backward closures.
class OpBuilder {
 public:
  static NodePtr node(const Tensor& t) { return t.node_; }

  static Tensor make(Shape shape, std::vector<double> value,
                     std::initializer_list<const Tensor*> inputs,
                     std::function<void(Node&)> backward_fn) {
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->value = std::move(value);
    bool needs = false;
    for (const Tensor* in : inputs) needs = needs || in->requires_grad();
    if (needs) {
      n->requires_grad = true;
      for (const Tensor* in : inputs) n->parents.push_back(in->node_);
      n->backward_fn = std::move(backward_fn);
    }
    return Tensor(std::move(n));
  }

  static Tensor make_many(Shape shape, std::vector<double> value, std::span<const Tensor> inputs,
                          std::function<void(Node&)> backward_fn) {
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->value = std::move(value);
    bool needs = std::any_of(inputs.begin(), inputs.end(),
                             [](const Tensor& t) { return t.requires_grad(); });
    if (needs) {
      n->requires_grad = true;
      for (const auto& in : inputs) n->parents.push_back(in.node_);
      n->backward_fn = std::move(backward_fn);
    }
    return Tensor(std::move(n));
  }

  static Tensor wrap(NodePtr n) { return Tensor(std::move(n)); }
};

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

// ---------------------------------------------------------------------------
// Tensor

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  validate_shape(shape);
  auto n = std::make_shared<Node>();
  n->value.assign(product(shape), value);
  n->shape = std::move(shape);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  validate_shape(shape);
  if (product(shape) != values.size()) {
    throw ShapeError("value count " + std::to_string(values.size()) + " does not match shape " +
                     shape_string(shape));
  }
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(values);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::scalar(double value, bool requires_grad) { return from({1}, {value}, requires_grad); }

const Shape& Tensor::shape() const {
  if (!node_) throw ContractError("use of undefined tensor");
  return node_->shape;
}
std::size_t Tensor::size() const { return node_ ? node_->value.size() : 0; }
std::size_t Tensor::rows() const { return rows_of(shape()); }
std::size_t Tensor::cols() const { return cols_of(shape()); }

std::span<const double> Tensor::values() const { return node_->value; }
std::span<double> Tensor::mutable_values() { return node_->value; }

double Tensor::item() const {
  if (size() != 1) throw ContractError("item() on tensor of shape " + shape_string(shape()));
  return node_->value[0];
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }
void Tensor::set_requires_grad(bool flag) { node_->requires_grad = flag; }

bool Tensor::has_grad() const { return node_ && !node_->grad.empty(); }
std::span<const double> Tensor::grad() const { return node_->grad; }
std::span<double> Tensor::mutable_grad() { return node_->ensure_grad(); }
void Tensor::zero_grad() {
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor Tensor::detach() const { return from(shape(), node_->value, false); }

void Tensor::backward() const {
  if (!node_) throw ContractError("backward() on undefined tensor");
  if (node_->value.size() != 1) {
    throw ContractError("backward() requires a scalar loss, got shape " + shape_string(node_->shape));
  }
  if (!node_->requires_grad) return;

  // Iterative post-order DFS gives a topological order (parents before children).
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      Node* p = n->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  node_->ensure_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn) {
      n->ensure_grad();
      n->backward_fn(*n);
    }
  }
  for (Node* n : order) {
    if (n->backward_fn) {
      n->backward_fn = nullptr;
      n->parents.clear();
    }
  }
}

// ---------------------------------------------------------------------------
// Operations

namespace {

Node& P(Node& self, std::size_t i) { return *self.parents[i]; }

bool wants(const Node& n) { return n.requires_grad; }

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows()) shape_mismatch("matmul", a.shape(), b.shape());
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> out(m * n, 0.0);
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t t = 0; t < k; ++t) acc += av[i * k + t] * bv[t * n + j];
      out[i * n + j] = acc;
    }
  }
  return OpBuilder::make({m, n}, std::move(out), {&a, &b}, [m, k, n](Node& self) {
    Node& A = P(self, 0);
    Node& B = P(self, 1);
    const auto& g = self.grad;
    if (wants(A)) {
      auto& ga = A.ensure_grad();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t t = 0; t < k; ++t) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * B.value[t * n + j];
          ga[i * k + t] += acc;
        }
    }
    if (wants(B)) {
      auto& gb = B.ensure_grad();
      for (std::size_t t = 0; t < k; ++t)
        for (std::size_t j = 0; j < n; ++j) {
          double acc = 0.0;
          for (std::size_t i = 0; i < m; ++i) acc += A.value[i * k + t] * g[i * n + j];
          gb[t * n + j] += acc;
        }
    }
  });
}

Tensor transpose(const Tensor& a) {
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(m * n);
  auto av = a.values();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = av[i * n + j];
  return OpBuilder::make({n, m}, std::move(out), {&a}, [m, n](Node& self) {
    auto& ga = P(self, 0).ensure_grad();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += self.grad[j * m + i];
  });
}

namespace {

template <typename Fwd, typename DA, typename DB>
Tensor binary_elementwise(const char* name, const Tensor& a, const Tensor& b, Fwd fwd, DA da, DB db) {
  if (a.shape() != b.shape()) shape_mismatch(name, a.shape(), b.shape());
  auto av = a.values();
  auto bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = fwd(av[i], bv[i]);
  return OpBuilder::make(a.shape(), std::move(out), {&a, &b}, [da, db](Node& self) {
    Node& A = P(self, 0);
    Node& B = P(self, 1);
    if (wants(A)) {
      auto& ga = A.ensure_grad();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i] * da(A.value[i], B.value[i]);
    }
    if (wants(B)) {
      auto& gb = B.ensure_grad();
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += self.grad[i] * db(A.value[i], B.value[i]);
    }
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_elementwise(
      "add", a, b, [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_elementwise(
      "sub", a, b, [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_elementwise(
      "mul", a, b, [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

Tensor scale(const Tensor& a, double factor) {
  auto av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * factor;
  return OpBuilder::make(a.shape(), std::move(out), {&a}, [factor](Node& self) {
    auto& ga = P(self, 0).ensure_grad();
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i] * factor;
  });
}

Tensor scale_by(const Tensor& a, const Tensor& s) {
  if (s.size() != 1) shape_mismatch("scale_by", a.shape(), s.shape());
  const double factor = s.item();
  auto av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * factor;
  return OpBuilder::make(a.shape(), std::move(out), {&a, &s}, [](Node& self) {
    Node& A = P(self, 0);
    Node& S = P(self, 1);
    const double f = S.value[0];
    if (wants(A)) {
      auto& ga = A.ensure_grad();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i] * f;
    }
    if (wants(S)) {
      double acc = 0.0;
      for (std::size_t i = 0; i < A.value.size(); ++i) acc += self.grad[i] * A.value[i];
      S.ensure_grad()[0] += acc;
    }
  });
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  if (bias.rank() != 1 || bias.size() != x.cols()) shape_mismatch("add_bias", x.shape(), bias.shape());
  const std::size_t m = x.rows(), n = x.cols();
  auto xv = x.values();
  auto bv = bias.values();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = xv[i * n + j] + bv[j];
  return OpBuilder::make(x.shape(), std::move(out), {&x, &bias}, [m, n](Node& self) {
    Node& X = P(self, 0);
    Node& B = P(self, 1);
    if (wants(X)) {
      auto& gx = X.ensure_grad();
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i];
    }
    if (wants(B)) {
      auto& gb = B.ensure_grad();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gb[j] += self.grad[i * n + j];
    }
  });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  if (weight.rank() != 2 || weight.cols() != x.cols()) shape_mismatch("linear", x.shape(), weight.shape());
  if (bias.rank() != 1 || bias.size() != weight.rows()) shape_mismatch("linear", weight.shape(), bias.shape());
  const std::size_t m = x.rows(), in = x.cols(), out_dim = weight.rows();
  auto xv = x.values();
  auto wv = weight.values();
  auto bv = bias.values();
  std::vector<double> out(m * out_dim);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t o = 0; o < out_dim; ++o) {
      double acc = 0.0;
      for (std::size_t t = 0; t < in; ++t) acc += xv[i * in + t] * wv[o * in + t];
      out[i * out_dim + o] = acc + bv[o];
    }
  Shape shape = x.rank() == 1 ? Shape{out_dim} : Shape{m, out_dim};
  return OpBuilder::make(std::move(shape), std::move(out), {&x, &weight, &bias},
                         [m, in, out_dim](Node& self) {
                           Node& X = P(self, 0);
                           Node& W = P(self, 1);
                           Node& B = P(self, 2);
                           const auto& g = self.grad;
                           if (wants(X)) {
                             auto& gx = X.ensure_grad();
                             for (std::size_t i = 0; i < m; ++i)
                               for (std::size_t t = 0; t < in; ++t) {
                                 double acc = 0.0;
                                 for (std::size_t o = 0; o < out_dim; ++o) acc += g[i * out_dim + o] * W.value[o * in + t];
                                 gx[i * in + t] += acc;
                               }
                           }
                           if (wants(W)) {
                             auto& gw = W.ensure_grad();
                             for (std::size_t o = 0; o < out_dim; ++o)
                               for (std::size_t t = 0; t < in; ++t) {
                                 double acc = 0.0;
                                 for (std::size_t i = 0; i < m; ++i) acc += g[i * out_dim + o] * X.value[i * in + t];
                                 gw[o * in + t] += acc;
                               }
                           }
                           if (wants(B)) {
                             auto& gb = B.ensure_grad();
                             for (std::size_t i = 0; i < m; ++i)
                               for (std::size_t o = 0; o < out_dim; ++o) gb[o] += g[i * out_dim + o];
                           }
                         });
}

Tensor tanh(const Tensor& x) {
  auto xv = x.values();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = std::tanh(xv[i]);
  return OpBuilder::make(x.shape(), std::move(out), {&x}, [](Node& self) {
    auto& gx = P(self, 0).ensure_grad();
    for (std::size_t i = 0; i < gx.size(); ++i) {
      const double y = self.value[i];
      gx[i] += self.grad[i] * (1.0 - y * y);
    }
  });
}

Tensor sum(const Tensor& x) {
  auto xv = x.values();
  const double total = std::accumulate(xv.begin(), xv.end(), 0.0);
  return OpBuilder::make({1}, {total}, {&x}, [](Node& self) {
    auto& gx = P(self, 0).ensure_grad();
    for (auto& g : gx) g += self.grad[0];
  });
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.size())); }

Tensor softmax(const Tensor& x, std::size_t axis) {
  if (axis >= x.rank()) throw ShapeError("softmax: axis " + std::to_string(axis) + " invalid for shape " + shape_string(x.shape()));
  auto xv = x.values();
  for (double v : xv) {
    if (!std::isfinite(v)) throw NumericError("softmax: non-finite input");
  }
  // Treat the tensor as `outer` independent slices of length `len` with stride `stride`.
  const std::size_t m = x.rows(), n = x.cols();
  const bool along_rows = (x.rank() == 1) || axis == 1;
  const std::size_t outer = along_rows ? m : n;
  const std::size_t len = along_rows ? n : m;
  auto index = [=](std::size_t o, std::size_t t) { return along_rows ? o * n + t : t * n + o; };

  std::vector<double> out(xv.size());
  for (std::size_t o = 0; o < outer; ++o) {
    double mx = xv[index(o, 0)];
    for (std::size_t t = 1; t < len; ++t) mx = std::max(mx, xv[index(o, t)]);
    double z = 0.0;
    for (std::size_t t = 0; t < len; ++t) {
      const double e = std::exp(xv[index(o, t)] - mx);
      out[index(o, t)] = e;
      z += e;
    }
    for (std::size_t t = 0; t < len; ++t) out[index(o, t)] /= z;
  }
  return OpBuilder::make(x.shape(), std::move(out), {&x}, [outer, len, index](Node& self) {
    auto& gx = P(self, 0).ensure_grad();
    for (std::size_t o = 0; o < outer; ++o) {
      double dot = 0.0;
      for (std::size_t t = 0; t < len; ++t) dot += self.grad[index(o, t)] * self.value[index(o, t)];
      for (std::size_t t = 0; t < len; ++t) {
        const std::size_t i = index(o, t);
        gx[i] += self.value[i] * (self.grad[i] - dot);
      }
    }
  });
}

Tensor cross_entropy(const Tensor& probs, std::size_t target) {
  if (probs.rank() != 1) throw ShapeError("cross_entropy: expected a probability vector, got " + shape_string(probs.shape()));
  if (target >= probs.size()) {
    throw ContractError("cross_entropy: target " + std::to_string(target) + " out of range for " +
                        std::to_string(probs.size()) + " classes");
  }
  {
    auto pv = probs.values();
    const double total = std::accumulate(pv.begin(), pv.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-6) {
      throw ContractError("cross_entropy: probabilities sum to " + std::to_string(total));
    }
  }
  double p = probs.at(target);
  const bool floored = !(p > kLogFloor);
  if (floored) {
    if (g_log_floor_events.fetch_add(1) == 0) {
      std::cerr << "warning: cross_entropy probability below " << kLogFloor << "; clamped (further events counted)\n";
    }
    p = kLogFloor;
  }
  return OpBuilder::make({1}, {-std::log(p)}, {&probs}, [target, floored](Node& self) {
    Node& X = P(self, 0);
    if (floored) return;  // constant in the clamped region
    X.ensure_grad()[target] += -self.grad[0] / X.value[target];
  });
}

std::uint64_t log_floor_events() { return g_log_floor_events.load(); }
void reset_log_floor_events() { g_log_floor_events.store(0); }

Tensor blend(const Tensor& a, const Tensor& b, const Tensor& w) {
  if (a.shape() != b.shape()) shape_mismatch("blend", a.shape(), b.shape());
  if (w.size() != 1) shape_mismatch("blend", a.shape(), w.shape());
  const double wt = w.item();
  auto av = a.values();
  auto bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double v = wt * av[i] + (1.0 - wt) * bv[i];
    out[i] = std::clamp(v, std::min(av[i], bv[i]), std::max(av[i], bv[i]));
  }
  return OpBuilder::make(a.shape(), std::move(out), {&a, &b, &w}, [](Node& self) {
    Node& A = P(self, 0);
    Node& B = P(self, 1);
    Node& W = P(self, 2);
    const double wt = W.value[0];
    if (wants(A)) {
      auto& ga = A.ensure_grad();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i] * wt;
    }
    if (wants(B)) {
      auto& gb = B.ensure_grad();
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += self.grad[i] * (1.0 - wt);
    }
    if (wants(W)) {
      double acc = 0.0;
      for (std::size_t i = 0; i < A.value.size(); ++i) acc += self.grad[i] * (A.value[i] - B.value[i]);
      W.ensure_grad()[0] += acc;
    }
  });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw ContractError("concat_cols: no inputs");
  const std::size_t m = parts[0].rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.rank() != 2 || p.rows() != m) shape_mismatch("concat_cols", parts[0].shape(), p.shape());
    widths.push_back(p.cols());
    total += p.cols();
  }
  std::vector<double> out(m * total);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    auto pv = p.values();
    const std::size_t w = p.cols();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < w; ++j) out[i * total + offset + j] = pv[i * w + j];
    offset += w;
  }
  return OpBuilder::make_many({m, total}, std::move(out), parts, [m, total, widths](Node& self) {
    std::size_t off = 0;
    for (std::size_t k = 0; k < widths.size(); ++k) {
      Node& part = P(self, k);
      const std::size_t w = widths[k];
      if (wants(part)) {
        auto& g = part.ensure_grad();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < w; ++j) g[i * w + j] += self.grad[i * total + off + j];
      }
      off += w;
    }
  });
}

Tensor stack_rows(std::span<const Tensor> rows) {
  if (rows.empty()) throw ContractError("stack_rows: no inputs");
  const std::size_t n = rows[0].size();
  for (const auto& r : rows) {
    if (r.rank() != 1 || r.size() != n) shape_mismatch("stack_rows", rows[0].shape(), r.shape());
  }
  const std::size_t m = rows.size();
  std::vector<double> out;
  out.reserve(m * n);
  for (const auto& r : rows) out.insert(out.end(), r.values().begin(), r.values().end());
  return OpBuilder::make_many({m, n}, std::move(out), rows, [m, n](Node& self) {
    for (std::size_t i = 0; i < m; ++i) {
      Node& r = P(self, i);
      if (!wants(r)) continue;
      auto& g = r.ensure_grad();
      for (std::size_t j = 0; j < n; ++j) g[j] += self.grad[i * n + j];
    }
  });
}

Tensor row(const Tensor& x, std::size_t r) {
  if (r >= x.rows()) throw ShapeError("row: index " + std::to_string(r) + " out of range for " + shape_string(x.shape()));
  const std::size_t n = x.cols();
  auto xv = x.values();
  std::vector<double> out(xv.begin() + static_cast<std::ptrdiff_t>(r * n),
                          xv.begin() + static_cast<std::ptrdiff_t>((r + 1) * n));
  return OpBuilder::make({n}, std::move(out), {&x}, [r, n](Node& self) {
    auto& g = P(self, 0).ensure_grad();
    for (std::size_t j = 0; j < n; ++j) g[r * n + j] += self.grad[j];
  });
}

Tensor element(const Tensor& x, std::size_t i) {
  if (i >= x.size()) throw ShapeError("element: index " + std::to_string(i) + " out of range for " + shape_string(x.shape()));
  return OpBuilder::make({1}, {x.at(i)}, {&x}, [i](Node& self) { P(self, 0).ensure_grad()[i] += self.grad[0]; });
}

Tensor embedding_bag(const Tensor& table, const SparseCounts& counts) {
  if (table.rank() != 2) throw ShapeError("embedding_bag: table must be rank 2, got " + shape_string(table.shape()));
  const std::size_t vocab = table.rows(), d = table.cols();
  auto tv = table.values();
  std::vector<double> out(d, 0.0);
  for (const auto& [idx, count] : counts) {
    if (idx >= vocab) throw ShapeError("embedding_bag: index " + std::to_string(idx) + " outside table " + shape_string(table.shape()));
    for (std::size_t j = 0; j < d; ++j) out[j] += count * tv[idx * d + j];
  }
  return OpBuilder::make({d}, std::move(out), {&table}, [counts, d](Node& self) {
    auto& g = P(self, 0).ensure_grad();
    for (const auto& [idx, count] : counts)
      for (std::size_t j = 0; j < d; ++j) g[idx * d + j] += count * self.grad[j];
  });
}

}  // namespace cogat
