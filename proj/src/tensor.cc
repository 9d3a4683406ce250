#include "nltp/tensor.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace nltp {
namespace {

thread_local bool g_grad_enabled = true;

std::size_t rows_of(const Shape& s) {
  if (s.empty()) return 1;
  std::size_t r = 1;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) r *= s[i];
  return r;
}

std::size_t cols_of(const Shape& s) { return s.empty() ? 1 : s.back(); }

// Builds an op output. History is recorded only when some input needs it.
Tensor make_result(Shape shape, std::vector<double> value, const char* op,
                   std::vector<Tensor> inputs,
                   std::function<void(Node&)> backward_fn) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->op = op;
  bool needs = false;
  if (g_grad_enabled) {
    for (const Tensor& t : inputs) needs = needs || t.requires_grad();
  }
  if (needs) {
    node->requires_grad = true;
    for (const Tensor& t : inputs) node->parents.push_back(t.node_ptr());
    node->backward = std::move(backward_fn);
  }
  return Tensor(std::move(node));
}

// Parent gradient buffer, or nullptr when that parent is not tracked.
double* grad_of(Node& out, std::size_t parent) {
  Node& p = *out.parents[parent];
  if (!p.requires_grad) return nullptr;
  p.ensure_grad();
  return p.grad.data();
}

enum class Broadcast { kSame, kRow, kCol, kScalar };

Broadcast broadcast_mode(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() == b.shape()) return Broadcast::kSame;
  if (b.size() == 1) return Broadcast::kScalar;
  if (b.rows() == 1 && b.cols() == a.cols()) return Broadcast::kRow;
  if (b.cols() == 1 && b.rows() == a.rows()) return Broadcast::kCol;
  throw DimensionError(std::string(op) + ": cannot broadcast " +
                       shape_string(b.shape()) + " onto " +
                       shape_string(a.shape()));
}

inline std::size_t b_index(Broadcast mode, std::size_t i, std::size_t j,
                           std::size_t cols) {
  switch (mode) {
    case Broadcast::kSame: return i * cols + j;
    case Broadcast::kRow: return j;
    case Broadcast::kCol: return i;
    case Broadcast::kScalar: return 0;
  }
  return 0;
}

template <typename Fwd, typename DA, typename DB>
Tensor binary_op(const Tensor& a, const Tensor& b, const char* op, Fwd fwd,
                 DA da, DB db) {
  const Broadcast mode = broadcast_mode(a, b, op);
  const std::size_t rows = a.rows(), cols = a.cols();
  std::vector<double> out(a.size());
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      out[i * cols + j] = fwd(av[i * cols + j], bv[b_index(mode, i, j, cols)]);
    }
  }
  return make_result(
      a.shape(), std::move(out), op, {a, b},
      [mode, rows, cols, da, db](Node& n) {
        const auto& x = n.parents[0]->value;
        const auto& y = n.parents[1]->value;
        double* ga = grad_of(n, 0);
        double* gb = grad_of(n, 1);
        for (std::size_t i = 0; i < rows; ++i) {
          for (std::size_t j = 0; j < cols; ++j) {
            const std::size_t k = i * cols + j;
            const std::size_t kb = b_index(mode, i, j, cols);
            const double g = n.grad[k];
            if (ga) ga[k] += g * da(x[k], y[kb]);
            if (gb) gb[kb] += g * db(x[k], y[kb]);
          }
        }
      });
}

template <typename Fwd, typename Deriv>
Tensor unary_op(const Tensor& a, const char* op, Fwd fwd, Deriv deriv) {
  std::vector<double> out(a.size());
  auto av = a.values();
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = fwd(av[k]);
  return make_result(a.shape(), std::move(out), op, {a},
                     [deriv](Node& n) {
                       double* ga = grad_of(n, 0);
                       if (!ga) return;
                       const auto& x = n.parents[0]->value;
                       for (std::size_t k = 0; k < x.size(); ++k) {
                         ga[k] += n.grad[k] * deriv(x[k], n.value[k]);
                       }
                     });
}

void require_rank2(const Tensor& a, const char* op) {
  if (a.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got " +
                         shape_string(a.shape()));
  }
}

}  // namespace

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

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

void Node::ensure_grad() {
  if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const std::size_t n = shape_size(shape);
  return from(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> values,
                    bool requires_grad) {
  if (shape_size(shape) != values.size()) {
    throw DimensionError("tensor shape " + shape_string(shape) + " holds " +
                         std::to_string(shape_size(shape)) +
                         " values, got " + std::to_string(values.size()));
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({}, {value}, requires_grad);
}

std::size_t Tensor::rows() const { return rows_of(node_->shape); }
std::size_t Tensor::cols() const { return cols_of(node_->shape); }

double Tensor::item() const {
  if (size() != 1) {
    throw ContractError("item() on tensor of shape " + shape_string(shape()));
  }
  return node_->value[0];
}

void Tensor::set_requires_grad(bool on) {
  if (!node_->is_leaf()) {
    throw ContractError("requires_grad can only be toggled on leaf tensors");
  }
  node_->requires_grad = on;
  if (!on) node_->grad.clear();
}

std::span<double> Tensor::mutable_grad() {
  node_->ensure_grad();
  return node_->grad;
}

void Tensor::zero_grad() {
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor Tensor::detach() const { return from(shape(), node_->value, false); }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) {
  g_grad_enabled = false;
}
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k) {
    throw DimensionError("matmul: inner dimensions differ for " +
                         shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
  }
  std::vector<double> out(m * n, 0.0);
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double x = av[i * k + p];
      if (x == 0.0) continue;
      const double* brow = &bv[p * n];
      double* orow = &out[i * n];
      for (std::size_t j = 0; j < n; ++j) orow[j] += x * brow[j];
    }
  }
  return make_result({m, n}, std::move(out), "matmul", {a, b},
                     [m, k, n](Node& node) {
                       const auto& x = node.parents[0]->value;
                       const auto& y = node.parents[1]->value;
                       const auto& g = node.grad;
                       if (double* ga = grad_of(node, 0)) {
                         // dA = G B^T
                         for (std::size_t i = 0; i < m; ++i) {
                           for (std::size_t p = 0; p < k; ++p) {
                             double acc = 0.0;
                             for (std::size_t j = 0; j < n; ++j) {
                               acc += g[i * n + j] * y[p * n + j];
                             }
                             ga[i * k + p] += acc;
                           }
                         }
                       }
                       if (double* gb = grad_of(node, 1)) {
                         // dB = A^T G
                         for (std::size_t i = 0; i < m; ++i) {
                           for (std::size_t p = 0; p < k; ++p) {
                             const double xv = x[i * k + p];
                             if (xv == 0.0) continue;
                             for (std::size_t j = 0; j < n; ++j) {
                               gb[p * n + j] += xv * g[i * n + j];
                             }
                           }
                         }
                       }
                     });
}

Tensor transpose(const Tensor& a) {
  require_rank2(a, "transpose");
  const std::size_t m = a.shape()[0], n = a.shape()[1];
  std::vector<double> out(m * n);
  auto av = a.values();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = av[i * n + j];
  return make_result({n, m}, std::move(out), "transpose", {a},
                     [m, n](Node& node) {
                       double* ga = grad_of(node, 0);
                       if (!ga) return;
                       for (std::size_t i = 0; i < m; ++i)
                         for (std::size_t j = 0; j < n; ++j)
                           ga[i * n + j] += node.grad[j * m + i];
                     });
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_size(shape) != a.size()) {
    throw DimensionError("reshape: " + shape_string(a.shape()) + " to " +
                         shape_string(shape));
  }
  std::vector<double> out(a.values().begin(), a.values().end());
  return make_result(std::move(shape), std::move(out), "reshape", {a},
                     [](Node& node) {
                       double* ga = grad_of(node, 0);
                       if (!ga) return;
                       for (std::size_t k = 0; k < node.grad.size(); ++k)
                         ga[k] += node.grad[k];
                     });
}

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end) {
  require_rank2(a, "slice_rows");
  if (begin > end || end > a.rows()) {
    throw DimensionError("slice_rows: range [" + std::to_string(begin) + ", " +
                         std::to_string(end) + ") outside " +
                         shape_string(a.shape()));
  }
  const std::size_t n = a.cols();
  std::vector<double> out(a.values().begin() + begin * n,
                          a.values().begin() + end * n);
  return make_result({end - begin, n}, std::move(out), "slice_rows", {a},
                     [begin, n](Node& node) {
                       double* ga = grad_of(node, 0);
                       if (!ga) return;
                       for (std::size_t k = 0; k < node.grad.size(); ++k)
                         ga[begin * n + k] += node.grad[k];
                     });
}

Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end) {
  require_rank2(a, "slice_cols");
  const std::size_t m = a.rows(), n = a.cols();
  if (begin > end || end > n) {
    throw DimensionError("slice_cols: range [" + std::to_string(begin) + ", " +
                         std::to_string(end) + ") outside " +
                         shape_string(a.shape()));
  }
  const std::size_t w = end - begin;
  std::vector<double> out(m * w);
  auto av = a.values();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < w; ++j) out[i * w + j] = av[i * n + begin + j];
  return make_result({m, w}, std::move(out), "slice_cols", {a},
                     [m, n, w, begin](Node& node) {
                       double* ga = grad_of(node, 0);
                       if (!ga) return;
                       for (std::size_t i = 0; i < m; ++i)
                         for (std::size_t j = 0; j < w; ++j)
                           ga[i * n + begin + j] += node.grad[i * w + j];
                     });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ContractError("concat_rows: no inputs");
  const std::size_t n = parts[0].cols();
  std::size_t rows = 0;
  for (const Tensor& t : parts) {
    require_rank2(t, "concat_rows");
    if (t.cols() != n) {
      throw DimensionError("concat_rows: column mismatch " +
                           shape_string(parts[0].shape()) + " vs " +
                           shape_string(t.shape()));
    }
    rows += t.rows();
  }
  std::vector<double> out;
  out.reserve(rows * n);
  for (const Tensor& t : parts)
    out.insert(out.end(), t.values().begin(), t.values().end());
  return make_result({rows, n}, std::move(out), "concat_rows", parts,
                     [](Node& node) {
                       std::size_t offset = 0;
                       for (std::size_t p = 0; p < node.parents.size(); ++p) {
                         const std::size_t len = node.parents[p]->value.size();
                         if (double* gp = grad_of(node, p)) {
                           for (std::size_t k = 0; k < len; ++k)
                             gp[k] += node.grad[offset + k];
                         }
                         offset += len;
                       }
                     });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ContractError("concat_cols: no inputs");
  const std::size_t m = parts[0].rows();
  std::size_t cols = 0;
  std::vector<std::size_t> widths;
  for (const Tensor& t : parts) {
    if (t.rows() != m) {
      throw DimensionError("concat_cols: row mismatch " +
                           shape_string(parts[0].shape()) + " vs " +
                           shape_string(t.shape()));
    }
    widths.push_back(t.cols());
    cols += t.cols();
  }
  std::vector<double> out(m * cols);
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    auto v = parts[p].values();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < widths[p]; ++j)
        out[i * cols + offset + j] = v[i * widths[p] + j];
    offset += widths[p];
  }
  return make_result({m, cols}, std::move(out), "concat_cols", parts,
                     [m, cols, widths](Node& node) {
                       std::size_t offset = 0;
                       for (std::size_t p = 0; p < node.parents.size(); ++p) {
                         if (double* gp = grad_of(node, p)) {
                           for (std::size_t i = 0; i < m; ++i)
                             for (std::size_t j = 0; j < widths[p]; ++j)
                               gp[i * widths[p] + j] +=
                                   node.grad[i * cols + offset + j];
                         }
                         offset += widths[p];
                       }
                     });
}

Tensor gather(const Tensor& a, std::vector<std::size_t> indices, Shape shape) {
  if (shape_size(shape) != indices.size()) {
    throw DimensionError("gather: " + std::to_string(indices.size()) +
                         " indices for shape " + shape_string(shape));
  }
  std::vector<double> out(indices.size());
  auto av = a.values();
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= av.size()) {
      throw DimensionError("gather: index " + std::to_string(indices[k]) +
                           " outside " + shape_string(a.shape()));
    }
    out[k] = av[indices[k]];
  }
  return make_result(std::move(shape), std::move(out), "gather", {a},
                     [idx = std::move(indices)](Node& node) {
                       double* ga = grad_of(node, 0);
                       if (!ga) return;
                       for (std::size_t k = 0; k < idx.size(); ++k)
                         ga[idx[k]] += node.grad[k];
                     });
}

Tensor gather_rows(const Tensor& a, std::vector<std::size_t> rows) {
  const std::size_t n = a.cols(), m = a.rows();
  std::vector<double> out(rows.size() * n);
  auto av = a.values();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= m) {
      throw DimensionError("gather_rows: row " + std::to_string(rows[r]) +
                           " outside " + shape_string(a.shape()));
    }
    std::copy_n(av.begin() + rows[r] * n, n, out.begin() + r * n);
  }
  const std::size_t count = rows.size();
  return make_result({count, n}, std::move(out), "gather_rows", {a},
                     [n, idx = std::move(rows)](Node& node) {
                       double* ga = grad_of(node, 0);
                       if (!ga) return;
                       for (std::size_t r = 0; r < idx.size(); ++r)
                         for (std::size_t j = 0; j < n; ++j)
                           ga[idx[r] * n + j] += node.grad[r * n + j];
                     });
}

Tensor embedding(const Tensor& table, const std::vector<int>& ids) {
  std::vector<std::size_t> rows;
  rows.reserve(ids.size());
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= table.rows()) {
      throw DimensionError("embedding: id " + std::to_string(id) +
                           " outside table " + shape_string(table.shape()));
    }
    rows.push_back(static_cast<std::size_t>(id));
  }
  return gather_rows(table, std::move(rows));
}

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, "add", [](double x, double y) { return x + y; },
      [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, "sub", [](double x, double y) { return x - y; },
      [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, "mul", [](double x, double y) { return x * y; },
      [](double, double y) { return y; }, [](double x, double) { return x; });
}

Tensor scale(const Tensor& a, double factor) {
  return unary_op(
      a, "scale", [factor](double x) { return x * factor; },
      [factor](double, double) { return factor; });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor gelu(const Tensor& a) {
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  constexpr double kInvSqrt2Pi = 0.39894228040143267794;
  return unary_op(
      a, "gelu",
      [](double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); },
      [](double x, double) {
        const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
        return cdf + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
      });
}

namespace {
double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}
}  // namespace

Tensor sigmoid(const Tensor& a) {
  return unary_op(
      a, "sigmoid", stable_sigmoid,
      [](double, double y) { return y * (1.0 - y); });
}

Tensor log_sigmoid(const Tensor& a) {
  return unary_op(
      a, "log_sigmoid",
      [](double x) { return std::min(x, 0.0) - std::log1p(std::exp(-std::abs(x))); },
      [](double x, double) { return stable_sigmoid(-x); });
}

Tensor softmax(const Tensor& a) {
  const std::size_t m = a.rows(), n = a.cols();
  if (n == 0) throw ContractError("softmax: empty last dimension");
  std::vector<double> out(a.size());
  auto av = a.values();
  for (std::size_t i = 0; i < m; ++i) {
    const double* x = &av[i * n];
    double* y = &out[i * n];
    const double mx = *std::max_element(x, x + n);
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) total += (y[j] = std::exp(x[j] - mx));
    for (std::size_t j = 0; j < n; ++j) y[j] /= total;
  }
  return make_result(a.shape(), std::move(out), "softmax", {a},
                     [m, n](Node& node) {
                       double* ga = grad_of(node, 0);
                       if (!ga) return;
                       for (std::size_t i = 0; i < m; ++i) {
                         const double* y = &node.value[i * n];
                         const double* g = &node.grad[i * n];
                         double dot = 0.0;
                         for (std::size_t j = 0; j < n; ++j) dot += g[j] * y[j];
                         for (std::size_t j = 0; j < n; ++j)
                           ga[i * n + j] += y[j] * (g[j] - dot);
                       }
                     });
}

Tensor log_softmax(const Tensor& a) {
  const std::size_t m = a.rows(), n = a.cols();
  if (n == 0) throw ContractError("log_softmax: empty last dimension");
  std::vector<double> out(a.size());
  auto av = a.values();
  for (std::size_t i = 0; i < m; ++i) {
    const double* x = &av[i * n];
    const double mx = *std::max_element(x, x + n);
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) total += std::exp(x[j] - mx);
    const double lse = mx + std::log(total);
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = x[j] - lse;
  }
  return make_result(a.shape(), std::move(out), "log_softmax", {a},
                     [m, n](Node& node) {
                       double* ga = grad_of(node, 0);
                       if (!ga) return;
                       for (std::size_t i = 0; i < m; ++i) {
                         const double* g = &node.grad[i * n];
                         double gsum = 0.0;
                         for (std::size_t j = 0; j < n; ++j) gsum += g[j];
                         for (std::size_t j = 0; j < n; ++j)
                           ga[i * n + j] +=
                               g[j] - std::exp(node.value[i * n + j]) * gsum;
                       }
                     });
}

Tensor logsumexp(const Tensor& a) {
  const std::size_t m = a.rows(), n = a.cols();
  if (n == 0) throw ContractError("logsumexp: empty last dimension");
  Shape shape = a.shape();
  if (!shape.empty()) shape.pop_back();
  std::vector<double> out(m);
  auto av = a.values();
  for (std::size_t i = 0; i < m; ++i) {
    const double* x = &av[i * n];
    const double mx = *std::max_element(x, x + n);
    if (n == 1) {
      out[i] = x[0];
      continue;
    }
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) total += std::exp(x[j] - mx);
    out[i] = mx + std::log(total);
  }
  return make_result(std::move(shape), std::move(out), "logsumexp", {a},
                     [m, n](Node& node) {
                       double* ga = grad_of(node, 0);
                       if (!ga) return;
                       const auto& x = node.parents[0]->value;
                       for (std::size_t i = 0; i < m; ++i)
                         for (std::size_t j = 0; j < n; ++j)
                           ga[i * n + j] += node.grad[i] *
                                            std::exp(x[i * n + j] - node.value[i]);
                     });
}

Tensor sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.values()) total += v;
  return make_result({}, {total}, "sum", {a}, [](Node& node) {
    double* ga = grad_of(node, 0);
    if (!ga) return;
    const std::size_t len = node.parents[0]->value.size();
    for (std::size_t k = 0; k < len; ++k) ga[k] += node.grad[0];
  });
}

Tensor mean(const Tensor& a) {
  if (a.size() == 0) throw ContractError("mean: empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps) {
  const std::size_t m = x.rows(), n = x.cols();
  if (gamma.size() != n || beta.size() != n) {
    throw DimensionError("layer_norm: gain " + shape_string(gamma.shape()) +
                         " / bias " + shape_string(beta.shape()) +
                         " for input " + shape_string(x.shape()));
  }
  std::vector<double> out(x.size());
  std::vector<double> normed(x.size());
  std::vector<double> inv_std(m);
  auto xv = x.values();
  auto gv = gamma.values();
  auto bv = beta.values();
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = &xv[i * n];
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += row[j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(n);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      normed[i * n + j] = (row[j] - mu) * inv_std[i];
      out[i * n + j] = normed[i * n + j] * gv[j] + bv[j];
    }
  }
  return make_result(
      x.shape(), std::move(out), "layer_norm", {x, gamma, beta},
      [m, n, normed = std::move(normed), inv_std = std::move(inv_std)](Node& node) {
        const auto& gv = node.parents[1]->value;
        double* gx = grad_of(node, 0);
        double* gg = grad_of(node, 1);
        double* gb = grad_of(node, 2);
        const double dn = static_cast<double>(n);
        std::vector<double> dxhat(n);
        for (std::size_t i = 0; i < m; ++i) {
          double s1 = 0.0, s2 = 0.0;
          for (std::size_t j = 0; j < n; ++j) {
            const double g = node.grad[i * n + j];
            if (gg) gg[j] += g * normed[i * n + j];
            if (gb) gb[j] += g;
            dxhat[j] = g * gv[j];
            s1 += dxhat[j];
            s2 += dxhat[j] * normed[i * n + j];
          }
          if (!gx) continue;
          for (std::size_t j = 0; j < n; ++j) {
            gx[i * n + j] += inv_std[i] / dn *
                             (dn * dxhat[j] - s1 - normed[i * n + j] * s2);
          }
        }
      });
}

Tensor dropout(const Tensor& x, double rate, std::mt19937_64& rng,
               bool training) {
  if (!training || rate <= 0.0) return x;
  if (rate >= 1.0) throw ContractError("dropout: rate must be below 1");
  std::bernoulli_distribution keep(1.0 - rate);
  std::vector<double> mask(x.size());
  const double factor = 1.0 / (1.0 - rate);
  for (double& v : mask) v = keep(rng) ? factor : 0.0;
  return mul(x, Tensor::from(x.shape(), std::move(mask)));
}

std::vector<Node*> topological_order(const Tensor& root) {
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  // Iterative post-order DFS; deep graphs (CRF chains) would overflow the
  // call stack with recursion.
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.node(), 0);
  seen.insert(root.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (seen.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;
}

std::size_t backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw ContractError("backward: loss must be a scalar, got " +
                        (loss.defined() ? shape_string(loss.shape())
                                        : std::string("undefined")));
  }
  if (!loss.requires_grad()) return 0;
  std::vector<Node*> order = topological_order(loss);
  for (Node* node : order) {
    if (!node->is_leaf()) node->grad.assign(node->value.size(), 0.0);
  }
  Node* root = loss.node();
  root->ensure_grad();
  root->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward) node->backward(*node);
  }
  // Release intermediate buffers; leaves keep their accumulated gradient.
  for (Node* node : order) {
    if (!node->is_leaf()) std::vector<double>().swap(node->grad);
  }
  return order.size();
}

}  // namespace nltp
