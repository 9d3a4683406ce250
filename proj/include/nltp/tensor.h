// Dense double-precision tensors with define-by-run reverse-mode autodiff.
//
// Every operation records a node that owns its output values and a closure
// propagating the output gradient into its inputs. Graphs are implicit: the
// set of nodes reachable from a loss through parent links. Parameters are
// leaf tensors created with requires_grad = true; their gradient buffers
// persist across backward calls until zero_grad() is invoked.
//
// Shapes are row-major. Most operations treat a tensor as a matrix whose
// column count is the last dimension and whose row count is the product of
// the leading dimensions; a rank-0 tensor is a 1x1 matrix.

#ifndef NLTP_TENSOR_H_
#define NLTP_TENSOR_H_

#include <cstddef>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nltp {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);
std::size_t shape_size(const Shape& shape);

// Raised when operand shapes are incompatible.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when a caller violates an operation precondition.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  bool is_leaf() const { return parents.empty(); }
  void ensure_grad();
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values,
                     bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t size() const { return node_->value.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> values() const { return node_->value; }
  std::span<double> mutable_values() { return node_->value; }
  double item() const;
  double at(std::size_t i) const { return node_->value[i]; }
  double at(std::size_t r, std::size_t c) const {
    return node_->value[r * cols() + c];
  }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on);
  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad();
  void zero_grad();

  // Copy of the values with no graph history.
  Tensor detach() const;

  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& node_ptr() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// While alive, operations do not record graph history.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

// Linear algebra and shape manipulation.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor reshape(const Tensor& a, Shape shape);
Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end);
Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor concat_cols(const std::vector<Tensor>& parts);
// out[k] = a.flat[indices[k]]; gradient scatters back with accumulation.
Tensor gather(const Tensor& a, std::vector<std::size_t> indices, Shape shape);
// Selects whole rows; doubles as embedding lookup.
Tensor gather_rows(const Tensor& a, std::vector<std::size_t> rows);
Tensor embedding(const Tensor& table, const std::vector<int>& ids);

// Elementwise arithmetic. The second operand may equal the first in shape,
// be a single row (1 x cols), a single column (rows x 1) or a scalar.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor neg(const Tensor& a);

// Nonlinearities. GELU is the exact erf form.
Tensor gelu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor log_sigmoid(const Tensor& a);

// Reductions over the last dimension.
Tensor softmax(const Tensor& a);
Tensor log_softmax(const Tensor& a);
// Drops the last dimension: [.. x L] -> [..]; a vector reduces to a scalar.
Tensor logsumexp(const Tensor& a);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps = 1e-12);
Tensor dropout(const Tensor& x, double rate, std::mt19937_64& rng,
               bool training);

// Nodes reachable from `root`, each appearing once, inputs before consumers.
std::vector<Node*> topological_order(const Tensor& root);

// Reverse-mode sweep from a scalar loss. Intermediate gradients are reset on
// every call; leaf gradients accumulate. Returns the number of nodes visited.
std::size_t backward(const Tensor& loss);

}  // namespace nltp

#endif  // NLTP_TENSOR_H_
