#include "nltp/losses.h"

#include <string>

namespace nltp {
namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ContractError(std::string(what) + ": student scores " + shape_string(a.shape()) +
                        " and targets " + shape_string(b.shape()) + " differ in shape");
  }
}

void check_lambda(double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw ContractError("annealing weight must lie in [0, 1], got " + std::to_string(lambda));
  }
}

}  // namespace

Tensor categorical_ce(const Tensor& logits, const std::vector<int>& gold) {
  const std::size_t rows = logits.rows();
  const std::size_t cols = logits.cols();
  if (gold.size() != rows) {
    throw ContractError("categorical_ce: " + std::to_string(gold.size()) +
                        " gold labels for " + std::to_string(rows) + " rows");
  }
  if (rows == 0) throw ContractError("categorical_ce: no rows");
  std::vector<std::size_t> picks(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    if (gold[r] < 0 || static_cast<std::size_t>(gold[r]) >= cols) {
      throw ContractError("categorical_ce: label " + std::to_string(gold[r]) +
                          " out of range for " + std::to_string(cols) + " classes");
    }
    picks[r] = r * cols + static_cast<std::size_t>(gold[r]);
  }
  const Tensor flat = reshape(log_softmax(logits), {rows, cols});
  return scale(sum(gather(flat, std::move(picks), {rows})), -1.0 / static_cast<double>(rows));
}

Tensor soft_ce(const Tensor& logits, const Tensor& targets) {
  check_same_shape(logits, targets, "soft_ce");
  const std::size_t rows = logits.rows();
  if (rows == 0) throw ContractError("soft_ce: no rows");
  return scale(sum(mul(log_softmax(logits), targets.detach())),
               -1.0 / static_cast<double>(rows));
}

Tensor binary_ce(const Tensor& logits, const Tensor& targets) {
  check_same_shape(logits, targets, "binary_ce");
  const std::size_t cells = logits.size();
  if (cells == 0) throw ContractError("binary_ce: no cells");
  const Tensor t = targets.detach();
  std::vector<double> complement(cells);
  for (std::size_t i = 0; i < cells; ++i) complement[i] = 1.0 - t.at(i);
  const Tensor one_minus_t = Tensor::from(logits.shape(), std::move(complement));
  const Tensor positive = mul(log_sigmoid(logits), t);
  const Tensor negative = mul(log_sigmoid(neg(logits)), one_minus_t);
  return scale(sum(add(positive, negative)), -1.0 / static_cast<double>(cells));
}

Tensor anneal(const Tensor& gold_loss, const Tensor* teacher_loss, double lambda) {
  check_lambda(lambda);
  if (teacher_loss == nullptr || lambda == 1.0) return gold_loss;
  if (lambda == 0.0) return *teacher_loss;
  return add(scale(gold_loss, lambda), scale(*teacher_loss, 1.0 - lambda));
}

Tensor distill_categorical(const Tensor& logits, const std::vector<int>& gold,
                           const Tensor* teacher, double lambda) {
  check_lambda(lambda);
  if (teacher != nullptr) check_same_shape(logits, *teacher, "distill_categorical");
  if (teacher == nullptr || lambda == 1.0) return categorical_ce(logits, gold);
  const Tensor teacher_loss = soft_ce(logits, *teacher);
  if (lambda == 0.0) return teacher_loss;
  return anneal(categorical_ce(logits, gold), &teacher_loss, lambda);
}

Tensor distill_binary(const Tensor& logits, const Tensor& gold, const Tensor* teacher,
                      double lambda) {
  check_lambda(lambda);
  if (teacher != nullptr) check_same_shape(logits, *teacher, "distill_binary");
  if (teacher == nullptr || lambda == 1.0) return binary_ce(logits, gold);
  const Tensor teacher_loss = binary_ce(logits, *teacher);
  if (lambda == 0.0) return teacher_loss;
  return anneal(binary_ce(logits, gold), &teacher_loss, lambda);
}

}  // namespace nltp
