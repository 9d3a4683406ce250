// Cross-entropy losses over head scores, and their teacher-annealed mixtures.
//
// Every loss is a mean over rows (categorical) or cells (binary). The mixed
// losses compute
//   lambda * CE(gold, student) + (1 - lambda) * CE(teacher, student)
// and skip a term entirely when its weight is zero, so lambda = 1 and
// lambda = 0 reproduce the pure losses exactly.

#ifndef NLTP_LOSSES_H_
#define NLTP_LOSSES_H_

#include <vector>

#include "nltp/tensor.h"

namespace nltp {

// Mean over rows of -log softmax(logits)[gold]. Throws ContractError when
// gold has the wrong length or names a column out of range.
Tensor categorical_ce(const Tensor& logits, const std::vector<int>& gold);

// Mean over rows of -sum_k p_k log softmax(logits)_k for target
// distributions p. Targets carry no gradient.
Tensor soft_ce(const Tensor& logits, const Tensor& targets);

// Mean over cells of -(t log sigmoid(x) + (1 - t) log sigmoid(-x)) for
// targets t in [0, 1].
Tensor binary_ce(const Tensor& logits, const Tensor& targets);

// `teacher` holds row distributions of the same shape as `logits`; null
// means no teacher, in which case the gold loss is returned unweighted.
Tensor distill_categorical(const Tensor& logits, const std::vector<int>& gold,
                           const Tensor* teacher, double lambda);

// `gold` and `teacher` are per-cell probabilities shaped like `logits`.
Tensor distill_binary(const Tensor& logits, const Tensor& gold,
                      const Tensor* teacher, double lambda);

// Mixes two precomputed losses with the same conventions.
Tensor anneal(const Tensor& gold_loss, const Tensor* teacher_loss, double lambda);

}  // namespace nltp

#endif  // NLTP_LOSSES_H_
