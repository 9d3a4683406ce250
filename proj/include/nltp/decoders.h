// Exact structured inference over head scores.
//
// Tie-breaking is deterministic everywhere: Eisner keeps the first maximal
// split it meets, label and head argmaxes prefer the lowest index, and
// Viterbi returns the lexicographically smallest optimal sequence.

#ifndef NLTP_DECODERS_H_
#define NLTP_DECODERS_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nltp/annotation.h"
#include "nltp/heads.h"
#include "nltp/tensor.h"

namespace nltp {

// Maximum-score projective tree over an (n+1) x (n+1) arc matrix whose
// [h][d] cell scores head h -> dependent d; row/column 0 is the root.
// With `single_root` the root takes exactly one child. Diagonal cells are
// never used. Returns heads[k] = head of word k + 1.
std::vector<int> eisner(const Tensor& arcs, bool single_root = false);

// Sum of arc scores of `heads`, accumulated in dependent order.
double tree_score(const Tensor& arcs, const std::vector<int>& heads);

// Description of the first violated tree property (root reachability,
// acyclicity, projectivity), or nullopt for a valid projective tree.
std::optional<std::string> tree_violation(const std::vector<int>& heads);
bool is_projective(const std::vector<int>& heads);

// Relation per arc: argmax over the label axis of [m x m x L] scores at
// each (head, dependent) cell, lowest index on ties.
std::vector<int> assign_label_ids(const std::vector<int>& heads,
                                  const Tensor& labeled);
DependencyTree assign_labels(const std::vector<int>& heads,
                             const Tensor& labeled,
                             const std::vector<std::string>& names);

std::vector<int> viterbi(const Tensor& emissions, const CrfParams& crf);
double sequence_score(const Tensor& emissions, const CrfParams& crf,
                      const std::vector<int>& labels);

// Edges with probability strictly above 0.5. A dependent left without a
// head attaches to its most probable head (lowest index on ties).
DependencyGraph sdp_decode(const Tensor& probs, const Tensor& labeled,
                           const std::vector<std::string>& names);

// B M* E is a word, S a single-character word. Repairs: M or E with no open
// word opens one; B or S closes any open word; an open word closes at the
// end of the sequence.
std::vector<WordSpan> bmes_to_spans(std::span<const std::string> tags);
std::vector<std::string> spans_to_bmes(const std::vector<WordSpan>& spans);
bool spans_partition(const std::vector<WordSpan>& spans, std::size_t length);

// Maximal B-T I-T* runs. An I-T that does not continue an open entity of
// type T starts a new one.
std::vector<Entity> bio_to_entities(std::span<const std::string> tags);
std::vector<std::string> entities_to_bio(const std::vector<Entity>& entities,
                                         std::size_t length);
bool bio_well_formed(std::span<const std::string> tags);

}  // namespace nltp

#endif  // NLTP_DECODERS_H_
