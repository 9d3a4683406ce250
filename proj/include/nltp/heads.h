// Task scoring heads on top of the shared encoder.
//
// Character-level heads (segmentation, entities) read encoder rows 1..n.
// Word-level heads read the row of each word's first character; parsing
// heads prepend the [CLS] row, which stands in for the virtual root.

#ifndef NLTP_HEADS_H_
#define NLTP_HEADS_H_

#include <array>
#include <random>
#include <string>
#include <vector>

#include "nltp/encoder.h"
#include "nltp/layers.h"
#include "nltp/params.h"
#include "nltp/tensor.h"

namespace nltp {

enum class Task { kCws, kPos, kNer, kDep, kSdp, kSrl };

inline constexpr std::array<Task, 6> kAllTasks = {
    Task::kCws, Task::kPos, Task::kNer, Task::kDep, Task::kSdp, Task::kSrl};

std::string task_name(Task task);
// Accepts the lower-case names "cws", "pos", "ner", "dep", "sdp", "srl".
Task parse_task(const std::string& name);

struct HeadConfig {
  std::size_t mlp_width = 64;
  // Stacked relative-position layers in the entity head; 0 disables them.
  std::size_t ner_layers = 1;
  bool single_root = false;
};

struct WordSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  bool operator==(const WordSpan&) const = default;
};

// Rows 1..n of the encoding.
Tensor character_rows(const EncodedSequence& enc);
// First-character row of each word.
Tensor word_rows(const EncodedSequence& enc, const std::vector<WordSpan>& words);
// [CLS] row followed by the word rows; index 0 is the virtual root.
Tensor rooted_word_rows(const EncodedSequence& enc,
                        const std::vector<WordSpan>& words);

// Softmax(W h_i + b) per position.
class LinearTagHead {
 public:
  LinearTagHead() = default;
  LinearTagHead(ParamStore& store, const std::string& name, std::size_t width,
                std::size_t labels, std::mt19937_64& rng);

  Tensor logits(const Tensor& rows) const { return proj_(rows); }
  // Rows sum to one; this is the tag distribution.
  Tensor distribution(const Tensor& rows) const { return softmax(logits(rows)); }

  std::size_t labels() const { return labels_; }
  const Linear& projection() const { return proj_; }

 private:
  Linear proj_;
  std::size_t labels_ = 0;
};

class NerHead {
 public:
  NerHead() = default;
  NerHead(ParamStore& store, const std::string& name, std::size_t width,
          std::size_t heads, std::size_t ffn_width, double dropout,
          std::size_t layers, std::size_t labels, std::mt19937_64& rng);

  // n x labels, over characters.
  Tensor logits(const EncodedSequence& enc, const ForwardContext& ctx = {}) const;
  Tensor distribution(const EncodedSequence& enc,
                      const ForwardContext& ctx = {}) const {
    return softmax(logits(enc, ctx));
  }

  const std::vector<AdaptedAttention>& layers() const { return layers_; }
  const LinearTagHead& classifier() const { return classifier_; }

 private:
  std::vector<AdaptedAttention> layers_;
  LinearTagHead classifier_;
};

// Deep biaffine scorer. For each label l and rows h (head side) and d
// (dependent side):
//   score_l(h, d) = r_dep(d) . U_l . r_head(h) + w_l . r_head(h)
// where r_head = GELU(MLP_head(x)) and r_dep = GELU(MLP_dep(x)).
class Biaffine {
 public:
  Biaffine() = default;
  Biaffine(ParamStore& store, const std::string& name, std::size_t width,
           std::size_t mlp_width, std::size_t labels, std::mt19937_64& rng);

  // One m x m matrix per label; [h][d] = head h -> dependent d.
  std::vector<Tensor> label_slices(const Tensor& rows) const;
  // m x m; only valid for a single-label scorer.
  Tensor arc_scores(const Tensor& rows) const;
  // [m x m x labels], flat index (h * m + d) * labels + l.
  Tensor label_scores(const Tensor& rows) const;

  std::size_t labels() const { return labels_; }

  Linear mlp_head;
  Linear mlp_dep;
  Tensor bilinear;   // [labels * mlp_width x mlp_width], block l is U_l
  Tensor head_bias;  // [mlp_width x labels], column l is w_l

 private:
  std::size_t labels_ = 0;
  std::size_t mlp_width_ = 0;
};

// Arc scorer plus relation scorer; used for both tree and graph parsing.
class ArcLabelHead {
 public:
  ArcLabelHead() = default;
  ArcLabelHead(ParamStore& store, const std::string& name, std::size_t width,
               std::size_t mlp_width, std::size_t relations, std::mt19937_64& rng);

  Biaffine arc;
  Biaffine label;
};

// Elementwise sigmoid of arc scores: per-cell edge probabilities.
Tensor sdp_edge_probs(const Tensor& arc_scores);

struct CrfParams {
  Tensor transitions;  // [L x L], from-label x to-label
  Tensor start;        // [1 x L]
  Tensor end;          // [1 x L]

  std::size_t labels() const { return transitions.rows(); }
};

CrfParams make_crf(ParamStore& store, const std::string& name,
                   std::size_t labels);

// Forward-algorithm log partition over all label sequences.
Tensor crf_log_partition(const Tensor& emissions, const CrfParams& crf);
// Unnormalised score of one label sequence.
Tensor crf_sequence_score(const Tensor& emissions, const CrfParams& crf,
                          const std::vector<int>& labels);
// log P(gold | emissions) = score(gold) - log Z. Throws ContractError on an
// empty sequence or an out-of-range label.
Tensor crf_log_likelihood(const Tensor& emissions, const CrfParams& crf,
                          const std::vector<int>& gold);

// Predicate-argument scorer. Emission row (i * n + j) holds the role scores
// of word j when word i is the predicate; the diagonal i == j carries the
// predicate marker tag.
class SrlHead {
 public:
  SrlHead() = default;
  SrlHead(ParamStore& store, const std::string& name, std::size_t width,
          std::size_t mlp_width, std::size_t roles, std::mt19937_64& rng);

  // [n x n x roles] over word rows (no root row).
  Tensor emissions(const Tensor& word_rows) const;
  // n x roles emissions of predicate i.
  static Tensor predicate_emissions(const Tensor& emissions, std::size_t predicate);

  Biaffine scorer;
  CrfParams crf;
};

}  // namespace nltp

#endif  // NLTP_HEADS_H_
