// A shared encoder with one head per task, plus the glue that turns
// annotated sentences into training examples and scores back into
// annotations.
//
// Single-task teachers and the joint student are the same class; a teacher
// simply carries one head. Parameters are created in a fixed order (encoder,
// then heads in task order), so a model is a pure function of its spec.

#ifndef NLTP_MODEL_H_
#define NLTP_MODEL_H_

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nltp/annotation.h"
#include "nltp/encoder.h"
#include "nltp/heads.h"
#include "nltp/params.h"
#include "nltp/vocab.h"

namespace nltp {

struct ModelSpec {
  EncoderConfig encoder;
  HeadConfig heads;
  std::map<Task, LabelSet> labels;

  std::vector<Task> tasks() const;
};

// Gold targets of one sentence for one task, as label ids. Word-level tasks
// use the gold segmentation.
struct Example {
  Task task = Task::kCws;
  std::vector<int> char_ids;
  std::vector<WordSpan> words;
  // Per character (segmentation, entities) or per word (POS).
  std::vector<int> tags;
  // Dependency: head and relation of word k + 1.
  std::vector<int> heads;
  std::vector<int> relations;
  // Semantic graph over m = words + 1 nodes: edge indicator per cell h * m + d,
  // and (head, dependent, relation) per gold edge in dependent order.
  std::vector<double> edge_targets;
  std::vector<std::array<int, 3>> edges;
  // Roles: one row of word tags per word taken as predicate; rows of
  // non-predicates are all "O", predicates carry "B-V" on the diagonal.
  std::vector<std::vector<int>> roles;
};

// Throws ContractError when the sentence is empty or lacks the task's layer,
// and std::out_of_range for a label outside `labels`.
Example make_example(Task task, const AnnotatedSentence& sentence,
                     const Vocabulary& vocab, const LabelSet& labels);

// Teacher outputs for one example: row distributions for categorical parts,
// per-cell probabilities for edge parts. Layout is task-specific and matches
// what MultiTaskModel::loss consumes.
struct SoftTargets {
  std::vector<Tensor> parts;
};

class MultiTaskModel {
 public:
  explicit MultiTaskModel(ModelSpec spec);
  MultiTaskModel(const MultiTaskModel&) = delete;
  MultiTaskModel& operator=(const MultiTaskModel&) = delete;

  const ModelSpec& spec() const { return spec_; }
  bool has_task(Task task) const { return spec_.labels.contains(task); }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }
  const Encoder& encoder() const { return encoder_; }

  // Training objective for one example. With a teacher, mixes gold and
  // teacher cross-entropy by `lambda`; without one, returns the gold loss.
  Tensor loss(const Example& example, const SoftTargets* teacher, double lambda,
              const ForwardContext& ctx = {}) const;

  // Frozen evaluation-mode outputs that a student matches.
  SoftTargets soft_targets(const Example& example) const;

  // Runs every head the model has, or only `only`. Word-level layers use
  // `gold_words` when given, else the predicted segmentation, else one word
  // per character.
  AnnotatedSentence annotate(const std::vector<std::string>& chars,
                             const Vocabulary& vocab,
                             const std::optional<std::vector<WordSpan>>& gold_words =
                                 std::nullopt,
                             std::optional<Task> only = std::nullopt) const;

 private:
  struct Scores;

  Scores score(const Example& example, const ForwardContext& ctx) const;
  const LabelSet& labels(Task task) const { return spec_.labels.at(task); }

  ModelSpec spec_;
  ParamStore store_;
  Encoder encoder_;
  LinearTagHead cws_;
  LinearTagHead pos_;
  NerHead ner_;
  ArcLabelHead dep_;
  ArcLabelHead sdp_;
  SrlHead srl_;
};

}  // namespace nltp

#endif  // NLTP_MODEL_H_
