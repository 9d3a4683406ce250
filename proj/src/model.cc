#include "nltp/model.h"

#include <algorithm>
#include <random>
#include <tuple>

#include "nltp/decoders.h"
#include "nltp/losses.h"

namespace nltp {
namespace {

constexpr double kMasked = -1e30;

std::vector<std::string> argmax_tags(const Tensor& logits, const LabelSet& labels) {
  const std::size_t cols = logits.cols();
  std::vector<std::string> tags;
  tags.reserve(logits.rows());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < cols; ++c) {
      if (logits.at(r, c) > logits.at(r, best)) best = c;
    }
    tags.push_back(labels.name(static_cast<int>(best)));
  }
  return tags;
}

// Dependent-major head logits for dependents 1..m-1, self-attachment masked.
Tensor head_logits(const Tensor& arcs) {
  const std::size_t m = arcs.rows();
  std::vector<double> mask(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i) mask[i * m + i] = kMasked;
  const Tensor masked = add(transpose(arcs), Tensor::from({m, m}, std::move(mask)));
  return slice_rows(masked, 1, m);
}

// Off-diagonal cells (h, d) with d >= 1, in dependent-major order.
std::vector<std::size_t> graph_cells(std::size_t m) {
  std::vector<std::size_t> cells;
  for (std::size_t d = 1; d < m; ++d) {
    for (std::size_t h = 0; h < m; ++h) {
      if (h != d) cells.push_back(h * m + d);
    }
  }
  return cells;
}

std::vector<int> encode_labels(const std::vector<std::string>& names, const LabelSet& labels) {
  std::vector<int> ids;
  ids.reserve(names.size());
  for (const std::string& n : names) ids.push_back(labels.id(n));
  return ids;
}

void require(bool ok, Task task, const std::string& what) {
  if (!ok) throw ContractError(task_name(task) + " example: " + what);
}

// Role tags of predicate `p` over n words.
std::vector<std::string> frame_tags(const SrlFrame& frame, std::size_t n) {
  std::vector<std::string> tags(n, "O");
  for (const SrlArgument& a : frame.arguments) {
    if (a.role == "V") continue;
    for (std::size_t k = a.begin; k < a.end && k < n; ++k) {
      tags[k] = (k == a.begin ? "B-" : "I-") + a.role;
    }
  }
  tags[frame.predicate] = "B-V";
  return tags;
}

}  // namespace

std::vector<Task> ModelSpec::tasks() const {
  std::vector<Task> out;
  for (Task t : kAllTasks) {
    if (labels.contains(t)) out.push_back(t);
  }
  return out;
}

Example make_example(Task task, const AnnotatedSentence& s, const Vocabulary& vocab,
                     const LabelSet& labels) {
  require(!s.chars.empty(), task, "sentence is empty");
  Example ex;
  ex.task = task;
  ex.char_ids = vocab.encode(s.chars);
  if (s.words) ex.words = *s.words;
  const std::size_t n_words = ex.words.size();
  switch (task) {
    case Task::kCws:
      require(s.words.has_value(), task, "no segmentation");
      ex.tags = encode_labels(spans_to_bmes(ex.words), labels);
      break;
    case Task::kPos:
      require(s.words && s.pos && s.pos->size() == n_words, task, "no POS layer");
      ex.tags = encode_labels(*s.pos, labels);
      break;
    case Task::kNer:
      require(s.entities.has_value(), task, "no entity layer");
      ex.tags = encode_labels(entities_to_bio(*s.entities, s.length()), labels);
      break;
    case Task::kDep:
      require(s.words && s.dep && s.dep->heads.size() == n_words, task, "no dependency layer");
      ex.heads = s.dep->heads;
      ex.relations = encode_labels(s.dep->labels, labels);
      break;
    case Task::kSdp: {
      require(s.words && s.sdp, task, "no semantic graph layer");
      const std::size_t m = n_words + 1;
      ex.edge_targets.assign(m * m, 0.0);
      for (const SemanticEdge& e : s.sdp->edges) {
        const auto h = static_cast<std::size_t>(e.head);
        const auto d = static_cast<std::size_t>(e.dependent);
        require(h < m && d >= 1 && d < m && h != d, task, "edge outside the sentence");
        ex.edge_targets[h * m + d] = 1.0;
        ex.edges.push_back({e.head, e.dependent, labels.id(e.relation)});
      }
      std::sort(ex.edges.begin(), ex.edges.end(), [](const auto& a, const auto& b) {
        return std::tie(a[1], a[0]) < std::tie(b[1], b[0]);
      });
      break;
    }
    case Task::kSrl: {
      require(s.words && s.srl, task, "no semantic role layer");
      require(n_words > 0, task, "sentence has no words");
      const int outside = labels.id("O");
      ex.roles.assign(n_words, std::vector<int>(n_words, outside));
      for (const SrlFrame& f : *s.srl) {
        require(f.predicate < n_words, task, "predicate outside the sentence");
        ex.roles[f.predicate] = encode_labels(frame_tags(f, n_words), labels);
      }
      break;
    }
  }
  return ex;
}

struct MultiTaskModel::Scores {
  // Categorical parts are row logits, binary parts cell logits; see loss().
  std::vector<Tensor> parts;
};

MultiTaskModel::MultiTaskModel(ModelSpec spec) : spec_(std::move(spec)) {
  spec_.encoder.validate();
  if (spec_.labels.empty()) throw ContractError("a model needs at least one task");
  std::mt19937_64 rng(spec_.encoder.seed);
  encoder_ = Encoder(spec_.encoder, store_, rng);
  const std::size_t width = spec_.encoder.width;
  const std::size_t mlp = spec_.heads.mlp_width;
  for (Task t : spec_.tasks()) {
    const std::size_t n = labels(t).size();
    if (n == 0) throw ContractError(task_name(t) + ": label inventory is empty");
    switch (t) {
      case Task::kCws:
        cws_ = LinearTagHead(store_, "cws.classifier", width, n, rng);
        break;
      case Task::kPos:
        pos_ = LinearTagHead(store_, "pos.classifier", width, n, rng);
        break;
      case Task::kNer:
        ner_ = NerHead(store_, "ner", width, spec_.encoder.heads, spec_.encoder.ffn_width,
                       spec_.encoder.dropout, spec_.heads.ner_layers, n, rng);
        break;
      case Task::kDep:
        dep_ = ArcLabelHead(store_, "dep", width, mlp, n, rng);
        break;
      case Task::kSdp:
        sdp_ = ArcLabelHead(store_, "sdp", width, mlp, n, rng);
        break;
      case Task::kSrl:
        srl_ = SrlHead(store_, "srl", width, mlp, n, rng);
        break;
    }
  }
}

MultiTaskModel::Scores MultiTaskModel::score(const Example& ex,
                                             const ForwardContext& ctx) const {
  if (!has_task(ex.task)) {
    throw ContractError("model has no " + task_name(ex.task) + " head");
  }
  const EncodedSequence enc = encoder_.encode(ex.char_ids, ctx);
  Scores s;
  switch (ex.task) {
    case Task::kCws:
      s.parts.push_back(cws_.logits(character_rows(enc)));
      break;
    case Task::kPos:
      s.parts.push_back(pos_.logits(word_rows(enc, ex.words)));
      break;
    case Task::kNer:
      s.parts.push_back(ner_.logits(enc, ctx));
      break;
    case Task::kDep: {
      const Tensor rows = rooted_word_rows(enc, ex.words);
      const std::size_t m = rows.rows();
      const std::size_t rel = dep_.label.labels();
      s.parts.push_back(head_logits(dep_.arc.arc_scores(rows)));
      std::vector<std::size_t> gold_cells;
      for (std::size_t k = 0; k < ex.heads.size(); ++k) {
        gold_cells.push_back(static_cast<std::size_t>(ex.heads[k]) * m + k + 1);
      }
      const Tensor labeled = reshape(dep_.label.label_scores(rows), {m * m, rel});
      s.parts.push_back(gather_rows(labeled, std::move(gold_cells)));
      break;
    }
    case Task::kSdp: {
      const Tensor rows = rooted_word_rows(enc, ex.words);
      const std::size_t m = rows.rows();
      const std::size_t rel = sdp_.label.labels();
      std::vector<std::size_t> cells = graph_cells(m);
      const std::size_t count = cells.size();
      s.parts.push_back(gather(sdp_.arc.arc_scores(rows), std::move(cells), {count}));
      if (!ex.edges.empty()) {
        std::vector<std::size_t> gold_cells;
        for (const auto& e : ex.edges) {
          gold_cells.push_back(static_cast<std::size_t>(e[0]) * m +
                               static_cast<std::size_t>(e[1]));
        }
        const Tensor labeled = reshape(sdp_.label.label_scores(rows), {m * m, rel});
        s.parts.push_back(gather_rows(labeled, std::move(gold_cells)));
      }
      break;
    }
    case Task::kSrl:
      s.parts.push_back(srl_.emissions(word_rows(enc, ex.words)));
      break;
  }
  return s;
}

Tensor MultiTaskModel::loss(const Example& ex, const SoftTargets* teacher, double lambda,
                            const ForwardContext& ctx) const {
  const Scores s = score(ex, ctx);
  if (teacher != nullptr && teacher->parts.size() != s.parts.size()) {
    throw ContractError(task_name(ex.task) + ": teacher provides " +
                        std::to_string(teacher->parts.size()) + " score parts, student " +
                        std::to_string(s.parts.size()));
  }
  auto soft = [&](std::size_t i) -> const Tensor* {
    return teacher == nullptr ? nullptr : &teacher->parts[i];
  };
  switch (ex.task) {
    case Task::kCws:
    case Task::kPos:
    case Task::kNer:
      return distill_categorical(s.parts[0], ex.tags, soft(0), lambda);
    case Task::kDep:
      return add(distill_categorical(s.parts[0], ex.heads, soft(0), lambda),
                 distill_categorical(s.parts[1], ex.relations, soft(1), lambda));
    case Task::kSdp: {
      const std::size_t m = ex.words.size() + 1;
      std::vector<double> targets;
      for (std::size_t cell : graph_cells(m)) targets.push_back(ex.edge_targets[cell]);
      const std::size_t count = targets.size();
      Tensor total = distill_binary(s.parts[0], Tensor::from({count}, std::move(targets)),
                                    soft(0), lambda);
      if (s.parts.size() > 1) {
        std::vector<int> rel;
        for (const auto& e : ex.edges) rel.push_back(e[2]);
        total = add(total, distill_categorical(s.parts[1], rel, soft(1), lambda));
      }
      return total;
    }
    case Task::kSrl: {
      const Tensor& emissions = s.parts[0];
      const std::size_t n = ex.words.size();
      std::vector<Tensor> rows;
      rows.reserve(n);
      for (std::size_t i = 0; i < n; ++i) {
        rows.push_back(reshape(crf_log_likelihood(SrlHead::predicate_emissions(emissions, i),
                                                  srl_.crf, ex.roles[i]),
                               {1, 1}));
      }
      const Tensor gold = scale(sum(concat_rows(rows)), -1.0 / static_cast<double>(n));
      if (teacher == nullptr) return anneal(gold, nullptr, lambda);
      const std::size_t roles = emissions.cols();
      const Tensor teacher_loss =
          soft_ce(reshape(emissions, {n * n, roles}), reshape(teacher->parts[0], {n * n, roles}));
      return anneal(gold, &teacher_loss, lambda);
    }
  }
  throw ContractError("unknown task");
}

SoftTargets MultiTaskModel::soft_targets(const Example& ex) const {
  NoGradGuard no_grad;
  const Scores s = score(ex, {});
  SoftTargets out;
  for (std::size_t i = 0; i < s.parts.size(); ++i) {
    const bool binary = ex.task == Task::kSdp && i == 0;
    out.parts.push_back(binary ? sigmoid(s.parts[i]) : softmax(s.parts[i]));
  }
  return out;
}

AnnotatedSentence MultiTaskModel::annotate(
    const std::vector<std::string>& chars, const Vocabulary& vocab,
    const std::optional<std::vector<WordSpan>>& gold_words, std::optional<Task> only) const {
  NoGradGuard no_grad;
  auto want = [&](Task t) { return has_task(t) && (!only || *only == t); };
  AnnotatedSentence out;
  out.chars = chars;
  const std::size_t n = chars.size();
  if (want(Task::kCws) || gold_words || want(Task::kPos) || want(Task::kDep) ||
      want(Task::kSdp) || want(Task::kSrl)) {
    out.words.emplace();
  }
  if (want(Task::kPos)) out.pos.emplace();
  if (want(Task::kNer)) out.entities.emplace();
  if (want(Task::kDep)) out.dep.emplace();
  if (want(Task::kSdp)) out.sdp.emplace();
  if (want(Task::kSrl)) out.srl.emplace();
  if (n == 0) return out;

  const EncodedSequence enc = encoder_.encode(vocab.encode(chars));
  std::vector<WordSpan> words;
  if (gold_words) {
    words = *gold_words;
  } else if (has_task(Task::kCws)) {
    const std::vector<std::string> tags =
        argmax_tags(cws_.logits(character_rows(enc)), labels(Task::kCws));
    words = bmes_to_spans(tags);
  } else {
    for (std::size_t i = 0; i < n; ++i) words.push_back({i, i + 1});
  }
  if (out.words) *out.words = words;

  if (want(Task::kPos)) {
    *out.pos = argmax_tags(pos_.logits(word_rows(enc, words)), labels(Task::kPos));
  }
  if (want(Task::kNer)) {
    const std::vector<std::string> tags = argmax_tags(ner_.logits(enc), labels(Task::kNer));
    *out.entities = bio_to_entities(tags);
  }
  if (want(Task::kDep) || want(Task::kSdp)) {
    const Tensor rows = rooted_word_rows(enc, words);
    if (want(Task::kDep)) {
      const std::vector<int> heads = eisner(dep_.arc.arc_scores(rows), spec_.heads.single_root);
      *out.dep = assign_labels(heads, dep_.label.label_scores(rows), labels(Task::kDep).names());
    }
    if (want(Task::kSdp)) {
      *out.sdp = sdp_decode(sdp_edge_probs(sdp_.arc.arc_scores(rows)),
                            sdp_.label.label_scores(rows), labels(Task::kSdp).names());
    }
  }
  if (want(Task::kSrl)) {
    const Tensor emissions = srl_.emissions(word_rows(enc, words));
    const LabelSet& roles = labels(Task::kSrl);
    for (std::size_t i = 0; i < words.size(); ++i) {
      const std::vector<int> ids =
          viterbi(SrlHead::predicate_emissions(emissions, i), srl_.crf);
      if (roles.name(ids[i]) != "B-V") continue;
      std::vector<std::string> tags;
      tags.reserve(ids.size());
      for (int id : ids) {
        const std::string& tag = roles.name(id);
        tags.push_back(tag == "B-V" || tag == "I-V" ? "O" : tag);
      }
      SrlFrame frame{i, {}};
      for (const Entity& e : bio_to_entities(tags)) {
        frame.arguments.push_back({e.begin, e.end, e.type});
      }
      out.srl->push_back(std::move(frame));
    }
  }
  return out;
}

}  // namespace nltp
