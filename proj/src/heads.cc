#include "nltp/heads.h"

#include <stdexcept>

namespace nltp {

std::string task_name(Task task) {
  switch (task) {
    case Task::kCws: return "cws";
    case Task::kPos: return "pos";
    case Task::kNer: return "ner";
    case Task::kDep: return "dep";
    case Task::kSdp: return "sdp";
    case Task::kSrl: return "srl";
  }
  return "?";
}

Task parse_task(const std::string& name) {
  for (Task t : kAllTasks) {
    if (task_name(t) == name) return t;
  }
  throw std::invalid_argument("unknown task '" + name +
                              "' (expected cws, pos, ner, dep, sdp or srl)");
}

Tensor character_rows(const EncodedSequence& enc) {
  return slice_rows(enc.hidden, 1, enc.length() + 1);
}

Tensor word_rows(const EncodedSequence& enc, const std::vector<WordSpan>& words) {
  std::vector<std::size_t> rows;
  rows.reserve(words.size());
  for (const WordSpan& w : words) rows.push_back(w.begin + 1);
  return gather_rows(enc.hidden, std::move(rows));
}

Tensor rooted_word_rows(const EncodedSequence& enc,
                        const std::vector<WordSpan>& words) {
  std::vector<std::size_t> rows{0};
  for (const WordSpan& w : words) rows.push_back(w.begin + 1);
  return gather_rows(enc.hidden, std::move(rows));
}

LinearTagHead::LinearTagHead(ParamStore& store, const std::string& name,
                             std::size_t width, std::size_t labels,
                             std::mt19937_64& rng)
    : proj_(store, name, width, labels, rng), labels_(labels) {}

NerHead::NerHead(ParamStore& store, const std::string& name, std::size_t width,
                 std::size_t heads, std::size_t ffn_width, double dropout,
                 std::size_t layers, std::size_t labels, std::mt19937_64& rng) {
  for (std::size_t l = 0; l < layers; ++l) {
    layers_.emplace_back(store, name + ".adapted" + std::to_string(l), width,
                         heads, ffn_width, dropout, rng);
  }
  classifier_ = LinearTagHead(store, name + ".classifier", width, labels, rng);
}

Tensor NerHead::logits(const EncodedSequence& enc,
                       const ForwardContext& ctx) const {
  EncodedSequence x = enc;
  for (const AdaptedAttention& layer : layers_) x = layer(x, ctx);
  return classifier_.logits(character_rows(x));
}

Biaffine::Biaffine(ParamStore& store, const std::string& name,
                   std::size_t width, std::size_t mlp_width, std::size_t labels,
                   std::mt19937_64& rng)
    : mlp_head(store, name + ".mlp_head", width, mlp_width, rng),
      mlp_dep(store, name + ".mlp_dep", width, mlp_width, rng),
      bilinear(store.add(name + ".bilinear", {labels * mlp_width, mlp_width},
                         ParamGroup::kDefault, true)),
      head_bias(store.add(name + ".head_bias", {mlp_width, labels})),
      labels_(labels),
      mlp_width_(mlp_width) {
  if (labels == 0) throw ContractError(name + ": label inventory is empty");
}

std::vector<Tensor> Biaffine::label_slices(const Tensor& rows) const {
  const Tensor r_head = gelu(mlp_head(rows));
  const Tensor r_dep = gelu(mlp_dep(rows));
  // Column block l of `projected` is r_head U_l^T.
  const Tensor projected = matmul(r_head, transpose(bilinear));
  const Tensor bias = matmul(r_head, head_bias);
  const Tensor dep_t = transpose(r_dep);
  std::vector<Tensor> out;
  out.reserve(labels_);
  for (std::size_t l = 0; l < labels_; ++l) {
    const Tensor block =
        labels_ == 1 ? projected
                     : slice_cols(projected, l * mlp_width_, (l + 1) * mlp_width_);
    const Tensor bias_l = labels_ == 1 ? bias : slice_cols(bias, l, l + 1);
    out.push_back(add(matmul(block, dep_t), bias_l));
  }
  return out;
}

Tensor Biaffine::arc_scores(const Tensor& rows) const {
  if (labels_ != 1) {
    throw ContractError("arc_scores requires a single-label biaffine scorer");
  }
  return label_slices(rows).front();
}

Tensor Biaffine::label_scores(const Tensor& rows) const {
  const std::size_t m = rows.rows();
  std::vector<Tensor> slices = label_slices(rows);
  if (labels_ == 1) return reshape(slices.front(), {m, m, 1});
  std::vector<Tensor> columns;
  columns.reserve(labels_);
  for (const Tensor& s : slices) columns.push_back(reshape(s, {m * m, 1}));
  return reshape(concat_cols(columns), {m, m, labels_});
}

ArcLabelHead::ArcLabelHead(ParamStore& store, const std::string& name,
                           std::size_t width, std::size_t mlp_width,
                           std::size_t relations, std::mt19937_64& rng)
    : arc(store, name + ".arc", width, mlp_width, 1, rng),
      label(store, name + ".label", width, mlp_width, relations, rng) {}

Tensor sdp_edge_probs(const Tensor& arc_scores) { return sigmoid(arc_scores); }

CrfParams make_crf(ParamStore& store, const std::string& name,
                   std::size_t labels) {
  CrfParams crf;
  crf.transitions = store.add(name + ".transitions", {labels, labels}, ParamGroup::kCrf);
  crf.start = store.add(name + ".start", {1, labels}, ParamGroup::kCrf);
  crf.end = store.add(name + ".end", {1, labels}, ParamGroup::kCrf);
  return crf;
}

namespace {

void check_emissions(const Tensor& emissions, const CrfParams& crf) {
  if (emissions.rank() != 2 || emissions.rows() == 0) {
    throw ContractError("CRF needs a non-empty [n x L] emission matrix, got " +
                        shape_string(emissions.shape()));
  }
  if (emissions.cols() != crf.labels()) {
    throw DimensionError("CRF emissions " + shape_string(emissions.shape()) +
                         " do not match transitions " +
                         shape_string(crf.transitions.shape()));
  }
}

}  // namespace

Tensor crf_log_partition(const Tensor& emissions, const CrfParams& crf) {
  check_emissions(emissions, crf);
  const std::size_t n = emissions.rows(), labels = emissions.cols();
  Tensor alpha = add(slice_rows(emissions, 0, 1), crf.start);
  for (std::size_t t = 1; t < n; ++t) {
    // through[i][j] = alpha[i] + transitions[i][j]; reduce over i.
    const Tensor through = add(crf.transitions, transpose(alpha));
    alpha = add(reshape(logsumexp(transpose(through)), {1, labels}),
                slice_rows(emissions, t, t + 1));
  }
  return logsumexp(reshape(add(alpha, crf.end), {labels}));
}

Tensor crf_sequence_score(const Tensor& emissions, const CrfParams& crf,
                          const std::vector<int>& labels) {
  check_emissions(emissions, crf);
  const std::size_t n = emissions.rows(), count = emissions.cols();
  if (labels.size() != n) {
    throw ContractError("CRF label sequence has " + std::to_string(labels.size()) +
                        " entries for " + std::to_string(n) + " positions");
  }
  std::vector<std::size_t> emit_idx, trans_idx;
  for (std::size_t t = 0; t < n; ++t) {
    if (labels[t] < 0 || static_cast<std::size_t>(labels[t]) >= count) {
      throw ContractError("CRF label " + std::to_string(labels[t]) +
                          " outside inventory of " + std::to_string(count));
    }
    emit_idx.push_back(t * count + static_cast<std::size_t>(labels[t]));
    if (t > 0) {
      trans_idx.push_back(static_cast<std::size_t>(labels[t - 1]) * count +
                          static_cast<std::size_t>(labels[t]));
    }
  }
  Tensor score = sum(gather(emissions, emit_idx, {n}));
  if (!trans_idx.empty()) {
    const std::size_t k = trans_idx.size();
    score = add(score, sum(gather(crf.transitions, std::move(trans_idx), {k})));
  }
  score = add(score, gather(crf.start, {static_cast<std::size_t>(labels.front())}, {}));
  score = add(score, gather(crf.end, {static_cast<std::size_t>(labels.back())}, {}));
  return score;
}

Tensor crf_log_likelihood(const Tensor& emissions, const CrfParams& crf,
                          const std::vector<int>& gold) {
  return sub(crf_sequence_score(emissions, crf, gold),
             crf_log_partition(emissions, crf));
}

SrlHead::SrlHead(ParamStore& store, const std::string& name, std::size_t width,
                 std::size_t mlp_width, std::size_t roles, std::mt19937_64& rng)
    : scorer(store, name + ".biaffine", width, mlp_width, roles, rng),
      crf(make_crf(store, name + ".crf", roles)) {}

Tensor SrlHead::emissions(const Tensor& word_rows) const {
  return scorer.label_scores(word_rows);
}

Tensor SrlHead::predicate_emissions(const Tensor& emissions,
                                    std::size_t predicate) {
  const std::size_t n = emissions.shape()[0];
  const std::size_t roles = emissions.cols();
  const Tensor flat = reshape(emissions, {n * n, roles});
  return slice_rows(flat, predicate * n, (predicate + 1) * n);
}

}  // namespace nltp
