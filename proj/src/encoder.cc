#include "nltp/encoder.h"

#include <algorithm>
#include <cmath>

namespace nltp {
namespace {

constexpr double kMasked = -1e30;

Tensor drop(const Tensor& x, double rate, const ForwardContext& ctx) {
  if (!ctx.dropout_active()) return x;
  return dropout(x, rate, *ctx.rng, true);
}

}  // namespace

void EncoderConfig::validate() const {
  if (vocab_size <= 4) throw ContractError("encoder.vocab_size must exceed the 4 reserved ids");
  if (width == 0) throw ContractError("encoder.width must be positive");
  if (heads == 0 || width % heads != 0) {
    throw ContractError("encoder.width (" + std::to_string(width) +
                        ") must be divisible by encoder.heads (" +
                        std::to_string(heads) + ")");
  }
  if (ffn_width == 0) throw ContractError("encoder.ffn_width must be positive");
  if (max_length < 3) throw ContractError("encoder.max_length must be at least 3");
  if (dropout < 0.0 || dropout >= 1.0) {
    throw ContractError("encoder.dropout must lie in [0, 1)");
  }
}

Encoder::Encoder(const EncoderConfig& config, ParamStore& store,
                 std::mt19937_64& rng)
    : config_(config) {
  config_.validate();
  const std::size_t d = config_.width;
  token_embedding_ =
      store.add_normal("encoder.token_embedding", {config_.vocab_size, d}, 0.1, rng);
  position_embedding_ =
      store.add_normal("encoder.position_embedding", {config_.max_length, d}, 0.1, rng);
  embedding_norm_ = LayerNorm(store, "encoder.embedding_norm", d);
  for (std::size_t l = 0; l < config_.layers; ++l) {
    const std::string p = "encoder.layer" + std::to_string(l);
    Layer layer;
    layer.query = Linear(store, p + ".query", d, d, rng);
    layer.key = Linear(store, p + ".key", d, d, rng);
    layer.value = Linear(store, p + ".value", d, d, rng);
    layer.output = Linear(store, p + ".output", d, d, rng);
    layer.attention_norm = LayerNorm(store, p + ".attention_norm", d);
    layer.ffn = FeedForward(store, p + ".ffn", d, config_.ffn_width, rng);
    layer.ffn_norm = LayerNorm(store, p + ".ffn_norm", d);
    layers_.push_back(std::move(layer));
  }
}

void Encoder::check_input(const std::vector<int>& ids) const {
  if (ids.size() + 2 > config_.max_length) {
    throw LengthError("sentence of " + std::to_string(ids.size()) +
                      " characters exceeds encoder max_length " +
                      std::to_string(config_.max_length) +
                      " (2 positions are reserved for [CLS] and [SEP])");
  }
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= config_.vocab_size) {
      throw ContractError("character id " + std::to_string(id) +
                          " outside vocabulary of size " +
                          std::to_string(config_.vocab_size));
    }
  }
}

EncodedSequence Encoder::encode(const std::vector<int>& char_ids,
                                const ForwardContext& ctx) const {
  return std::move(encode_batch({char_ids}, ctx).front());
}

std::vector<EncodedSequence> Encoder::encode_batch(
    const std::vector<std::vector<int>>& sentences,
    const ForwardContext& ctx) const {
  if (sentences.empty()) return {};
  std::size_t longest = 0;
  for (const auto& ids : sentences) {
    check_input(ids);
    longest = std::max(longest, ids.size());
  }
  const std::size_t steps = longest + 2;
  const std::size_t batch = sentences.size();
  const std::size_t d = config_.width;
  const std::size_t head_dim = d / config_.heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_dim));

  std::vector<int> tokens;
  std::vector<int> positions;
  std::vector<Tensor> key_masks;
  for (const auto& ids : sentences) {
    tokens.push_back(kClsId);
    tokens.insert(tokens.end(), ids.begin(), ids.end());
    tokens.push_back(kSepId);
    tokens.resize(tokens.size() + (longest - ids.size()), kPadId);
    const std::size_t valid = ids.size() + 2;
    if (valid < steps) {
      std::vector<double> mask(steps, 0.0);
      std::fill(mask.begin() + valid, mask.end(), kMasked);
      key_masks.push_back(Tensor::from({1, steps}, std::move(mask)));
    } else {
      key_masks.emplace_back();
    }
    for (std::size_t t = 0; t < steps; ++t) positions.push_back(static_cast<int>(t));
  }

  Tensor x = add(embedding(token_embedding_, tokens),
                 embedding(position_embedding_, positions));
  x = drop(embedding_norm_(x), config_.dropout, ctx);

  for (const Layer& layer : layers_) {
    const Tensor q = layer.query(x);
    const Tensor k = layer.key(x);
    const Tensor v = layer.value(x);
    std::vector<Tensor> per_sentence;
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t r0 = b * steps;
      const Tensor qb = slice_rows(q, r0, r0 + steps);
      const Tensor kb = slice_rows(k, r0, r0 + steps);
      const Tensor vb = slice_rows(v, r0, r0 + steps);
      std::vector<Tensor> heads;
      for (std::size_t h = 0; h < config_.heads; ++h) {
        const std::size_t c0 = h * head_dim;
        const Tensor qh = slice_cols(qb, c0, c0 + head_dim);
        const Tensor kh = slice_cols(kb, c0, c0 + head_dim);
        const Tensor vh = slice_cols(vb, c0, c0 + head_dim);
        Tensor scores = scale(matmul(qh, transpose(kh)), inv_sqrt);
        if (key_masks[b].defined()) scores = add(scores, key_masks[b]);
        Tensor probs = drop(softmax(scores), config_.dropout, ctx);
        heads.push_back(matmul(probs, vh));
      }
      per_sentence.push_back(concat_cols(heads));
    }
    Tensor attended = per_sentence.size() == 1 ? per_sentence.front()
                                               : concat_rows(per_sentence);
    attended = drop(layer.output(attended), config_.dropout, ctx);
    x = layer.attention_norm(add(x, attended));
    x = layer.ffn_norm(add(x, drop(layer.ffn(x), config_.dropout, ctx)));
  }

  std::vector<EncodedSequence> out;
  out.reserve(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const std::size_t r0 = b * steps;
    EncodedSequence seq;
    seq.hidden = batch == 1 ? x : slice_rows(x, r0, r0 + sentences[b].size() + 2);
    seq.width = d;
    seq.char_ids = sentences[b];
    out.push_back(std::move(seq));
  }
  return out;
}

Tensor relative_position_table(std::size_t length, std::size_t dim) {
  const std::size_t rows = 2 * length - 1;
  std::vector<double> table(rows * dim);
  for (std::size_t r = 0; r < rows; ++r) {
    const double offset = static_cast<double>(r) - static_cast<double>(length - 1);
    for (std::size_t k = 0; k < dim; k += 2) {
      const double freq =
          1.0 / std::pow(10000.0, static_cast<double>(k) / static_cast<double>(dim));
      table[r * dim + k] = std::sin(offset * freq);
      if (k + 1 < dim) table[r * dim + k + 1] = std::cos(offset * freq);
    }
  }
  return Tensor::from({rows, dim}, std::move(table));
}

AdaptedAttention::AdaptedAttention(ParamStore& store, const std::string& name,
                                   std::size_t width, std::size_t heads,
                                   std::size_t ffn_width, double dropout,
                                   std::mt19937_64& rng)
    : width_(width), heads_(heads), dropout_(dropout) {
  if (heads == 0 || width % heads != 0) {
    throw ContractError(name + ": width must be divisible by heads");
  }
  query_ = Linear(store, name + ".query", width, width, rng);
  key_ = Linear(store, name + ".key", width, width, rng);
  value_ = Linear(store, name + ".value", width, width, rng);
  output_ = Linear(store, name + ".output", width, width, rng);
  content_bias_ = store.add_normal(name + ".content_bias", {1, width}, 0.1, rng);
  position_bias_ = store.add_normal(name + ".position_bias", {1, width}, 0.1, rng);
  attention_norm_ = LayerNorm(store, name + ".attention_norm", width);
  ffn_ = FeedForward(store, name + ".ffn", width, ffn_width, rng);
  ffn_norm_ = LayerNorm(store, name + ".ffn_norm", width);
}

Tensor AdaptedAttention::head_logits(const Tensor& q, const Tensor& k,
                                     std::size_t head, std::size_t length) const {
  const std::size_t head_dim = width_ / heads_;
  const std::size_t c0 = head * head_dim;
  const Tensor qh = slice_cols(q, c0, c0 + head_dim);
  const Tensor kh = slice_cols(k, c0, c0 + head_dim);
  const Tensor uh = slice_cols(content_bias_, c0, c0 + head_dim);
  const Tensor vh = slice_cols(position_bias_, c0, c0 + head_dim);
  const Tensor rel = relative_position_table(length, head_dim);
  const std::size_t span = 2 * length - 1;

  std::vector<std::size_t> by_row, by_offset;
  by_row.reserve(length * length);
  by_offset.reserve(length * length);
  for (std::size_t i = 0; i < length; ++i) {
    for (std::size_t j = 0; j < length; ++j) {
      const std::size_t offset = j + length - 1 - i;
      by_row.push_back(i * span + offset);
      by_offset.push_back(offset);
    }
  }
  const Shape square{length, length};
  Tensor logits = matmul(qh, transpose(kh));
  logits = add(logits, gather(matmul(qh, transpose(rel)), by_row, square));
  logits = add(logits, matmul(uh, transpose(kh)));
  logits = add(logits, gather(matmul(vh, transpose(rel)), by_offset, square));
  return logits;
}

Tensor AdaptedAttention::attention_logits(const Tensor& hidden,
                                          std::size_t head) const {
  return head_logits(query_(hidden), key_(hidden), head, hidden.rows());
}

EncodedSequence AdaptedAttention::operator()(const EncodedSequence& input,
                                             const ForwardContext& ctx) const {
  const Tensor& x = input.hidden;
  const std::size_t length = x.rows();
  const std::size_t head_dim = width_ / heads_;
  const Tensor q = query_(x);
  const Tensor k = key_(x);
  const Tensor v = value_(x);
  std::vector<Tensor> heads;
  for (std::size_t h = 0; h < heads_; ++h) {
    Tensor probs = drop(softmax(head_logits(q, k, h, length)), dropout_, ctx);
    heads.push_back(matmul(probs, slice_cols(v, h * head_dim, (h + 1) * head_dim)));
  }
  Tensor attended = drop(output_(concat_cols(heads)), dropout_, ctx);
  Tensor y = attention_norm_(add(x, attended));
  y = ffn_norm_(add(y, drop(ffn_(y), dropout_, ctx)));
  EncodedSequence out = input;
  out.hidden = y;
  return out;
}

}  // namespace nltp
