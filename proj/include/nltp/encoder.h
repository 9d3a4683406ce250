// Shared character encoder and the relative-position attention layer used by
// the entity recogniser.
//
// The encoder is a post-norm transformer over [CLS] s_1 .. s_n [SEP] with
// learned absolute position embeddings. It is randomly initialised and
// trained only on the supervised task losses.

#ifndef NLTP_ENCODER_H_
#define NLTP_ENCODER_H_

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "nltp/layers.h"
#include "nltp/params.h"
#include "nltp/tensor.h"

namespace nltp {

inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;
inline constexpr int kClsId = 2;
inline constexpr int kSepId = 3;

struct EncoderConfig {
  std::size_t vocab_size = 4;
  std::size_t width = 64;
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t ffn_width = 128;
  std::size_t max_length = 128;
  double dropout = 0.1;
  std::uint64_t seed = 1;

  // Throws ContractError naming the first violated constraint.
  void validate() const;
};

// Sentence longer than the encoder's position table.
class LengthError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Dropout is active only when `training` is set and `rng` is provided.
struct ForwardContext {
  bool training = false;
  std::mt19937_64* rng = nullptr;

  bool dropout_active() const { return training && rng != nullptr; }
};

struct EncodedSequence {
  // (n + 2) x width: row 0 is [CLS], rows 1..n the characters, row n+1 [SEP].
  Tensor hidden;
  std::size_t width = 0;
  std::vector<int> char_ids;

  std::size_t length() const { return char_ids.size(); }
};

class Encoder {
 public:
  Encoder() = default;
  Encoder(const EncoderConfig& config, ParamStore& store, std::mt19937_64& rng);

  EncodedSequence encode(const std::vector<int>& char_ids,
                         const ForwardContext& ctx = {}) const;

  // Pads every sentence to the longest one and masks padded keys, so each
  // returned sequence matches its unbatched encoding.
  std::vector<EncodedSequence> encode_batch(
      const std::vector<std::vector<int>>& sentences,
      const ForwardContext& ctx = {}) const;

  const EncoderConfig& config() const { return config_; }

 private:
  struct Layer {
    Linear query, key, value, output;
    LayerNorm attention_norm;
    FeedForward ffn;
    LayerNorm ffn_norm;
  };

  void check_input(const std::vector<int>& ids) const;

  EncoderConfig config_;
  Tensor token_embedding_;
  Tensor position_embedding_;
  LayerNorm embedding_norm_;
  std::vector<Layer> layers_;
};

// Transformer layer whose attention logits are unscaled and add
// relative-position terms built from signed offsets j - i:
//   A[i][j] = q_i.k_j + q_i.R[j-i] + u.k_j + v.R[j-i]
// R is a fixed sinusoid table; sin is odd in the offset, so the layer can
// tell left context from right context.
class AdaptedAttention {
 public:
  AdaptedAttention() = default;
  AdaptedAttention(ParamStore& store, const std::string& name,
                   std::size_t width, std::size_t heads, std::size_t ffn_width,
                   double dropout, std::mt19937_64& rng);

  EncodedSequence operator()(const EncodedSequence& input,
                             const ForwardContext& ctx = {}) const;

  // Pre-softmax logits of one head, T x T.
  Tensor attention_logits(const Tensor& hidden, std::size_t head) const;

 private:
  Tensor head_logits(const Tensor& q, const Tensor& k, std::size_t head,
                     std::size_t length) const;

  std::size_t width_ = 0;
  std::size_t heads_ = 0;
  double dropout_ = 0.0;
  Linear query_, key_, value_, output_;
  Tensor content_bias_;   // u, 1 x width (head h owns a slice)
  Tensor position_bias_;  // v, 1 x width
  LayerNorm attention_norm_;
  FeedForward ffn_;
  LayerNorm ffn_norm_;
};

// Sinusoid rows for offsets -(length-1) .. length-1; row index = offset +
// length - 1.
Tensor relative_position_table(std::size_t length, std::size_t dim);

}  // namespace nltp

#endif  // NLTP_ENCODER_H_
