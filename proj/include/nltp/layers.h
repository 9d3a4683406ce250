// Small parameterised building blocks shared by the encoder and task heads.

#ifndef NLTP_LAYERS_H_
#define NLTP_LAYERS_H_

#include <random>
#include <string>

#include "nltp/params.h"
#include "nltp/tensor.h"

namespace nltp {

// y = x W + b, applied row-wise. W is stored [in x out].
class Linear {
 public:
  Linear() = default;
  Linear(ParamStore& store, const std::string& name, std::size_t in,
         std::size_t out, std::mt19937_64& rng);

  Tensor operator()(const Tensor& x) const;

  Tensor weight;
  Tensor bias;
};

class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(ParamStore& store, const std::string& name, std::size_t width);

  Tensor operator()(const Tensor& x) const;

  Tensor gain;
  Tensor bias;
};

// Position-wise two-layer GELU network.
class FeedForward {
 public:
  FeedForward() = default;
  FeedForward(ParamStore& store, const std::string& name, std::size_t width,
              std::size_t hidden, std::mt19937_64& rng);

  Tensor operator()(const Tensor& x) const;

  Linear inner;
  Linear outer;
};

}  // namespace nltp

#endif  // NLTP_LAYERS_H_
