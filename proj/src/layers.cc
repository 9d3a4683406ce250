#include "nltp/layers.h"

namespace nltp {

Linear::Linear(ParamStore& store, const std::string& name, std::size_t in,
               std::size_t out, std::mt19937_64& rng)
    : weight(store.add_xavier(name + ".weight", in, out, rng)),
      bias(store.add(name + ".bias", {1, out})) {}

Tensor Linear::operator()(const Tensor& x) const {
  return add(matmul(x, weight), bias);
}

LayerNorm::LayerNorm(ParamStore& store, const std::string& name,
                     std::size_t width)
    : gain(store.add_constant(name + ".gain", {width}, 1.0)),
      bias(store.add(name + ".bias", {width})) {}

Tensor LayerNorm::operator()(const Tensor& x) const {
  return layer_norm(x, gain, bias, 1e-12);
}

FeedForward::FeedForward(ParamStore& store, const std::string& name,
                         std::size_t width, std::size_t hidden,
                         std::mt19937_64& rng)
    : inner(store, name + ".inner", width, hidden, rng),
      outer(store, name + ".outer", hidden, width, rng) {}

Tensor FeedForward::operator()(const Tensor& x) const {
  return outer(gelu(inner(x)));
}

}  // namespace nltp
