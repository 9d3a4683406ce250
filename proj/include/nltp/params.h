// Named parameter registry and its on-disk container.
//
// Container layout (all integers little-endian):
//   magic   8 bytes  "NLTPPRM1"
//   count   u64
//   repeated count times:
//     name_len u32, name bytes (UTF-8)
//     rank     u32, dims u64 x rank
//     values   f64 x product(dims), IEEE-754 binary64
// Entries appear in registration order, so saving the same store twice
// yields identical bytes.

#ifndef NLTP_PARAMS_H_
#define NLTP_PARAMS_H_

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "nltp/tensor.h"

namespace nltp {

enum class ParamGroup { kDefault, kCrf };

struct Param {
  std::string name;
  Tensor tensor;
  ParamGroup group = ParamGroup::kDefault;
  // Matrices receive weight decay; biases, gains and CRF scores do not.
  bool decay = false;
};

class ParamStore {
 public:
  // Registers a zero-initialised trainable tensor. Names must be unique.
  // The returned reference dies with the next registration; keep a copy of
  // the handle, which shares storage with the store's entry.
  Tensor& add(const std::string& name, Shape shape,
              ParamGroup group = ParamGroup::kDefault, bool decay = false);

  // Registration helpers drawing from `rng`.
  Tensor& add_xavier(const std::string& name, std::size_t fan_in,
                     std::size_t fan_out, std::mt19937_64& rng);
  Tensor& add_normal(const std::string& name, Shape shape, double stddev,
                     std::mt19937_64& rng);
  Tensor& add_constant(const std::string& name, Shape shape, double value);

  const std::vector<Param>& entries() const { return params_; }
  std::vector<Param>& entries() { return params_; }
  const Tensor& get(const std::string& name) const;
  Tensor& get(const std::string& name);
  bool contains(const std::string& name) const;
  std::size_t parameter_count() const;

  void zero_grad();
  // Drops gradient buffers, so afterwards has_grad() is true only for
  // parameters reached by a later backward pass.
  void clear_grad();
  void set_trainable(bool on);

  // Throws std::runtime_error on I/O failure or a mismatched container.
  void save(const std::filesystem::path& path) const;
  void load(const std::filesystem::path& path);

 private:
  std::vector<Param> params_;
};

// Raw container access, independent of any store layout.
using NamedTensor = std::pair<std::string, Tensor>;
void write_param_file(const std::filesystem::path& path,
                      const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> read_param_file(const std::filesystem::path& path);

}  // namespace nltp

#endif  // NLTP_PARAMS_H_
