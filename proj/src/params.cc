#include "nltp/params.h"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace nltp {
namespace {

constexpr char kMagic[8] = {'N', 'L', 'T', 'P', 'P', 'R', 'M', '1'};

template <typename T>
void put(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T take(std::istream& is, const std::filesystem::path& path) {
  T value;
  if (!is.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw std::runtime_error("truncated parameter file: " + path.string());
  }
  return value;
}

}  // namespace

Tensor& ParamStore::add(const std::string& name, Shape shape, ParamGroup group,
                        bool decay) {
  if (contains(name)) {
    throw ContractError("duplicate parameter name: " + name);
  }
  params_.push_back({name, Tensor::zeros(std::move(shape), true), group, decay});
  return params_.back().tensor;
}

Tensor& ParamStore::add_xavier(const std::string& name, std::size_t fan_in,
                               std::size_t fan_out, std::mt19937_64& rng) {
  Tensor& t = add(name, {fan_in, fan_out}, ParamGroup::kDefault, true);
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (double& v : t.mutable_values()) v = dist(rng);
  return t;
}

Tensor& ParamStore::add_normal(const std::string& name, Shape shape,
                               double stddev, std::mt19937_64& rng) {
  Tensor& t = add(name, std::move(shape), ParamGroup::kDefault, true);
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& v : t.mutable_values()) v = dist(rng);
  return t;
}

Tensor& ParamStore::add_constant(const std::string& name, Shape shape,
                                 double value) {
  Tensor& t = add(name, std::move(shape));
  for (double& v : t.mutable_values()) v = value;
  return t;
}

const Tensor& ParamStore::get(const std::string& name) const {
  for (const Param& p : params_) {
    if (p.name == name) return p.tensor;
  }
  throw std::out_of_range("unknown parameter: " + name);
}

Tensor& ParamStore::get(const std::string& name) {
  return const_cast<Tensor&>(std::as_const(*this).get(name));
}

bool ParamStore::contains(const std::string& name) const {
  for (const Param& p : params_) {
    if (p.name == name) return true;
  }
  return false;
}

std::size_t ParamStore::parameter_count() const {
  std::size_t total = 0;
  for (const Param& p : params_) total += p.tensor.size();
  return total;
}

void ParamStore::zero_grad() {
  for (Param& p : params_) p.tensor.zero_grad();
}

void ParamStore::clear_grad() {
  for (Param& p : params_) std::vector<double>().swap(p.tensor.node()->grad);
}

void ParamStore::set_trainable(bool on) {
  for (Param& p : params_) p.tensor.set_requires_grad(on);
}

void ParamStore::save(const std::filesystem::path& path) const {
  std::vector<NamedTensor> tensors;
  tensors.reserve(params_.size());
  for (const Param& p : params_) tensors.emplace_back(p.name, p.tensor);
  write_param_file(path, tensors);
}

void ParamStore::load(const std::filesystem::path& path) {
  std::vector<NamedTensor> tensors = read_param_file(path);
  if (tensors.size() != params_.size()) {
    throw std::runtime_error(path.string() + ": holds " +
                             std::to_string(tensors.size()) +
                             " parameters, model expects " +
                             std::to_string(params_.size()));
  }
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    Param& p = params_[i];
    const auto& [name, t] = tensors[i];
    if (name != p.name || t.shape() != p.tensor.shape()) {
      throw std::runtime_error(path.string() + ": entry " + std::to_string(i) +
                               " is " + name + shape_string(t.shape()) +
                               ", model expects " + p.name +
                               shape_string(p.tensor.shape()));
    }
    std::copy(t.values().begin(), t.values().end(),
              p.tensor.mutable_values().begin());
  }
}

void write_param_file(const std::filesystem::path& path,
                      const std::vector<NamedTensor>& tensors) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os.write(kMagic, sizeof(kMagic));
  put<std::uint64_t>(os, tensors.size());
  for (const auto& [name, t] : tensors) {
    put<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) put<std::uint64_t>(os, d);
    auto values = t.values();
    os.write(reinterpret_cast<const char*>(values.data()),
             static_cast<std::streamsize>(values.size() * sizeof(double)));
  }
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

std::vector<NamedTensor> read_param_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  char magic[sizeof(kMagic)];
  if (!is.read(magic, sizeof(magic)) ||
      std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error(path.string() + " is not a parameter container");
  }
  const auto count = take<std::uint64_t>(is, path);
  std::vector<NamedTensor> out;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = take<std::uint32_t>(is, path);
    std::string name(name_len, '\0');
    if (!is.read(name.data(), name_len)) {
      throw std::runtime_error("truncated parameter file: " + path.string());
    }
    const auto rank = take<std::uint32_t>(is, path);
    Shape shape(rank);
    for (auto& d : shape) d = take<std::uint64_t>(is, path);
    std::vector<double> values(shape_size(shape));
    if (!is.read(reinterpret_cast<char*>(values.data()),
                 static_cast<std::streamsize>(values.size() * sizeof(double)))) {
      throw std::runtime_error("truncated parameter file: " + path.string());
    }
    out.emplace_back(std::move(name), Tensor::from(std::move(shape), std::move(values)));
  }
  return out;
}

}  // namespace nltp
