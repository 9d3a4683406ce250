#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <functional>
#include <random>

#include "nltp/tensor.h"

using nltp::Tensor;

namespace {

Tensor random_tensor(nltp::Shape shape, std::mt19937_64& rng, bool grad = true) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(nltp::shape_size(shape));
  for (double& x : v) x = normal(rng);
  return Tensor::from(std::move(shape), std::move(v), grad);
}

// Central-difference check of d loss / d input for every entry of `input`.
double worst_gradient_error(Tensor& input, const std::function<Tensor()>& loss) {
  input.zero_grad();
  nltp::backward(loss());
  const std::vector<double> analytic(input.grad().begin(), input.grad().end());
  double worst = 0.0;
  for (std::size_t k = 0; k < input.size(); ++k) {
    double& w = input.mutable_values()[k];
    const double saved = w;
    nltp::NoGradGuard guard;
    w = saved + 1e-5;
    const double plus = loss().item();
    w = saved - 1e-5;
    const double minus = loss().item();
    w = saved;
    const double numeric = (plus - minus) / 2e-5;
    worst = std::max(worst, std::abs(numeric - analytic[k]) /
                                std::max({std::abs(numeric), std::abs(analytic[k]), 1.0}));
  }
  return worst;
}

// Projects an output onto fixed random weights so every entry matters.
Tensor probe(const Tensor& out, std::uint64_t seed = 99) {
  std::mt19937_64 rng(seed);
  const Tensor w = random_tensor(out.shape(), rng, false);
  return nltp::sum(nltp::mul(out, w));
}

}  // namespace

TEST_CASE("matmul agrees with a triple loop") {
  std::mt19937_64 rng(1);
  const Tensor a = random_tensor({4, 3}, rng, false);
  const Tensor b = random_tensor({3, 5}, rng, false);
  const Tensor c = nltp::matmul(a, b);
  REQUIRE(c.shape() == nltp::Shape{4, 5});
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 5; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < 3; ++k) s += a.at(i, k) * b.at(k, j);
      CHECK(c.at(i, j) == doctest::Approx(s).epsilon(1e-12));
    }
  }
}

TEST_CASE("mismatched shapes raise DimensionError") {
  const Tensor a = Tensor::zeros({2, 3});
  const Tensor b = Tensor::zeros({2, 3});
  CHECK_THROWS_AS(nltp::matmul(a, b), nltp::DimensionError);
  CHECK_THROWS_AS(nltp::add(a, Tensor::zeros({3, 2})), nltp::DimensionError);
  CHECK_THROWS_AS(nltp::reshape(a, {4}), nltp::DimensionError);
}

TEST_CASE("broadcasting over rows, columns and scalars") {
  const Tensor a = Tensor::from({2, 2}, {1, 2, 3, 4});
  CHECK(nltp::add(a, Tensor::from({1, 2}, {10, 20})).at(1, 1) == 24);
  CHECK(nltp::add(a, Tensor::from({2, 1}, {10, 20})).at(1, 0) == 23);
  CHECK(nltp::mul(a, Tensor::scalar(2)).at(0, 1) == 4);
}

TEST_CASE("softmax rows sum to one and survive large logits") {
  const Tensor x = Tensor::from({2, 3}, {1000, 1001, 1002, -5, 0, 5});
  const Tensor p = nltp::softmax(x);
  for (std::size_t r = 0; r < 2; ++r) {
    CHECK(p.at(r, 0) + p.at(r, 1) + p.at(r, 2) == doctest::Approx(1.0));
  }
  const Tensor lse = nltp::logsumexp(x);
  CHECK(lse.shape() == nltp::Shape{2});
  CHECK(lse.at(0) == doctest::Approx(1002 + std::log(1 + std::exp(-1) + std::exp(-2))));
}

TEST_CASE("gradients of elementwise and reduction ops match finite differences") {
  std::mt19937_64 rng(3);
  Tensor x = random_tensor({3, 4}, rng);
  const Tensor other = random_tensor({3, 4}, rng, false);
  const Tensor row = random_tensor({1, 4}, rng, false);
  const std::vector<std::pair<const char*, std::function<Tensor()>>> cases = {
      {"add", [&] { return probe(nltp::add(x, row)); }},
      {"sub", [&] { return probe(nltp::sub(other, x)); }},
      {"mul", [&] { return probe(nltp::mul(x, other)); }},
      {"mul self", [&] { return probe(nltp::mul(x, x)); }},
      {"gelu", [&] { return probe(nltp::gelu(x)); }},
      {"sigmoid", [&] { return probe(nltp::sigmoid(x)); }},
      {"log_sigmoid", [&] { return probe(nltp::log_sigmoid(x)); }},
      {"softmax", [&] { return probe(nltp::softmax(x)); }},
      {"log_softmax", [&] { return probe(nltp::log_softmax(x)); }},
      {"logsumexp", [&] { return probe(nltp::logsumexp(x)); }},
      {"mean", [&] { return nltp::mean(nltp::mul(x, other)); }},
      {"transpose", [&] { return probe(nltp::transpose(x)); }},
      {"slice", [&] { return probe(nltp::slice_cols(nltp::slice_rows(x, 1, 3), 1, 3)); }},
      {"concat", [&] { return probe(nltp::concat_cols({x, nltp::concat_rows({row, row, row})})); }},
      {"gather", [&] { return probe(nltp::gather(x, {0, 5, 5, 11}, {2, 2})); }},
      {"gather_rows", [&] { return probe(nltp::gather_rows(x, {2, 0, 2})); }},
  };
  for (const auto& [name, loss] : cases) {
    CAPTURE(name);
    CHECK(worst_gradient_error(x, loss) < 1e-6);
  }
}

TEST_CASE("matmul and layer norm gradients") {
  std::mt19937_64 rng(4);
  Tensor a = random_tensor({3, 4}, rng);
  Tensor b = random_tensor({4, 2}, rng);
  CHECK(worst_gradient_error(a, [&] { return probe(nltp::matmul(a, b)); }) < 1e-6);
  CHECK(worst_gradient_error(b, [&] { return probe(nltp::matmul(a, b)); }) < 1e-6);
  Tensor gamma = random_tensor({1, 4}, rng);
  Tensor beta = random_tensor({1, 4}, rng);
  const auto ln = [&] { return probe(nltp::layer_norm(a, gamma, beta)); };
  CHECK(worst_gradient_error(a, ln) < 1e-6);
  CHECK(worst_gradient_error(gamma, ln) < 1e-6);
  CHECK(worst_gradient_error(beta, ln) < 1e-6);
}

TEST_CASE("leaf gradients accumulate until zeroed") {
  Tensor x = Tensor::from({2}, {1.0, 2.0}, true);
  nltp::backward(nltp::sum(nltp::mul(x, x)));
  nltp::backward(nltp::sum(nltp::mul(x, x)));
  CHECK(x.grad()[1] == doctest::Approx(8.0));
  x.zero_grad();
  CHECK(x.grad()[1] == 0.0);
}

TEST_CASE("backward requires a scalar") {
  Tensor x = Tensor::from({2}, {1.0, 2.0}, true);
  CHECK_THROWS_AS(nltp::backward(nltp::scale(x, 2.0)), nltp::ContractError);
}

TEST_CASE("no-grad guard records no history") {
  Tensor x = Tensor::from({2}, {1.0, 2.0}, true);
  {
    nltp::NoGradGuard guard;
    CHECK_FALSE(nltp::grad_enabled());
    const Tensor y = nltp::mul(x, x);
    CHECK(y.node()->is_leaf());
    CHECK_FALSE(y.requires_grad());
  }
  CHECK(nltp::grad_enabled());
}

TEST_CASE("topological order visits shared nodes once") {
  Tensor x = Tensor::from({2}, {1.0, 2.0}, true);
  const Tensor y = nltp::add(x, x);
  const Tensor z = nltp::sum(nltp::mul(y, y));
  const auto order = nltp::topological_order(z);
  CHECK(order.size() == 4);
  CHECK(order.front() == x.node());
  CHECK(order.back() == z.node());
}

TEST_CASE("dropout is the identity outside training and rescales inside") {
  std::mt19937_64 rng(5);
  const Tensor x = Tensor::full({1, 10000}, 1.0);
  const Tensor eval = nltp::dropout(x, 0.5, rng, false);
  CHECK(eval.values()[17] == 1.0);
  const Tensor train = nltp::dropout(x, 0.5, rng, true);
  double total = 0.0;
  for (double v : train.values()) {
    CHECK((v == 0.0 || v == doctest::Approx(2.0)));
    total += v;
  }
  CHECK(total / 10000.0 == doctest::Approx(1.0).epsilon(0.05));
}
