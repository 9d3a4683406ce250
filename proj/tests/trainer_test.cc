#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "nltp/trainer.h"
#include "oracles.h"

using nltp::Task;
using nltp::Tensor;

namespace {

const oracle::ToyCorpus& toy() {
  static const oracle::ToyCorpus corpus = oracle::load_toy_corpus();
  return corpus;
}

// The first `n` sentences of a toy task.
nltp::TaskDataset head_of(Task task, std::size_t n) {
  const nltp::TaskDataset& full = toy().corpora.dataset(task);
  std::vector<nltp::AnnotatedSentence> s(full.sentences.begin(), full.sentences.begin() + n);
  return nltp::make_dataset(task, std::move(s), toy().corpora.vocab, full.labels);
}

nltp::TrainOptions quick_options(std::size_t epochs = 1) {
  nltp::TrainOptions o;
  o.optimizer = toy().config.optimizer;
  o.lr = 1e-3;
  o.epochs = epochs;
  o.seed = 5;
  return o;
}

std::vector<double> flat_params(const nltp::ParamStore& store) {
  std::vector<double> out;
  for (const nltp::Param& p : store.entries()) {
    out.insert(out.end(), p.tensor.values().begin(), p.tensor.values().end());
  }
  return out;
}

}  // namespace

TEST_CASE("sampling probabilities follow the 0.75 power law") {
  const nltp::TaskSampler sampler({10000, 100});
  const double a = std::pow(10000.0, 0.75), b = std::pow(100.0, 0.75);
  CHECK(sampler.probabilities()[0] == doctest::Approx(a / (a + b)));
  CHECK(sampler.probabilities()[0] == doctest::Approx(0.9694).epsilon(1e-4));
  CHECK(sampler.probabilities()[1] == doctest::Approx(0.0306).epsilon(1e-2));
  CHECK_THROWS_AS(nltp::TaskSampler({}), nltp::ContractError);
  CHECK_THROWS_AS(nltp::TaskSampler({3, 0}), nltp::ContractError);
}

TEST_CASE("a single task is always sampled without consuming randomness") {
  nltp::TaskSampler sampler({7});
  std::mt19937_64 rng(1), untouched(1);
  for (int i = 0; i < 10; ++i) CHECK(sampler.sample(rng) == 0);
  CHECK(rng() == untouched());
}

TEST_CASE("annealing weight moves linearly from 0 to 1") {
  CHECK(nltp::lambda_at({100, 0}) == 0.0);
  CHECK(nltp::lambda_at({100, 25}) == 0.25);
  CHECK(nltp::lambda_at({100, 100}) == 1.0);
  CHECK_THROWS_AS(nltp::lambda_at({0, 0}), nltp::ContractError);
  CHECK_THROWS_AS(nltp::lambda_at({10, 11}), nltp::ContractError);
}

TEST_CASE("learning rate warms up then decays to zero") {
  CHECK(nltp::lr_at(0, 1.0, 100, 0.1) == 0.0);
  CHECK(nltp::lr_at(5, 1.0, 100, 0.1) == doctest::Approx(0.5));
  CHECK(nltp::lr_at(10, 1.0, 100, 0.1) == doctest::Approx(1.0));
  CHECK(nltp::lr_at(55, 1.0, 100, 0.1) == doctest::Approx(0.5));
  CHECK(nltp::lr_at(100, 1.0, 100, 0.1) == 0.0);
}

TEST_CASE("gradient clipping rescales to the global norm") {
  nltp::ParamStore store;
  Tensor a = store.add("a", {2});
  Tensor b = store.add("b", {1});
  store.add("unused", {3});
  nltp::backward(nltp::add(nltp::sum(nltp::scale(a, 3.0)), nltp::sum(nltp::scale(b, 4.0))));
  // Gradients (3, 3) and (4): norm sqrt(34).
  CHECK(nltp::clip_gradients(store.entries(), 1.0) == doctest::Approx(std::sqrt(34.0)));
  CHECK(nltp::gradient_norm(store.entries()) == doctest::Approx(1.0));
  CHECK(a.grad()[0] == doctest::Approx(3.0 / std::sqrt(34.0)));
  CHECK(nltp::clip_gradients(store.entries(), 5.0) == doctest::Approx(1.0));
  CHECK(b.grad()[0] == doctest::Approx(4.0 / std::sqrt(34.0)));
}

TEST_CASE("AdamW update matches a hand-computed step") {
  nltp::OptimizerConfig config;
  nltp::ParamStore store;
  Tensor w = store.add("w", {1, 2}, nltp::ParamGroup::kDefault, true);
  Tensor c = store.add("crf", {1}, nltp::ParamGroup::kCrf);
  w.mutable_values()[0] = 1.0;
  w.mutable_values()[1] = -2.0;
  c.mutable_values()[0] = 0.5;
  store.add("untouched", {1}).mutable_values()[0] = 7.0;
  const auto gradients = [&] {
    store.clear_grad();
    nltp::backward(nltp::add(nltp::sum(nltp::mul(w, w)), nltp::sum(c)));
  };
  nltp::AdamW opt(store, config, 0.1, 0.01);

  gradients();
  opt.step(0.5);
  // m = 0.1 g, v = 0.001 g^2; no bias correction.
  const auto expect = [&](double p, double g, double lr, double wd) {
    const double m = 0.1 * g, v = 0.001 * g * g;
    return p - lr * (m / (std::sqrt(v) + 1e-6) + wd * p);
  };
  CHECK(w.at(0) == doctest::Approx(expect(1.0, 2.0, 0.05, 0.01)).epsilon(1e-12));
  CHECK(w.at(1) == doctest::Approx(expect(-2.0, -4.0, 0.05, 0.01)).epsilon(1e-12));
  CHECK(c.at(0) == doctest::Approx(expect(0.5, 1.0, 0.005, 0.0)).epsilon(1e-12));
  CHECK(store.get("untouched").at(0) == 7.0);

  // Second step: moments carry over.
  const double w0 = w.at(0);
  gradients();
  opt.step(1.0);
  const double g1 = 2.0, g2 = 2.0 * w0;
  const double m = 0.9 * 0.1 * g1 + 0.1 * g2;
  const double v = 0.999 * 0.001 * g1 * g1 + 0.001 * g2 * g2;
  CHECK(w.at(0) ==
        doctest::Approx(w0 - 0.1 * (m / (std::sqrt(v) + 1e-6) + 0.01 * w0)).epsilon(1e-12));
  CHECK(opt.steps() == 2);
}

TEST_CASE("bias correction divides the moments when enabled") {
  nltp::OptimizerConfig config;
  config.bias_correction = true;
  nltp::ParamStore store;
  Tensor w = store.add("w", {1});
  w.mutable_values()[0] = 3.0;
  nltp::backward(nltp::sum(nltp::scale(w, 2.0)));
  nltp::AdamW opt(store, config, 0.1, 0.1);
  opt.step(1.0);
  // m_hat = g, v_hat = g^2: the step is lr * g / (|g| + eps).
  CHECK(w.at(0) == doctest::Approx(3.0 - 0.1 * 2.0 / (2.0 + 1e-6)).epsilon(1e-12));
}

TEST_CASE("examples carry the gold targets of each task") {
  const nltp::TaskDataset& dep = toy().corpora.dataset(Task::kDep);
  const nltp::Example& ex = dep.examples.front();
  const nltp::AnnotatedSentence& s = dep.sentences.front();
  CHECK(ex.heads == s.dep->heads);
  CHECK(ex.char_ids.size() == s.length());

  const nltp::TaskDataset& sdp = toy().corpora.dataset(Task::kSdp);
  const nltp::Example& g = sdp.examples.front();
  const std::size_t m = sdp.sentences.front().words->size() + 1;
  CHECK(g.edge_targets.size() == m * m);
  double edges = 0.0;
  for (double t : g.edge_targets) edges += t;
  CHECK(edges == doctest::Approx(static_cast<double>(g.edges.size())));

  nltp::AnnotatedSentence bare;
  bare.chars = {"张"};
  CHECK_THROWS_AS(nltp::make_example(Task::kDep, bare, toy().corpora.vocab, dep.labels),
                  nltp::ContractError);
  bare.chars.clear();
  CHECK_THROWS_AS(nltp::make_example(Task::kCws, bare, toy().corpora.vocab,
                                     toy().corpora.dataset(Task::kCws).labels),
                  nltp::ContractError);
}

TEST_CASE("model gradients match finite differences for every task") {
  const std::vector<Task> tasks(nltp::kAllTasks.begin(), nltp::kAllTasks.end());
  nltp::MultiTaskModel model(oracle::small_spec(toy(), tasks));
  std::mt19937_64 rng(11);
  oracle::perturb(model.params(), rng, 0.05);
  for (Task t : tasks) {
    CAPTURE(nltp::task_name(t));
    const nltp::Example& ex = toy().corpora.dataset(t).examples[3];
    const auto result = oracle::check_gradients(
        model, [&] { return model.loss(ex, nullptr, 1.0); }, 4, rng);
    CHECK(result.ok);
    CHECK(result.checked == 5);
  }
}

TEST_CASE("a trained teacher's soft targets are normalised") {
  nltp::MultiTaskModel model(oracle::small_spec(toy(), {Task::kPos}));
  const nltp::SoftTargets t = model.soft_targets(toy().corpora.dataset(Task::kPos).examples[0]);
  REQUIRE(t.parts.size() == 1);
  for (std::size_t r = 0; r < t.parts[0].rows(); ++r) {
    double total = 0.0;
    for (std::size_t c = 0; c < t.parts[0].cols(); ++c) total += t.parts[0].at(r, c);
    CHECK(total == doctest::Approx(1.0));
  }
}

TEST_CASE("training reduces the loss") {
  const nltp::TaskDataset data = head_of(Task::kPos, 12);
  nltp::MultiTaskModel model(oracle::small_spec(toy(), {Task::kPos}));
  const auto history = nltp::train_single(model, data, quick_options(4));
  REQUIRE(history.size() == 4);
  CHECK(history.back().steps == 48);  // cumulative
  CHECK(history.back().loss.at(Task::kPos) < history.front().loss.at(Task::kPos));
}

TEST_CASE("joint training over one task equals single-task training") {
  const nltp::TaskDataset data = head_of(Task::kCws, 8);
  nltp::MultiTaskModel a(oracle::small_spec(toy(), {Task::kCws}));
  nltp::MultiTaskModel b(oracle::small_spec(toy(), {Task::kCws}));
  nltp::train_single(a, data, quick_options());
  nltp::train_joint(b, {data}, nullptr, quick_options());
  CHECK(flat_params(a.params()) == flat_params(b.params()));
}

TEST_CASE("teachers stay frozen during distillation") {
  const nltp::TaskDataset pos = head_of(Task::kPos, 6);
  const nltp::TaskDataset ner = head_of(Task::kNer, 6);
  nltp::TeacherEnsemble teachers;
  std::vector<std::vector<double>> before;
  for (Task t : {Task::kPos, Task::kNer}) {
    auto teacher = std::make_unique<nltp::MultiTaskModel>(oracle::small_spec(toy(), {t}));
    std::mt19937_64 rng(static_cast<std::uint64_t>(t) + 1);
    oracle::perturb(teacher->params(), rng, 0.1);
    before.push_back(flat_params(teacher->params()));
    teachers.add(std::move(teacher));
  }
  nltp::MultiTaskModel student(oracle::small_spec(toy(), {Task::kPos, Task::kNer}));
  const std::vector<double> student_before = flat_params(student.params());
  const auto history = nltp::train_joint(student, {pos, ner}, &teachers, quick_options());
  CHECK(flat_params(teachers.get(Task::kPos).params()) == before[0]);
  CHECK(flat_params(teachers.get(Task::kNer).params()) == before[1]);
  CHECK(flat_params(student.params()) != student_before);
  CHECK(history.back().lambda == 1.0);
}

TEST_CASE("a multi-task teacher is rejected") {
  nltp::TeacherEnsemble teachers;
  CHECK_THROWS_AS(teachers.add(std::make_unique<nltp::MultiTaskModel>(
                      oracle::small_spec(toy(), {Task::kPos, Task::kNer}))),
                  nltp::ContractError);
}

TEST_CASE("training is deterministic for a fixed seed") {
  const nltp::TaskDataset pos = head_of(Task::kPos, 5);
  const nltp::TaskDataset dep = head_of(Task::kDep, 5);
  nltp::MultiTaskModel a(oracle::small_spec(toy(), {Task::kPos, Task::kDep}));
  nltp::MultiTaskModel b(oracle::small_spec(toy(), {Task::kPos, Task::kDep}));
  nltp::train_joint(a, {pos, dep}, nullptr, quick_options());
  nltp::train_joint(b, {pos, dep}, nullptr, quick_options());
  CHECK(flat_params(a.params()) == flat_params(b.params()));
}

TEST_CASE("a diverging loss raises TrainingError") {
  const nltp::TaskDataset data = head_of(Task::kPos, 3);
  nltp::MultiTaskModel model(oracle::small_spec(toy(), {Task::kPos}));
  model.params().get("pos.classifier.bias").mutable_values()[0] = NAN;
  CHECK_THROWS_AS(nltp::train_single(model, data, quick_options()), nltp::TrainingError);
}

TEST_CASE("annotation produces every layer the model has") {
  const std::vector<Task> tasks(nltp::kAllTasks.begin(), nltp::kAllTasks.end());
  nltp::MultiTaskModel model(oracle::small_spec(toy(), tasks));
  const auto& sentence = toy().corpora.dataset(Task::kCws).sentences.front();
  const nltp::AnnotatedSentence s = model.annotate(sentence.chars, toy().corpora.vocab);
  CHECK(oracle::layer_presence(s).empty());
  const nltp::AnnotatedSentence only =
      model.annotate(sentence.chars, toy().corpora.vocab, sentence.words, Task::kPos);
  CHECK(only.words == sentence.words);
  CHECK(only.pos.has_value());
  CHECK_FALSE(only.dep.has_value());
  CHECK_FALSE(only.entities.has_value());
}
