#include "nltp/trainer.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace nltp {

TaskDataset make_dataset(Task task, std::vector<AnnotatedSentence> sentences,
                         const Vocabulary& vocab, LabelSet labels) {
  if (sentences.empty()) {
    throw ContractError(task_name(task) + " dataset has no sentences");
  }
  TaskDataset d;
  d.task = task;
  d.examples.reserve(sentences.size());
  for (const AnnotatedSentence& s : sentences) {
    d.examples.push_back(make_example(task, s, vocab, labels));
  }
  d.sentences = std::move(sentences);
  d.labels = std::move(labels);
  return d;
}

TaskSampler::TaskSampler(const std::vector<std::size_t>& sizes, double exponent) {
  if (sizes.empty()) throw ContractError("task sampling needs at least one dataset");
  std::vector<double> weights;
  weights.reserve(sizes.size());
  for (std::size_t n : sizes) {
    if (n == 0) throw ContractError("task sampling: empty dataset");
    weights.push_back(std::pow(static_cast<double>(n), exponent));
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (double w : weights) probabilities_.push_back(w / total);
  distribution_ = std::discrete_distribution<std::size_t>(weights.begin(), weights.end());
}

std::size_t TaskSampler::sample(std::mt19937_64& rng) {
  if (probabilities_.size() == 1) return 0;
  return distribution_(rng);
}

double lambda_at(const DistillationSchedule& schedule) {
  if (schedule.total_steps == 0) {
    throw ContractError("distillation schedule has zero total steps");
  }
  if (schedule.current_step > schedule.total_steps) {
    throw ContractError("distillation step " + std::to_string(schedule.current_step) +
                        " is past the end (" + std::to_string(schedule.total_steps) + ")");
  }
  return static_cast<double>(schedule.current_step) /
         static_cast<double>(schedule.total_steps);
}

double lr_at(std::size_t step, double base, std::size_t total, double warmup_proportion) {
  if (total == 0 || step >= total) return 0.0;
  const double s = static_cast<double>(step);
  const double t = static_cast<double>(total);
  const double warmup = warmup_proportion * t;
  if (s < warmup) return base * s / warmup;
  return base * (t - s) / (t - warmup);
}

double gradient_norm(const std::vector<Param>& params) {
  double sq = 0.0;
  for (const Param& p : params) {
    for (double g : p.tensor.grad()) sq += g * g;
  }
  return std::sqrt(sq);
}

double clip_gradients(std::vector<Param>& params, double max_norm) {
  const double norm = gradient_norm(params);
  if (norm > max_norm) {
    const double factor = max_norm / norm;
    for (Param& p : params) {
      if (!p.tensor.has_grad()) continue;
      for (double& g : p.tensor.mutable_grad()) g *= factor;
    }
  }
  return norm;
}

AdamW::AdamW(ParamStore& store, const OptimizerConfig& config, double lr, double crf_lr)
    : store_(store), config_(config), lr_(lr), crf_lr_(crf_lr) {
  for (const Param& p : store_.entries()) {
    m_.emplace_back(p.tensor.size(), 0.0);
    v_.emplace_back(p.tensor.size(), 0.0);
  }
}

void AdamW::step(double factor) {
  ++steps_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  double c1 = 1.0;
  double c2 = 1.0;
  if (config_.bias_correction) {
    c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
    c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  }
  std::vector<Param>& params = store_.entries();
  for (std::size_t i = 0; i < params.size(); ++i) {
    Param& p = params[i];
    // Parameters outside this step's graph keep their state untouched.
    if (!p.tensor.has_grad()) continue;
    const double lr = (p.group == ParamGroup::kCrf ? crf_lr_ : lr_) * factor;
    const double decay = p.decay ? config_.weight_decay : 0.0;
    std::span<double> w = p.tensor.mutable_values();
    std::span<const double> g = p.tensor.grad();
    std::vector<double>& m = m_[i];
    std::vector<double>& v = v_[i];
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = b1 * m[k] + (1.0 - b1) * g[k];
      v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
      const double update = (m[k] / c1) / (std::sqrt(v[k] / c2) + config_.epsilon);
      w[k] -= lr * (update + decay * w[k]);
    }
  }
}

void TeacherEnsemble::add(std::unique_ptr<MultiTaskModel> teacher) {
  const std::vector<Task> tasks = teacher->spec().tasks();
  if (tasks.size() != 1) {
    throw ContractError("a teacher must be a single-task model");
  }
  teacher->params().set_trainable(false);
  teachers_[tasks.front()] = std::move(teacher);
}

std::vector<SoftTargets> TeacherEnsemble::targets(const TaskDataset& dataset) const {
  const MultiTaskModel& teacher = get(dataset.task);
  std::vector<SoftTargets> out;
  out.reserve(dataset.size());
  for (const Example& ex : dataset.examples) out.push_back(teacher.soft_targets(ex));
  return out;
}

std::vector<EpochRecord> train_joint(MultiTaskModel& model,
                                     const std::vector<TaskDataset>& datasets,
                                     const TeacherEnsemble* teachers,
                                     const TrainOptions& options) {
  if (datasets.empty()) throw ContractError("training needs at least one dataset");
  if (options.epochs == 0) throw ContractError("training needs at least one epoch");
  std::vector<std::size_t> sizes;
  for (const TaskDataset& d : datasets) {
    if (!model.has_task(d.task)) {
      throw ContractError("model has no " + task_name(d.task) + " head");
    }
    sizes.push_back(d.size());
  }
  const std::size_t epoch_steps = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  const std::size_t total = epoch_steps * options.epochs;

  std::vector<std::vector<SoftTargets>> soft(datasets.size());
  if (teachers != nullptr) {
    for (std::size_t k = 0; k < datasets.size(); ++k) {
      if (teachers->has(datasets[k].task)) soft[k] = teachers->targets(datasets[k]);
    }
  }

  // Independent streams, so dropout draws do not perturb task order.
  std::mt19937_64 seeder(options.seed);
  std::mt19937_64 task_rng(seeder());
  std::mt19937_64 order_rng(seeder());
  std::mt19937_64 dropout_rng(seeder());

  TaskSampler sampler(sizes);
  std::vector<std::vector<std::size_t>> order(datasets.size());
  std::vector<std::size_t> cursor(datasets.size(), 0);
  for (std::size_t k = 0; k < datasets.size(); ++k) {
    order[k].resize(sizes[k]);
    std::iota(order[k].begin(), order[k].end(), std::size_t{0});
    std::shuffle(order[k].begin(), order[k].end(), order_rng);
  }

  ParamStore& store = model.params();
  AdamW optimizer(store, options.optimizer, options.lr, options.optimizer.lr_crf);
  const ForwardContext ctx{true, &dropout_rng};
  std::vector<EpochRecord> history;
  std::map<Task, std::pair<double, std::size_t>> running;

  for (std::size_t step = 0; step < total; ++step) {
    const std::size_t k = sampler.sample(task_rng);
    if (cursor[k] == sizes[k]) {
      std::shuffle(order[k].begin(), order[k].end(), order_rng);
      cursor[k] = 0;
    }
    const std::size_t index = order[k][cursor[k]++];
    const Example& ex = datasets[k].examples[index];
    const SoftTargets* teacher = soft[k].empty() ? nullptr : &soft[k][index];
    const double lambda = teacher == nullptr ? 1.0 : lambda_at({total, step});

    const Tensor loss = model.loss(ex, teacher, lambda, ctx);
    const double value = loss.item();
    if (!std::isfinite(value)) {
      std::ostringstream os;
      os << "training diverged: loss " << value << " at step " << step << " ("
         << task_name(ex.task) << " example " << index << ", lambda " << lambda << ")";
      throw TrainingError(os.str());
    }
    store.clear_grad();
    backward(loss);
    clip_gradients(store.entries(), options.optimizer.grad_clip);
    optimizer.step(lr_at(step + 1, 1.0, total, options.optimizer.warmup_proportion));

    auto& [loss_sum, count] = running[ex.task];
    loss_sum += value;
    ++count;
    if ((step + 1) % epoch_steps == 0) {
      EpochRecord record;
      record.epoch = (step + 1) / epoch_steps;
      record.steps = step + 1;
      record.lambda = teachers == nullptr ? 1.0 : lambda_at({total, step + 1});
      for (const auto& [task, acc] : running) {
        record.loss[task] = acc.first / static_cast<double>(acc.second);
      }
      running.clear();
      if (options.on_epoch) options.on_epoch(record);
      history.push_back(std::move(record));
    }
  }
  store.clear_grad();
  return history;
}

std::vector<EpochRecord> train_single(MultiTaskModel& model, const TaskDataset& dataset,
                                      const TrainOptions& options) {
  return train_joint(model, {dataset}, nullptr, options);
}

}  // namespace nltp
