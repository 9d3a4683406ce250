// Single-task and joint multi-task training with teacher annealing.
//
// Each optimizer step draws one task with probability proportional to
// |D|^0.75, takes the next example of that task (per-task shuffled order),
// and applies one clipped AdamW update. With teachers the loss mixes gold
// and teacher cross-entropy by lambda = completed_steps / total_steps, which
// moves from pure teacher matching to pure gold supervision.

#ifndef NLTP_TRAINER_H_
#define NLTP_TRAINER_H_

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "nltp/config.h"
#include "nltp/model.h"

namespace nltp {

struct TaskDataset {
  Task task = Task::kCws;
  std::vector<AnnotatedSentence> sentences;
  std::vector<Example> examples;
  LabelSet labels;

  std::size_t size() const { return examples.size(); }
};

// Converts every sentence; throws ContractError on an empty corpus.
TaskDataset make_dataset(Task task, std::vector<AnnotatedSentence> sentences,
                         const Vocabulary& vocab, LabelSet labels);

class TaskSampler {
 public:
  // Throws ContractError on an empty size list or a zero size.
  explicit TaskSampler(const std::vector<std::size_t>& sizes, double exponent = 0.75);

  const std::vector<double>& probabilities() const { return probabilities_; }
  std::size_t sample(std::mt19937_64& rng);

 private:
  std::vector<double> probabilities_;
  std::discrete_distribution<std::size_t> distribution_;
};

struct DistillationSchedule {
  std::size_t total_steps = 0;
  std::size_t current_step = 0;
};

// current_step / total_steps; ContractError when total_steps is zero or the
// step is past the end.
double lambda_at(const DistillationSchedule& schedule);

// Linear warmup from 0 to `base` over warmup_proportion * total steps, then
// linear decay to 0 at `total`.
double lr_at(std::size_t step, double base, std::size_t total, double warmup_proportion);

// Scales every gradient by max_norm / norm when the global L2 norm exceeds
// max_norm. Returns the norm before clipping.
double clip_gradients(std::vector<Param>& params, double max_norm);
double gradient_norm(const std::vector<Param>& params);

// Adam with decoupled weight decay. The update of parameter p is
//   m = b1 m + (1 - b1) g;  v = b2 v + (1 - b2) g^2
//   p -= lr * (m_hat / (sqrt(v_hat) + eps) + wd * p)      (wd on matrices)
// where m_hat, v_hat are bias-corrected only when requested. CRF parameters
// use their own learning rate.
class AdamW {
 public:
  AdamW(ParamStore& store, const OptimizerConfig& config, double lr, double crf_lr);

  // Applies one update with both learning rates multiplied by `factor`.
  void step(double factor);
  std::size_t steps() const { return steps_; }

 private:
  ParamStore& store_;
  OptimizerConfig config_;
  double lr_;
  double crf_lr_;
  std::size_t steps_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

// Frozen single-task models whose soft targets are computed once per
// training example.
class TeacherEnsemble {
 public:
  void add(std::unique_ptr<MultiTaskModel> teacher);
  bool has(Task task) const { return teachers_.contains(task); }
  const MultiTaskModel& get(Task task) const { return *teachers_.at(task); }

  // Evaluation-mode outputs for every example of the dataset.
  std::vector<SoftTargets> targets(const TaskDataset& dataset) const;

 private:
  std::map<Task, std::unique_ptr<MultiTaskModel>> teachers_;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EpochRecord {
  std::size_t epoch = 0;
  std::size_t steps = 0;
  double lambda = 1.0;
  // Mean loss per task over the steps of the epoch.
  std::map<Task, double> loss;
};

struct TrainOptions {
  OptimizerConfig optimizer;
  double lr = 1e-4;
  std::size_t epochs = 1;
  std::uint64_t seed = 1;
  // Called after each epoch, e.g. to log or evaluate.
  std::function<void(const EpochRecord&)> on_epoch;
};

// An epoch is sum(|D|) steps. Throws TrainingError on a non-finite loss.
std::vector<EpochRecord> train_joint(MultiTaskModel& model,
                                     const std::vector<TaskDataset>& datasets,
                                     const TeacherEnsemble* teachers,
                                     const TrainOptions& options);

// train_joint over one dataset without teachers.
std::vector<EpochRecord> train_single(MultiTaskModel& model, const TaskDataset& dataset,
                                      const TrainOptions& options);

}  // namespace nltp

#endif  // NLTP_TRAINER_H_
