// End-to-end operations behind the command-line tool: preparing corpora,
// training teachers and students, annotating raw text and evaluating.

#ifndef NLTP_PIPELINE_H_
#define NLTP_PIPELINE_H_

#include <filesystem>
#include <istream>
#include <map>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "nltp/checkpoint.h"
#include "nltp/config.h"
#include "nltp/metrics.h"
#include "nltp/model.h"
#include "nltp/trainer.h"
#include "nltp/vocab.h"

namespace nltp {

// Verbosity of progress messages on stderr. Read from the NLTP_LOG
// environment variable: "quiet", "info" (default) or "debug".
enum class LogLevel { kQuiet, kInfo, kDebug };
LogLevel log_level_from_env();
void set_log_level(LogLevel level);
void log_message(LogLevel level, const std::string& message);

struct TrainMode {
  enum Kind { kSingle, kJoint, kDistill };
  Kind kind = kJoint;
  Task task = Task::kCws;  // kSingle only
};

// "single:<task>", "joint" or "distill"; std::invalid_argument otherwise.
TrainMode parse_train_mode(const std::string& text);

// Training data for every task in a config, sharing one vocabulary built
// from all training corpora.
struct Corpora {
  Vocabulary vocab;
  std::vector<TaskDataset> train;
  std::map<Task, std::vector<AnnotatedSentence>> dev;

  const TaskDataset& dataset(Task task) const;
};

Corpora prepare_corpora(const PipelineConfig& config);

// Model spec for `tasks`, all drawing labels from `corpora`.
ModelSpec make_spec(const PipelineConfig& config, const Corpora& corpora,
                    const std::vector<Task>& tasks);

struct TrainedModel {
  std::unique_ptr<MultiTaskModel> model;
  std::vector<std::string> metrics;  // JSON line per epoch
};

TrainedModel train_teacher(const PipelineConfig& config, const Corpora& corpora, Task task);
// Joint student over every task; distils from `teachers` when given.
TrainedModel train_student(const PipelineConfig& config, const Corpora& corpora,
                           const TeacherEnsemble* teachers);

// Loads teachers_dir/<task> for every configured task. Throws ModelError
// naming every task whose checkpoint is absent, or when a teacher was built
// over another vocabulary.
TeacherEnsemble load_teachers(const PipelineConfig& config, const Corpora& corpora);

// Runs one `train` invocation and returns the checkpoint directory written:
// teachers_dir/<task> for single mode, output_dir otherwise.
std::filesystem::path run_training(const PipelineConfig& config, const TrainMode& mode);

// Scores a model on gold sentences. Word-level tasks are fed the gold
// segmentation.
MetricReport evaluate_model(const MultiTaskModel& model, const Vocabulary& vocab, Task task,
                            const std::vector<AnnotatedSentence>& gold);

enum class OutputFormat { kJson, kConllu };
OutputFormat parse_output_format(const std::string& name);

// Annotates each non-blank input line as one sentence; whitespace inside a
// line is dropped. Returns the number of sentences written.
std::size_t annotate_stream(const Checkpoint& checkpoint, std::istream& in, std::ostream& out,
                            OutputFormat format);

// Reads a file for evaluation: JSON Lines annotation output, or the task's
// corpus format.
std::vector<AnnotatedSentence> read_for_eval(const std::filesystem::path& path, Task task);

}  // namespace nltp

#endif  // NLTP_PIPELINE_H_
