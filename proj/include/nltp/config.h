// Pipeline configuration, loaded from and saved to JSON.
//
// Relative paths inside a config file resolve against the file's directory.
// The full key list with types, defaults and ranges is in docs/config.md.

#ifndef NLTP_CONFIG_H_
#define NLTP_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nltp/corpus.h"
#include "nltp/encoder.h"
#include "nltp/heads.h"

namespace nltp {

// Adam with decoupled weight decay, in the BERT flavour: epsilon 1e-6 and no
// bias correction unless requested. Learning rates follow a linear warmup
// over `warmup_proportion` of the run, then decay linearly to zero.
struct OptimizerConfig {
  double lr_teacher = 1e-4;
  double lr_student = 1e-4;
  double lr_crf = 1e-3;
  double grad_clip = 1.0;
  double warmup_proportion = 0.02;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-6;
  double weight_decay = 0.01;
  bool bias_correction = false;
};

struct TrainingConfig {
  std::size_t teacher_epochs = 30;
  std::size_t student_epochs = 30;
};

struct TaskConfig {
  Task task = Task::kCws;
  std::string train;
  CorpusFormat format = CorpusFormat::kConllu;
  std::optional<std::string> dev;
  // Empty: derived from the training corpus.
  std::vector<std::string> labels;
};

struct PipelineConfig {
  std::uint64_t seed = 1;
  EncoderConfig encoder;
  HeadConfig heads;
  OptimizerConfig optimizer;
  TrainingConfig training;
  std::size_t min_count = 1;
  std::vector<TaskConfig> tasks;
  std::string output_dir = "model";
  std::string teachers_dir = "teachers";
  // Directory relative paths resolve against; not serialised.
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const std::string& path) const;
  const TaskConfig* find_task(Task task) const;
};

// Lists every schema violation found, one per entry, each prefixed by the
// offending field path.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig parse_config(const std::string& json_text,
                            const std::filesystem::path& base_dir = {});
// Normalised JSON with every default filled in.
std::string config_to_json(const PipelineConfig& config);
void save_config(const PipelineConfig& config, const std::filesystem::path& path);

}  // namespace nltp

#endif  // NLTP_CONFIG_H_
