#include "nltp/pipeline.h"

#include <cstdlib>
#include <iostream>
#include <optional>

#include "json.hpp"
#include "nltp/annotation_io.h"
#include "nltp/corpus.h"
#include "nltp/text.h"

namespace nltp {
namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::optional<LogLevel>& current_level() {
  static std::optional<LogLevel> level;
  return level;
}

bool word_level(Task task) {
  return task == Task::kPos || task == Task::kDep || task == Task::kSdp || task == Task::kSrl;
}

std::string epoch_line(const EpochRecord& r,
                       const std::map<Task, MetricReport>& dev) {
  ordered_json j;
  j["epoch"] = r.epoch;
  j["steps"] = r.steps;
  j["lambda"] = r.lambda;
  ordered_json loss = ordered_json::object();
  for (const auto& [task, value] : r.loss) loss[task_name(task)] = value;
  j["loss"] = std::move(loss);
  if (!dev.empty()) {
    ordered_json d = ordered_json::object();
    for (const auto& [task, report] : dev) {
      ordered_json m = ordered_json::object();
      for (const auto& [name, value] : report) m[name] = value;
      d[task_name(task)] = std::move(m);
    }
    j["dev"] = std::move(d);
  }
  return j.dump();
}

std::string loss_summary(const EpochRecord& r) {
  std::string out = "epoch " + std::to_string(r.epoch) + " loss";
  for (const auto& [task, value] : r.loss) {
    out += " " + task_name(task) + "=" + std::to_string(value);
  }
  return out;
}

TrainedModel run(const PipelineConfig& config, const Corpora& corpora,
                 const std::vector<Task>& tasks, const TeacherEnsemble* teachers, double lr,
                 std::size_t epochs) {
  TrainedModel result;
  result.model = std::make_unique<MultiTaskModel>(make_spec(config, corpora, tasks));
  std::vector<TaskDataset> datasets;
  for (Task t : tasks) datasets.push_back(corpora.dataset(t));

  TrainOptions options;
  options.optimizer = config.optimizer;
  options.lr = lr;
  options.epochs = epochs;
  options.seed = config.seed;
  const MultiTaskModel& model = *result.model;
  options.on_epoch = [&](const EpochRecord& r) {
    std::map<Task, MetricReport> dev;
    for (Task t : tasks) {
      auto it = corpora.dev.find(t);
      if (it != corpora.dev.end()) dev[t] = evaluate_model(model, corpora.vocab, t, it->second);
    }
    log_message(LogLevel::kInfo, loss_summary(r));
    result.metrics.push_back(epoch_line(r, dev));
  };
  train_joint(*result.model, datasets, teachers, options);
  return result;
}

}  // namespace

LogLevel log_level_from_env() {
  const char* value = std::getenv("NLTP_LOG");
  if (value == nullptr) return LogLevel::kInfo;
  const std::string v(value);
  if (v == "quiet") return LogLevel::kQuiet;
  if (v == "debug") return LogLevel::kDebug;
  return LogLevel::kInfo;
}

void set_log_level(LogLevel level) { current_level() = level; }

void log_message(LogLevel level, const std::string& message) {
  if (!current_level()) current_level() = log_level_from_env();
  if (level == LogLevel::kQuiet || level > *current_level()) return;
  std::cerr << "[nltp] " << message << '\n';
}

TrainMode parse_train_mode(const std::string& text) {
  TrainMode mode;
  if (text == "joint") {
    mode.kind = TrainMode::kJoint;
  } else if (text == "distill") {
    mode.kind = TrainMode::kDistill;
  } else if (text.starts_with("single:")) {
    mode.kind = TrainMode::kSingle;
    mode.task = parse_task(text.substr(7));
  } else {
    throw std::invalid_argument("unknown mode '" + text +
                                "' (expected single:<task>, joint or distill)");
  }
  return mode;
}

const TaskDataset& Corpora::dataset(Task task) const {
  for (const TaskDataset& d : train) {
    if (d.task == task) return d;
  }
  throw ContractError("no training data for " + task_name(task));
}

Corpora prepare_corpora(const PipelineConfig& config) {
  if (config.tasks.empty()) throw ContractError("configuration lists no tasks");
  std::vector<std::vector<AnnotatedSentence>> raw;
  for (const TaskConfig& t : config.tasks) {
    raw.push_back(read_corpus(config.resolve(t.train), t.format));
    log_message(LogLevel::kDebug, task_name(t.task) + ": read " +
                                      std::to_string(raw.back().size()) + " sentences");
  }
  Corpora c;
  c.vocab = Vocabulary::build(raw, config.min_count);
  for (std::size_t i = 0; i < config.tasks.size(); ++i) {
    const TaskConfig& t = config.tasks[i];
    LabelSet labels = t.labels.empty() ? derive_labels(t.task, raw[i]) : LabelSet(t.labels);
    c.train.push_back(make_dataset(t.task, std::move(raw[i]), c.vocab, std::move(labels)));
    if (t.dev) c.dev[t.task] = read_corpus(config.resolve(*t.dev), t.format);
  }
  return c;
}

ModelSpec make_spec(const PipelineConfig& config, const Corpora& corpora,
                    const std::vector<Task>& tasks) {
  ModelSpec spec;
  spec.encoder = config.encoder;
  spec.encoder.vocab_size = corpora.vocab.size();
  spec.encoder.seed = config.seed;
  spec.heads = config.heads;
  for (Task t : tasks) spec.labels[t] = corpora.dataset(t).labels;
  return spec;
}

TrainedModel train_teacher(const PipelineConfig& config, const Corpora& corpora, Task task) {
  return run(config, corpora, {task}, nullptr, config.optimizer.lr_teacher,
             config.training.teacher_epochs);
}

TrainedModel train_student(const PipelineConfig& config, const Corpora& corpora,
                           const TeacherEnsemble* teachers) {
  std::vector<Task> tasks;
  for (const TaskDataset& d : corpora.train) tasks.push_back(d.task);
  return run(config, corpora, tasks, teachers, config.optimizer.lr_student,
             config.training.student_epochs);
}

TeacherEnsemble load_teachers(const PipelineConfig& config, const Corpora& corpora) {
  const fs::path root = config.resolve(config.teachers_dir);
  std::vector<std::string> missing;
  for (const TaskConfig& t : config.tasks) {
    if (!fs::exists(root / task_name(t.task) / "model.json")) missing.push_back(task_name(t.task));
  }
  if (!missing.empty()) {
    throw ModelError("distillation needs a teacher checkpoint for every task; missing: " +
                     join(missing, ", ") + " (looked in " + root.string() + ")");
  }
  TeacherEnsemble ensemble;
  for (const TaskConfig& t : config.tasks) {
    const fs::path dir = root / task_name(t.task);
    Checkpoint c = load_checkpoint(dir);
    if (c.vocab.tokens() != corpora.vocab.tokens()) {
      throw ModelError(dir.string() + ": teacher vocabulary differs from the training corpora");
    }
    const std::vector<Task> tasks = c.model->spec().tasks();
    if (tasks.size() != 1 || tasks.front() != t.task) {
      throw ModelError(dir.string() + ": not a single-task " + task_name(t.task) + " model");
    }
    if (!(c.model->spec().labels.at(t.task) == corpora.dataset(t.task).labels)) {
      throw ModelError(dir.string() + ": teacher label inventory differs from the corpus");
    }
    ensemble.add(std::move(c.model));
  }
  return ensemble;
}

fs::path run_training(const PipelineConfig& config, const TrainMode& mode) {
  if (mode.kind == TrainMode::kSingle && config.find_task(mode.task) == nullptr) {
    throw ContractError("task " + task_name(mode.task) + " is not listed in the configuration");
  }
  const Corpora corpora = prepare_corpora(config);
  TrainedModel trained;
  fs::path out;
  switch (mode.kind) {
    case TrainMode::kSingle:
      log_message(LogLevel::kInfo, "training " + task_name(mode.task) + " teacher");
      trained = train_teacher(config, corpora, mode.task);
      out = config.resolve(config.teachers_dir) / task_name(mode.task);
      break;
    case TrainMode::kJoint:
      log_message(LogLevel::kInfo, "training joint model");
      trained = train_student(config, corpora, nullptr);
      out = config.resolve(config.output_dir);
      break;
    case TrainMode::kDistill: {
      const TeacherEnsemble teachers = load_teachers(config, corpora);
      log_message(LogLevel::kInfo, "training distilled joint model");
      trained = train_student(config, corpora, &teachers);
      out = config.resolve(config.output_dir);
      break;
    }
  }
  save_checkpoint(out, *trained.model, corpora.vocab, &config, trained.metrics);
  log_message(LogLevel::kInfo, "wrote " + out.string());
  return out;
}

MetricReport evaluate_model(const MultiTaskModel& model, const Vocabulary& vocab, Task task,
                            const std::vector<AnnotatedSentence>& gold) {
  std::vector<AnnotatedSentence> pred;
  pred.reserve(gold.size());
  for (const AnnotatedSentence& g : gold) {
    const std::optional<std::vector<WordSpan>> words =
        word_level(task) ? g.words : std::optional<std::vector<WordSpan>>();
    pred.push_back(model.annotate(g.chars, vocab, words, task));
  }
  return evaluate(task, gold, pred);
}

OutputFormat parse_output_format(const std::string& name) {
  if (name == "json") return OutputFormat::kJson;
  if (name == "conllu") return OutputFormat::kConllu;
  throw std::invalid_argument("unknown output format '" + name + "' (expected json or conllu)");
}

std::size_t annotate_stream(const Checkpoint& checkpoint, std::istream& in, std::ostream& out,
                            OutputFormat format) {
  const MultiTaskModel& model = *checkpoint.model;
  std::string line;
  std::size_t line_number = 0;
  std::size_t written = 0;
  while (std::getline(in, line)) {
    ++line_number;
    std::vector<std::string> chars;
    try {
      chars = tokenize_characters(line);
    } catch (const std::invalid_argument& e) {
      throw DataError("<input>", line_number, e.what());
    }
    if (chars.empty()) continue;
    AnnotatedSentence s;
    try {
      s = model.annotate(chars, checkpoint.vocab);
    } catch (const LengthError& e) {
      throw DataError("<input>", line_number, e.what());
    }
#ifndef NDEBUG
    const std::vector<std::string> violations =
        structural_violations(s, model.spec().heads.single_root);
    if (!violations.empty()) {
      throw ContractError("annotation of line " + std::to_string(line_number) +
                          " violates: " + join(violations, "; "));
    }
#endif
    if (format == OutputFormat::kJson) {
      out << annotation_to_json(s) << '\n';
    } else {
      if (!s.words) {
        s.words.emplace();
        for (std::size_t i = 0; i < s.length(); ++i) s.words->push_back({i, i + 1});
      }
      format_corpus({s}, out, CorpusFormat::kConllu);
    }
    ++written;
  }
  return written;
}

std::vector<AnnotatedSentence> read_for_eval(const fs::path& path, Task task) {
  if (!fs::exists(path)) throw DataError(path.string(), 0, "file does not exist");
  if (looks_like_json_lines(path)) return read_annotations(path);
  return read_corpus(path, default_format(task));
}

}  // namespace nltp
