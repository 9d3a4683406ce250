// Command-line entry point.
//
//   nltp train    --config C --mode single:<task>|joint|distill
//   nltp annotate --model D [--input F] [--output O] [--format json|conllu]
//   nltp eval     --task T --gold G --pred P
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 model error.
// NLTP_LOG=quiet|info|debug sets stderr verbosity (default info).

#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "nltp/annotation_io.h"
#include "nltp/config.h"
#include "nltp/corpus.h"
#include "nltp/metrics.h"
#include "nltp/pipeline.h"

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kData = 2;
constexpr int kModel = 3;

int fail(int code, const std::string& message) {
  std::cerr << "nltp: " << message << '\n';
  return code;
}

int train(const std::string& config_path, const std::string& mode_text) {
  nltp::TrainMode mode;
  try {
    mode = nltp::parse_train_mode(mode_text);
  } catch (const std::invalid_argument& e) {
    return fail(kUsage, e.what());
  }
  nltp::PipelineConfig config;
  try {
    config = nltp::load_config(config_path);
  } catch (const nltp::ConfigError& e) {
    return fail(kUsage, e.what());
  }
  nltp::run_training(config, mode);
  return kOk;
}

int annotate(const std::string& model_dir, const std::string& input, const std::string& output,
             const std::string& format_name) {
  nltp::OutputFormat format;
  try {
    format = nltp::parse_output_format(format_name);
  } catch (const std::invalid_argument& e) {
    return fail(kUsage, e.what());
  }
  const nltp::Checkpoint checkpoint = nltp::load_checkpoint(model_dir);
  std::ifstream file;
  if (input != "-") {
    file.open(input, std::ios::binary);
    if (!file) return fail(kData, "cannot open input " + input);
  }
  std::istream& in = input == "-" ? std::cin : file;
  std::ofstream out_file;
  if (output != "-") {
    out_file.open(output, std::ios::binary | std::ios::trunc);
    if (!out_file) return fail(kData, "cannot write " + output);
  }
  std::ostream& out = output == "-" ? std::cout : out_file;
  const std::size_t n = nltp::annotate_stream(checkpoint, in, out, format);
  nltp::log_message(nltp::LogLevel::kDebug, "annotated " + std::to_string(n) + " sentences");
  return kOk;
}

int eval(const std::string& task_text, const std::string& gold_path,
         const std::string& pred_path) {
  nltp::Task task;
  try {
    task = nltp::parse_task(task_text);
  } catch (const std::invalid_argument& e) {
    return fail(kUsage, e.what());
  }
  const auto gold = nltp::read_for_eval(gold_path, task);
  const auto pred = nltp::read_for_eval(pred_path, task);
  const nltp::MetricReport report = nltp::evaluate(task, gold, pred);
  std::cout << std::fixed << std::setprecision(4);
  for (const auto& [name, value] : report) std::cout << name << '\t' << value << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Chinese six-task language analysis: train, annotate, evaluate"};
  app.require_subcommand(1);

  std::string config_path, mode;
  CLI::App* train_cmd = app.add_subcommand("train", "Train teachers or a joint model");
  train_cmd->add_option("--config", config_path, "Pipeline config JSON")->required();
  train_cmd->add_option("--mode", mode, "single:<task>, joint or distill")->required();

  std::string model_dir, input = "-", output = "-", format = "json";
  CLI::App* annotate_cmd = app.add_subcommand("annotate", "Annotate raw text, one sentence per line");
  annotate_cmd->add_option("--model", model_dir, "Checkpoint directory")->required();
  annotate_cmd->add_option("--input", input, "Input text file, - for stdin")->capture_default_str();
  annotate_cmd->add_option("--output", output, "Output file, - for stdout")->capture_default_str();
  annotate_cmd->add_option("--format", format, "json or conllu")->capture_default_str();

  std::string task, gold, pred;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Score predictions against gold");
  eval_cmd->add_option("--task", task, "cws, pos, ner, dep, sdp or srl")->required();
  eval_cmd->add_option("--gold", gold, "Gold corpus or JSON Lines file")->required();
  eval_cmd->add_option("--pred", pred, "Predicted corpus or JSON Lines file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*train_cmd) return train(config_path, mode);
    if (*annotate_cmd) return annotate(model_dir, input, output, format);
    if (*eval_cmd) return eval(task, gold, pred);
  } catch (const nltp::ModelError& e) {
    return fail(kModel, e.what());
  } catch (const nltp::DataError& e) {
    return fail(kData, e.what());
  } catch (const nltp::AlignmentError& e) {
    return fail(kData, e.what());
  } catch (const nltp::TrainingError& e) {
    return fail(kData, e.what());
  } catch (const std::out_of_range& e) {
    return fail(kData, e.what());
  } catch (const std::exception& e) {
    return fail(kData, e.what());
  }
  return kUsage;
}
