#include "nltp/checkpoint.h"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace nltp {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string model_json(const ModelSpec& spec) {
  ordered_json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  ordered_json tasks = ordered_json::array();
  for (Task t : spec.tasks()) tasks.push_back(task_name(t));
  j["tasks"] = std::move(tasks);
  const EncoderConfig& e = spec.encoder;
  j["encoder"] = {{"vocab_size", e.vocab_size}, {"width", e.width},
                  {"layers", e.layers},         {"heads", e.heads},
                  {"ffn_width", e.ffn_width},   {"max_length", e.max_length},
                  {"dropout", e.dropout},       {"seed", e.seed}};
  j["heads"] = {{"mlp_width", spec.heads.mlp_width},
                {"ner_layers", spec.heads.ner_layers},
                {"single_root", spec.heads.single_root}};
  return j.dump(2) + "\n";
}

}  // namespace

void save_checkpoint(const fs::path& dir, const MultiTaskModel& model, const Vocabulary& vocab,
                     const PipelineConfig* config, const std::vector<std::string>& metrics) {
  fs::create_directories(dir / "labels");
  write_text(dir / "model.json", model_json(model.spec()));
  model.params().save(dir / "params.bin");
  vocab.save(dir / "vocab.txt");
  for (const auto& [task, labels] : model.spec().labels) {
    labels.save(dir / "labels" / (task_name(task) + ".txt"));
  }
  if (config != nullptr) write_text(dir / "config.json", config_to_json(*config));
  std::string log;
  for (const std::string& line : metrics) log += line + "\n";
  write_text(dir / "metrics.jsonl", log);
}

Checkpoint load_checkpoint(const fs::path& dir) {
  const fs::path meta = dir / "model.json";
  if (!fs::is_directory(dir)) {
    throw ModelError(dir.string() + ": checkpoint directory does not exist");
  }
  std::ifstream in(meta);
  if (!in) throw ModelError(dir.string() + ": not a checkpoint (model.json missing)");
  ModelSpec spec;
  try {
    const json j = json::parse(in);
    const std::string format = j.value("format", "");
    if (format != kCheckpointFormat) {
      throw ModelError(meta.string() + ": format is '" + format + "', expected '" +
                       kCheckpointFormat + "'");
    }
    const int version = j.value("version", -1);
    if (version != kCheckpointVersion) {
      throw ModelError(meta.string() + ": checkpoint version " + std::to_string(version) +
                       ", this build reads version " + std::to_string(kCheckpointVersion));
    }
    const json& e = j.at("encoder");
    spec.encoder.vocab_size = e.at("vocab_size").get<std::size_t>();
    spec.encoder.width = e.at("width").get<std::size_t>();
    spec.encoder.layers = e.at("layers").get<std::size_t>();
    spec.encoder.heads = e.at("heads").get<std::size_t>();
    spec.encoder.ffn_width = e.at("ffn_width").get<std::size_t>();
    spec.encoder.max_length = e.at("max_length").get<std::size_t>();
    spec.encoder.dropout = e.at("dropout").get<double>();
    spec.encoder.seed = e.at("seed").get<std::uint64_t>();
    const json& h = j.at("heads");
    spec.heads.mlp_width = h.at("mlp_width").get<std::size_t>();
    spec.heads.ner_layers = h.at("ner_layers").get<std::size_t>();
    spec.heads.single_root = h.at("single_root").get<bool>();
    for (const json& t : j.at("tasks")) {
      const Task task = parse_task(t.get<std::string>());
      const fs::path labels = dir / "labels" / (task_name(task) + ".txt");
      if (!fs::exists(labels)) throw ModelError(labels.string() + ": label inventory missing");
      spec.labels[task] = LabelSet::load(labels);
    }
  } catch (const json::exception& e) {
    throw ModelError(meta.string() + ": malformed model description: " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ModelError(meta.string() + ": " + e.what());
  }

  Checkpoint c;
  try {
    c.vocab = Vocabulary::load(dir / "vocab.txt");
  } catch (const std::runtime_error& e) {
    throw ModelError(e.what());
  }
  if (c.vocab.size() != spec.encoder.vocab_size) {
    throw ModelError(dir.string() + ": vocab.txt has " + std::to_string(c.vocab.size()) +
                     " entries, model.json declares " +
                     std::to_string(spec.encoder.vocab_size));
  }
  try {
    c.model = std::make_unique<MultiTaskModel>(std::move(spec));
    c.model->params().load(dir / "params.bin");
  } catch (const ContractError& e) {
    throw ModelError(dir.string() + ": " + e.what());
  } catch (const std::runtime_error& e) {
    throw ModelError(e.what());
  }
  return c;
}

}  // namespace nltp
