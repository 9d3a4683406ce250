#include "nltp/config.h"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace nltp {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// Collects violations instead of stopping at the first one.
class Reader {
 public:
  explicit Reader(std::vector<std::string>& errors) : errors_(errors) {}

  void check_keys(const json& obj, const std::string& path,
                  const std::set<std::string>& allowed) {
    for (const auto& [key, value] : obj.items()) {
      if (!allowed.contains(key)) errors_.push_back(join_path(path, key) + ": unknown key");
    }
  }

  bool object(const json& parent, const std::string& path, const std::string& key,
              const json*& out) {
    out = nullptr;
    if (!parent.contains(key)) return false;
    const json& v = parent.at(key);
    if (!v.is_object()) {
      errors_.push_back(join_path(path, key) + ": expected an object");
      return false;
    }
    out = &v;
    return true;
  }

  void number(const json& obj, const std::string& path, const std::string& key,
              double& target, double lo, double hi, bool lo_open, bool hi_open) {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    const std::string where = join_path(path, key);
    if (!v.is_number()) {
      errors_.push_back(where + ": expected a number");
      return;
    }
    const double x = v.get<double>();
    const bool below = lo_open ? !(x > lo) : !(x >= lo);
    const bool above = hi_open ? !(x < hi) : !(x <= hi);
    if (below || above) {
      std::ostringstream os;
      os << where << ": must lie in " << (lo_open ? '(' : '[') << lo << ", " << hi
         << (hi_open ? ')' : ']') << " (got " << v.dump() << ")";
      errors_.push_back(os.str());
      return;
    }
    target = x;
  }

  void positive(const json& obj, const std::string& path, const std::string& key,
                double& target) {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    if (v.is_number() && !(v.get<double>() > 0.0)) {
      errors_.push_back(join_path(path, key) + ": must be positive (got " + v.dump() + ")");
      return;
    }
    number(obj, path, key, target, 0.0, 1e300, true, false);
  }

  template <typename Int>
  void integer(const json& obj, const std::string& path, const std::string& key,
               Int& target, long long lo) {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    const std::string where = join_path(path, key);
    if (!v.is_number_integer()) {
      errors_.push_back(where + ": expected an integer");
      return;
    }
    const long long x = v.get<long long>();
    if (x < lo) {
      errors_.push_back(where + ": must be at least " + std::to_string(lo) + " (got " +
                        std::to_string(x) + ")");
      return;
    }
    target = static_cast<Int>(x);
  }

  void boolean(const json& obj, const std::string& path, const std::string& key,
               bool& target) {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    if (!v.is_boolean()) {
      errors_.push_back(join_path(path, key) + ": expected true or false");
      return;
    }
    target = v.get<bool>();
  }

  bool string(const json& obj, const std::string& path, const std::string& key,
              std::string& target) {
    if (!obj.contains(key)) return false;
    const json& v = obj.at(key);
    if (!v.is_string() || v.get<std::string>().empty()) {
      errors_.push_back(join_path(path, key) + ": expected a non-empty string");
      return false;
    }
    target = v.get<std::string>();
    return true;
  }

  void fail(const std::string& message) { errors_.push_back(message); }

  static std::string join_path(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

 private:
  std::vector<std::string>& errors_;
};

std::string violation_summary(const std::vector<std::string>& violations) {
  std::string out = "invalid configuration:";
  for (const std::string& v : violations) out += "\n  " + v;
  return out;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> violations)
    : std::runtime_error(violation_summary(violations)),
      violations_(std::move(violations)) {}

std::filesystem::path PipelineConfig::resolve(const std::string& path) const {
  std::filesystem::path p(path);
  if (p.is_absolute() || base_dir.empty()) return p;
  return base_dir / p;
}

const TaskConfig* PipelineConfig::find_task(Task task) const {
  for (const TaskConfig& t : tasks) {
    if (t.task == task) return &t;
  }
  return nullptr;
}

PipelineConfig parse_config(const std::string& json_text,
                            const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("malformed JSON: ") + e.what()});
  }
  if (!root.is_object()) throw ConfigError({"top level: expected an object"});

  PipelineConfig c;
  c.base_dir = base_dir;
  std::vector<std::string> errors;
  Reader r(errors);
  r.check_keys(root, "", {"seed", "encoder", "heads", "optimizer", "training", "vocab",
                          "tasks", "output_dir", "teachers_dir"});
  r.integer(root, "", "seed", c.seed, 0);
  r.string(root, "", "output_dir", c.output_dir);
  r.string(root, "", "teachers_dir", c.teachers_dir);

  const json* section = nullptr;
  if (r.object(root, "", "encoder", section)) {
    const json& e = *section;
    r.check_keys(e, "encoder", {"width", "layers", "heads", "ffn_width", "max_length", "dropout"});
    r.integer(e, "encoder", "width", c.encoder.width, 1);
    r.integer(e, "encoder", "layers", c.encoder.layers, 0);
    r.integer(e, "encoder", "heads", c.encoder.heads, 1);
    r.integer(e, "encoder", "ffn_width", c.encoder.ffn_width, 1);
    r.integer(e, "encoder", "max_length", c.encoder.max_length, 3);
    r.number(e, "encoder", "dropout", c.encoder.dropout, 0.0, 1.0, false, true);
  }
  if (c.encoder.heads > 0 && c.encoder.width % c.encoder.heads != 0) {
    r.fail("encoder.heads: must divide encoder.width (" + std::to_string(c.encoder.width) +
           " by " + std::to_string(c.encoder.heads) + ")");
  }
  if (r.object(root, "", "heads", section)) {
    const json& h = *section;
    r.check_keys(h, "heads", {"mlp_width", "ner_layers", "single_root"});
    r.integer(h, "heads", "mlp_width", c.heads.mlp_width, 1);
    r.integer(h, "heads", "ner_layers", c.heads.ner_layers, 0);
    r.boolean(h, "heads", "single_root", c.heads.single_root);
  }
  if (r.object(root, "", "optimizer", section)) {
    const json& o = *section;
    const std::string p = "optimizer";
    r.check_keys(o, p, {"lr_teacher", "lr_student", "lr_crf", "grad_clip", "warmup_proportion",
                        "beta1", "beta2", "epsilon", "weight_decay", "bias_correction"});
    r.positive(o, p, "lr_teacher", c.optimizer.lr_teacher);
    r.positive(o, p, "lr_student", c.optimizer.lr_student);
    r.positive(o, p, "lr_crf", c.optimizer.lr_crf);
    r.positive(o, p, "grad_clip", c.optimizer.grad_clip);
    r.number(o, p, "warmup_proportion", c.optimizer.warmup_proportion, 0.0, 1.0, true, true);
    r.number(o, p, "beta1", c.optimizer.beta1, 0.0, 1.0, false, true);
    r.number(o, p, "beta2", c.optimizer.beta2, 0.0, 1.0, false, true);
    r.positive(o, p, "epsilon", c.optimizer.epsilon);
    r.number(o, p, "weight_decay", c.optimizer.weight_decay, 0.0, 1.0, false, false);
    r.boolean(o, p, "bias_correction", c.optimizer.bias_correction);
  }
  if (r.object(root, "", "training", section)) {
    const json& t = *section;
    r.check_keys(t, "training", {"teacher_epochs", "student_epochs"});
    r.integer(t, "training", "teacher_epochs", c.training.teacher_epochs, 1);
    r.integer(t, "training", "student_epochs", c.training.student_epochs, 1);
  }
  if (r.object(root, "", "vocab", section)) {
    r.check_keys(*section, "vocab", {"min_count"});
    r.integer(*section, "vocab", "min_count", c.min_count, 1);
  }

  if (!root.contains("tasks")) {
    r.fail("tasks: required key is missing");
  } else if (!root.at("tasks").is_array() || root.at("tasks").empty()) {
    r.fail("tasks: expected a non-empty array");
  } else {
    std::set<Task> seen;
    const json& tasks = root.at("tasks");
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      const std::string p = "tasks[" + std::to_string(i) + "]";
      const json& t = tasks[i];
      if (!t.is_object()) {
        r.fail(p + ": expected an object");
        continue;
      }
      r.check_keys(t, p, {"name", "train", "format", "dev", "labels"});
      TaskConfig tc;
      std::string name;
      if (!t.contains("name")) {
        r.fail(p + ".name: required key is missing");
      } else if (r.string(t, p, "name", name)) {
        try {
          tc.task = parse_task(name);
          if (!seen.insert(tc.task).second) r.fail(p + ".name: task '" + name + "' listed twice");
        } catch (const std::invalid_argument& e) {
          r.fail(p + ".name: " + e.what());
        }
      }
      if (!t.contains("train")) r.fail(p + ".train: required key is missing");
      r.string(t, p, "train", tc.train);
      tc.format = default_format(tc.task);
      std::string format;
      if (r.string(t, p, "format", format)) {
        try {
          tc.format = parse_format(format);
        } catch (const std::invalid_argument& e) {
          r.fail(p + ".format: " + e.what());
        }
      }
      std::string dev;
      if (r.string(t, p, "dev", dev)) tc.dev = dev;
      if (t.contains("labels")) {
        const json& labels = t.at("labels");
        if (!labels.is_array() || labels.empty()) {
          r.fail(p + ".labels: expected a non-empty array of strings");
        } else {
          for (const json& l : labels) {
            if (!l.is_string()) {
              r.fail(p + ".labels: expected a non-empty array of strings");
              break;
            }
            tc.labels.push_back(l.get<std::string>());
          }
        }
      }
      c.tasks.push_back(std::move(tc));
    }
  }
  if (!errors.empty()) throw ConfigError(std::move(errors));
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({path.string() + ": cannot open file"});
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path.parent_path());
}

std::string config_to_json(const PipelineConfig& c) {
  ordered_json root;
  root["seed"] = c.seed;
  root["encoder"] = {{"width", c.encoder.width},
                     {"layers", c.encoder.layers},
                     {"heads", c.encoder.heads},
                     {"ffn_width", c.encoder.ffn_width},
                     {"max_length", c.encoder.max_length},
                     {"dropout", c.encoder.dropout}};
  root["heads"] = {{"mlp_width", c.heads.mlp_width},
                   {"ner_layers", c.heads.ner_layers},
                   {"single_root", c.heads.single_root}};
  const OptimizerConfig& o = c.optimizer;
  root["optimizer"] = {{"lr_teacher", o.lr_teacher},
                       {"lr_student", o.lr_student},
                       {"lr_crf", o.lr_crf},
                       {"grad_clip", o.grad_clip},
                       {"warmup_proportion", o.warmup_proportion},
                       {"beta1", o.beta1},
                       {"beta2", o.beta2},
                       {"epsilon", o.epsilon},
                       {"weight_decay", o.weight_decay},
                       {"bias_correction", o.bias_correction}};
  root["training"] = {{"teacher_epochs", c.training.teacher_epochs},
                      {"student_epochs", c.training.student_epochs}};
  root["vocab"] = {{"min_count", c.min_count}};
  ordered_json tasks = ordered_json::array();
  for (const TaskConfig& t : c.tasks) {
    ordered_json entry;
    entry["name"] = task_name(t.task);
    entry["train"] = t.train;
    entry["format"] = format_name(t.format);
    if (t.dev) entry["dev"] = *t.dev;
    if (!t.labels.empty()) entry["labels"] = t.labels;
    tasks.push_back(std::move(entry));
  }
  root["tasks"] = std::move(tasks);
  root["output_dir"] = c.output_dir;
  root["teachers_dir"] = c.teachers_dir;
  return root.dump(2) + "\n";
}

void save_config(const PipelineConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << config_to_json(config);
}

}  // namespace nltp
