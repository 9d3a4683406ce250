#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "json.hpp"
#include "nltp/annotation_io.h"
#include "nltp/checkpoint.h"
#include "nltp/metrics.h"
#include "nltp/pipeline.h"
#include "nltp/text.h"
#include "oracles.h"

namespace fs = std::filesystem;
using nltp::Task;

namespace {

const oracle::ToyCorpus& toy() {
  static const oracle::ToyCorpus corpus = oracle::load_toy_corpus();
  return corpus;
}

// Fresh scratch directory, removed on destruction.
struct ScratchDir {
  explicit ScratchDir(const std::string& name)
      : path(fs::temp_directory_path() / ("nltp_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~ScratchDir() { fs::remove_all(path); }
  fs::path path;
};

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

RunResult run_cli(const std::string& args, const fs::path& scratch) {
  const fs::path out = scratch / "stdout.txt", err = scratch / "stderr.txt";
  const std::string cmd = std::string("NLTP_LOG=quiet '") + NLTP_CLI_PATH + "' " + args +
                          " > '" + out.string() + "' 2> '" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = oracle::read_bytes(out);
  r.err = oracle::read_bytes(err);
  return r;
}

nltp::AnnotatedSentence words(std::string text, std::vector<std::pair<int, int>> spans) {
  nltp::AnnotatedSentence s;
  s.chars = nltp::split_utf8(text);
  s.words.emplace();
  for (auto [b, e] : spans) {
    s.words->push_back({static_cast<std::size_t>(b), static_cast<std::size_t>(e)});
  }
  return s;
}

// Untrained six-task model saved as a checkpoint.
fs::path save_small_model(const fs::path& dir) {
  const std::vector<Task> tasks(nltp::kAllTasks.begin(), nltp::kAllTasks.end());
  nltp::MultiTaskModel model(oracle::small_spec(toy(), tasks));
  nltp::save_checkpoint(dir, model, toy().corpora.vocab, &toy().config);
  return dir;
}

// Toy config whose corpus paths are absolute and outputs land in `dir`.
fs::path write_scratch_config(const fs::path& dir) {
  nlohmann::json j = nlohmann::json::parse(oracle::read_bytes(oracle::toy_dir() / "config.json"));
  for (auto& t : j["tasks"]) t["train"] = (oracle::toy_dir() / t["train"].get<std::string>()).string();
  j["training"] = {{"teacher_epochs", 1}, {"student_epochs", 1}};
  j["output_dir"] = (dir / "model").string();
  j["teachers_dir"] = (dir / "teachers").string();
  const fs::path path = dir / "config.json";
  std::ofstream(path) << j.dump(2);
  return path;
}

}  // namespace

TEST_CASE("segmentation F1 counts matching character spans") {
  const auto gold = words("ABCD", {{0, 2}, {2, 4}});
  const auto pred = words("ABCD", {{0, 2}, {2, 3}, {3, 4}});
  const auto r = nltp::evaluate(Task::kCws, {gold}, {pred});
  CHECK(nltp::metric_value(r, "precision") == doctest::Approx(1.0 / 3.0));
  CHECK(nltp::metric_value(r, "recall") == doctest::Approx(0.5));
  CHECK(nltp::metric_value(r, "f1") == doctest::Approx(0.4));
}

TEST_CASE("entity F1 with one of two spans matched is one half") {
  auto gold = words("ABCD", {{0, 4}});
  auto pred = gold;
  gold.entities = std::vector<nltp::Entity>{{0, 1, "PER"}, {2, 4, "LOC"}};
  pred.entities = std::vector<nltp::Entity>{{0, 1, "PER"}, {2, 4, "ORG"}};
  const auto r = nltp::evaluate(Task::kNer, {gold}, {pred});
  CHECK(nltp::metric_value(r, "f1") == doctest::Approx(0.5));
}

TEST_CASE("empty sides score by convention") {
  auto gold = words("AB", {{0, 2}});
  auto pred = gold;
  gold.entities.emplace();
  pred.entities.emplace();
  CHECK(nltp::metric_value(nltp::evaluate(Task::kNer, {gold}, {pred}), "f1") == 1.0);
  gold.entities = std::vector<nltp::Entity>{{0, 1, "PER"}};
  const auto r = nltp::evaluate(Task::kNer, {gold}, {pred});
  CHECK(nltp::metric_value(r, "precision") == 0.0);
  CHECK(nltp::metric_value(r, "recall") == 0.0);
}

TEST_CASE("dependency scores follow words through a different segmentation") {
  auto gold = words("ABC", {{0, 1}, {1, 3}});
  gold.dep = nltp::DependencyTree{{2, 0}, {"SBV", "HED"}};
  auto pred = words("ABC", {{0, 1}, {1, 2}, {2, 3}});
  pred.dep = nltp::DependencyTree{{0, 0, 2}, {"HED", "HED", "VOB"}};
  const auto r = nltp::evaluate(Task::kDep, {gold}, {pred});
  CHECK(nltp::metric_value(r, "uas") == 0.0);
  pred = gold;
  pred.dep->labels = {"VOB", "HED"};
  const auto same = nltp::evaluate(Task::kDep, {gold}, {pred});
  CHECK(nltp::metric_value(same, "uas") == 1.0);
  CHECK(nltp::metric_value(same, "las") == 0.5);
}

TEST_CASE("misaligned corpora are rejected") {
  const auto a = words("AB", {{0, 2}});
  const auto b = words("AC", {{0, 2}});
  CHECK_THROWS_AS(nltp::evaluate(Task::kCws, {a}, {a, a}), nltp::AlignmentError);
  try {
    nltp::evaluate(Task::kCws, {a, a}, {a, b});
    FAIL("expected AlignmentError");
  } catch (const nltp::AlignmentError& e) {
    CHECK(e.index() == 1);
  }
  CHECK_THROWS_AS(nltp::evaluate(Task::kDep, {a}, {a}), nltp::ContractError);
}

TEST_CASE("headline metrics") {
  CHECK(nltp::headline_metric(Task::kPos) == "accuracy");
  CHECK(nltp::headline_metric(Task::kDep) == "las");
  CHECK(nltp::headline_metric(Task::kSdp) == "labeled_f1");
  CHECK(nltp::headline_metric(Task::kSrl) == "f1");
}

TEST_CASE("checkpoints round-trip and annotate identically") {
  ScratchDir dir("checkpoint_test");
  save_small_model(dir.path / "a");
  const nltp::Checkpoint c = nltp::load_checkpoint(dir.path / "a");
  nltp::save_checkpoint(dir.path / "b", *c.model, c.vocab, &toy().config);
  for (const char* f : {"model.json", "params.bin", "vocab.txt", "labels/srl.txt", "config.json"}) {
    CAPTURE(f);
    CHECK(oracle::read_bytes(dir.path / "a" / f) == oracle::read_bytes(dir.path / "b" / f));
  }
  const auto& chars = toy().corpora.dataset(Task::kCws).sentences[4].chars;
  const std::vector<Task> tasks(nltp::kAllTasks.begin(), nltp::kAllTasks.end());
  nltp::MultiTaskModel fresh(oracle::small_spec(toy(), tasks));
  CHECK(c.model->annotate(chars, c.vocab) == fresh.annotate(chars, toy().corpora.vocab));
}

TEST_CASE("broken checkpoints raise ModelError") {
  ScratchDir dir("broken_checkpoint_test");
  CHECK_THROWS_AS(nltp::load_checkpoint(dir.path / "absent"), nltp::ModelError);
  CHECK_THROWS_AS(nltp::load_checkpoint(dir.path), nltp::ModelError);

  const fs::path model = save_small_model(dir.path / "m");
  nlohmann::json meta = nlohmann::json::parse(oracle::read_bytes(model / "model.json"));
  meta["version"] = nltp::kCheckpointVersion + 1;
  std::ofstream(model / "model.json") << meta.dump();
  try {
    nltp::load_checkpoint(model);
    FAIL("expected ModelError");
  } catch (const nltp::ModelError& e) {
    CHECK(std::string(e.what()).find("version") != std::string::npos);
  }

  save_small_model(model);
  std::ofstream(model / "params.bin", std::ios::binary | std::ios::trunc) << "NLTPPRM1";
  CHECK_THROWS_AS(nltp::load_checkpoint(model), nltp::ModelError);

  save_small_model(model);
  fs::remove(model / "labels" / "ner.txt");
  CHECK_THROWS_AS(nltp::load_checkpoint(model), nltp::ModelError);
}

TEST_CASE("train modes parse") {
  CHECK(nltp::parse_train_mode("joint").kind == nltp::TrainMode::kJoint);
  CHECK(nltp::parse_train_mode("distill").kind == nltp::TrainMode::kDistill);
  const nltp::TrainMode m = nltp::parse_train_mode("single:srl");
  CHECK(m.kind == nltp::TrainMode::kSingle);
  CHECK(m.task == Task::kSrl);
  CHECK_THROWS_AS(nltp::parse_train_mode("single:chunk"), std::invalid_argument);
  CHECK_THROWS_AS(nltp::parse_train_mode("teach"), std::invalid_argument);
}

TEST_CASE("corpora share one vocabulary across tasks") {
  const nltp::Corpora& c = toy().corpora;
  CHECK(c.train.size() == 6);
  for (const nltp::TaskDataset& d : c.train) CHECK(d.size() == 100);
  CHECK(c.vocab.id("叫") != nltp::kUnkId);
  CHECK_THROWS_AS(c.dataset(Task::kCws).examples.at(100), std::out_of_range);
}

TEST_CASE("annotate_stream skips blank lines and flags bad input by line") {
  const std::vector<Task> tasks(nltp::kAllTasks.begin(), nltp::kAllTasks.end());
  nltp::Checkpoint c{toy().corpora.vocab,
                     std::make_unique<nltp::MultiTaskModel>(oracle::small_spec(toy(), tasks))};
  std::istringstream in("张三喜欢苹果\n\n  \n李四 看 书\n");
  std::ostringstream out;
  CHECK(nltp::annotate_stream(c, in, out, nltp::OutputFormat::kJson) == 2);
  std::istringstream lines(out.str());
  std::string line;
  std::getline(lines, line);
  CHECK(nltp::annotation_from_json(line).text() == "张三喜欢苹果");
  std::getline(lines, line);
  CHECK(nltp::annotation_from_json(line).text() == "李四看书");

  std::istringstream bad("张三\n\xff\n");
  std::ostringstream sink;
  try {
    nltp::annotate_stream(c, bad, sink, nltp::OutputFormat::kJson);
    FAIL("expected DataError");
  } catch (const nltp::DataError& e) {
    CHECK(e.line() == 2);
  }
  std::istringstream longer(std::string(200 * 3, 'a') + "\n");
  CHECK_THROWS_AS(nltp::annotate_stream(c, longer, sink, nltp::OutputFormat::kJson),
                  nltp::DataError);

  std::istringstream conllu_in("张三喜欢苹果\n");
  std::ostringstream conllu_out;
  nltp::annotate_stream(c, conllu_in, conllu_out, nltp::OutputFormat::kConllu);
  std::istringstream reread(conllu_out.str());
  CHECK(nltp::parse_corpus(reread, nltp::CorpusFormat::kConllu).size() == 1);
}

TEST_CASE("CLI: usage errors exit 1") {
  ScratchDir dir("cli_usage_test");
  CHECK(run_cli("", dir.path).code == 1);
  CHECK(run_cli("frobnicate", dir.path).code == 1);
  CHECK(run_cli("train --config x.json", dir.path).code == 1);
  const fs::path config = write_scratch_config(dir.path);
  CHECK(run_cli("train --config '" + config.string() + "' --mode teach", dir.path).code == 1);
  std::ofstream(dir.path / "bad.json") << R"({"optimizer": {"lr_student": -1}})";
  const RunResult bad = run_cli("train --config '" + (dir.path / "bad.json").string() +
                                    "' --mode joint", dir.path);
  CHECK(bad.code == 1);
  CHECK(bad.err.find("optimizer.lr_student") != std::string::npos);
  CHECK(bad.err.find("tasks") != std::string::npos);
  CHECK(run_cli("eval --task chunk --gold a --pred b", dir.path).code == 1);
}

TEST_CASE("CLI: distillation without teachers names every missing task") {
  ScratchDir dir("cli_distill_test");
  const fs::path config = write_scratch_config(dir.path);
  const RunResult r = run_cli("train --config '" + config.string() + "' --mode distill", dir.path);
  CHECK(r.code == 3);
  for (const char* t : {"cws", "pos", "ner", "dep", "sdp", "srl"}) {
    CAPTURE(t);
    CHECK(r.err.find(t) != std::string::npos);
  }
  CHECK_FALSE(fs::exists(dir.path / "model"));
}

TEST_CASE("CLI: annotate and eval") {
  ScratchDir dir("cli_annotate_test");
  const fs::path model = save_small_model(dir.path / "model");
  std::ofstream(dir.path / "empty.txt").close();
  const RunResult empty = run_cli("annotate --model '" + model.string() + "' --input '" +
                                      (dir.path / "empty.txt").string() + "'",
                                  dir.path);
  CHECK(empty.code == 0);
  CHECK(empty.out.empty());

  std::ofstream(dir.path / "in.txt") << "张三喜欢苹果\n李四在北京看书\n";
  const fs::path pred = dir.path / "pred.jsonl";
  const RunResult ann = run_cli("annotate --model '" + model.string() + "' --input '" +
                                    (dir.path / "in.txt").string() + "' --output '" +
                                    pred.string() + "'",
                                dir.path);
  CHECK(ann.code == 0);
  const auto sentences = nltp::read_annotations(pred);
  REQUIRE(sentences.size() == 2);
  for (const auto& s : sentences) CHECK(oracle::layer_presence(s).empty());

  const RunResult self = run_cli("eval --task dep --gold '" + pred.string() + "' --pred '" +
                                     pred.string() + "'",
                                 dir.path);
  CHECK(self.code == 0);
  CHECK(self.out.find("las\t1.0000") != std::string::npos);

  const fs::path gold = oracle::toy_dir() / "toy.conllu";
  const RunResult misaligned = run_cli("eval --task cws --gold '" + gold.string() + "' --pred '" +
                                           pred.string() + "'",
                                       dir.path);
  CHECK(misaligned.code == 2);

  CHECK(run_cli("annotate --model '" + (dir.path / "nothing").string() + "'", dir.path).code == 3);
  CHECK(run_cli("annotate --model '" + model.string() + "' --format xml", dir.path).code == 1);
  CHECK(run_cli("annotate --model '" + model.string() + "' --input '" +
                    (dir.path / "missing.txt").string() + "'",
                dir.path)
            .code == 2);
}

TEST_CASE("CLI: single-task training writes a teacher checkpoint") {
  ScratchDir dir("cli_train_test");
  const fs::path config = write_scratch_config(dir.path);
  const RunResult r = run_cli("train --config '" + config.string() + "' --mode single:pos", dir.path);
  CHECK(r.code == 0);
  const fs::path out = dir.path / "teachers" / "pos";
  CHECK(fs::exists(out / "params.bin"));
  CHECK(fs::exists(out / "metrics.jsonl"));
  const nltp::Checkpoint c = nltp::load_checkpoint(out);
  CHECK(c.model->spec().tasks() == std::vector<Task>{Task::kPos});
}
