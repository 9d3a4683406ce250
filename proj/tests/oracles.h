// Brute-force reference implementations and fixtures shared by the tests.
// Nothing here calls the library routine it is used to check.

#ifndef NLTP_TESTS_ORACLES_H_
#define NLTP_TESTS_ORACLES_H_

#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "nltp/config.h"
#include "nltp/heads.h"
#include "nltp/model.h"
#include "nltp/params.h"
#include "nltp/pipeline.h"
#include "nltp/tensor.h"

namespace oracle {

// Directory holding the bundled corpus and config.
std::filesystem::path toy_dir();
nltp::PipelineConfig toy_config();

struct ToyCorpus {
  nltp::PipelineConfig config;
  nltp::Corpora corpora;
};
ToyCorpus load_toy_corpus();

// Small model over the toy vocabulary and labels, for quick numeric checks.
nltp::ModelSpec small_spec(const ToyCorpus& toy, const std::vector<nltp::Task>& tasks);
void perturb(nltp::ParamStore& store, std::mt19937_64& rng, double stddev);

// Every projective tree over n words in which each word has one head and
// all words reach the root; cached per n.
const std::vector<std::vector<int>>& projective_trees(std::size_t n);
bool is_projective_tree(const std::vector<int>& heads);
double tree_score(const nltp::Tensor& arcs, const std::vector<int>& heads);
double best_tree_score(const nltp::Tensor& arcs, const std::vector<std::vector<int>>& trees,
                       bool single_root);

struct CrfEnumeration {
  std::vector<double> scores;
  double log_partition = 0.0;
  double best_score = 0.0;
};
double sequence_score(const nltp::Tensor& emissions, const nltp::CrfParams& crf,
                      const std::vector<int>& path);
CrfEnumeration enumerate_crf(const nltp::Tensor& emissions, const nltp::CrfParams& crf);

double categorical_ce(const nltp::Tensor& logits, const std::vector<int>& gold);
double soft_ce(const nltp::Tensor& logits, const nltp::Tensor& targets);
double binary_ce(const nltp::Tensor& logits, const nltp::Tensor& targets);

struct GradCheck {
  bool ok = true;
  std::size_t checked = 0;
  double worst_error = 0.0;
  std::string failure;
};

// Central differences with step 1e-4 on `per_head` random entries of head
// parameters plus one entry of an encoder parameter, all with nonzero
// analytic gradient. An entry passes when
//   |analytic - numeric| <= 1e-4 * max(|analytic|, |numeric|, 1e-4).
GradCheck check_gradients(nltp::MultiTaskModel& model,
                          const std::function<nltp::Tensor()>& loss, std::size_t per_head,
                          std::mt19937_64& rng);

// Layers a full six-task annotation must carry.
std::vector<std::string> layer_presence(const nltp::AnnotatedSentence& s);

std::string read_bytes(const std::filesystem::path& path);

}  // namespace oracle

#endif  // NLTP_TESTS_ORACLES_H_
