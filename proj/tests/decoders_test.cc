#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <random>

#include "nltp/decoders.h"
#include "oracles.h"

using nltp::Tensor;

namespace {

Tensor random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(rows * cols);
  for (double& x : v) x = normal(rng);
  return Tensor::from({rows, cols}, std::move(v));
}

std::vector<std::string> tags(std::initializer_list<const char*> list) {
  return {list.begin(), list.end()};
}

}  // namespace

TEST_CASE("projective tree counts for small n") {
  CHECK(oracle::projective_trees(1).size() == 1);
  CHECK(oracle::projective_trees(2).size() == 3);
  CHECK(oracle::projective_trees(3).size() == 12);
}

TEST_CASE("Eisner finds the best projective tree") {
  std::mt19937_64 rng(1);
  for (std::size_t n = 1; n <= 5; ++n) {
    for (int trial = 0; trial < 40; ++trial) {
      const Tensor arcs = random_matrix(n + 1, n + 1, rng);
      for (bool single_root : {false, true}) {
        const std::vector<int> heads = nltp::eisner(arcs, single_root);
        CHECK(oracle::is_projective_tree(heads));
        if (single_root) CHECK(std::count(heads.begin(), heads.end(), 0) == 1);
        CHECK(nltp::tree_score(arcs, heads) ==
              doctest::Approx(oracle::best_tree_score(arcs, oracle::projective_trees(n),
                                                      single_root)));
      }
    }
  }
}

TEST_CASE("Eisner ignores diagonal scores") {
  Tensor arcs = Tensor::zeros({3, 3});
  arcs.mutable_values()[1 * 3 + 1] = 100.0;
  arcs.mutable_values()[2 * 3 + 2] = 100.0;
  const std::vector<int> heads = nltp::eisner(arcs);
  CHECK(heads[0] != 1);
  CHECK(heads[1] != 2);
}

TEST_CASE("tree violations are described") {
  CHECK_FALSE(nltp::tree_violation({0, 1, 2}).has_value());
  CHECK(nltp::tree_violation({2, 1}).has_value());      // cycle
  CHECK(nltp::tree_violation({0, 4, 0, 0}).has_value());  // 4 -> 2 crosses 0 -> 3
  CHECK_FALSE(nltp::is_projective({3, 4, 0, 3}));
  CHECK(nltp::is_projective({2, 0, 2}));
}

TEST_CASE("Viterbi returns the enumerated best sequence") {
  std::mt19937_64 rng(2);
  nltp::ParamStore store;
  nltp::CrfParams crf = nltp::make_crf(store, "crf", 3);
  for (int trial = 0; trial < 20; ++trial) {
    for (Tensor* t : {&crf.transitions, &crf.start, &crf.end}) {
      std::normal_distribution<double> normal(0.0, 1.0);
      for (double& v : t->mutable_values()) v = normal(rng);
    }
    const Tensor e = random_matrix(4, 3, rng);
    const std::vector<int> path = nltp::viterbi(e, crf);
    CHECK(nltp::sequence_score(e, crf, path) ==
          doctest::Approx(oracle::enumerate_crf(e, crf).best_score));
  }
}

TEST_CASE("SDP decoding thresholds at one half and falls back to the argmax head") {
  // m = 3: root plus two words. Probabilities [h][d].
  const Tensor probs = Tensor::from({3, 3}, {0.0, 0.9, 0.3,
                                             0.0, 0.0, 0.4,
                                             0.0, 0.7, 0.0});
  const Tensor labeled = Tensor::zeros({3, 3, 2});
  const nltp::DependencyGraph g = nltp::sdp_decode(probs, labeled, {"A", "B"});
  // Word 1 keeps both heads above threshold; word 2 has none and takes head 1.
  REQUIRE(g.edges.size() == 3);
  CHECK(g.edges[0].head == 0);
  CHECK(g.edges[0].dependent == 1);
  CHECK(g.edges[1].head == 2);
  CHECK(g.edges[1].dependent == 1);
  CHECK(g.edges[2].head == 1);
  CHECK(g.edges[2].dependent == 2);
  CHECK(g.edges[2].probability == doctest::Approx(0.4));
  CHECK(g.edges[2].relation == "A");
}

TEST_CASE("labels are the per-arc argmax with lowest index on ties") {
  std::vector<double> v(3 * 3 * 3, 0.0);
  v[(0 * 3 + 1) * 3 + 2] = 1.0;  // head 0 -> dep 1 prefers label 2
  const Tensor labeled = Tensor::from({3, 3, 3}, v);
  const nltp::DependencyTree t = nltp::assign_labels({0, 1}, labeled, {"a", "b", "c"});
  CHECK(t.labels == std::vector<std::string>{"c", "a"});
}

TEST_CASE("BMES decoding and repair") {
  using nltp::WordSpan;
  CHECK(nltp::bmes_to_spans(tags({"B", "E", "S"})) ==
        std::vector<WordSpan>{{0, 2}, {2, 3}});
  CHECK(nltp::bmes_to_spans(tags({"B", "M", "E"})) == std::vector<WordSpan>{{0, 3}});
  // E with nothing open opens and closes a word.
  CHECK(nltp::bmes_to_spans(tags({"E", "S"})) == std::vector<WordSpan>{{0, 1}, {1, 2}});
  // B closes an open word; the last word closes at the end.
  CHECK(nltp::bmes_to_spans(tags({"B", "B", "M"})) == std::vector<WordSpan>{{0, 1}, {1, 3}});
  // M with nothing open opens a word.
  CHECK(nltp::bmes_to_spans(tags({"M", "E", "S"})) == std::vector<WordSpan>{{0, 2}, {2, 3}});
  const std::vector<WordSpan> spans = {{0, 1}, {1, 4}, {4, 6}};
  CHECK(nltp::spans_to_bmes(spans) == tags({"S", "B", "M", "E", "B", "E"}));
  CHECK(nltp::bmes_to_spans(nltp::spans_to_bmes(spans)) == spans);
  CHECK(nltp::spans_partition(spans, 6));
  CHECK_FALSE(nltp::spans_partition(spans, 7));
  CHECK_FALSE(nltp::spans_partition({{0, 2}, {1, 3}}, 3));
}

TEST_CASE("any BMES sequence decodes to a partition") {
  std::mt19937_64 rng(3);
  const std::vector<std::string> alphabet = {"B", "M", "E", "S"};
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::string> seq(1 + rng() % 8);
    for (std::string& t : seq) t = alphabet[rng() % 4];
    CHECK(nltp::spans_partition(nltp::bmes_to_spans(seq), seq.size()));
  }
}

TEST_CASE("BIO decoding and repair") {
  using nltp::Entity;
  CHECK(nltp::bio_to_entities(tags({"B-PER", "I-PER", "O", "B-LOC"})) ==
        std::vector<Entity>{{0, 2, "PER"}, {3, 4, "LOC"}});
  // A stray I- starts a new entity; a type change splits.
  CHECK(nltp::bio_to_entities(tags({"O", "I-ORG", "I-LOC"})) ==
        std::vector<Entity>{{1, 2, "ORG"}, {2, 3, "LOC"}});
  CHECK(nltp::entities_to_bio({{1, 3, "PER"}}, 4) == tags({"O", "B-PER", "I-PER", "O"}));
  CHECK(nltp::bio_well_formed(tags({"B-PER", "I-PER", "O"})));
  CHECK_FALSE(nltp::bio_well_formed(tags({"O", "I-PER"})));
}
