// Writes the bundled synthetic corpus: one set of sentences carrying all six
// annotation layers, split across the three corpus formats.
//
//   make_toy_corpus [--sentences N] [--seed S] [--out DIR]

#include <filesystem>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nltp/corpus.h"
#include "nltp/text.h"

namespace {

using nltp::AnnotatedSentence;

struct Word {
  std::string form;
  std::string pos;
  std::string entity;  // empty when the word is not a named entity
};

struct Lexicon {
  std::vector<Word> people = {{"张三", "NR", "PER"}, {"李四", "NR", "PER"},
                              {"王五", "NR", "PER"}, {"小明", "NR", "PER"},
                              {"小红", "NR", "PER"}, {"老赵", "NR", "PER"},
                              {"刘洋", "NR", "PER"}, {"陈静", "NR", "PER"},
                              {"周杰", "NR", "PER"}, {"马丽", "NR", "PER"}};
  std::vector<Word> orgs = {{"新华社", "NT", "ORG"}, {"联合国", "NT", "ORG"},
                            {"南方公司", "NT", "ORG"}, {"北京大学", "NT", "ORG"}};
  std::vector<Word> places = {{"北京", "NS", "LOC"}, {"上海", "NS", "LOC"},
                              {"南京", "NS", "LOC"}, {"天津", "NS", "LOC"},
                              {"广州", "NS", "LOC"}, {"西安", "NS", "LOC"}};
  std::vector<Word> verbs = {{"喜欢", "VV", ""}, {"看", "VV", ""}, {"吃", "VV", ""},
                             {"买", "VV", ""},   {"写", "VV", ""}, {"读", "VV", ""},
                             {"卖", "VV", ""},   {"送", "VV", ""}, {"研究", "VV", ""}};
  std::vector<Word> nouns = {{"苹果", "NN", ""}, {"书", "NN", ""},   {"电影", "NN", ""},
                             {"报纸", "NN", ""}, {"水果", "NN", ""}, {"信", "NN", ""},
                             {"小说", "NN", ""}, {"新闻", "NN", ""}, {"大米", "NN", ""}};
  std::vector<Word> times = {{"今天", "NT", ""}, {"明天", "NT", ""}, {"昨天", "NT", ""},
                             {"上午", "NT", ""}};
};

// One word of a template: lexical item, dependency head (1-based, 0 = root)
// and relation, plus semantic edges as (head, relation) pairs.
struct Slot {
  Word word;
  int head;
  std::string relation;
  std::vector<std::pair<int, std::string>> semantic;
};

struct Frame {
  int predicate;  // 1-based
  std::vector<std::tuple<int, int, std::string>> arguments;  // 1-based inclusive
};

AnnotatedSentence assemble(const std::vector<Slot>& slots, const std::vector<Frame>& frames) {
  AnnotatedSentence s;
  s.words.emplace();
  s.pos.emplace();
  s.entities.emplace();
  s.dep.emplace();
  s.sdp.emplace();
  s.srl.emplace();
  for (std::size_t k = 0; k < slots.size(); ++k) {
    const Slot& slot = slots[k];
    const std::vector<std::string> chars = nltp::split_utf8(slot.word.form);
    const std::size_t begin = s.chars.size();
    s.chars.insert(s.chars.end(), chars.begin(), chars.end());
    s.words->push_back({begin, s.chars.size()});
    s.pos->push_back(slot.word.pos);
    if (!slot.word.entity.empty()) s.entities->push_back({begin, s.chars.size(), slot.word.entity});
    s.dep->heads.push_back(slot.head);
    s.dep->labels.push_back(slot.relation);
    for (const auto& [head, rel] : slot.semantic) {
      s.sdp->edges.push_back({head, static_cast<int>(k + 1), rel, 1.0});
    }
  }
  for (const Frame& f : frames) {
    nltp::SrlFrame frame{static_cast<std::size_t>(f.predicate - 1), {}};
    for (const auto& [first, last, role] : f.arguments) {
      frame.arguments.push_back(
          {static_cast<std::size_t>(first - 1), static_cast<std::size_t>(last), role});
    }
    s.srl->push_back(std::move(frame));
  }
  return s;
}

template <typename T>
const T& pick(const std::vector<T>& items, std::mt19937_64& rng) {
  return items[std::uniform_int_distribution<std::size_t>(0, items.size() - 1)(rng)];
}

const Word kAt{"在", "P", ""};
const Word kCall{"叫", "VV", ""};
const Word kGo{"去", "VV", ""};
const Word kStop{"。", "PU", ""};
const Word kAnd{"和", "CC", ""};

AnnotatedSentence generate(const Lexicon& lex, std::mt19937_64& rng) {
  const Word& agent = std::bernoulli_distribution(0.8)(rng) ? pick(lex.people, rng)
                                                            : pick(lex.orgs, rng);
  const Word& verb = pick(lex.verbs, rng);
  const Word& noun = pick(lex.nouns, rng);
  switch (std::uniform_int_distribution<int>(0, 4)(rng)) {
    case 0:  // agent verb object
      return assemble({{agent, 2, "SBV", {{2, "Agt"}}},
                       {verb, 0, "HED", {{0, "Root"}}},
                       {noun, 2, "VOB", {{2, "Pat"}}},
                       {kStop, 2, "WP", {{2, "mPunc"}}}},
                      {{2, {{1, 1, "A0"}, {3, 3, "A1"}}}});
    case 1:  // time agent verb object
      return assemble({{pick(lex.times, rng), 3, "ADV", {{3, "Time"}}},
                       {agent, 3, "SBV", {{3, "Agt"}}},
                       {verb, 0, "HED", {{0, "Root"}}},
                       {noun, 3, "VOB", {{3, "Pat"}}},
                       {kStop, 3, "WP", {{3, "mPunc"}}}},
                      {{3, {{1, 1, "ARGM-TMP"}, {2, 2, "A0"}, {4, 4, "A1"}}}});
    case 2:  // agent at place verb object
      return assemble({{agent, 4, "SBV", {{4, "Agt"}}},
                       {kAt, 4, "ADV", {{3, "mPrep"}}},
                       {pick(lex.places, rng), 2, "POB", {{4, "Loc"}}},
                       {verb, 0, "HED", {{0, "Root"}}},
                       {noun, 4, "VOB", {{4, "Pat"}}},
                       {kStop, 4, "WP", {{4, "mPunc"}}}},
                      {{4, {{1, 1, "A0"}, {2, 3, "ARGM-LOC"}, {5, 5, "A1"}}}});
    case 3: {  // coordinated agents; the second one has two heads
      const Word& other = pick(lex.people, rng);
      return assemble({{agent, 4, "SBV", {{4, "Agt"}}},
                       {kAnd, 3, "LAD", {{3, "mConj"}}},
                       {other, 1, "COO", {{1, "eCoo"}, {4, "Agt"}}},
                       {verb, 0, "HED", {{0, "Root"}}},
                       {noun, 4, "VOB", {{4, "Pat"}}},
                       {kStop, 4, "WP", {{4, "mPunc"}}}},
                      {{4, {{1, 3, "A0"}, {5, 5, "A1"}}}});
    }
    default: {  // pivot: agent asks someone to go and act; that person has two heads
      const Word& other = pick(lex.people, rng);
      return assemble({{agent, 2, "SBV", {{2, "Agt"}}},
                       {kCall, 0, "HED", {{0, "Root"}}},
                       {other, 2, "DBL", {{2, "Datv"}, {4, "Agt"}, {5, "Agt"}}},
                       {kGo, 2, "VOB", {{2, "eSucc"}}},
                       {verb, 4, "COO", {{4, "eSucc"}}},
                       {noun, 5, "VOB", {{5, "Pat"}}},
                       {kStop, 2, "WP", {{2, "mPunc"}}}},
                      {{2, {{1, 1, "A0"}, {3, 3, "A1"}, {4, 6, "A2"}}},
                       {5, {{3, 3, "A0"}, {6, 6, "A1"}}}});
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generate the synthetic six-layer toy corpus"};
  std::size_t count = 100;
  std::uint64_t seed = 7;
  std::string out = "data/toy";
  app.add_option("--sentences", count, "Number of sentences")->capture_default_str();
  app.add_option("--seed", seed, "Generator seed")->capture_default_str();
  app.add_option("--out", out, "Output directory")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  const Lexicon lexicon;
  std::mt19937_64 rng(seed);
  std::vector<AnnotatedSentence> sentences;
  for (std::size_t i = 0; i < count; ++i) sentences.push_back(generate(lexicon, rng));

  const std::filesystem::path dir(out);
  std::filesystem::create_directories(dir);
  nltp::write_corpus(sentences, dir / "toy.conllu", nltp::CorpusFormat::kConllu);
  nltp::write_corpus(sentences, dir / "toy.ner", nltp::CorpusFormat::kColumnBio);
  nltp::write_corpus(sentences, dir / "toy.srl", nltp::CorpusFormat::kSrlColumns);
  std::cout << "wrote " << sentences.size() << " sentences to " << dir.string() << "\n";
  return 0;
}
