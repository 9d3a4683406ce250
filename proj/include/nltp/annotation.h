// Annotation records exchanged between decoders, corpora and the pipeline.
//
// Offsets are half-open. Character offsets index AnnotatedSentence::chars;
// word indices count words from 1 in dependency structures (0 is the root)
// and from 0 in semantic-role frames.

#ifndef NLTP_ANNOTATION_H_
#define NLTP_ANNOTATION_H_

#include <optional>
#include <string>
#include <vector>

#include "nltp/heads.h"

namespace nltp {

struct Entity {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::string type;
  bool operator==(const Entity&) const = default;
};

struct DependencyTree {
  // heads[k] is the head of word k + 1.
  std::vector<int> heads;
  std::vector<std::string> labels;
  bool operator==(const DependencyTree&) const = default;
};

struct SemanticEdge {
  int head = 0;
  int dependent = 0;
  std::string relation;
  double probability = 1.0;
  bool operator==(const SemanticEdge&) const = default;
};

struct DependencyGraph {
  // Sorted by (dependent, head).
  std::vector<SemanticEdge> edges;
  bool operator==(const DependencyGraph&) const = default;
};

struct SrlArgument {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::string role;
  bool operator==(const SrlArgument&) const = default;
};

struct SrlFrame {
  std::size_t predicate = 0;
  std::vector<SrlArgument> arguments;
  bool operator==(const SrlFrame&) const = default;
};

struct AnnotatedSentence {
  // One UTF-8 encoded code point per entry.
  std::vector<std::string> chars;
  std::optional<std::vector<WordSpan>> words;
  std::optional<std::vector<std::string>> pos;
  std::optional<std::vector<Entity>> entities;
  std::optional<DependencyTree> dep;
  std::optional<DependencyGraph> sdp;
  std::optional<std::vector<SrlFrame>> srl;

  std::string text() const;
  std::size_t length() const { return chars.size(); }
  std::string word_text(std::size_t index) const;
  bool operator==(const AnnotatedSentence&) const = default;
};

}  // namespace nltp

#endif  // NLTP_ANNOTATION_H_
