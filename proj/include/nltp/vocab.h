// Character vocabulary and per-task label inventories.
//
// Both serialise as one entry per line, line number = id. The vocabulary
// reserves ids 0-3 for [PAD], [UNK], [CLS] and [SEP].

#ifndef NLTP_VOCAB_H_
#define NLTP_VOCAB_H_

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "nltp/annotation.h"

namespace nltp {

class Vocabulary {
 public:
  Vocabulary();

  // Characters seen at least `min_count` times across all corpora, ordered by
  // descending frequency then ascending code point. Whitespace is skipped.
  static Vocabulary build(const std::vector<std::vector<AnnotatedSentence>>& corpora,
                          std::size_t min_count = 1);
  static Vocabulary from_tokens(std::vector<std::string> tokens);
  static Vocabulary load(const std::filesystem::path& path);

  int id(const std::string& ch) const;
  std::vector<int> encode(const std::vector<std::string>& chars) const;
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::string serialize() const;
  void save(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

class LabelSet {
 public:
  LabelSet() = default;
  explicit LabelSet(std::vector<std::string> names);

  static LabelSet load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  // Throws std::out_of_range naming the unknown label.
  int id(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.contains(name); }
  const std::string& name(int id) const { return names_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }
  bool operator==(const LabelSet& other) const { return names_ == other.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> index_;
};

// Inventory implied by a task's gold annotations: fixed B/M/E/S for
// segmentation; "O" then B-/I- pairs per sorted type for entities; "O",
// "B-V" then B-/I- pairs per sorted role for semantic roles; sorted tags
// or relations otherwise.
LabelSet derive_labels(Task task, const std::vector<AnnotatedSentence>& corpus);

}  // namespace nltp

#endif  // NLTP_VOCAB_H_
