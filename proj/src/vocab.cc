#include "nltp/vocab.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "nltp/encoder.h"
#include "nltp/text.h"

namespace nltp {
namespace {

const std::vector<std::string> kSpecials = {"[PAD]", "[UNK]", "[CLS]", "[SEP]"};

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

void write_lines(const std::filesystem::path& path,
                 const std::vector<std::string>& lines) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  for (const std::string& l : lines) os << l << '\n';
}

std::vector<std::string> bio_inventory(const std::set<std::string>& types,
                                       std::vector<std::string> prefix) {
  for (const std::string& t : types) {
    prefix.push_back("B-" + t);
    prefix.push_back("I-" + t);
  }
  return prefix;
}

}  // namespace

Vocabulary::Vocabulary() : tokens_(kSpecials) {
  for (std::size_t i = 0; i < kSpecials.size(); ++i) index_[kSpecials[i]] = static_cast<int>(i);
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  Vocabulary v;
  for (std::string& t : tokens) {
    if (v.index_.contains(t)) continue;
    v.index_[t] = static_cast<int>(v.tokens_.size());
    v.tokens_.push_back(std::move(t));
  }
  return v;
}

Vocabulary Vocabulary::build(const std::vector<std::vector<AnnotatedSentence>>& corpora,
                             std::size_t min_count) {
  if (corpora.empty()) throw ContractError("build_vocab needs at least one corpus");
  std::map<std::string, std::size_t> counts;
  for (const auto& corpus : corpora) {
    for (const AnnotatedSentence& s : corpus) {
      for (const std::string& ch : s.chars) {
        if (!is_space_character(ch)) ++counts[ch];
      }
    }
  }
  std::vector<std::pair<std::string, std::size_t>> entries(counts.begin(), counts.end());
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return code_point(a.first) < code_point(b.first);
  });
  std::vector<std::string> tokens;
  for (auto& [ch, count] : entries) {
    if (count >= min_count) tokens.push_back(ch);
  }
  return from_tokens(std::move(tokens));
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::vector<std::string> lines = read_lines(path);
  if (lines.size() < kSpecials.size() ||
      !std::equal(kSpecials.begin(), kSpecials.end(), lines.begin())) {
    throw std::runtime_error(path.string() +
                             ": vocabulary must start with [PAD], [UNK], [CLS], [SEP]");
  }
  return from_tokens({lines.begin() + static_cast<std::ptrdiff_t>(kSpecials.size()), lines.end()});
}

int Vocabulary::id(const std::string& ch) const {
  auto it = index_.find(ch);
  return it == index_.end() ? kUnkId : it->second;
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& chars) const {
  std::vector<int> ids;
  ids.reserve(chars.size());
  for (const std::string& ch : chars) ids.push_back(id(ch));
  return ids;
}

std::string Vocabulary::serialize() const {
  std::ostringstream os;
  for (const std::string& t : tokens_) os << t << '\n';
  return os.str();
}

void Vocabulary::save(const std::filesystem::path& path) const {
  write_lines(path, tokens_);
}

LabelSet::LabelSet(std::vector<std::string> names) : names_(std::move(names)) {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (!index_.emplace(names_[i], static_cast<int>(i)).second) {
      throw ContractError("duplicate label '" + names_[i] + "'");
    }
  }
}

LabelSet LabelSet::load(const std::filesystem::path& path) {
  std::vector<std::string> lines = read_lines(path);
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return LabelSet(std::move(lines));
}

void LabelSet::save(const std::filesystem::path& path) const {
  write_lines(path, names_);
}

int LabelSet::id(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown label '" + name + "'");
  return it->second;
}

LabelSet derive_labels(Task task, const std::vector<AnnotatedSentence>& corpus) {
  std::set<std::string> seen;
  switch (task) {
    case Task::kCws:
      return LabelSet({"B", "M", "E", "S"});
    case Task::kPos:
      for (const auto& s : corpus)
        if (s.pos) seen.insert(s.pos->begin(), s.pos->end());
      return LabelSet({seen.begin(), seen.end()});
    case Task::kNer:
      for (const auto& s : corpus)
        if (s.entities)
          for (const Entity& e : *s.entities) seen.insert(e.type);
      return LabelSet(bio_inventory(seen, {"O"}));
    case Task::kDep:
      for (const auto& s : corpus)
        if (s.dep) seen.insert(s.dep->labels.begin(), s.dep->labels.end());
      return LabelSet({seen.begin(), seen.end()});
    case Task::kSdp:
      for (const auto& s : corpus)
        if (s.sdp)
          for (const SemanticEdge& e : s.sdp->edges) seen.insert(e.relation);
      return LabelSet({seen.begin(), seen.end()});
    case Task::kSrl:
      for (const auto& s : corpus)
        if (s.srl)
          for (const SrlFrame& f : *s.srl)
            for (const SrlArgument& a : f.arguments) seen.insert(a.role);
      seen.erase("V");
      return LabelSet(bio_inventory(seen, {"O", "B-V"}));
  }
  return {};
}

}  // namespace nltp
