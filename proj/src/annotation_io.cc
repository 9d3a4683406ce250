#include "nltp/annotation_io.h"

#include <algorithm>
#include <fstream>
#include <set>

#include "json.hpp"
#include "nltp/corpus.h"
#include "nltp/decoders.h"
#include "nltp/text.h"

namespace nltp {
namespace {

using ordered_json = nlohmann::ordered_json;
using json = nlohmann::json;

std::string violation(const std::string& layer, const std::string& what) {
  return layer + ": " + what;
}

}  // namespace

std::string annotation_to_json(const AnnotatedSentence& s) {
  ordered_json out;
  out["text"] = s.text();
  if (s.words) {
    ordered_json words = ordered_json::array();
    for (std::size_t i = 0; i < s.words->size(); ++i) words.push_back(s.word_text(i));
    out["words"] = std::move(words);
  }
  if (s.pos) out["pos"] = *s.pos;
  if (s.entities) {
    ordered_json ner = ordered_json::array();
    for (const Entity& e : *s.entities) {
      ner.push_back({{"begin", e.begin}, {"end", e.end}, {"type", e.type}});
    }
    out["ner"] = std::move(ner);
  }
  if (s.dep) {
    ordered_json dep = ordered_json::array();
    for (std::size_t k = 0; k < s.dep->heads.size(); ++k) {
      dep.push_back({{"id", k + 1}, {"head", s.dep->heads[k]}, {"relation", s.dep->labels[k]}});
    }
    out["dep"] = std::move(dep);
  }
  if (s.sdp) {
    ordered_json sdp = ordered_json::array();
    for (const SemanticEdge& e : s.sdp->edges) {
      sdp.push_back({{"head", e.head},
                     {"dependent", e.dependent},
                     {"relation", e.relation},
                     {"probability", e.probability}});
    }
    out["sdp"] = std::move(sdp);
  }
  if (s.srl) {
    ordered_json srl = ordered_json::array();
    for (const SrlFrame& f : *s.srl) {
      ordered_json args = ordered_json::array();
      for (const SrlArgument& a : f.arguments) {
        args.push_back({{"begin", a.begin}, {"end", a.end}, {"role", a.role}});
      }
      srl.push_back({{"predicate", f.predicate}, {"arguments", std::move(args)}});
    }
    out["srl"] = std::move(srl);
  }
  return out.dump(-1, ' ', false, json::error_handler_t::strict);
}

AnnotatedSentence annotation_from_json(const std::string& text, const std::string& source,
                                       std::size_t line) {
  AnnotatedSentence s;
  try {
    const json j = json::parse(text);
    s.chars = split_utf8(j.at("text").get<std::string>());
    if (j.contains("words")) {
      std::vector<WordSpan> spans;
      std::size_t offset = 0;
      std::string spelled;
      for (const json& w : j.at("words")) {
        const std::string word = w.get<std::string>();
        const std::size_t len = split_utf8(word).size();
        if (len == 0) throw DataError(source, line, "empty word");
        spans.push_back({offset, offset + len});
        offset += len;
        spelled += word;
      }
      if (spelled != j.at("text").get<std::string>()) {
        throw DataError(source, line, "words do not spell out the text");
      }
      s.words = std::move(spans);
    }
    if (j.contains("pos")) s.pos = j.at("pos").get<std::vector<std::string>>();
    if (j.contains("ner")) {
      s.entities.emplace();
      for (const json& e : j.at("ner")) {
        s.entities->push_back({e.at("begin").get<std::size_t>(), e.at("end").get<std::size_t>(),
                               e.at("type").get<std::string>()});
      }
    }
    if (j.contains("dep")) {
      s.dep.emplace();
      for (const json& d : j.at("dep")) {
        s.dep->heads.push_back(d.at("head").get<int>());
        s.dep->labels.push_back(d.at("relation").get<std::string>());
      }
    }
    if (j.contains("sdp")) {
      s.sdp.emplace();
      for (const json& e : j.at("sdp")) {
        SemanticEdge edge{e.at("head").get<int>(), e.at("dependent").get<int>(),
                          e.at("relation").get<std::string>(), 1.0};
        if (e.contains("probability")) edge.probability = e.at("probability").get<double>();
        s.sdp->edges.push_back(std::move(edge));
      }
    }
    if (j.contains("srl")) {
      s.srl.emplace();
      for (const json& f : j.at("srl")) {
        SrlFrame frame{f.at("predicate").get<std::size_t>(), {}};
        for (const json& a : f.at("arguments")) {
          frame.arguments.push_back({a.at("begin").get<std::size_t>(),
                                     a.at("end").get<std::size_t>(),
                                     a.at("role").get<std::string>()});
        }
        s.srl->push_back(std::move(frame));
      }
    }
  } catch (const json::exception& e) {
    throw DataError(source, line, std::string("malformed annotation record: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(source, line, e.what());
  }
  return s;
}

std::vector<AnnotatedSentence> read_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path.string(), 0, "cannot open file");
  std::vector<AnnotatedSentence> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(annotation_from_json(line, path.string(), number));
  }
  return out;
}

bool looks_like_json_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    const std::size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    return line[first] == '{';
  }
  return false;
}

std::vector<std::string> structural_violations(const AnnotatedSentence& s, bool single_root) {
  std::vector<std::string> out;
  const std::size_t n = s.length();
  std::size_t words = n;
  if (s.words) {
    words = s.words->size();
    if (!spans_partition(*s.words, n)) out.push_back(violation("words", "spans do not partition the sentence"));
  }
  if (s.pos && s.pos->size() != words) {
    out.push_back(violation("pos", std::to_string(s.pos->size()) + " tags for " +
                                       std::to_string(words) + " words"));
  }
  if (s.entities) {
    std::size_t last_end = 0;
    for (const Entity& e : *s.entities) {
      if (e.begin >= e.end || e.end > n) {
        out.push_back(violation("ner", "entity [" + std::to_string(e.begin) + ", " +
                                           std::to_string(e.end) + ") out of bounds"));
      } else if (e.begin < last_end) {
        out.push_back(violation("ner", "overlapping entities"));
      } else {
        last_end = e.end;
      }
    }
    if (out.empty() && !bio_well_formed(entities_to_bio(*s.entities, n))) {
      out.push_back(violation("ner", "entity tags are not well-formed BIO"));
    }
  }
  if (s.dep) {
    if (s.dep->heads.size() != words || s.dep->labels.size() != words) {
      out.push_back(violation("dep", "tree size differs from word count"));
    } else if (words > 0) {
      if (auto v = tree_violation(s.dep->heads)) out.push_back(violation("dep", *v));
      const auto roots = std::count(s.dep->heads.begin(), s.dep->heads.end(), 0);
      if (single_root && roots != 1) {
        out.push_back(violation("dep", std::to_string(roots) + " root children"));
      }
    }
  }
  if (s.sdp) {
    std::set<std::pair<int, int>> seen;
    std::vector<bool> attached(words + 1, false);
    for (const SemanticEdge& e : s.sdp->edges) {
      if (e.head < 0 || static_cast<std::size_t>(e.head) > words || e.dependent < 1 ||
          static_cast<std::size_t>(e.dependent) > words || e.head == e.dependent) {
        out.push_back(violation("sdp", "edge " + std::to_string(e.head) + " -> " +
                                           std::to_string(e.dependent) + " out of range"));
        continue;
      }
      if (!seen.insert({e.head, e.dependent}).second) {
        out.push_back(violation("sdp", "duplicate edge"));
      }
      if (!(e.probability >= 0.0 && e.probability <= 1.0)) {
        out.push_back(violation("sdp", "probability outside [0, 1]"));
      }
      attached[static_cast<std::size_t>(e.dependent)] = true;
    }
    for (std::size_t d = 1; d <= words; ++d) {
      if (!attached[d]) out.push_back(violation("sdp", "word " + std::to_string(d) + " has no head"));
    }
  }
  if (s.srl) {
    std::set<std::size_t> predicates;
    for (const SrlFrame& f : *s.srl) {
      if (f.predicate >= words) {
        out.push_back(violation("srl", "predicate out of range"));
        continue;
      }
      if (!predicates.insert(f.predicate).second) out.push_back(violation("srl", "duplicate predicate"));
      std::size_t last_end = 0;
      for (const SrlArgument& a : f.arguments) {
        if (a.begin >= a.end || a.end > words) {
          out.push_back(violation("srl", "argument out of bounds"));
        } else if (a.begin < last_end) {
          out.push_back(violation("srl", "overlapping arguments"));
        } else {
          last_end = a.end;
        }
      }
    }
  }
  return out;
}

}  // namespace nltp
