#include "nltp/metrics.h"

#include <algorithm>
#include <iterator>
#include <limits>
#include <map>
#include <optional>
#include <tuple>

#include "nltp/tensor.h"

namespace nltp {
namespace {

using Span = std::pair<std::size_t, std::size_t>;
// Root of a dependency structure, distinct from every real span.
constexpr Span kRootSpan = {std::numeric_limits<std::size_t>::max(),
                            std::numeric_limits<std::size_t>::max()};

struct Counts {
  std::size_t gold = 0;
  std::size_t pred = 0;
  std::size_t match = 0;

  void add(std::vector<std::string> g, std::vector<std::string> p) {
    std::sort(g.begin(), g.end());
    std::sort(p.begin(), p.end());
    std::vector<std::string> common;
    std::set_intersection(g.begin(), g.end(), p.begin(), p.end(), std::back_inserter(common));
    gold += g.size();
    pred += p.size();
    match += common.size();
  }

  void report(MetricReport& out, const std::string& prefix) const {
    double p = pred == 0 ? 0.0 : static_cast<double>(match) / static_cast<double>(pred);
    double r = gold == 0 ? 0.0 : static_cast<double>(match) / static_cast<double>(gold);
    if (gold == 0 && pred == 0) p = r = 1.0;
    const double f = p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
    out.emplace_back(prefix + "precision", p);
    out.emplace_back(prefix + "recall", r);
    out.emplace_back(prefix + "f1", f);
  }
};

std::string key(const Span& s) {
  return std::to_string(s.first) + ":" + std::to_string(s.second);
}

const std::vector<WordSpan>& words_of(const AnnotatedSentence& s, const char* side) {
  if (!s.words) throw ContractError(std::string(side) + " sentence has no segmentation");
  return *s.words;
}

// Character span of word k (1-based; 0 is the root).
Span word_span(const std::vector<WordSpan>& words, int k) {
  if (k == 0) return kRootSpan;
  const WordSpan& w = words.at(static_cast<std::size_t>(k - 1));
  return {w.begin, w.end};
}

Span char_span(const std::vector<WordSpan>& words, std::size_t begin, std::size_t end) {
  return {words.at(begin).begin, words.at(end - 1).end};
}

template <typename T>
const T& layer(const std::optional<T>& field, const char* side, const char* name) {
  if (!field) throw ContractError(std::string(side) + " sentence has no " + name + " layer");
  return *field;
}

}  // namespace

AlignmentError::AlignmentError(std::size_t index, const std::string& what)
    : std::runtime_error("sentence " + std::to_string(index) + ": " + what), index_(index) {}

std::string headline_metric(Task task) {
  switch (task) {
    case Task::kPos: return "accuracy";
    case Task::kDep: return "las";
    case Task::kSdp: return "labeled_f1";
    default: return "f1";
  }
}

double metric_value(const MetricReport& report, const std::string& name) {
  for (const auto& [k, v] : report) {
    if (k == name) return v;
  }
  throw std::out_of_range("no metric named " + name);
}

MetricReport evaluate(Task task, const std::vector<AnnotatedSentence>& gold,
                      const std::vector<AnnotatedSentence>& pred) {
  if (gold.size() != pred.size()) {
    throw AlignmentError(std::min(gold.size(), pred.size()),
                         "gold has " + std::to_string(gold.size()) + " sentences, predictions " +
                             std::to_string(pred.size()));
  }
  Counts counts;
  Counts unlabeled;
  std::size_t gold_words = 0, head_ok = 0, label_ok = 0, tag_ok = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const AnnotatedSentence& g = gold[i];
    const AnnotatedSentence& p = pred[i];
    if (g.chars != p.chars) {
      throw AlignmentError(i, "text differs (gold \"" + g.text() + "\", predicted \"" +
                                  p.text() + "\")");
    }
    std::vector<std::string> gk, pk, gu, pu;
    switch (task) {
      case Task::kCws:
        for (const WordSpan& w : words_of(g, "gold")) gk.push_back(key({w.begin, w.end}));
        for (const WordSpan& w : words_of(p, "predicted")) pk.push_back(key({w.begin, w.end}));
        break;
      case Task::kPos: {
        const auto& gw = words_of(g, "gold");
        const auto& pw = words_of(p, "predicted");
        const auto& gt = layer(g.pos, "gold", "pos");
        const auto& pt = layer(p.pos, "predicted", "pos");
        std::map<Span, std::string> predicted;
        for (std::size_t k = 0; k < pw.size(); ++k) {
          predicted[{pw[k].begin, pw[k].end}] = pt.at(k);
          pk.push_back(key({pw[k].begin, pw[k].end}) + "/" + pt.at(k));
        }
        for (std::size_t k = 0; k < gw.size(); ++k) {
          const Span s{gw[k].begin, gw[k].end};
          gk.push_back(key(s) + "/" + gt.at(k));
          auto it = predicted.find(s);
          if (it != predicted.end() && it->second == gt.at(k)) ++tag_ok;
        }
        gold_words += gw.size();
        break;
      }
      case Task::kNer:
        for (const Entity& e : layer(g.entities, "gold", "ner"))
          gk.push_back(key({e.begin, e.end}) + "/" + e.type);
        for (const Entity& e : layer(p.entities, "predicted", "ner"))
          pk.push_back(key({e.begin, e.end}) + "/" + e.type);
        break;
      case Task::kDep: {
        const auto& gw = words_of(g, "gold");
        const auto& pw = words_of(p, "predicted");
        const DependencyTree& gt = layer(g.dep, "gold", "dep");
        const DependencyTree& pt = layer(p.dep, "predicted", "dep");
        std::map<Span, std::pair<Span, std::string>> predicted;
        for (std::size_t k = 0; k < pt.heads.size(); ++k) {
          predicted[word_span(pw, static_cast<int>(k) + 1)] = {word_span(pw, pt.heads[k]),
                                                               pt.labels.at(k)};
        }
        for (std::size_t k = 0; k < gt.heads.size(); ++k) {
          auto it = predicted.find(word_span(gw, static_cast<int>(k) + 1));
          if (it == predicted.end() || it->second.first != word_span(gw, gt.heads[k])) continue;
          ++head_ok;
          if (it->second.second == gt.labels.at(k)) ++label_ok;
        }
        gold_words += gt.heads.size();
        break;
      }
      case Task::kSdp: {
        const auto& gw = words_of(g, "gold");
        const auto& pw = words_of(p, "predicted");
        for (const SemanticEdge& e : layer(g.sdp, "gold", "sdp").edges) {
          gu.push_back(key(word_span(gw, e.head)) + ">" + key(word_span(gw, e.dependent)));
          gk.push_back(gu.back() + "/" + e.relation);
        }
        for (const SemanticEdge& e : layer(p.sdp, "predicted", "sdp").edges) {
          pu.push_back(key(word_span(pw, e.head)) + ">" + key(word_span(pw, e.dependent)));
          pk.push_back(pu.back() + "/" + e.relation);
        }
        break;
      }
      case Task::kSrl: {
        const auto& gw = words_of(g, "gold");
        const auto& pw = words_of(p, "predicted");
        auto collect = [](const std::vector<SrlFrame>& frames, const std::vector<WordSpan>& w,
                          std::vector<std::string>& out) {
          for (const SrlFrame& f : frames) {
            const std::string pred_key = key(char_span(w, f.predicate, f.predicate + 1));
            for (const SrlArgument& a : f.arguments) {
              if (a.role == "V") continue;
              out.push_back(pred_key + ">" + key(char_span(w, a.begin, a.end)) + "/" + a.role);
            }
          }
        };
        collect(layer(g.srl, "gold", "srl"), gw, gk);
        collect(layer(p.srl, "predicted", "srl"), pw, pk);
        break;
      }
    }
    counts.add(std::move(gk), std::move(pk));
    unlabeled.add(std::move(gu), std::move(pu));
  }

  MetricReport out;
  auto ratio = [&](std::size_t ok) {
    return gold_words == 0 ? 1.0 : static_cast<double>(ok) / static_cast<double>(gold_words);
  };
  switch (task) {
    case Task::kPos:
      out.emplace_back("accuracy", ratio(tag_ok));
      counts.report(out, "");
      break;
    case Task::kDep:
      out.emplace_back("uas", ratio(head_ok));
      out.emplace_back("las", ratio(label_ok));
      break;
    case Task::kSdp:
      counts.report(out, "labeled_");
      unlabeled.report(out, "unlabeled_");
      break;
    default:
      counts.report(out, "");
      break;
  }
  return out;
}

}  // namespace nltp
