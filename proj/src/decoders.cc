#include "nltp/decoders.h"

#include <algorithm>
#include <limits>

namespace nltp {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Chart {
  explicit Chart(std::size_t size)
      : size(size), score(size * size * 2, kNegInf), split(size * size * 2, 0) {}
  double& at(std::size_t s, std::size_t t, int dir) {
    return score[(s * size + t) * 2 + dir];
  }
  std::size_t& arg(std::size_t s, std::size_t t, int dir) {
    return split[(s * size + t) * 2 + dir];
  }
  std::size_t size;
  std::vector<double> score;
  std::vector<std::size_t> split;
};

// dir 0: head on the right end (arc t -> s); dir 1: head on the left end.
constexpr int kLeft = 0;
constexpr int kRight = 1;

class EisnerDecoder {
 public:
  EisnerDecoder(const Tensor& arcs, std::size_t first)
      : arcs_(arcs), n_(arcs.rows()), first_(first), complete_(n_), incomplete_(n_) {}

  void run() {
    for (std::size_t s = first_; s < n_; ++s) {
      complete_.at(s, s, kLeft) = 0.0;
      complete_.at(s, s, kRight) = 0.0;
    }
    for (std::size_t width = 1; width + first_ < n_; ++width) {
      for (std::size_t s = first_; s + width < n_; ++s) {
        const std::size_t t = s + width;
        // Incomplete spans: one arc between s and t.
        double best = kNegInf;
        std::size_t best_r = s;
        for (std::size_t r = s; r < t; ++r) {
          const double v = complete_.at(s, r, kRight) + complete_.at(r + 1, t, kLeft);
          if (v > best) {
            best = v;
            best_r = r;
          }
        }
        if (s != 0) {
          incomplete_.at(s, t, kLeft) = best + score(t, s);
          incomplete_.arg(s, t, kLeft) = best_r;
        }
        incomplete_.at(s, t, kRight) = best + score(s, t);
        incomplete_.arg(s, t, kRight) = best_r;

        best = kNegInf;
        best_r = s;
        for (std::size_t r = s; r < t; ++r) {
          const double v = complete_.at(s, r, kLeft) + incomplete_.at(r, t, kLeft);
          if (v > best) {
            best = v;
            best_r = r;
          }
        }
        complete_.at(s, t, kLeft) = best;
        complete_.arg(s, t, kLeft) = best_r;

        best = kNegInf;
        best_r = s + 1;
        for (std::size_t r = s + 1; r <= t; ++r) {
          const double v = incomplete_.at(s, r, kRight) + complete_.at(r, t, kRight);
          if (v > best) {
            best = v;
            best_r = r;
          }
        }
        complete_.at(s, t, kRight) = best;
        complete_.arg(s, t, kRight) = best_r;
      }
    }
  }

  double complete_score(std::size_t s, std::size_t t, int dir) {
    return complete_.at(s, t, dir);
  }

  void backtrack_complete(std::size_t s, std::size_t t, int dir,
                          std::vector<int>& heads) {
    if (s == t) return;
    const std::size_t r = complete_.arg(s, t, dir);
    if (dir == kLeft) {
      backtrack_complete(s, r, kLeft, heads);
      backtrack_incomplete(r, t, kLeft, heads);
    } else {
      backtrack_incomplete(s, r, kRight, heads);
      backtrack_complete(r, t, kRight, heads);
    }
  }

  void backtrack_incomplete(std::size_t s, std::size_t t, int dir,
                            std::vector<int>& heads) {
    if (dir == kLeft) {
      heads[s] = static_cast<int>(t);
    } else {
      heads[t] = static_cast<int>(s);
    }
    const std::size_t r = incomplete_.arg(s, t, dir);
    backtrack_complete(s, r, kRight, heads);
    backtrack_complete(r + 1, t, kLeft, heads);
  }

 private:
  double score(std::size_t h, std::size_t d) const { return arcs_.at(h, d); }

  const Tensor& arcs_;
  std::size_t n_;
  std::size_t first_;
  Chart complete_;
  Chart incomplete_;
};

bool arcs_cross(std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
  // Arcs given as ordered (low, high) endpoint pairs.
  return (a < c && c < b && b < d) || (c < a && a < d && d < b);
}

}  // namespace

std::vector<int> eisner(const Tensor& arcs, bool single_root) {
  if (arcs.rank() != 2 || arcs.rows() != arcs.cols()) {
    throw DimensionError("eisner: arc scores must be square, got " +
                         shape_string(arcs.shape()));
  }
  const std::size_t size = arcs.rows();
  if (size < 2) throw ContractError("eisner: sentence must contain at least one word");
  const std::size_t n = size - 1;
  std::vector<int> heads(size, -1);

  if (!single_root) {
    EisnerDecoder dp(arcs, 0);
    dp.run();
    dp.backtrack_complete(0, n, kRight, heads);
  } else {
    // Words-only chart; the root adopts exactly one word r whose left and
    // right subtrees are complete spans over [1, r] and [r, n].
    EisnerDecoder dp(arcs, 1);
    dp.run();
    double best = kNegInf;
    std::size_t best_r = 1;
    for (std::size_t r = 1; r <= n; ++r) {
      const double v = dp.complete_score(1, r, kLeft) +
                       dp.complete_score(r, n, kRight) + arcs.at(0, r);
      if (v > best) {
        best = v;
        best_r = r;
      }
    }
    heads[best_r] = 0;
    dp.backtrack_complete(1, best_r, kLeft, heads);
    dp.backtrack_complete(best_r, n, kRight, heads);
  }
  return {heads.begin() + 1, heads.end()};
}

double tree_score(const Tensor& arcs, const std::vector<int>& heads) {
  double total = 0.0;
  for (std::size_t d = 1; d <= heads.size(); ++d) {
    total += arcs.at(static_cast<std::size_t>(heads[d - 1]), d);
  }
  return total;
}

bool is_projective(const std::vector<int>& heads) {
  const std::size_t n = heads.size();
  for (std::size_t d1 = 1; d1 <= n; ++d1) {
    const std::size_t h1 = static_cast<std::size_t>(heads[d1 - 1]);
    const std::size_t a = std::min(h1, d1), b = std::max(h1, d1);
    for (std::size_t d2 = d1 + 1; d2 <= n; ++d2) {
      const std::size_t h2 = static_cast<std::size_t>(heads[d2 - 1]);
      if (arcs_cross(a, b, std::min(h2, d2), std::max(h2, d2))) return false;
    }
  }
  return true;
}

std::optional<std::string> tree_violation(const std::vector<int>& heads) {
  const std::size_t n = heads.size();
  if (n == 0) return "empty tree";
  for (std::size_t d = 1; d <= n; ++d) {
    const int h = heads[d - 1];
    if (h < 0 || static_cast<std::size_t>(h) > n) {
      return "word " + std::to_string(d) + " has out-of-range head " + std::to_string(h);
    }
    if (static_cast<std::size_t>(h) == d) {
      return "word " + std::to_string(d) + " heads itself";
    }
  }
  for (std::size_t d = 1; d <= n; ++d) {
    std::size_t cur = d;
    std::size_t steps = 0;
    while (cur != 0) {
      cur = static_cast<std::size_t>(heads[cur - 1]);
      if (++steps > n) return "word " + std::to_string(d) + " lies on a cycle";
    }
  }
  if (!is_projective(heads)) return "tree is not projective";
  return std::nullopt;
}

std::vector<int> assign_label_ids(const std::vector<int>& heads,
                                  const Tensor& labeled) {
  const std::size_t m = heads.size() + 1;
  if (labeled.size() != m * m * labeled.cols()) {
    throw DimensionError("assign_labels: label scores " +
                         shape_string(labeled.shape()) + " for " +
                         std::to_string(heads.size()) + " words");
  }
  const std::size_t labels = labeled.cols();
  auto values = labeled.values();
  std::vector<int> out;
  out.reserve(heads.size());
  for (std::size_t d = 1; d < m; ++d) {
    const std::size_t cell = static_cast<std::size_t>(heads[d - 1]) * m + d;
    const double* row = &values[cell * labels];
    out.push_back(static_cast<int>(std::max_element(row, row + labels) - row));
  }
  return out;
}

DependencyTree assign_labels(const std::vector<int>& heads,
                             const Tensor& labeled,
                             const std::vector<std::string>& names) {
  DependencyTree tree;
  tree.heads = heads;
  for (int id : assign_label_ids(heads, labeled)) {
    tree.labels.push_back(names.at(static_cast<std::size_t>(id)));
  }
  return tree;
}

std::vector<int> viterbi(const Tensor& emissions, const CrfParams& crf) {
  const std::size_t n = emissions.rows(), labels = emissions.cols();
  if (n == 0 || labels == 0) throw ContractError("viterbi: empty emissions");
  if (crf.labels() != labels) {
    throw DimensionError("viterbi: emissions " + shape_string(emissions.shape()) +
                         " do not match transitions " +
                         shape_string(crf.transitions.shape()));
  }
  auto emit = emissions.values();
  auto trans = crf.transitions.values();
  // best_from[t][j]: best score of positions t..n-1 given label j at t.
  std::vector<double> best_from(n * labels);
  for (std::size_t j = 0; j < labels; ++j) {
    best_from[(n - 1) * labels + j] = emit[(n - 1) * labels + j] + crf.end.at(j);
  }
  for (std::size_t t = n - 1; t-- > 0;) {
    for (std::size_t j = 0; j < labels; ++j) {
      double best = kNegInf;
      for (std::size_t k = 0; k < labels; ++k) {
        best = std::max(best, trans[j * labels + k] + best_from[(t + 1) * labels + k]);
      }
      best_from[t * labels + j] = emit[t * labels + j] + best;
    }
  }
  // Forward greedy pass picks the lowest label among optimal continuations.
  std::vector<int> path(n);
  double best = kNegInf;
  for (std::size_t j = 0; j < labels; ++j) {
    const double v = crf.start.at(j) + best_from[j];
    if (v > best) {
      best = v;
      path[0] = static_cast<int>(j);
    }
  }
  for (std::size_t t = 1; t < n; ++t) {
    const std::size_t prev = static_cast<std::size_t>(path[t - 1]);
    best = kNegInf;
    for (std::size_t k = 0; k < labels; ++k) {
      const double v = trans[prev * labels + k] + best_from[t * labels + k];
      if (v > best) {
        best = v;
        path[t] = static_cast<int>(k);
      }
    }
  }
  return path;
}

double sequence_score(const Tensor& emissions, const CrfParams& crf,
                      const std::vector<int>& labels) {
  const std::size_t count = emissions.cols();
  double total = crf.start.at(static_cast<std::size_t>(labels.front()));
  for (std::size_t t = 0; t < labels.size(); ++t) {
    total += emissions.at(t * count + static_cast<std::size_t>(labels[t]));
    if (t > 0) {
      total += crf.transitions.at(static_cast<std::size_t>(labels[t - 1]),
                                  static_cast<std::size_t>(labels[t]));
    }
  }
  return total + crf.end.at(static_cast<std::size_t>(labels.back()));
}

DependencyGraph sdp_decode(const Tensor& probs, const Tensor& labeled,
                           const std::vector<std::string>& names) {
  if (probs.rank() != 2 || probs.rows() != probs.cols()) {
    throw DimensionError("sdp_decode: probabilities must be square, got " +
                         shape_string(probs.shape()));
  }
  const std::size_t m = probs.rows();
  const std::size_t labels = labeled.cols();
  if (labeled.size() != m * m * labels) {
    throw DimensionError("sdp_decode: label scores " + shape_string(labeled.shape()) +
                         " do not match probabilities " + shape_string(probs.shape()));
  }
  auto label_values = labeled.values();
  auto relation = [&](std::size_t h, std::size_t d) {
    const double* row = &label_values[(h * m + d) * labels];
    return names.at(static_cast<std::size_t>(std::max_element(row, row + labels) - row));
  };
  DependencyGraph graph;
  for (std::size_t d = 1; d < m; ++d) {
    bool attached = false;
    for (std::size_t h = 0; h < m; ++h) {
      if (h == d) continue;
      const double p = probs.at(h, d);
      if (p > 0.5) {
        graph.edges.push_back({static_cast<int>(h), static_cast<int>(d), relation(h, d), p});
        attached = true;
      }
    }
    if (!attached) {
      std::size_t best_h = d == 0 ? 1 : 0;
      for (std::size_t h = 0; h < m; ++h) {
        if (h != d && probs.at(h, d) > probs.at(best_h, d)) best_h = h;
      }
      graph.edges.push_back({static_cast<int>(best_h), static_cast<int>(d),
                             relation(best_h, d), probs.at(best_h, d)});
    }
  }
  return graph;
}

std::vector<WordSpan> bmes_to_spans(std::span<const std::string> tags) {
  std::vector<WordSpan> spans;
  constexpr std::size_t kClosed = static_cast<std::size_t>(-1);
  std::size_t open = kClosed;
  auto close = [&](std::size_t end) {
    if (open != kClosed) spans.push_back({open, end});
    open = kClosed;
  };
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const std::string& tag = tags[i];
    if (tag == "B") {
      close(i);
      open = i;
    } else if (tag == "M") {
      if (open == kClosed) open = i;
    } else if (tag == "E") {
      if (open == kClosed) open = i;
      close(i + 1);
    } else if (tag == "S") {
      close(i);
      spans.push_back({i, i + 1});
    } else {
      throw ContractError("segmentation tag '" + tag + "' is not one of B, M, E, S");
    }
  }
  close(tags.size());
  return spans;
}

std::vector<std::string> spans_to_bmes(const std::vector<WordSpan>& spans) {
  std::vector<std::string> tags;
  for (const WordSpan& w : spans) {
    if (w.end - w.begin == 1) {
      tags.emplace_back("S");
      continue;
    }
    tags.emplace_back("B");
    for (std::size_t i = w.begin + 1; i + 1 < w.end; ++i) tags.emplace_back("M");
    tags.emplace_back("E");
  }
  return tags;
}

bool spans_partition(const std::vector<WordSpan>& spans, std::size_t length) {
  std::size_t cursor = 0;
  for (const WordSpan& w : spans) {
    if (w.begin != cursor || w.end <= w.begin) return false;
    cursor = w.end;
  }
  return cursor == length;
}

namespace {

struct BioTag {
  char prefix;  // 'O', 'B' or 'I'
  std::string type;
};

BioTag split_bio(const std::string& tag) {
  if (tag == "O") return {'O', ""};
  if (tag.size() >= 1 && (tag[0] == 'B' || tag[0] == 'I') &&
      (tag.size() == 1 || tag[1] == '-')) {
    return {tag[0], tag.size() > 2 ? tag.substr(2) : ""};
  }
  throw ContractError("tag '" + tag + "' is not of the form O, B-TYPE or I-TYPE");
}

}  // namespace

std::vector<Entity> bio_to_entities(std::span<const std::string> tags) {
  std::vector<Entity> out;
  std::optional<Entity> open;
  auto close = [&](std::size_t end) {
    if (open) {
      open->end = end;
      out.push_back(*open);
    }
    open.reset();
  };
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const BioTag tag = split_bio(tags[i]);
    if (tag.prefix == 'O') {
      close(i);
    } else if (tag.prefix == 'B' || !open || open->type != tag.type) {
      close(i);
      open = Entity{i, i, tag.type};
    }
  }
  close(tags.size());
  return out;
}

std::vector<std::string> entities_to_bio(const std::vector<Entity>& entities,
                                         std::size_t length) {
  std::vector<std::string> tags(length, "O");
  for (const Entity& e : entities) {
    if (e.end > length || e.begin >= e.end) {
      throw ContractError("entity [" + std::to_string(e.begin) + ", " +
                          std::to_string(e.end) + ") outside sentence of length " +
                          std::to_string(length));
    }
    tags[e.begin] = "B-" + e.type;
    for (std::size_t i = e.begin + 1; i < e.end; ++i) tags[i] = "I-" + e.type;
  }
  return tags;
}

bool bio_well_formed(std::span<const std::string> tags) {
  std::string open;
  bool inside = false;
  for (const std::string& raw : tags) {
    BioTag tag;
    try {
      tag = split_bio(raw);
    } catch (const ContractError&) {
      return false;
    }
    if (tag.prefix == 'I' && (!inside || open != tag.type)) return false;
    inside = tag.prefix != 'O';
    open = tag.type;
  }
  return true;
}

}  // namespace nltp
