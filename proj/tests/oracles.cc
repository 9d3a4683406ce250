#include "oracles.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace oracle {
namespace {

bool crosses(int a, int b, int c, int d) {
  const int l1 = std::min(a, b), r1 = std::max(a, b);
  const int l2 = std::min(c, d), r2 = std::max(c, d);
  return (l1 < l2 && l2 < r1 && r1 < r2) || (l2 < l1 && l1 < r2 && r2 < r1);
}

bool acyclic(const std::vector<int>& heads) {
  const int n = static_cast<int>(heads.size());
  for (int d = 1; d <= n; ++d) {
    int cur = d;
    for (int steps = 0; cur != 0; ++steps) {
      if (steps > n) return false;
      cur = heads[cur - 1];
    }
  }
  return true;
}

void extend(std::vector<int>& heads, int d, int n, std::vector<std::vector<int>>& out) {
  if (d > n) {
    if (acyclic(heads)) out.push_back(heads);
    return;
  }
  for (int h = 0; h <= n; ++h) {
    if (h == d) continue;
    bool ok = true;
    for (int e = 1; e < d && ok; ++e) ok = !crosses(heads[e - 1], e, h, d);
    if (!ok) continue;
    heads[d - 1] = h;
    extend(heads, d + 1, n, out);
  }
}

double log_softmax_at(const double* row, std::size_t cols, std::size_t k) {
  double mx = row[0];
  for (std::size_t c = 1; c < cols; ++c) mx = std::max(mx, row[c]);
  double z = 0.0;
  for (std::size_t c = 0; c < cols; ++c) z += std::exp(row[c] - mx);
  return row[k] - mx - std::log(z);
}

double log_sigmoid(double x) {
  return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

}  // namespace

std::filesystem::path toy_dir() { return std::filesystem::path(NLTP_SOURCE_DIR) / "data" / "toy"; }

nltp::PipelineConfig toy_config() { return nltp::load_config(toy_dir() / "config.json"); }

ToyCorpus load_toy_corpus() {
  ToyCorpus toy;
  toy.config = toy_config();
  toy.corpora = nltp::prepare_corpora(toy.config);
  return toy;
}

nltp::ModelSpec small_spec(const ToyCorpus& toy, const std::vector<nltp::Task>& tasks) {
  nltp::PipelineConfig config = toy.config;
  config.encoder.width = 16;
  config.encoder.layers = 1;
  config.encoder.heads = 2;
  config.encoder.ffn_width = 16;
  config.heads.mlp_width = 8;
  return nltp::make_spec(config, toy.corpora, tasks);
}

void perturb(nltp::ParamStore& store, std::mt19937_64& rng, double stddev) {
  std::normal_distribution<double> noise(0.0, stddev);
  for (nltp::Param& p : store.entries()) {
    for (double& v : p.tensor.mutable_values()) v += noise(rng);
  }
}

const std::vector<std::vector<int>>& projective_trees(std::size_t n) {
  static std::map<std::size_t, std::vector<std::vector<int>>> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<std::vector<int>> trees;
  std::vector<int> heads(n, 0);
  extend(heads, 1, static_cast<int>(n), trees);
  return cache.emplace(n, std::move(trees)).first->second;
}

bool is_projective_tree(const std::vector<int>& heads) {
  const int n = static_cast<int>(heads.size());
  if (n == 0) return false;
  for (int d = 1; d <= n; ++d) {
    const int h = heads[d - 1];
    if (h < 0 || h > n || h == d) return false;
  }
  if (!acyclic(heads)) return false;
  for (int a = 1; a <= n; ++a) {
    for (int b = a + 1; b <= n; ++b) {
      if (crosses(heads[a - 1], a, heads[b - 1], b)) return false;
    }
  }
  return true;
}

double tree_score(const nltp::Tensor& arcs, const std::vector<int>& heads) {
  double total = 0.0;
  for (std::size_t d = 1; d <= heads.size(); ++d) {
    total += arcs.at(static_cast<std::size_t>(heads[d - 1]), d);
  }
  return total;
}

double best_tree_score(const nltp::Tensor& arcs, const std::vector<std::vector<int>>& trees,
                       bool single_root) {
  double best = -INFINITY;
  for (const std::vector<int>& t : trees) {
    if (single_root && std::count(t.begin(), t.end(), 0) != 1) continue;
    best = std::max(best, tree_score(arcs, t));
  }
  return best;
}

double sequence_score(const nltp::Tensor& e, const nltp::CrfParams& crf,
                      const std::vector<int>& path) {
  const auto y = [&](std::size_t i) { return static_cast<std::size_t>(path[i]); };
  double s = crf.start.at(0, y(0)) + e.at(0, y(0));
  for (std::size_t i = 1; i < path.size(); ++i) {
    s += crf.transitions.at(y(i - 1), y(i)) + e.at(i, y(i));
  }
  return s + crf.end.at(0, y(path.size() - 1));
}

CrfEnumeration enumerate_crf(const nltp::Tensor& emissions, const nltp::CrfParams& crf) {
  const std::size_t n = emissions.rows();
  const std::size_t l = emissions.cols();
  CrfEnumeration out;
  std::vector<int> path(n, 0);
  out.best_score = -INFINITY;
  while (true) {
    const double s = sequence_score(emissions, crf, path);
    out.scores.push_back(s);
    out.best_score = std::max(out.best_score, s);
    std::size_t i = 0;
    while (i < n && static_cast<std::size_t>(++path[i]) == l) path[i++] = 0;
    if (i == n) break;
  }
  double mx = out.best_score, z = 0.0;
  for (double s : out.scores) z += std::exp(s - mx);
  out.log_partition = mx + std::log(z);
  return out;
}

double categorical_ce(const nltp::Tensor& logits, const std::vector<int>& gold) {
  const std::size_t cols = logits.cols();
  double total = 0.0;
  for (std::size_t r = 0; r < gold.size(); ++r) {
    total -= log_softmax_at(&logits.values()[r * cols], cols, static_cast<std::size_t>(gold[r]));
  }
  return total / static_cast<double>(gold.size());
}

double soft_ce(const nltp::Tensor& logits, const nltp::Tensor& targets) {
  const std::size_t rows = logits.rows(), cols = logits.cols();
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      total -= targets.at(r, c) * log_softmax_at(&logits.values()[r * cols], cols, c);
    }
  }
  return total / static_cast<double>(rows);
}

double binary_ce(const nltp::Tensor& logits, const nltp::Tensor& targets) {
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double x = logits.at(i), t = targets.at(i);
    total -= t * log_sigmoid(x) + (1.0 - t) * log_sigmoid(-x);
  }
  return total / static_cast<double>(logits.size());
}

GradCheck check_gradients(nltp::MultiTaskModel& model, const std::function<nltp::Tensor()>& loss,
                          std::size_t per_head, std::mt19937_64& rng) {
  constexpr double kStep = 1e-4;
  constexpr double kTolerance = 1e-4;
  nltp::ParamStore& store = model.params();
  store.clear_grad();
  nltp::backward(loss());

  // Candidate entries with a usable analytic gradient, grouped per tensor.
  std::vector<std::pair<std::size_t, std::vector<std::size_t>>> head, encoder;
  for (std::size_t i = 0; i < store.entries().size(); ++i) {
    const nltp::Param& p = store.entries()[i];
    if (!p.tensor.has_grad()) continue;
    std::vector<std::size_t> usable;
    for (std::size_t k = 0; k < p.tensor.size(); ++k) {
      if (std::abs(p.tensor.grad()[k]) > 1e-6) usable.push_back(k);
    }
    if (usable.empty()) continue;
    (p.name.starts_with("encoder.") ? encoder : head).emplace_back(i, std::move(usable));
  }
  GradCheck r;
  if (head.empty() || encoder.empty()) {
    r.ok = false;
    r.failure = "no parameter with a nonzero gradient";
    return r;
  }
  std::shuffle(head.begin(), head.end(), rng);
  std::vector<std::pair<std::size_t, std::size_t>> picks;
  for (std::size_t j = 0; j < per_head; ++j) {
    const auto& [index, usable] = head[j % head.size()];
    picks.emplace_back(index, usable[rng() % usable.size()]);
  }
  const auto& [enc_index, enc_usable] = encoder[rng() % encoder.size()];
  picks.emplace_back(enc_index, enc_usable[rng() % enc_usable.size()]);

  for (const auto& [index, k] : picks) {
    nltp::Param& p = store.entries()[index];
    const double analytic = p.tensor.grad()[k];
    double& w = p.tensor.mutable_values()[k];
    const double saved = w;
    double plus, minus;
    {
      nltp::NoGradGuard no_grad;
      w = saved + kStep;
      plus = loss().item();
      w = saved - kStep;
      minus = loss().item();
    }
    w = saved;
    const double numeric = (plus - minus) / (2.0 * kStep);
    const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-4});
    const double err = std::abs(analytic - numeric) / scale;
    r.worst_error = std::max(r.worst_error, err);
    ++r.checked;
    if (err > kTolerance && r.ok) {
      r.ok = false;
      std::ostringstream os;
      os << p.name << "[" << k << "] analytic " << analytic << " numeric " << numeric;
      r.failure = os.str();
    }
  }
  store.clear_grad();
  return r;
}

std::vector<std::string> layer_presence(const nltp::AnnotatedSentence& s) {
  std::vector<std::string> missing;
  if (!s.words) missing.push_back("missing words");
  if (!s.pos) missing.push_back("missing pos");
  if (!s.entities) missing.push_back("missing ner");
  if (!s.dep) missing.push_back("missing dep");
  if (!s.sdp) missing.push_back("missing sdp");
  if (!s.srl) missing.push_back("missing srl");
  return missing;
}

std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace oracle
