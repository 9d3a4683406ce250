#include "nltp/corpus.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <tuple>

#include "nltp/decoders.h"
#include "nltp/text.h"

namespace nltp {

std::string AnnotatedSentence::text() const { return join(chars); }

std::string AnnotatedSentence::word_text(std::size_t index) const {
  const WordSpan& w = words.value().at(index);
  std::string out;
  for (std::size_t i = w.begin; i < w.end; ++i) out += chars[i];
  return out;
}

std::string format_name(CorpusFormat format) {
  switch (format) {
    case CorpusFormat::kConllu: return "conllu";
    case CorpusFormat::kColumnBio: return "column-bio";
    case CorpusFormat::kSrlColumns: return "srl-columns";
  }
  return "?";
}

CorpusFormat parse_format(const std::string& name) {
  for (CorpusFormat f : {CorpusFormat::kConllu, CorpusFormat::kColumnBio,
                         CorpusFormat::kSrlColumns}) {
    if (format_name(f) == name) return f;
  }
  throw std::invalid_argument("unknown corpus format '" + name +
                              "' (expected conllu, column-bio or srl-columns)");
}

CorpusFormat default_format(Task task) {
  switch (task) {
    case Task::kNer: return CorpusFormat::kColumnBio;
    case Task::kSrl: return CorpusFormat::kSrlColumns;
    default: return CorpusFormat::kConllu;
  }
}

DataError::DataError(const std::string& source, std::size_t line,
                     const std::string& what)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + what),
      source_(source),
      line_(line) {}

namespace {

struct Line {
  std::size_t number;
  std::vector<std::string> fields;
};

int parse_int(const std::string& text, const std::string& source, std::size_t line,
              const char* what) {
  int value = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw DataError(source, line, std::string(what) + " '" + text + "' is not an integer");
  }
  return value;
}

void append_word(AnnotatedSentence& s, const std::string& form,
                 const std::string& source, std::size_t line) {
  if (form.empty() || form == "_") throw DataError(source, line, "empty word form");
  std::vector<std::string> chars;
  try {
    chars = split_utf8(form);
  } catch (const std::invalid_argument& e) {
    throw DataError(source, line, e.what());
  }
  const std::size_t begin = s.chars.size();
  s.chars.insert(s.chars.end(), chars.begin(), chars.end());
  s.words->push_back({begin, s.chars.size()});
}

AnnotatedSentence build_conllu(const std::vector<Line>& block, const std::string& source) {
  AnnotatedSentence s;
  s.words.emplace();
  const std::size_t n = block.size();
  std::vector<std::string> pos;
  std::vector<int> heads;
  std::vector<std::string> rels;
  DependencyGraph graph;
  std::size_t pos_count = 0, head_count = 0, deps_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Line& l = block[i];
    if (l.fields.size() != 10) {
      throw DataError(source, l.number, "expected 10 tab-separated columns, found " +
                                            std::to_string(l.fields.size()));
    }
    const auto& f = l.fields;
    if (f[0].find_first_of("-.") != std::string::npos) {
      throw DataError(source, l.number, "multiword or empty-node id '" + f[0] +
                                            "' is not supported");
    }
    const int id = parse_int(f[0], source, l.number, "ID");
    if (id != static_cast<int>(i) + 1) {
      throw DataError(source, l.number, "expected ID " + std::to_string(i + 1) +
                                            ", found " + f[0]);
    }
    append_word(s, f[1], source, l.number);
    pos.push_back(f[3]);
    if (f[3] != "_") ++pos_count;
    if (f[6] != "_") {
      const int h = parse_int(f[6], source, l.number, "HEAD");
      if (h < 0 || h > static_cast<int>(n) || h == id) {
        throw DataError(source, l.number, "HEAD " + f[6] + " out of range");
      }
      heads.push_back(h);
      ++head_count;
    } else {
      heads.push_back(-1);
    }
    rels.push_back(f[7]);
    if (f[8] != "_") {
      ++deps_count;
      for (const std::string& item : split(f[8], '|')) {
        const std::size_t colon = item.find(':');
        if (colon == std::string::npos || colon == 0 || colon + 1 == item.size()) {
          throw DataError(source, l.number, "DEPS item '" + item + "' is not head:relation");
        }
        const int h = parse_int(item.substr(0, colon), source, l.number, "DEPS head");
        if (h < 0 || h > static_cast<int>(n) || h == id) {
          throw DataError(source, l.number, "DEPS head " + std::to_string(h) + " out of range");
        }
        graph.edges.push_back({h, id, item.substr(colon + 1), 1.0});
      }
    }
  }
  const std::size_t first_line = block.front().number;
  if (pos_count == n) {
    s.pos = std::move(pos);
  } else if (pos_count != 0) {
    throw DataError(source, first_line, "UPOS column is only partially filled");
  }
  if (head_count == n) {
    s.dep = DependencyTree{std::move(heads), std::move(rels)};
  } else if (head_count != 0) {
    throw DataError(source, first_line, "HEAD column is only partially filled");
  }
  if (deps_count != 0) {
    std::sort(graph.edges.begin(), graph.edges.end(), [](const auto& a, const auto& b) {
      return std::tie(a.dependent, a.head) < std::tie(b.dependent, b.head);
    });
    s.sdp = std::move(graph);
  }
  return s;
}

AnnotatedSentence build_column_bio(const std::vector<Line>& block, const std::string& source) {
  AnnotatedSentence s;
  std::vector<std::string> tags;
  for (const Line& l : block) {
    if (l.fields.size() != 2) {
      throw DataError(source, l.number, "expected `char<TAB>tag`, found " +
                                            std::to_string(l.fields.size()) + " columns");
    }
    std::vector<std::string> chars;
    try {
      chars = split_utf8(l.fields[0]);
    } catch (const std::invalid_argument& e) {
      throw DataError(source, l.number, e.what());
    }
    if (chars.size() != 1) {
      throw DataError(source, l.number, "token '" + l.fields[0] +
                                            "' must be exactly one character");
    }
    s.chars.push_back(chars.front());
    try {
      std::vector<std::string> one{l.fields[1]};
      bio_to_entities(one);
    } catch (const ContractError& e) {
      throw DataError(source, l.number, e.what());
    }
    tags.push_back(l.fields[1]);
  }
  s.entities = bio_to_entities(tags);
  return s;
}

AnnotatedSentence build_srl(const std::vector<Line>& block, const std::string& source) {
  AnnotatedSentence s;
  s.words.emplace();
  const std::size_t columns = block.front().fields.size();
  std::vector<std::vector<std::string>> tags(columns - 1);
  for (const Line& l : block) {
    if (l.fields.size() != columns) {
      throw DataError(source, l.number, "expected " + std::to_string(columns) +
                                            " columns like the sentence's first line, found " +
                                            std::to_string(l.fields.size()));
    }
    append_word(s, l.fields[0], source, l.number);
    for (std::size_t c = 1; c < columns; ++c) tags[c - 1].push_back(l.fields[c]);
  }
  std::vector<SrlFrame> frames;
  for (std::size_t c = 0; c < tags.size(); ++c) {
    std::vector<std::size_t> predicates;
    for (std::size_t i = 0; i < tags[c].size(); ++i) {
      if (tags[c][i] == "B-V") predicates.push_back(i);
      if (tags[c][i] == "I-V") {
        throw DataError(source, block[i].number, "predicate spans must be single words");
      }
    }
    if (predicates.size() != 1) {
      throw DataError(source, block.front().number,
                      "role column " + std::to_string(c + 1) + " must mark exactly one B-V");
    }
    std::vector<std::string> args = tags[c];
    args[predicates.front()] = "O";
    SrlFrame frame;
    frame.predicate = predicates.front();
    try {
      for (const Entity& e : bio_to_entities(args)) {
        frame.arguments.push_back({e.begin, e.end, e.type});
      }
    } catch (const ContractError& e) {
      throw DataError(source, block.front().number, e.what());
    }
    frames.push_back(std::move(frame));
  }
  std::sort(frames.begin(), frames.end(),
            [](const SrlFrame& a, const SrlFrame& b) { return a.predicate < b.predicate; });
  s.srl = std::move(frames);
  return s;
}

AnnotatedSentence build(const std::vector<Line>& block, CorpusFormat format,
                        const std::string& source) {
  switch (format) {
    case CorpusFormat::kConllu: return build_conllu(block, source);
    case CorpusFormat::kColumnBio: return build_column_bio(block, source);
    case CorpusFormat::kSrlColumns: return build_srl(block, source);
  }
  return {};
}

const std::vector<WordSpan>& require_words(const AnnotatedSentence& s, CorpusFormat format) {
  if (!s.words) {
    throw ContractError(format_name(format) + " output needs a word segmentation");
  }
  if (s.words->empty()) throw ContractError("cannot write an empty sentence");
  return *s.words;
}

void write_conllu(const AnnotatedSentence& s, std::ostream& out) {
  const auto& words = require_words(s, CorpusFormat::kConllu);
  std::vector<std::vector<const SemanticEdge*>> incoming(words.size() + 1);
  if (s.sdp) {
    for (const SemanticEdge& e : s.sdp->edges) {
      incoming.at(static_cast<std::size_t>(e.dependent)).push_back(&e);
    }
  }
  for (std::size_t i = 0; i < words.size(); ++i) {
    out << (i + 1) << '\t' << s.word_text(i) << "\t_\t";
    out << (s.pos ? s.pos->at(i) : "_") << "\t_\t_\t";
    if (s.dep) {
      out << s.dep->heads.at(i) << '\t' << s.dep->labels.at(i) << '\t';
    } else {
      out << "_\t_\t";
    }
    auto& in = incoming[i + 1];
    std::sort(in.begin(), in.end(),
              [](const SemanticEdge* a, const SemanticEdge* b) { return a->head < b->head; });
    if (in.empty()) {
      out << '_';
    } else {
      for (std::size_t k = 0; k < in.size(); ++k) {
        if (k) out << '|';
        out << in[k]->head << ':' << in[k]->relation;
      }
    }
    out << "\t_\n";
  }
}

void write_column_bio(const AnnotatedSentence& s, std::ostream& out) {
  if (s.chars.empty()) throw ContractError("cannot write an empty sentence");
  const std::vector<std::string> tags =
      entities_to_bio(s.entities.value_or(std::vector<Entity>{}), s.chars.size());
  for (std::size_t i = 0; i < s.chars.size(); ++i) {
    out << s.chars[i] << '\t' << tags[i] << '\n';
  }
}

void write_srl(const AnnotatedSentence& s, std::ostream& out) {
  const auto& words = require_words(s, CorpusFormat::kSrlColumns);
  std::vector<SrlFrame> frames = s.srl.value_or(std::vector<SrlFrame>{});
  std::sort(frames.begin(), frames.end(),
            [](const SrlFrame& a, const SrlFrame& b) { return a.predicate < b.predicate; });
  std::vector<std::vector<std::string>> columns;
  for (const SrlFrame& f : frames) {
    std::vector<Entity> spans;
    for (const SrlArgument& a : f.arguments) spans.push_back({a.begin, a.end, a.role});
    std::vector<std::string> tags = entities_to_bio(spans, words.size());
    tags.at(f.predicate) = "B-V";
    columns.push_back(std::move(tags));
  }
  for (std::size_t i = 0; i < words.size(); ++i) {
    out << s.word_text(i);
    for (const auto& col : columns) out << '\t' << col[i];
    out << '\n';
  }
}

}  // namespace

std::vector<AnnotatedSentence> parse_corpus(std::istream& in, CorpusFormat format,
                                            const std::string& source) {
  std::vector<AnnotatedSentence> out;
  std::vector<Line> block;
  std::string text;
  std::size_t number = 0;
  auto flush = [&] {
    if (!block.empty()) out.push_back(build(block, format, source));
    block.clear();
  };
  while (std::getline(in, text)) {
    ++number;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.find_first_not_of(" \t") == std::string::npos) {
      flush();
      continue;
    }
    if (text.front() == '#') continue;
    block.push_back({number, split(text, '\t')});
  }
  flush();
  return out;
}

std::vector<AnnotatedSentence> read_corpus(const std::filesystem::path& path,
                                           CorpusFormat format) {
  std::ifstream in(path);
  if (!in) throw DataError(path.string(), 0, "cannot open file");
  return parse_corpus(in, format, path.string());
}

void format_corpus(const std::vector<AnnotatedSentence>& sentences, std::ostream& out,
                   CorpusFormat format) {
  for (const AnnotatedSentence& s : sentences) {
    switch (format) {
      case CorpusFormat::kConllu: write_conllu(s, out); break;
      case CorpusFormat::kColumnBio: write_column_bio(s, out); break;
      case CorpusFormat::kSrlColumns: write_srl(s, out); break;
    }
    out << '\n';
  }
}

void write_corpus(const std::vector<AnnotatedSentence>& sentences,
                  const std::filesystem::path& path, CorpusFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  format_corpus(sentences, out, format);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace nltp
