// Corpus readers and writers.
//
// conllu       10 tab-separated columns per word (ID FORM LEMMA UPOS XPOS
//              FEATS HEAD DEPREL DEPS MISC). Words give the segmentation,
//              UPOS the POS tags, HEAD/DEPREL the dependency tree and DEPS
//              (`head:rel|head:rel`) the semantic graph. LEMMA, XPOS, FEATS
//              and MISC are read and discarded; they are written as `_`.
// column-bio   `char<TAB>tag` per character with BIO entity tags.
// srl-columns  `word<TAB>col_1 .. col_k` per word, one BIO role column per
//              predicate in predicate order; the predicate itself is tagged
//              B-V.
//
// Sentences are separated by blank lines; lines starting with '#' are
// comments. Every malformed line raises DataError with its location.

#ifndef NLTP_CORPUS_H_
#define NLTP_CORPUS_H_

#include <filesystem>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nltp/annotation.h"

namespace nltp {

enum class CorpusFormat { kConllu, kColumnBio, kSrlColumns };

std::string format_name(CorpusFormat format);
CorpusFormat parse_format(const std::string& name);
// Format that carries a task's gold layer.
CorpusFormat default_format(Task task);

class DataError : public std::runtime_error {
 public:
  DataError(const std::string& source, std::size_t line, const std::string& what);
  const std::string& source() const { return source_; }
  std::size_t line() const { return line_; }

 private:
  std::string source_;
  std::size_t line_;
};

std::vector<AnnotatedSentence> read_corpus(const std::filesystem::path& path,
                                           CorpusFormat format);
std::vector<AnnotatedSentence> parse_corpus(std::istream& in, CorpusFormat format,
                                            const std::string& source = "<stream>");

void write_corpus(const std::vector<AnnotatedSentence>& sentences,
                  const std::filesystem::path& path, CorpusFormat format);
void format_corpus(const std::vector<AnnotatedSentence>& sentences,
                   std::ostream& out, CorpusFormat format);

}  // namespace nltp

#endif  // NLTP_CORPUS_H_
