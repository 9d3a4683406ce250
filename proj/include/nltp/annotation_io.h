// JSON Lines rendering of pipeline output, and structural validation of
// annotations.
//
// One object per sentence, keys present only for layers the model has:
//   {"text": "...", "words": ["..", ..], "pos": [..],
//    "ner": [{"begin": b, "end": e, "type": t}, ..],      character offsets
//    "dep": [{"id": k, "head": h, "relation": r}, ..],    words from 1, root 0
//    "sdp": [{"head": h, "dependent": d, "relation": r, "probability": p}, ..],
//    "srl": [{"predicate": i, "arguments": [{"begin": b, "end": e, "role": r}]}]}
// SRL indices count words from 0 and argument spans are half-open.

#ifndef NLTP_ANNOTATION_IO_H_
#define NLTP_ANNOTATION_IO_H_

#include <filesystem>
#include <string>
#include <vector>

#include "nltp/annotation.h"

namespace nltp {

std::string annotation_to_json(const AnnotatedSentence& sentence);
// Throws DataError (with `line`) on malformed records.
AnnotatedSentence annotation_from_json(const std::string& json_line,
                                       const std::string& source = "<json>",
                                       std::size_t line = 0);
std::vector<AnnotatedSentence> read_annotations(const std::filesystem::path& path);

// True when the first non-blank line of the file opens a JSON object.
bool looks_like_json_lines(const std::filesystem::path& path);

// Every violated structural property of the populated layers: word spans
// partition the characters, per-word layers match the word count, entities
// are in bounds and non-overlapping, the dependency tree is a single-rooted
// projective tree (when `single_root`) or a projective tree, every semantic
// dependent has a head and probabilities lie in [0, 1], and role frames have
// in-range, non-overlapping arguments. Empty means valid.
std::vector<std::string> structural_violations(const AnnotatedSentence& sentence,
                                               bool single_root = false);

}  // namespace nltp

#endif  // NLTP_ANNOTATION_IO_H_
