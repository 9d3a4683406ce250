// Corpus-level evaluation of predicted annotations against gold.
//
// Structures are compared through character offsets, so predictions with a
// different segmentation are scored fairly.
//   cws  span precision/recall/F1 over words
//   pos  accuracy over gold words (right span and tag) and F1 over
//        (span, tag) pairs
//   ner  span P/R/F1 over (begin, end, type)
//   dep  UAS and LAS over gold words
//   sdp  labeled and unlabeled edge P/R/F1
//   srl  P/R/F1 over (predicate, argument span, role)
// Precision is 0 when nothing is predicted, recall 0 when nothing is gold;
// when both sides are empty every score is 1.

#ifndef NLTP_METRICS_H_
#define NLTP_METRICS_H_

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nltp/annotation.h"

namespace nltp {

using MetricReport = std::vector<std::pair<std::string, double>>;

class AlignmentError : public std::runtime_error {
 public:
  AlignmentError(std::size_t index, const std::string& what);
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

// Throws AlignmentError when the sentence counts differ or a pair of
// sentences has different text, and ContractError when a sentence lacks the
// task's layer.
MetricReport evaluate(Task task, const std::vector<AnnotatedSentence>& gold,
                      const std::vector<AnnotatedSentence>& pred);

// The single number tracked per task: f1, accuracy, las, labeled_f1.
std::string headline_metric(Task task);
double metric_value(const MetricReport& report, const std::string& name);

}  // namespace nltp

#endif  // NLTP_METRICS_H_
