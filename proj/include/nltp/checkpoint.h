// Checkpoint directories: everything needed to annotate without the
// training data.
//
//   model.json        format name, version, tasks, encoder and head config
//   params.bin        parameter container (see params.h)
//   vocab.txt         character vocabulary
//   labels/<task>.txt label inventory per task
//   config.json       normalised training config, when trained from one
//   metrics.jsonl     one record per training epoch
// Writing is deterministic: the same model yields the same bytes.

#ifndef NLTP_CHECKPOINT_H_
#define NLTP_CHECKPOINT_H_

#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "nltp/config.h"
#include "nltp/model.h"
#include "nltp/vocab.h"

namespace nltp {

inline constexpr char kCheckpointFormat[] = "nltp-checkpoint";
inline constexpr int kCheckpointVersion = 1;

// A checkpoint that is missing, malformed or from another version.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Checkpoint {
  Vocabulary vocab;
  std::unique_ptr<MultiTaskModel> model;
};

void save_checkpoint(const std::filesystem::path& dir, const MultiTaskModel& model,
                     const Vocabulary& vocab, const PipelineConfig* config = nullptr,
                     const std::vector<std::string>& metrics = {});

Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace nltp

#endif  // NLTP_CHECKPOINT_H_
