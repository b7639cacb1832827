#ifndef WIC_CHECKPOINT_H_
#define WIC_CHECKPOINT_H_

// Versioned binary checkpoint:
//
//   magic    8 bytes  "WICCKPT\0"
//   version  u32 LE
//   meta_len u64 LE
//   meta     meta_len bytes of UTF-8 JSON: config echo, encoder kind,
//            vocabularies, and the declared tensor list (name, rows, cols)
//   tensors  every declared tensor, row-major, f32 LE, in declared order
//   crc32    u32 LE over all preceding bytes
//
// Parameters are stored at 32-bit precision, so a loaded checkpoint holds
// float(x) for every saved double x.

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "wic/corpus.h"
#include "wic/network.h"
#include "wic/train.h"

namespace wic {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  TrainConfig config;
  Vocabulary source_vocab;
  // Translation vocabulary for pretrained models, label inventory for
  // fine-tuned task models. Row k of the head scores entry k.
  Vocabulary target_vocab;
  Network network;
};

void write_checkpoint(std::ostream& out, const Checkpoint& checkpoint);
// FormatError on bad magic/version/metadata, CorruptionError on truncation,
// trailing bytes, or checksum mismatch.
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::string& path);

// Rounds every parameter to float, as a save/load round trip would.
void round_to_storage_precision(Network& net);

}  // namespace wic

#endif  // WIC_CHECKPOINT_H_
