#ifndef NSE_CHECKPOINT_HPP
#define NSE_CHECKPOINT_HPP

#include <string>
#include <vector>

#include "nse/train.hpp"

namespace nse {

// Binary layout, all integers and floats little-endian:
//
//   "NSE1"                          magic
//   u32 version                     currently 1
//   u8  encoder                     0 = lstm, 1 = nse
//   u32 dim
//   vocab source, vocab target      u32 count, then count x (u32 len, bytes)
//   u32 param count                 then per param, in name order:
//       u32 name len, name bytes, u32 rank, rank x u32 dim, f32 values
//   u8  has_adam                    if 1: u64 step, then per param
//                                   f32 first moment, f32 second moment
//   u32 epoch, f64 dev_bleu, f64 dev_sari
//   u32 crc32 of every preceding byte
//
// Anything after the checksum is an error.
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<unsigned char> serialize_checkpoint(const Checkpoint& ck);
// Throws FormatError carrying the byte offset of the first bad field.
Checkpoint deserialize_checkpoint(const std::vector<unsigned char>& bytes);

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

Seq2Seq model_from_checkpoint(const Checkpoint& ck);

}  // namespace nse

#endif  // NSE_CHECKPOINT_HPP
