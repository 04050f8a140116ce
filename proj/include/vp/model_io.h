#ifndef VP_MODEL_IO_H_
#define VP_MODEL_IO_H_

#include <cstdint>
#include <string>

#include "vp/profiler.h"

namespace vp {

inline constexpr std::uint32_t kModelFormatVersion = 1;

// Model file layout, all integers and IEEE-754 doubles little-endian,
// strings as u32 length + bytes, arrays as u64 count + elements:
//
//   "VPMODEL\0"  u32 format_version  u64 tokenizer_hash
//   schema       u32 K + K strings, u32 M + M strings, u32 L + L f64 levels
//   encoder      u32 dim, f64 decay, u64 max_len
//   vocab        u64 V + V strings (id order)
//   parameters   9 f64 arrays: embedding, issue_w, issue_b, action_w,
//                action_b, norecon_w, norecon_b, cost_w, cost_b
//   prior        u64 N, K u64 issue counts, M u64 action counts,
//                u64 no-recontact count, f64 array issue, f64 array actions,
//                f64 no_recontact
//   calibration  u8 mode, u8 action aggregation, u8 cost mode, f64 alpha,
//                f64 beta, u8 has_range, f64 min, f64 max,
//                3 f64 arrays of sorted samples (issue, action, norecon)
//   u64 FNV-1a checksum of every preceding byte
//
// Only models backed by ReferenceEncoder can be saved.
std::string SerializeModel(const ProfilerModel& model);
ProfilerModel DeserializeModel(const std::string& bytes);

void SaveModel(const ProfilerModel& model, const std::string& path);
// Throws ModelFormatError on truncation, corruption or a version mismatch.
ProfilerModel LoadModel(const std::string& path);

}  // namespace vp

#endif  // VP_MODEL_IO_H_
