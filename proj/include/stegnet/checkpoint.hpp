// Model checkpoint container. Single little-endian binary file:
//   magic "MSHD", u32 version (=1),
//   config: u32 block, u32 k, u32 msg_bits, f32 lambda_i/lambda_m/lambda_g/lr, u64 seed,
//   u32 tensor count, then per tensor:
//     u16 name length + name bytes, u8 ndim, u32 dims[ndim], f32 data row-major,
//   u32 CRC-32 (zlib polynomial) of every preceding byte.
// Training progress (step, best validation metrics) rides along as trailing
// single-element tensors named "meta.*". Adam moments are not persisted.
#pragma once

#include <cstdint>
#include <string>

#include "stegnet/models.hpp"

namespace stegnet {

struct Checkpoint {
    ModelConfig cfg;
    ParamStore params;
    int64_t step = 0;
    // Negative means "not recorded yet".
    float best_val_ber = -1.0f;
    float best_val_psnr = -1.0f;
};

// Fresh checkpoint with seeded initial parameters.
Checkpoint make_checkpoint(const ModelConfig& cfg);

// Serializes to memory (exact on-disk bytes, CRC included).
std::vector<uint8_t> serialize_checkpoint(const Checkpoint& ck);

// Atomic: writes to a temp file in the same directory, then renames.
void save_checkpoint(const Checkpoint& ck, const std::string& path);

// Verifies magic, version, CRC, and that stored tensors exactly match the
// parameter set implied by the stored config; throws IntegrityError.
Checkpoint load_checkpoint(const std::string& path);
Checkpoint parse_checkpoint(const std::vector<uint8_t>& bytes);

} // namespace stegnet
