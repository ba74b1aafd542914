#pragma once

#include "pointprompt/config.hpp"
#include "pointprompt/model.hpp"
#include "pointprompt/optimizer.hpp"

#include <string>

namespace pointprompt {

/// Versioned binary container: magic, format version, config hash, the
/// resolved config text, a name/shape table with raw little-endian f64 value
/// blocks per parameter, optional optimizer state, and a trailing SHA-256
/// checksum. Save -> load -> save is byte-identical.
///
/// Layout (all integers little-endian):
///   magic           8 bytes "3DPROMPT"
///   version         u32
///   config_hash     u32 length + hex string
///   config_text     u32 length + bytes
///   step            u64
///   param_count     u32
///     per parameter: name (u32 + bytes), rank u32, dims i64[rank],
///                    values f64[prod(dims)]
///   has_optimizer   u8
///     if set: opt_step u64, entry_count u32,
///             per entry: name (u32 + bytes), size u64, m f64[size], v f64[size]
///   checksum        32 raw bytes, SHA-256 of everything before it

void save_checkpoint(Model& model, const AdamW* optimizer, Index step,
                     const std::string& path);

// The resolved config embedded in a checkpoint (validated against the stored
// hash), without touching parameter data.
RunConfig read_checkpoint_config(const std::string& path);

// Fills an already-built model (and optionally an optimizer) from the file.
// Shape or name mismatches raise CheckpointError naming the parameter.
// Returns the stored step.
Index load_checkpoint_into(Model& model, AdamW* optimizer, const std::string& path);

// Copies only the backbone parameters ("text.", "image.", "point." prefixes)
// out of a checkpoint into an already-built model. Every backbone parameter
// must be covered at the right shape.
void load_backbone_into(Model& model, const std::string& path);

}  // namespace pointprompt
