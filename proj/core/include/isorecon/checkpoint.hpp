// Copyright (c) 2026 the isorecon authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>

#include "isorecon/model.hpp"

namespace isorecon {

/// Container: magic, version, embedded human-readable JSON metadata
/// (schedule params, normalization, config, provenance, tensor manifest),
/// then the raw and EMA float32 payloads. Load followed by save is
/// byte-identical.
void save_checkpoint(const std::filesystem::path& path, const DenoiserCheckpoint& ckpt);
DenoiserCheckpoint load_checkpoint(const std::filesystem::path& path);

/// The embedded metadata record as a JSON string (for provenance echoing).
std::string checkpoint_metadata_json(const DenoiserCheckpoint& ckpt);

}  // namespace isorecon
