// SPDX-License-Identifier: Apache-2.0
//
// Binary checkpoint: "AVF1", u64 little-endian manifest length, JSON
// manifest, then little-endian float32 tensor data.
#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "advf/model.hpp"
#include "advf/tokenizer.hpp"

namespace advf {

inline constexpr int kCheckpointVersion = 1;

struct CheckpointEntry {
  std::string name;
  Shape shape;
  std::string group;
  std::uint64_t offset = 0;  // bytes from the start of the data section
  std::uint64_t length = 0;  // bytes
};

/// What the adapter slots held when the checkpoint was written.
struct Attachment {
  Mechanism mechanism = Mechanism::kNone;
  std::string adapter_tag;              // kAdapter
  std::vector<std::string> stack_tags;  // kFusion
  FusionMode fusion_mode = FusionMode::kFusion;
};

struct CheckpointManifest {
  int format_version = kCheckpointVersion;
  ModelConfig config;
  std::uint64_t seed = 0;
  Attachment attachment;
  std::vector<CheckpointEntry> entries;
  std::uint64_t checksum = 0;  // FNV-1a over the data section
  std::optional<std::string> vocabulary;  // serialized Vocabulary
  std::string meta;                       // free-form JSON object text

  std::vector<std::string> groups() const;
  std::uint64_t data_bytes() const;
};

std::string to_string(Mechanism m);
Mechanism parse_mechanism_kind(const std::string& s);

template <typename T>
Attachment attachment_of(const TransformerModel<T>& model);

/// Writes every registered parameter. Throws DataError when the path is not
/// writable.
template <typename T>
void save_checkpoint(const TransformerModel<T>& model, const std::string& path,
                     const Vocabulary* vocab = nullptr, const std::string& meta = "{}");

/// Reads and validates the header and manifest only. Throws IntegrityError,
/// VersionError or DataError (missing file).
CheckpointManifest read_manifest(const std::string& path);

template <typename T>
struct LoadedCheckpoint {
  TransformerModel<T> model;
  std::optional<Vocabulary> vocab;
  CheckpointManifest manifest;
};

/// Rebuilds the model, every parameter group and the attachment.
template <typename T>
LoadedCheckpoint<T> load_checkpoint(const std::string& path);

/// Copies the listed groups into `model`, registering missing adapter,
/// fusion or LoRA parameters. Nothing is modified unless every check passes.
/// Throws LookupError for a group absent from the file and DimensionError
/// naming the first entry whose shape differs.
template <typename T>
void load_groups(TransformerModel<T>& model, const std::string& path,
                 const std::set<std::string>& groups);

}  // namespace advf
