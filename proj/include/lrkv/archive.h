// Copyright 2026 The LRKV Lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LRKV_ARCHIVE_H_
#define LRKV_ARCHIVE_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "lrkv/config.h"
#include "lrkv/weights.h"

namespace lrkv {

// On-disk layout:
//   8 bytes   magic "LRKVARC\0"
//   8 bytes   header length n, little-endian u64
//   n bytes   UTF-8 JSON header {format_version, metadata, tensors[], blob_bytes,
//             blob_fnv1a64}
//   blob      tensors back to back, little-endian, row-major
inline constexpr int kArchiveFormatVersion = 1;

struct TensorEntry {
  std::string name;
  std::string dtype;  // "f32" | "f64"
  std::vector<std::int64_t> shape;
  std::uint64_t offset = 0;
  std::uint64_t length = 0;
};

struct TensorArchive {
  int format_version = kArchiveFormatVersion;
  nlohmann::json metadata = nlohmann::json::object();
  std::vector<TensorEntry> manifest;
  std::vector<std::byte> blob;
};

std::uint64_t fnv1a64(const std::vector<std::byte>& bytes);

void save_tensor_archive(const TensorArchive& archive,
                         const std::filesystem::path& path);

// Validates magic, version, manifest layout and checksum; throws LoadError
// naming the offending field. Never returns a partial archive.
TensorArchive load_tensor_archive(const std::filesystem::path& path);

nlohmann::json config_to_json(const AttentionConfig& config);
// Overrides fields of `base` present in `j` (same names as config_to_json);
// unknown keys are rejected.
AttentionConfig config_from_json(const nlohmann::json& j,
                                 AttentionConfig base = {});

template <typename T>
struct LoadedWeights {
  AttentionConfig config;
  WeightSet<T> weights;
};

template <typename T>
void write_archive(const WeightSet<T>& weights, const AttentionConfig& config,
                   const std::filesystem::path& path);

// Tensors must be stored with T's dtype; the config comes from the metadata.
template <typename T>
LoadedWeights<T> read_archive(const std::filesystem::path& path);

// "f32" or "f64" (the dtype of the first tensor).
std::string archive_dtype(const std::filesystem::path& path);

}  // namespace lrkv

#endif  // LRKV_ARCHIVE_H_
