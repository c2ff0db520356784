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

#include "lrkv/archive.h"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "lrkv/errors.h"

namespace lrkv {
namespace {

constexpr char kMagic[8] = {'L', 'R', 'K', 'V', 'A', 'R', 'C', '\0'};

template <typename T>
constexpr const char* dtype_of() {
  return sizeof(T) == 4 ? "f32" : "f64";
}

std::size_t dtype_size(const std::string& dtype) {
  if (dtype == "f32") return 4;
  if (dtype == "f64") return 8;
  throw LoadError("unsupported dtype '" + dtype + "'");
}

void put_u64_le(std::ostream& os, std::uint64_t v) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = char((v >> (8 * i)) & 0xff);
  os.write(bytes, 8);
}

std::uint64_t get_u64_le(const unsigned char* bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(bytes[i]) << (8 * i);
  return v;
}

// Appends `values` to the blob as little-endian bytes.
template <typename T>
void append_le(std::vector<std::byte>& blob, std::span<const T> values) {
  const std::size_t start = blob.size();
  blob.resize(start + values.size() * sizeof(T));
  std::memcpy(blob.data() + start, values.data(), values.size() * sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = start; i < blob.size(); i += sizeof(T))
      std::reverse(blob.begin() + i, blob.begin() + i + sizeof(T));
  }
}

template <typename T>
void read_le(const std::byte* src, std::span<T> dst) {
  std::memcpy(dst.data(), src, dst.size() * sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    auto* bytes = reinterpret_cast<std::byte*>(dst.data());
    for (std::size_t i = 0; i < dst.size() * sizeof(T); i += sizeof(T))
      std::reverse(bytes + i, bytes + i + sizeof(T));
  }
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

}  // namespace

std::uint64_t fnv1a64(const std::vector<std::byte>& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::byte b : bytes) {
    h ^= std::uint64_t(b);
    h *= 0x100000001b3ULL;
  }
  return h;
}

void save_tensor_archive(const TensorArchive& archive,
                         const std::filesystem::path& path) {
  nlohmann::json header;
  header["format_version"] = archive.format_version;
  header["metadata"] = archive.metadata;
  header["tensors"] = nlohmann::json::array();
  for (const auto& e : archive.manifest) {
    header["tensors"].push_back({{"name", e.name},
                                 {"dtype", e.dtype},
                                 {"shape", e.shape},
                                 {"offset", e.offset},
                                 {"length", e.length}});
  }
  header["blob_bytes"] = archive.blob.size();
  header["blob_fnv1a64"] = hex64(fnv1a64(archive.blob));
  const std::string text = header.dump();

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open '" + path.string() + "' for writing");
  os.write(kMagic, sizeof(kMagic));
  put_u64_le(os, text.size());
  os.write(text.data(), std::streamsize(text.size()));
  os.write(reinterpret_cast<const char*>(archive.blob.data()),
           std::streamsize(archive.blob.size()));
  if (!os) throw Error("write to '" + path.string() + "' failed");
}

TensorArchive load_tensor_archive(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw LoadError("cannot open '" + path.string() + "'");
  std::vector<char> file((std::istreambuf_iterator<char>(is)),
                         std::istreambuf_iterator<char>());
  if (file.size() < 16) throw LoadError("file too short for an archive header");
  if (std::memcmp(file.data(), kMagic, sizeof(kMagic)) != 0)
    throw LoadError("bad magic: not a tensor archive");
  const std::uint64_t header_len =
      get_u64_le(reinterpret_cast<const unsigned char*>(file.data() + 8));
  if (header_len > file.size() - 16) {
    throw LoadError("header length " + std::to_string(header_len) +
                    " exceeds file size (truncated header)");
  }

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(file.begin() + 16,
                                   file.begin() + 16 + std::ptrdiff_t(header_len));
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("header is not valid JSON: ") + e.what());
  }

  TensorArchive archive;
  try {
    archive.format_version = header.at("format_version").get<int>();
    if (archive.format_version != kArchiveFormatVersion) {
      throw LoadError("format_version " + std::to_string(archive.format_version) +
                      " is not supported (expected " +
                      std::to_string(kArchiveFormatVersion) + ")");
    }
    archive.metadata = header.value("metadata", nlohmann::json::object());
    const std::uint64_t blob_bytes = header.at("blob_bytes").get<std::uint64_t>();
    const std::uint64_t available = file.size() - 16 - header_len;
    if (available != blob_bytes) {
      throw LoadError("blob_bytes is " + std::to_string(blob_bytes) + " but " +
                      std::to_string(available) + " bytes follow the header" +
                      (available < blob_bytes ? " (truncated blob)" : ""));
    }

    std::set<std::string> names;
    std::uint64_t next_free = 0;
    for (const auto& t : header.at("tensors")) {
      TensorEntry e;
      e.name = t.at("name").get<std::string>();
      e.dtype = t.at("dtype").get<std::string>();
      e.shape = t.at("shape").get<std::vector<std::int64_t>>();
      e.offset = t.at("offset").get<std::uint64_t>();
      e.length = t.at("length").get<std::uint64_t>();
      if (!names.insert(e.name).second)
        throw LoadError("duplicate tensor name '" + e.name + "'");
      std::uint64_t count = 1;
      for (std::int64_t s : e.shape) {
        if (s < 0) throw LoadError("tensor '" + e.name + "' has a negative dimension");
        count *= std::uint64_t(s);
      }
      if (e.length != count * dtype_size(e.dtype)) {
        throw LoadError("tensor '" + e.name + "' length " +
                        std::to_string(e.length) + " does not match shape and dtype");
      }
      if (e.offset < next_free) {
        throw LoadError("tensor '" + e.name +
                        "' offset overlaps the previous tensor or is not ascending");
      }
      if (e.offset + e.length > blob_bytes)
        throw LoadError("tensor '" + e.name + "' extends past the end of the blob");
      next_free = e.offset + e.length;
      archive.manifest.push_back(std::move(e));
    }

    const char* blob_start = file.data() + 16 + header_len;
    archive.blob.resize(blob_bytes);
    std::memcpy(archive.blob.data(), blob_start, blob_bytes);
    const std::string want = header.at("blob_fnv1a64").get<std::string>();
    if (hex64(fnv1a64(archive.blob)) != want)
      throw LoadError("blob checksum mismatch (blob_fnv1a64)");
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("malformed manifest: ") + e.what());
  }
  return archive;
}

nlohmann::json config_to_json(const AttentionConfig& c) {
  nlohmann::json j = {{"mechanism", std::string(mechanism_name(c.mechanism))},
                      {"d", c.d_model},
                      {"H", c.n_heads},
                      {"d_h", c.head_dim},
                      {"n_layers", c.n_layers},
                      {"r", c.rank},
                      {"d_c", c.latent_dim},
                      {"G", c.kv_groups},
                      {"qk_norm", c.qk_norm}};
  if (c.softmax_scale) j["softmax_scale"] = *c.softmax_scale;
  return j;
}

AttentionConfig config_from_json(const nlohmann::json& j, AttentionConfig c) {
  if (!j.is_object()) throw ConfigError("config JSON must be an object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "mechanism") {
        c.mechanism = parse_mechanism(value.get<std::string>());
      } else if (key == "d") {
        c.d_model = value.get<int>();
      } else if (key == "H") {
        c.n_heads = value.get<int>();
      } else if (key == "d_h") {
        c.head_dim = value.get<int>();
      } else if (key == "n_layers") {
        c.n_layers = value.get<int>();
      } else if (key == "r") {
        c.rank = value.get<int>();
      } else if (key == "d_c") {
        c.latent_dim = value.get<int>();
      } else if (key == "G") {
        c.kv_groups = value.get<int>();
      } else if (key == "qk_norm") {
        c.qk_norm = value.get<bool>();
      } else if (key == "softmax_scale") {
        if (value.is_null()) {
          c.softmax_scale.reset();
        } else {
          c.softmax_scale = value.get<double>();
        }
      } else {
        throw ConfigError("unknown config field '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config field has the wrong type: ") + e.what());
  }
  return c;
}

template <typename T>
void write_archive(const WeightSet<T>& weights, const AttentionConfig& config,
                   const std::filesystem::path& path) {
  weights.check(config);
  TensorArchive archive;
  archive.metadata["config"] = config_to_json(config);
  archive.metadata["rng_algorithm"] = std::string(RngSpec::kAlgorithm);
  weights.for_each_tensor([&archive](const std::string& name, const Matrix<T>& m) {
    TensorEntry e;
    e.name = name;
    e.dtype = dtype_of<T>();
    e.shape = {std::int64_t(m.rows()), std::int64_t(m.cols())};
    e.offset = archive.blob.size();
    e.length = m.size() * sizeof(T);
    append_le<T>(archive.blob, m.values());
    archive.manifest.push_back(std::move(e));
  });
  save_tensor_archive(archive, path);
}

template <typename T>
LoadedWeights<T> read_archive(const std::filesystem::path& path) {
  const TensorArchive archive = load_tensor_archive(path);
  LoadedWeights<T> out;
  if (!archive.metadata.contains("config"))
    throw LoadError("metadata has no 'config' entry");
  try {
    out.config = config_from_json(archive.metadata.at("config"));
    out.config.validate();
  } catch (const ConfigError& e) {
    throw LoadError(std::string("metadata.config: ") + e.what());
  }

  std::map<std::string, std::vector<Matrix<T>>*> lists = {
      {"wq", &out.weights.wq},         {"wk", &out.weights.wk},
      {"wv", &out.weights.wv},         {"w_up_k", &out.weights.w_up_k},
      {"w_up_v", &out.weights.w_up_v}, {"u_k", &out.weights.u_k},
      {"u_v", &out.weights.u_v},       {"b_k", &out.weights.b_k},
      {"b_v", &out.weights.b_v}};
  for (const TensorEntry& e : archive.manifest) {
    if (e.dtype != dtype_of<T>()) {
      throw LoadError("tensor '" + e.name + "' has dtype " + e.dtype +
                      ", expected " + dtype_of<T>());
    }
    if (e.shape.size() != 2)
      throw LoadError("tensor '" + e.name + "' is not two-dimensional");
    Matrix<T> m(std::size_t(e.shape[0]), std::size_t(e.shape[1]));
    read_le<T>(archive.blob.data() + e.offset, m.values());
    if (e.name == "w_down") {
      out.weights.w_down = std::move(m);
      continue;
    }
    const auto dot = e.name.rfind('.');
    const auto it = dot == std::string::npos ? lists.end()
                                             : lists.find(e.name.substr(0, dot));
    if (it == lists.end()) throw LoadError("unknown tensor name '" + e.name + "'");
    std::size_t index = 0;
    try {
      index = std::stoul(e.name.substr(dot + 1));
    } catch (const std::exception&) {
      throw LoadError("tensor name '" + e.name + "' has a bad index");
    }
    if (index != it->second->size()) {
      throw LoadError("tensor '" + e.name + "' is out of order (expected index " +
                      std::to_string(it->second->size()) + ")");
    }
    it->second->push_back(std::move(m));
  }
  try {
    out.weights.check(out.config);
  } catch (const Error& e) {
    throw LoadError(std::string("archive does not match its config: ") + e.what());
  }
  return out;
}

std::string archive_dtype(const std::filesystem::path& path) {
  const TensorArchive archive = load_tensor_archive(path);
  if (archive.manifest.empty()) throw LoadError("archive holds no tensors");
  return archive.manifest.front().dtype;
}

template void write_archive<float>(const WeightSet<float>&, const AttentionConfig&,
                                   const std::filesystem::path&);
template void write_archive<double>(const WeightSet<double>&, const AttentionConfig&,
                                    const std::filesystem::path&);
template LoadedWeights<float> read_archive<float>(const std::filesystem::path&);
template LoadedWeights<double> read_archive<double>(const std::filesystem::path&);

}  // namespace lrkv
