// Copyright 2026 The Inoculation Harness Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Checkpoint file layout:
//
//   bytes 0..7    magic "INOCCKPT"
//   bytes 8..11   format version, uint32 little-endian (currently 1)
//   bytes 12..19  header length N, uint64 little-endian
//   next N bytes  UTF-8 JSON header: feature_config, hidden, seed, history,
//                 and the length of each payload block
//   remainder     float64 little-endian payload: weights, bias,
//                 out_weights, out_bias, in that order

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <utility>
#include <vector>

#include "inoc/errors.hpp"
#include "inoc/model.hpp"
#include "json.hpp"

namespace inoc {

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double learning_rate = 0.0;
  double train_loss = 0.0;
  double dev_accuracy = 0.0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct Checkpoint {
  ModelParams params;
  std::vector<EpochRecord> history;
  std::uint64_t seed = 0;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

inline constexpr char kCheckpointMagic[8] = {'I', 'N', 'O', 'C', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

inline nlohmann::ordered_json feature_config_to_json(const FeatureConfig& c) {
  nlohmann::ordered_json j;
  j["hash_dim"] = c.hash_dim;
  j["use_unigrams"] = c.use_unigrams;
  j["use_bigrams"] = c.use_bigrams;
  j["use_cross_overlap"] = c.use_cross_overlap;
  j["use_char_ngrams"] = c.use_char_ngrams;
  return j;
}

inline FeatureConfig feature_config_from_json(const nlohmann::json& j,
                                              FeatureConfig c = {}) {
  if (!j.is_object()) throw ConfigError("feature config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "hash_dim") c.hash_dim = value.get<std::size_t>();
      else if (key == "use_unigrams") c.use_unigrams = value.get<bool>();
      else if (key == "use_bigrams") c.use_bigrams = value.get<bool>();
      else if (key == "use_cross_overlap") c.use_cross_overlap = value.get<bool>();
      else if (key == "use_char_ngrams") c.use_char_ngrams = value.get<bool>();
      else throw ConfigError("unknown key '" + key + "' in feature config");
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("bad value for '" + key + "' in feature config");
    }
  }
  c.validate();
  return c;
}

inline nlohmann::ordered_json epoch_record_to_json(const EpochRecord& r) {
  nlohmann::ordered_json j;
  j["epoch"] = r.epoch;
  j["lr"] = r.learning_rate;
  j["train_loss"] = r.train_loss;
  j["dev_acc"] = r.dev_accuracy;
  return j;
}

namespace detail {

template <typename T>
T byteswap(T value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

template <typename T>
void put_le(std::string& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  if constexpr (std::endian::native == std::endian::big) {
    value = byteswap(value);
  }
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  out.append(bytes, sizeof(T));
}

template <typename T>
T get_le(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw DataError("checkpoint is truncated");
  T value;
  std::memcpy(&value, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  if constexpr (std::endian::native == std::endian::big) {
    value = byteswap(value);
  }
  return value;
}

inline void put_doubles(std::string& out, const std::vector<double>& v) {
  for (double d : v) put_le(out, std::bit_cast<std::uint64_t>(d));
}

inline std::vector<double> get_doubles(const std::string& in, std::size_t& pos,
                                       std::size_t n) {
  std::vector<double> v(n);
  for (double& d : v) d = std::bit_cast<double>(get_le<std::uint64_t>(in, pos));
  return v;
}

}  // namespace detail

inline std::string serialize_checkpoint(const Checkpoint& c) {
  nlohmann::ordered_json header;
  header["feature_config"] = feature_config_to_json(c.params.features);
  header["hidden"] = c.params.hidden;
  header["seed"] = c.seed;
  nlohmann::ordered_json history = nlohmann::ordered_json::array();
  for (const EpochRecord& r : c.history) history.push_back(epoch_record_to_json(r));
  header["history"] = std::move(history);
  header["payload"] = {{"weights", c.params.weights.size()},
                       {"bias", c.params.bias.size()},
                       {"out_weights", c.params.out_weights.size()},
                       {"out_bias", c.params.out_bias.size()}};
  const std::string text = header.dump();

  std::string out(kCheckpointMagic, sizeof(kCheckpointMagic));
  detail::put_le(out, kCheckpointVersion);
  detail::put_le(out, static_cast<std::uint64_t>(text.size()));
  out += text;
  detail::put_doubles(out, c.params.weights);
  detail::put_doubles(out, c.params.bias);
  detail::put_doubles(out, c.params.out_weights);
  detail::put_doubles(out, c.params.out_bias);
  return out;
}

inline Checkpoint deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < sizeof(kCheckpointMagic) ||
      std::memcmp(bytes.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0) {
    throw DataError("not a checkpoint file (bad magic)");
  }
  std::size_t pos = sizeof(kCheckpointMagic);
  const auto version = detail::get_le<std::uint32_t>(bytes, pos);
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto header_len = detail::get_le<std::uint64_t>(bytes, pos);
  if (pos + header_len > bytes.size()) throw DataError("checkpoint is truncated");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(pos, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad checkpoint header: ") + e.what());
  }
  pos += header_len;

  Checkpoint c;
  try {
    c.params.features = feature_config_from_json(header.at("feature_config"));
    c.params.hidden = header.at("hidden").get<std::size_t>();
    c.seed = header.at("seed").get<std::uint64_t>();
    for (const auto& r : header.at("history")) {
      c.history.push_back({r.at("epoch").get<std::size_t>(), r.at("lr").get<double>(),
                           r.at("train_loss").get<double>(),
                           r.at("dev_acc").get<double>()});
    }
    const auto& payload = header.at("payload");
    c.params.weights = detail::get_doubles(bytes, pos, payload.at("weights").get<std::size_t>());
    c.params.bias = detail::get_doubles(bytes, pos, payload.at("bias").get<std::size_t>());
    c.params.out_weights =
        detail::get_doubles(bytes, pos, payload.at("out_weights").get<std::size_t>());
    c.params.out_bias = detail::get_doubles(bytes, pos, payload.at("out_bias").get<std::size_t>());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad checkpoint header: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("bad checkpoint header: ") + e.what());
  }
  if (pos != bytes.size()) throw DataError("trailing bytes after checkpoint payload");
  c.params.check_shape();
  if (!c.params.all_finite()) throw DataError("checkpoint contains non-finite values");
  return c;
}

inline void save_checkpoint(const Checkpoint& c, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeError("cannot open '" + path + "' for writing");
  const std::string bytes = serialize_checkpoint(c);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw RuntimeError("write to '" + path + "' failed");
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint '" + path + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace inoc
