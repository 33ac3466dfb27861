// Copyright 2026 The qroute Authors.
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

// Prompt encoders: text -> fixed-dimension dense embedding.
//
// Two providers sit behind the Encoder interface:
//
//  * HashedNgramEncoder: ASCII-lowercased whitespace tokens; word unigrams,
//    word bigrams and character trigrams of "#token#" are feature-hashed with
//    a sign bit into `dim` buckets, then L2-normalized. The empty prompt maps
//    to the zero vector.
//  * PrecomputedEncoder: looks embeddings up by prompt id in a store file.
//
// Embedding store format (text, one record per line):
//
//   qroute-embeddings <version> <dim> <count>
//   <prompt_id>\t<v0> <v1> ... <v(dim-1)>
//   ...
//
// Prompt ids may not contain tabs or newlines. Values are written with 17
// significant digits so a store round-trips exactly.

#ifndef QROUTE_ENCODER_H_
#define QROUTE_ENCODER_H_

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace qroute {

inline constexpr int kEmbeddingStoreVersion = 1;

struct PromptEmbedding {
  std::vector<double> values;
  std::string encoder_id;
  std::string prompt_id;
};

enum class EncoderKind { kHashedNgram, kPrecomputed };

struct EncoderSpec {
  EncoderKind kind = EncoderKind::kHashedNgram;
  int dim = 768;
  uint64_t seed = 0x9e3779b97f4a7c15ULL;
  bool word_unigrams = true;
  bool word_bigrams = true;
  bool char_trigrams = true;
  std::string store_path;  // precomputed only

  friend bool operator==(const EncoderSpec&, const EncoderSpec&) = default;
};

// Canonical identifier, e.g. "hashed-ngram/v1/d=64/seed=...".
std::string EncoderIdOf(const EncoderSpec& spec);

class Encoder {
 public:
  virtual ~Encoder() = default;

  virtual int dim() const = 0;
  virtual const std::string& id() const = 0;
  virtual const EncoderSpec& spec() const = 0;
  // Pure; safe to call concurrently.
  virtual PromptEmbedding Encode(std::string_view prompt_id,
                                 std::string_view prompt) const = 0;
};

struct PromptInput {
  std::string id;
  std::string text;
};

// Order-preserving. A failure at element i is rethrown with the index.
std::vector<PromptEmbedding> EncodeBatch(const Encoder& encoder,
                                         std::span<const PromptInput> prompts);

class HashedNgramEncoder final : public Encoder {
 public:
  explicit HashedNgramEncoder(EncoderSpec spec);

  int dim() const override { return spec_.dim; }
  const std::string& id() const override { return id_; }
  const EncoderSpec& spec() const override { return spec_; }
  PromptEmbedding Encode(std::string_view prompt_id,
                         std::string_view prompt) const override;

 private:
  void Add(std::string_view feature, uint64_t salt, std::vector<double>& out) const;

  EncoderSpec spec_;
  std::string id_;
};

class EmbeddingStore {
 public:
  EmbeddingStore(int dim, std::vector<std::string> ids,
                 std::vector<std::vector<double>> vectors);

  int dim() const { return dim_; }
  size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }
  // Throws kNotFound naming the id.
  const std::vector<double>& Lookup(std::string_view prompt_id) const;

 private:
  int dim_;
  std::vector<std::string> ids_;
  std::vector<std::vector<double>> vectors_;
  std::unordered_map<std::string, size_t> index_;
};

EmbeddingStore LoadPrecomputed(const std::string& path);
EmbeddingStore ParsePrecomputed(std::string_view text);
std::string SerializePrecomputed(const EmbeddingStore& store);

class PrecomputedEncoder final : public Encoder {
 public:
  PrecomputedEncoder(EncoderSpec spec, std::shared_ptr<const EmbeddingStore> store);

  int dim() const override { return store_->dim(); }
  const std::string& id() const override { return id_; }
  const EncoderSpec& spec() const override { return spec_; }
  // The prompt text is ignored; lookup is by id.
  PromptEmbedding Encode(std::string_view prompt_id,
                         std::string_view prompt) const override;

 private:
  EncoderSpec spec_;
  std::shared_ptr<const EmbeddingStore> store_;
  std::string id_;
};

// Builds the provider named by spec.kind; loads the store for kPrecomputed.
std::unique_ptr<Encoder> MakeEncoder(const EncoderSpec& spec);

}  // namespace qroute

#endif  // QROUTE_ENCODER_H_
