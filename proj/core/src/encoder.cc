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

#include "qroute/encoder.h"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "qroute/error.h"
#include "qroute/util.h"

namespace qroute {
namespace {

constexpr uint64_t kUnigramSalt = 0x756e69ULL;
constexpr uint64_t kBigramSalt = 0x626967ULL;
constexpr uint64_t kTrigramSalt = 0x747269ULL;

bool IsSpace(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::vector<std::string_view> Tokenize(std::string_view lowered) {
  std::vector<std::string_view> tokens;
  size_t i = 0;
  while (i < lowered.size()) {
    while (i < lowered.size() && IsSpace(lowered[i])) ++i;
    const size_t start = i;
    while (i < lowered.size() && !IsSpace(lowered[i])) ++i;
    if (i > start) tokens.push_back(lowered.substr(start, i - start));
  }
  return tokens;
}

}  // namespace

std::string EncoderIdOf(const EncoderSpec& spec) {
  if (spec.kind == EncoderKind::kPrecomputed) {
    return "precomputed/v1/d=" + std::to_string(spec.dim);
  }
  std::string grams;
  if (spec.word_unigrams) grams += "w1";
  if (spec.word_bigrams) grams += "w2";
  if (spec.char_trigrams) grams += "c3";
  return "hashed-ngram/v1/d=" + std::to_string(spec.dim) +
         "/seed=" + HexDigest(spec.seed) + "/grams=" + grams;
}

std::vector<PromptEmbedding> EncodeBatch(const Encoder& encoder,
                                         std::span<const PromptInput> prompts) {
  std::vector<PromptEmbedding> out;
  out.reserve(prompts.size());
  for (size_t i = 0; i < prompts.size(); ++i) {
    try {
      out.push_back(encoder.Encode(prompts[i].id, prompts[i].text));
    } catch (const Error& e) {
      throw Error(e.code(), "batch element " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

HashedNgramEncoder::HashedNgramEncoder(EncoderSpec spec) : spec_(std::move(spec)) {
  if (spec_.dim < 1) ThrowInvalidArgument("encoder dimension must be >= 1");
  if (!spec_.word_unigrams && !spec_.word_bigrams && !spec_.char_trigrams) {
    ThrowInvalidArgument("hashed encoder needs at least one n-gram family");
  }
  spec_.kind = EncoderKind::kHashedNgram;
  id_ = EncoderIdOf(spec_);
}

void HashedNgramEncoder::Add(std::string_view feature, uint64_t salt,
                             std::vector<double>& out) const {
  const uint64_t h = Mix64(Fnv1a64(feature, spec_.seed ^ Mix64(salt)));
  const size_t bucket = static_cast<size_t>(h % static_cast<uint64_t>(spec_.dim));
  out[bucket] += (h >> 63) ? -1.0 : 1.0;
}

PromptEmbedding HashedNgramEncoder::Encode(std::string_view prompt_id,
                                           std::string_view prompt) const {
  PromptEmbedding embedding;
  embedding.encoder_id = id_;
  embedding.prompt_id = std::string(prompt_id);
  embedding.values.assign(static_cast<size_t>(spec_.dim), 0.0);

  std::string lowered(prompt);
  for (char& c : lowered) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  const std::vector<std::string_view> tokens = Tokenize(lowered);
  std::string scratch;
  for (size_t t = 0; t < tokens.size(); ++t) {
    if (spec_.word_unigrams) Add(tokens[t], kUnigramSalt, embedding.values);
    if (spec_.word_bigrams && t > 0) {
      scratch.assign(tokens[t - 1]);
      scratch += '\x1f';
      scratch += tokens[t];
      Add(scratch, kBigramSalt, embedding.values);
    }
    if (spec_.char_trigrams) {
      scratch.assign("#");
      scratch += tokens[t];
      scratch += '#';
      for (size_t i = 0; i + 3 <= scratch.size(); ++i) {
        Add(std::string_view(scratch).substr(i, 3), kTrigramSalt, embedding.values);
      }
    }
  }

  double norm_sq = 0.0;
  for (double v : embedding.values) norm_sq += v * v;
  if (norm_sq > 0.0) {
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (double& v : embedding.values) v *= inv;
  }
  return embedding;
}

EmbeddingStore::EmbeddingStore(int dim, std::vector<std::string> ids,
                               std::vector<std::vector<double>> vectors)
    : dim_(dim), ids_(std::move(ids)), vectors_(std::move(vectors)) {
  if (dim_ < 1) ThrowInvalidArgument("embedding store dimension must be >= 1");
  if (ids_.size() != vectors_.size()) {
    ThrowInvalidArgument("embedding store ids and vectors differ in length");
  }
  for (size_t i = 0; i < ids_.size(); ++i) {
    if (static_cast<int>(vectors_[i].size()) != dim_) {
      ThrowInvalidArgument("embedding row " + std::to_string(i) + " has dimension " +
                           std::to_string(vectors_[i].size()) + ", expected " +
                           std::to_string(dim_));
    }
    for (double v : vectors_[i]) {
      if (!std::isfinite(v)) {
        ThrowInvalidArgument("embedding row " + std::to_string(i) +
                             " has a non-finite entry");
      }
    }
    if (!index_.emplace(ids_[i], i).second) {
      ThrowInvalidArgument("duplicate prompt id '" + ids_[i] + "' in embedding store");
    }
  }
}

const std::vector<double>& EmbeddingStore::Lookup(std::string_view prompt_id) const {
  auto it = index_.find(std::string(prompt_id));
  if (it == index_.end()) {
    ThrowNotFound("no precomputed embedding for prompt '" + std::string(prompt_id) + "'");
  }
  return vectors_[it->second];
}

EmbeddingStore ParsePrecomputed(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) ThrowDataLoss("embedding store is empty");
  std::istringstream header(line);
  std::string magic;
  int version = 0;
  int dim = 0;
  long long count = -1;
  header >> magic >> version >> dim >> count;
  if (magic != "qroute-embeddings" || header.fail()) {
    ThrowDataLoss("embedding store header is malformed");
  }
  if (version != kEmbeddingStoreVersion) {
    ThrowDataLoss("unsupported embedding store version " + std::to_string(version));
  }
  if (dim < 1 || count < 0) ThrowDataLoss("embedding store header is malformed");

  std::vector<std::string> ids;
  std::vector<std::vector<double>> vectors;
  size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      ThrowDataLoss("embedding row " + std::to_string(row) + " has no tab separator");
    }
    std::vector<double> values;
    const char* p = line.c_str() + tab + 1;
    char* end = nullptr;
    while (true) {
      while (*p == ' ') ++p;
      if (*p == '\0') break;
      const double v = std::strtod(p, &end);
      if (end == p) {
        ThrowDataLoss("embedding row " + std::to_string(row) + " has a malformed value");
      }
      values.push_back(v);
      p = end;
    }
    if (static_cast<int>(values.size()) != dim) {
      ThrowInvalidArgument("embedding row " + std::to_string(row) + " has dimension " +
                           std::to_string(values.size()) + ", expected " +
                           std::to_string(dim));
    }
    ids.push_back(line.substr(0, tab));
    vectors.push_back(std::move(values));
    ++row;
  }
  if (static_cast<long long>(ids.size()) != count) {
    ThrowDataLoss("embedding store declares " + std::to_string(count) +
                  " rows but has " + std::to_string(ids.size()));
  }
  return EmbeddingStore(dim, std::move(ids), std::move(vectors));
}

EmbeddingStore LoadPrecomputed(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) ThrowNotFound("cannot open embedding store '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParsePrecomputed(buffer.str());
}

std::string SerializePrecomputed(const EmbeddingStore& store) {
  std::string out = "qroute-embeddings " + std::to_string(kEmbeddingStoreVersion) + " " +
                    std::to_string(store.dim()) + " " + std::to_string(store.size()) + "\n";
  char buf[32];
  for (const std::string& id : store.ids()) {
    out += id;
    out += '\t';
    const std::vector<double>& values = store.Lookup(id);
    for (size_t i = 0; i < values.size(); ++i) {
      if (i > 0) out += ' ';
      std::snprintf(buf, sizeof(buf), "%.17g", values[i]);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

PrecomputedEncoder::PrecomputedEncoder(EncoderSpec spec,
                                       std::shared_ptr<const EmbeddingStore> store)
    : spec_(std::move(spec)), store_(std::move(store)) {
  if (!store_) ThrowInvalidArgument("precomputed encoder needs a store");
  spec_.kind = EncoderKind::kPrecomputed;
  spec_.dim = store_->dim();
  id_ = EncoderIdOf(spec_);
}

PromptEmbedding PrecomputedEncoder::Encode(std::string_view prompt_id,
                                           std::string_view /*prompt*/) const {
  PromptEmbedding embedding;
  embedding.values = store_->Lookup(prompt_id);
  embedding.encoder_id = id_;
  embedding.prompt_id = std::string(prompt_id);
  return embedding;
}

std::unique_ptr<Encoder> MakeEncoder(const EncoderSpec& spec) {
  switch (spec.kind) {
    case EncoderKind::kHashedNgram:
      return std::make_unique<HashedNgramEncoder>(spec);
    case EncoderKind::kPrecomputed: {
      auto store = std::make_shared<const EmbeddingStore>(LoadPrecomputed(spec.store_path));
      if (spec.dim != store->dim()) {
        ThrowInvalidArgument("embedding store dimension " + std::to_string(store->dim()) +
                             " does not match encoder spec dimension " +
                             std::to_string(spec.dim));
      }
      return std::make_unique<PrecomputedEncoder>(spec, std::move(store));
    }
  }
  ThrowInvalidArgument("unknown encoder kind");
}

}  // namespace qroute
