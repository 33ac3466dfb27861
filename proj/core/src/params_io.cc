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


#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "qroute/error.h"
#include "qroute/estimator.h"

namespace qroute {
namespace {

using Json = nlohmann::ordered_json;

constexpr std::string_view kMagic = "QRPARAM\n";

void PutU64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

uint64_t GetU64(const unsigned char* p) {
  uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

struct Tensor {
  std::string name;
  std::vector<size_t> shape;
  std::vector<double>* data;
};

std::vector<Tensor> Manifest(EstimatorParameters& p) {
  const size_t d = p.predictor.input_dim;
  const size_t d_id = p.predictor.identity_dim;
  const size_t h = p.predictor.hidden;
  std::vector<Tensor> out = {
      {"predictor/w1", {h, d + d_id}, &p.predictor.w1},
      {"predictor/b1", {h}, &p.predictor.b1},
      {"predictor/w2", {h}, &p.predictor.w2},
  };
  for (IdentityEmbedding& e : p.identities) {
    out.push_back({"identity/" + e.candidate_id, {d_id}, &e.values});
  }
  if (p.adapter) {
    AdapterBlock& a = *p.adapter;
    const size_t w = a.prompt.width;
    const size_t hh = a.head.hidden;
    out.push_back({"adapter/prompt/wa", {w, d}, &a.prompt.wa});
    out.push_back({"adapter/prompt/ba", {w}, &a.prompt.ba});
    out.push_back({"adapter/prompt/wb", {d, w}, &a.prompt.wb});
    out.push_back({"adapter/prompt/bb", {d}, &a.prompt.bb});
    out.push_back({"adapter/identity/a", {d_id, d_id}, &a.lie.a});
    out.push_back({"adapter/identity/c", {d_id}, &a.lie.c});
    out.push_back({"adapter/identity/" + a.identity.candidate_id, {d_id}, &a.identity.values});
    out.push_back({"adapter/head/w1", {hh, d + d_id}, &a.head.w1});
    out.push_back({"adapter/head/b1", {hh}, &a.head.b1});
    out.push_back({"adapter/head/w2", {hh}, &a.head.w2});
  }
  return out;
}

size_t Elements(const std::vector<size_t>& shape) {
  size_t n = 1;
  for (size_t s : shape) n *= s;
  return n;
}

std::string_view KindName(EncoderKind kind) {
  return kind == EncoderKind::kPrecomputed ? "precomputed" : "hashed_ngram";
}

// Scalars that would otherwise lose bits in JSON travel as hex bit patterns.
std::string BitsOf(double v) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(std::bit_cast<uint64_t>(v)));
  return buf;
}

double DoubleOf(const std::string& hex) {
  if (hex.size() != 16) ThrowDataLoss("malformed scalar '" + hex + "' in parameter header");
  return std::bit_cast<double>(static_cast<uint64_t>(std::stoull(hex, nullptr, 16)));
}

}  // namespace

std::string SerializeParams(const EstimatorParameters& params_in) {
  EstimatorParameters params = params_in;
  const std::vector<Tensor> tensors = Manifest(params);
  Json header;
  header["format"] = "qroute-params";
  header["version"] = kParamsFormatVersion;
  header["family"] = params.family;
  header["input_dim"] = params.input_dim();
  header["identity_dim"] = params.identity_dim();
  header["hidden"] = params.hidden();
  const EncoderSpec& spec = params.encoder_spec;
  header["encoder"] = {{"kind", KindName(spec.kind)},
                       {"dim", spec.dim},
                       {"seed", std::to_string(spec.seed)},
                       {"word_unigrams", spec.word_unigrams},
                       {"word_bigrams", spec.word_bigrams},
                       {"char_trigrams", spec.char_trigrams},
                       {"store_path", spec.store_path}};
  header["encoder_id"] = params.encoder_id;
  Json candidates = Json::array();
  for (const IdentityEmbedding& e : params.identities) {
    candidates.push_back({{"id", e.candidate_id}, {"trainable", e.trainable}});
  }
  header["candidates"] = candidates;
  header["b2"] = BitsOf(params.predictor.b2);
  header["metadata"] = {{"loss", LossKindName(params.metadata.loss)},
                        {"seed", std::to_string(params.metadata.seed)},
                        {"steps", params.metadata.steps},
                        {"epochs", params.metadata.epochs}};
  if (params.adapter) {
    const AdapterBlock& a = *params.adapter;
    header["adapter"] = {{"candidate", a.identity.candidate_id},
                         {"width", a.prompt.width},
                         {"head_hidden", a.head.hidden},
                         {"head_b2", BitsOf(a.head.b2)},
                         {"consistency_weight", BitsOf(a.consistency_weight)},
                         {"steps", a.steps}};
  } else {
    header["adapter"] = nullptr;
  }
  Json manifest = Json::array();
  for (const Tensor& t : tensors) manifest.push_back({{"name", t.name}, {"shape", t.shape}});
  header["tensors"] = manifest;

  const std::string text = header.dump();
  std::string out(kMagic);
  PutU64(out, text.size());
  out += text;
  for (const Tensor& t : tensors) {
    if (t.data->size() != Elements(t.shape)) {
      ThrowInvalidArgument("tensor '" + t.name + "' has inconsistent shape");
    }
    for (double v : *t.data) PutU64(out, std::bit_cast<uint64_t>(v));
  }
  return out;
}

EstimatorParameters DeserializeParams(std::string_view bytes) {
  if (bytes.size() < kMagic.size() + 8) ThrowDataLoss("truncated parameter file");
  if (bytes.substr(0, kMagic.size()) != kMagic) ThrowDataLoss("not a qroute parameter file");
  const auto* base = reinterpret_cast<const unsigned char*>(bytes.data());
  const uint64_t header_len = GetU64(base + kMagic.size());
  size_t offset = kMagic.size() + 8;
  if (header_len > bytes.size() - offset) ThrowDataLoss("truncated parameter file header");

  Json header;
  try {
    header = Json::parse(bytes.substr(offset, header_len));
  } catch (const nlohmann::json::exception& e) {
    ThrowDataLoss(std::string("malformed parameter header: ") + e.what());
  }
  offset += header_len;

  EstimatorParameters p;
  try {
    if (header.at("format") != "qroute-params") ThrowDataLoss("not a qroute parameter file");
    const int version = header.at("version").get<int>();
    if (version != kParamsFormatVersion) {
      ThrowDataLoss("unsupported parameter file version " + std::to_string(version) +
                    " (expected " + std::to_string(kParamsFormatVersion) + ")");
    }
    p.family = header.at("family").get<std::string>();
    p.predictor.input_dim = header.at("input_dim").get<int>();
    p.predictor.identity_dim = header.at("identity_dim").get<int>();
    p.predictor.hidden = header.at("hidden").get<int>();
    if (p.input_dim() < 1 || p.identity_dim() < 1 || p.hidden() < 1) {
      ThrowDataLoss("parameter header has non-positive dimensions");
    }
    const Json& enc = header.at("encoder");
    const std::string kind = enc.at("kind").get<std::string>();
    if (kind == "hashed_ngram") {
      p.encoder_spec.kind = EncoderKind::kHashedNgram;
    } else if (kind == "precomputed") {
      p.encoder_spec.kind = EncoderKind::kPrecomputed;
    } else {
      ThrowDataLoss("unknown encoder kind '" + kind + "'");
    }
    p.encoder_spec.dim = enc.at("dim").get<int>();
    p.encoder_spec.seed = std::stoull(enc.at("seed").get<std::string>());
    p.encoder_spec.word_unigrams = enc.at("word_unigrams").get<bool>();
    p.encoder_spec.word_bigrams = enc.at("word_bigrams").get<bool>();
    p.encoder_spec.char_trigrams = enc.at("char_trigrams").get<bool>();
    p.encoder_spec.store_path = enc.at("store_path").get<std::string>();
    p.encoder_id = header.at("encoder_id").get<std::string>();
    if (p.encoder_spec.dim != p.input_dim()) {
      ThrowDataLoss("encoder dimension disagrees with input dimension in parameter header");
    }
    for (const Json& c : header.at("candidates")) {
      IdentityEmbedding e;
      e.candidate_id = c.at("id").get<std::string>();
      e.trainable = c.at("trainable").get<bool>();
      p.identities.push_back(std::move(e));
    }
    if (p.identities.empty()) ThrowDataLoss("parameter file lists no candidates");
    p.predictor.b2 = DoubleOf(header.at("b2").get<std::string>());
    const Json& meta = header.at("metadata");
    p.metadata.loss = ParseLossKind(meta.at("loss").get<std::string>());
    p.metadata.seed = std::stoull(meta.at("seed").get<std::string>());
    p.metadata.steps = meta.at("steps").get<int64_t>();
    p.metadata.epochs = meta.at("epochs").get<int>();
    const Json& ad = header.at("adapter");
    if (!ad.is_null()) {
      AdapterBlock a;
      a.identity.candidate_id = ad.at("candidate").get<std::string>();
      a.prompt.width = ad.at("width").get<int>();
      a.head.input_dim = p.input_dim();
      a.head.identity_dim = p.identity_dim();
      a.head.hidden = ad.at("head_hidden").get<int>();
      a.head.b2 = DoubleOf(ad.at("head_b2").get<std::string>());
      a.consistency_weight = DoubleOf(ad.at("consistency_weight").get<std::string>());
      a.steps = ad.at("steps").get<int64_t>();
      if (a.prompt.width < 1 || a.head.hidden < 1) {
        ThrowDataLoss("adapter header has non-positive dimensions");
      }
      p.adapter = std::move(a);
    }

    std::vector<Tensor> expected = Manifest(p);
    const Json& listed = header.at("tensors");
    if (listed.size() != expected.size()) {
      ThrowDataLoss("parameter manifest lists " + std::to_string(listed.size()) +
                    " tensors, expected " + std::to_string(expected.size()));
    }
    for (size_t i = 0; i < expected.size(); ++i) {
      Tensor& t = expected[i];
      if (listed[i].at("name").get<std::string>() != t.name ||
          listed[i].at("shape").get<std::vector<size_t>>() != t.shape) {
        ThrowDataLoss("parameter manifest entry " + std::to_string(i) +
                      " does not match the header (expected '" + t.name + "')");
      }
      const size_t n = Elements(t.shape);
      if (n > (bytes.size() - offset) / 8) {
        ThrowDataLoss("truncated parameter file in tensor '" + t.name + "'");
      }
      t.data->resize(n);
      for (size_t k = 0; k < n; ++k) {
        (*t.data)[k] = std::bit_cast<double>(GetU64(base + offset));
        offset += 8;
      }
    }
  } catch (const nlohmann::json::exception& e) {
    ThrowDataLoss(std::string("malformed parameter header: ") + e.what());
  } catch (const std::logic_error& e) {
    ThrowDataLoss(std::string("malformed parameter header: ") + e.what());
  }
  if (offset != bytes.size()) ThrowDataLoss("trailing bytes after parameter tensors");
  return p;
}

void SaveParams(const EstimatorParameters& params, const std::string& path) {
  const std::string bytes = SerializeParams(params);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) ThrowNotFound("cannot write parameter file '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kInternal, "failed writing '" + path + "'");
}

EstimatorParameters LoadParams(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) ThrowNotFound("cannot open parameter file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return DeserializeParams(buffer.str());
}

void ValidateParams(const EstimatorParameters& params, const Registry& registry,
                    const Encoder* encoder) {
  for (const std::string& id : params.CandidateIds()) {
    if (!registry.Contains(id)) {
      ThrowNotFound("candidate '" + id + "' in parameters is not in the registry");
    }
  }
  if (encoder != nullptr && encoder->dim() != params.input_dim()) {
    ThrowInvalidArgument("encoder dimension " + std::to_string(encoder->dim()) +
                         " does not match parameter input dimension " +
                         std::to_string(params.input_dim()));
  }
}

}  // namespace qroute
