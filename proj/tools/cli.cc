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

#include "cli.h"

#include <pthread.h>
#include <signal.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qroute/bench.h"
#include "qroute/dataset.h"
#include "qroute/encoder.h"
#include "qroute/error.h"
#include "qroute/estimator.h"
#include "qroute/evalsuite.h"
#include "qroute/protocol.h"
#include "qroute/registry.h"
#include "qroute/router.h"
#include "qroute/service.h"

namespace qroute::cli {
namespace {

using Json = nlohmann::ordered_json;

struct RouterFlags {
  std::string strategy = "dynamic_max";
  std::optional<double> static_max;
  std::optional<double> static_min;
  double safety_margin = 0.0;
  int64_t expected_input_tokens = 1;
  int64_t expected_output_tokens = 1;

  RouterConfig ToConfig() const {
    RouterConfig c;
    c.strategy = ParseStrategy(strategy);
    c.static_max = static_max;
    c.static_min = static_min;
    c.safety_margin = safety_margin;
    c.cost_weights = {expected_input_tokens, expected_output_tokens};
    ValidateRouterConfig(c);
    return c;
  }
};

void AddRouterFlags(CLI::App* app, RouterFlags& f) {
  app->add_option("--strategy", f.strategy, "Threshold strategy")
      ->check(CLI::IsMember({"dynamic_max", "dynamic_minmax", "static_dynamic", "static"}));
  app->add_option("--static-max", f.static_max, "Global r_max statistic")
      ->check(CLI::Range(0.0, 1.0));
  app->add_option("--static-min", f.static_min, "Global r_min statistic")
      ->check(CLI::Range(0.0, 1.0));
  app->add_option("--safety-margin", f.safety_margin, "Subtracted from the threshold")
      ->check(CLI::NonNegativeNumber);
  app->add_option("--expected-input-tokens", f.expected_input_tokens,
                  "Input-price weight of the decision cost")
      ->check(CLI::NonNegativeNumber);
  app->add_option("--expected-output-tokens", f.expected_output_tokens,
                  "Output-price weight of the decision cost")
      ->check(CLI::NonNegativeNumber);
}

std::shared_ptr<const Registry> ResolveRegistry(const std::string& flag) {
  std::string path = flag;
  if (path.empty()) {
    if (const char* env = std::getenv("QROUTE_REGISTRY"); env != nullptr && *env != '\0') {
      path = env;
    }
  }
  if (path.empty()) return std::make_shared<const Registry>(DefaultRegistry());
  return std::make_shared<const Registry>(LoadRegistryFromFile(path));
}

void WriteFile(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kFailedPrecondition, "cannot write '" + path + "'");
  out << contents;
  if (!out.flush()) throw Error(ErrorCode::kInternal, "failed writing '" + path + "'");
}

void EnsureDirectory(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::kFailedPrecondition, "cannot create directory '" + dir + "'");
  }
}

// ---------------------------------------------------------------------------

struct SynthFlags {
  std::string config;
  std::string family;
  int64_t records = 0;
  std::optional<uint64_t> seed;
  std::string model;
  std::string out;
  std::string split_dir;
  std::vector<double> fractions = {0.8, 0.1, 0.1};
  uint64_t split_seed = 1;
};

int RunSynth(const SynthFlags& f, const Registry& registry, std::ostream& out) {
  SynthConfig config = f.config.empty() ? SynthConfig{} : LoadSynthConfig(f.config);
  if (!f.family.empty()) config.family = f.family;
  if (f.records > 0) config.records = f.records;
  if (f.seed) config.seed = *f.seed;
  if (f.model == "uniform") config.model = DifficultyModel::kUniformIndependent;
  if (f.model == "latent") config.model = DifficultyModel::kLatentDifficulty;
  if (config.family.empty()) ThrowInvalidArgument("synth needs --config or --family");
  const DatasetSplit data = Synthesize(config, registry);
  Json summary;
  summary["records"] = data.size();
  summary["family"] = config.family;
  summary["fingerprint"] = Fingerprint(data);
  if (!f.out.empty()) {
    WriteJsonl(data, f.out);
    summary["out"] = f.out;
  }
  if (!f.split_dir.empty()) {
    if (f.fractions.size() != 3) ThrowInvalidArgument("--fractions needs three values");
    EnsureDirectory(f.split_dir);
    SplitResult split = SplitDataset(data.records, {f.fractions[0], f.fractions[1], f.fractions[2]},
                                     f.split_seed);
    for (DatasetSplit* s : {&split.train, &split.dev, &split.test}) {
      const std::string path = f.split_dir + "/" + s->name + ".jsonl";
      WriteJsonl(*s, path);
      summary["splits"][s->name] = {{"path", path}, {"records", s->size()}};
    }
  }
  out << summary.dump() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct TrainFlags {
  std::string train;
  std::string dev;
  std::string out;
  std::string log;
  std::string loss = "mse";
  int epochs = 10;
  double lr = 0.05;
  int batch_size = 32;
  double momentum = 0.0;
  uint64_t seed = 1;
  int hidden = 256;
  int identity_dim = 128;
  int dim = 768;
  std::optional<uint64_t> encoder_seed;
  std::string embeddings;
  std::vector<std::string> candidates;
  double margin = 0.05;
  double temperature = 0.05;
};

int RunTrain(const TrainFlags& f, const Registry& registry, std::ostream& out) {
  EncoderSpec spec;
  spec.dim = f.dim;
  if (f.encoder_seed) spec.seed = *f.encoder_seed;
  if (!f.embeddings.empty()) {
    spec.kind = EncoderKind::kPrecomputed;
    spec.store_path = f.embeddings;
  }
  const std::unique_ptr<Encoder> encoder = MakeEncoder(spec);
  const DatasetSplit train = LoadJsonl(f.train, registry, "train");
  std::optional<DatasetSplit> dev;
  if (!f.dev.empty()) dev = LoadJsonl(f.dev, registry, "dev");

  TrainConfig config;
  config.loss = ParseLossKind(f.loss);
  config.loss_config.margin = f.margin;
  config.loss_config.temperature = f.temperature;
  config.learning_rate = f.lr;
  config.momentum = f.momentum;
  config.batch_size = f.batch_size;
  config.epochs = f.epochs;
  config.seed = f.seed;
  config.hidden = f.hidden;
  config.identity_dim = f.identity_dim;
  config.candidates = f.candidates;
  const TrainResult result =
      Train(train, registry, *encoder, config, dev ? &*dev : nullptr);
  SaveParams(result.params, f.out);

  Json log;
  log["family"] = result.params.family;
  log["loss"] = LossKindName(config.loss);
  log["seed"] = std::to_string(config.seed);
  log["steps"] = result.log.steps;
  log["estimator_version"] = EstimatorVersion(result.params);
  Json epochs = Json::array();
  for (const EpochLog& e : result.log.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"dev_mae", e.dev_mae ? Json(*e.dev_mae) : Json(nullptr)}});
  }
  log["epochs"] = epochs;
  if (!f.log.empty()) WriteFile(f.log, log.dump(2) + "\n");
  out << log.dump() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct RouteFlags {
  std::string params;
  std::string prompt;
  double tolerance = 0.0;
  std::string request_id = "cli";
  std::string family;
  std::vector<std::string> candidates;
  RouterFlags router;
};

int RunRoute(const RouteFlags& f, std::shared_ptr<const Registry> registry,
             std::ostream& out) {
  const Artifacts artifacts = LoadArtifacts(f.params, std::move(registry), f.router.ToConfig());
  RouteRequest request;
  request.request_id = f.request_id;
  request.prompt = f.prompt;
  request.tolerance = f.tolerance;
  request.family = f.family;
  request.candidates = f.candidates;
  out << HandleRouteRequest(artifacts, request).body << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct EvaluateFlags {
  std::string params;
  std::string data;
  std::string train;
  std::string out_dir;
  std::vector<std::string> policies = {"ipr", "oracle", "random", "static_strongest",
                                       "static_cheapest"};
  uint64_t seed = 1;
  double grid_step = 0.05;
  std::vector<double> csr_targets = {1.0, 0.95};
  double operating_tolerance = 0.5;
  RouterFlags router;
};

int RunEvaluate(const EvaluateFlags& f, std::shared_ptr<const Registry> registry,
                std::ostream& out) {
  const DatasetSplit split = LoadJsonl(f.data, *registry, "test");
  EnsureDirectory(f.out_dir);
  const EvalData data = EvalData::Build(split, *registry);

  EvaluationConfig config;
  config.seed = f.seed;
  config.csr_targets = f.csr_targets;
  config.operating_tolerance = f.operating_tolerance;
  if (!(f.grid_step > 0.0 && f.grid_step <= 1.0)) {
    ThrowInvalidArgument("--grid-step must be in (0, 1]");
  }
  config.tolerance_grid.clear();
  const int steps = static_cast<int>(std::llround(1.0 / f.grid_step));
  for (int i = 0; i <= steps; ++i) config.tolerance_grid.push_back(std::min(1.0, i * f.grid_step));
  if (config.tolerance_grid.back() < 1.0) config.tolerance_grid.push_back(1.0);

  std::optional<Artifacts> artifacts;
  if (!f.params.empty()) artifacts = LoadArtifacts(f.params, registry, f.router.ToConfig());
  auto ipr = [&]() -> std::shared_ptr<Policy> {
    if (!artifacts) ThrowInvalidArgument("policy 'ipr' needs --params");
    return std::make_shared<EstimatorPolicy>(artifacts->estimator, artifacts->encoder,
                                             artifacts->router);
  };

  const RelativeReference reference = ComputeReference(data, config);
  Json summary;
  summary["dataset_fingerprint"] = data.fingerprint;
  summary["records"] = data.num_records();
  for (const std::string& name : f.policies) {
    std::shared_ptr<Policy> policy;
    if (name == "ipr") {
      policy = ipr();
    } else if (name == "oracle") {
      policy = std::make_shared<OraclePolicy>();
    } else if (name == "random") {
      policy = std::make_shared<RandomPolicy>(f.seed);
    } else if (name == "uniform_random") {
      policy = std::make_shared<UniformRandomPolicy>(f.seed);
    } else if (name == "static_strongest") {
      policy = std::make_shared<StaticPolicy>(StaticChoice::kStrongest);
    } else if (name == "static_cheapest") {
      policy = std::make_shared<StaticPolicy>(StaticChoice::kCheapest);
    } else if (name == "budget_aware_random") {
      std::shared_ptr<Policy> ref = artifacts ? ipr() : std::make_shared<OraclePolicy>();
      policy = std::make_shared<BudgetAwareRandomPolicy>(ref, f.seed);
    } else if (name == "binary_classifier") {
      if (f.train.empty()) ThrowInvalidArgument("policy 'binary_classifier' needs --train");
      EncoderSpec spec;
      if (artifacts) spec = artifacts->encoder->spec();
      std::shared_ptr<const Encoder> encoder =
          artifacts ? artifacts->encoder : std::shared_ptr<const Encoder>(MakeEncoder(spec));
      ClassifierConfig cc;
      cc.seed = f.seed;
      auto clf = std::make_shared<BinaryClassifierPolicy>(encoder, cc);
      const DatasetSplit train = LoadJsonl(f.train, *registry, "train");
      clf->Fit(train, *registry, data.candidate_ids);
      policy = clf;
    } else {
      ThrowInvalidArgument("unknown policy '" + name + "'");
    }
    const EvaluationReport report = Evaluate(*policy, data, config, &reference);
    const std::string report_path = f.out_dir + "/report_" + name + ".json";
    const std::string curve_path = f.out_dir + "/curve_" + name + ".csv";
    WriteFile(report_path, ReportToJson(report));
    WriteFile(curve_path, CurveToCsv(report.curve));
    summary["policies"][name] = {{"b_arqgc", report.b_arqgc},
                                 {"rel_arqgc", report.rel_arqgc ? Json(*report.rel_arqgc)
                                                                : Json(nullptr)},
                                 {"report", report_path},
                                 {"curve", curve_path}};
  }
  out << summary.dump() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct BenchFlags {
  std::string params;
  std::vector<int> tokens = {500, 1000};
  std::vector<int> candidates = {5, 10};
  int warmup = 100;
  int iterations = 1000;
  double tolerance = 0.5;
  int dim = 768;
  uint64_t seed = 1;
  std::string out;
};

int RunBenchCommand(const BenchFlags& f, std::shared_ptr<const Registry> registry,
                    std::ostream& out) {
  BenchConfig config;
  config.token_lengths = f.tokens;
  config.candidate_counts = f.candidates;
  config.warmup = f.warmup;
  config.iterations = f.iterations;
  config.tolerance = f.tolerance;
  config.seed = f.seed;
  int max_candidates = 1;
  for (int k : f.candidates) max_candidates = std::max(max_candidates, k);
  const Artifacts artifacts = f.params.empty()
                                  ? MakeBenchArtifacts(f.dim, max_candidates, f.seed)
                                  : LoadArtifacts(f.params, std::move(registry), RouterConfig{});
  const std::string report = BenchReportToJson(RunBench(artifacts, config));
  if (!f.out.empty()) WriteFile(f.out, report);
  out << report;
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct ServeFlags {
  std::string params;
  std::string host = "127.0.0.1";
  int port = 8080;
  int threads = 4;
  RouterFlags router;
};

int RunServe(const ServeFlags& f, std::shared_ptr<const Registry> registry,
             std::ostream& out) {
  auto artifacts = std::make_shared<const Artifacts>(
      LoadArtifacts(f.params, std::move(registry), f.router.ToConfig()));
  auto service = std::make_shared<RouterService>(artifacts);
  ServeOptions options;
  options.host = f.host;
  options.port = f.port;
  options.threads = f.threads;

  // Route SIGINT/SIGTERM to a watcher thread that stops the server.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  HttpServer server(service, options);
  const int port = server.Bind();
  out << "listening on " << f.host << ":" << port << std::endl;
  std::thread watcher([&server, signals] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.Stop();
  });
  watcher.detach();
  server.Serve();
  return kExitOk;
}

}  // namespace

int Run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"qroute: quality-aware cost-minimal LLM routing"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string registry_path;
  app.add_option("--registry", registry_path,
                 "Registry JSON (default: $QROUTE_REGISTRY, then the bundled table)");

  SynthFlags synth;
  CLI::App* synth_cmd = app.add_subcommand("synth", "Generate a synthetic labeled dataset");
  synth_cmd->add_option("--config", synth.config, "Generator config JSON")
      ->check(CLI::ExistingFile);
  synth_cmd->add_option("--family", synth.family, "Candidate family");
  synth_cmd->add_option("--records", synth.records, "Record count")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--seed", synth.seed, "Generator seed");
  synth_cmd->add_option("--model", synth.model, "Reward model")
      ->check(CLI::IsMember({"latent", "uniform"}));
  synth_cmd->add_option("--out", synth.out, "Write all records to this JSONL file");
  synth_cmd->add_option("--split-dir", synth.split_dir, "Write train/dev/test JSONL here");
  synth_cmd->add_option("--fractions", synth.fractions, "Train,dev,test fractions")
      ->delimiter(',')
      ->expected(3);
  synth_cmd->add_option("--split-seed", synth.split_seed, "Shuffle seed for splitting");

  TrainFlags train;
  CLI::App* train_cmd = app.add_subcommand("train", "Train a quality estimator");
  train_cmd->add_option("--train", train.train, "Training JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--dev", train.dev, "Validation JSONL")->check(CLI::ExistingFile);
  train_cmd->add_option("--out", train.out, "Output parameter file")->required();
  train_cmd->add_option("--log", train.log, "Write the training log JSON here");
  train_cmd->add_option("--loss", train.loss, "Loss")
      ->check(CLI::IsMember({"mse", "hinge", "listnet"}));
  train_cmd->add_option("--epochs", train.epochs, "Epochs")->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--lr", train.lr, "Learning rate")->check(CLI::PositiveNumber);
  train_cmd->add_option("--batch-size", train.batch_size, "Batch size")->check(CLI::PositiveNumber);
  train_cmd->add_option("--momentum", train.momentum, "Momentum")->check(CLI::Range(0.0, 0.999));
  train_cmd->add_option("--seed", train.seed, "Training seed");
  train_cmd->add_option("--hidden", train.hidden, "Hidden width")->check(CLI::PositiveNumber);
  train_cmd->add_option("--identity-dim", train.identity_dim, "Identity embedding width")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--dim", train.dim, "Hashed encoder dimension")->check(CLI::PositiveNumber);
  train_cmd->add_option("--encoder-seed", train.encoder_seed, "Hashed encoder seed");
  train_cmd->add_option("--embeddings", train.embeddings, "Precomputed embedding store")
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--candidates", train.candidates, "Subset of family candidates")
      ->delimiter(',');
  train_cmd->add_option("--margin", train.margin, "Hinge margin")->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--temperature", train.temperature, "ListNet temperature")
      ->check(CLI::PositiveNumber);

  RouteFlags route;
  CLI::App* route_cmd = app.add_subcommand("route", "Route one prompt");
  route_cmd->add_option("--params", route.params, "Parameter file")
      ->required()
      ->check(CLI::ExistingFile);
  route_cmd->add_option("--prompt", route.prompt, "Prompt text")->required();
  route_cmd->add_option("--tolerance", route.tolerance, "Tolerance in [0, 1]")
      ->check(CLI::Range(0.0, 1.0));
  route_cmd->add_option("--request-id", route.request_id, "Request id echoed in the response");
  route_cmd->add_option("--family", route.family, "Family to route over");
  route_cmd->add_option("--candidates", route.candidates, "Explicit candidate ids")->delimiter(',');
  AddRouterFlags(route_cmd, route.router);

  EvaluateFlags eval;
  CLI::App* eval_cmd = app.add_subcommand("evaluate", "Evaluate routing policies");
  eval_cmd->add_option("--params", eval.params, "Parameter file")->check(CLI::ExistingFile);
  eval_cmd->add_option("--data", eval.data, "Labeled JSONL")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--train", eval.train, "Training JSONL for the classifier baseline")
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--out-dir", eval.out_dir, "Report directory")->required();
  eval_cmd->add_option("--policies", eval.policies, "Comma-separated policies")
      ->delimiter(',')
      ->check(CLI::IsMember({"ipr", "oracle", "random", "uniform_random", "static_strongest",
                             "static_cheapest", "budget_aware_random", "binary_classifier"}));
  eval_cmd->add_option("--seed", eval.seed, "Seed for random policies");
  eval_cmd->add_option("--grid-step", eval.grid_step, "Tolerance sweep step");
  eval_cmd->add_option("--csr-targets", eval.csr_targets, "Quality targets for CSR")
      ->delimiter(',')
      ->check(CLI::Range(0.0, 1.0));
  eval_cmd->add_option("--operating-tolerance", eval.operating_tolerance,
                       "Tolerance of the reported operating point")
      ->check(CLI::Range(0.0, 1.0));
  AddRouterFlags(eval_cmd, eval.router);

  BenchFlags bench;
  CLI::App* bench_cmd = app.add_subcommand("bench", "Measure decision latency");
  bench_cmd->add_option("--params", bench.params, "Parameter file (default: random d=768)")
      ->check(CLI::ExistingFile);
  bench_cmd->add_option("--tokens", bench.tokens, "Prompt lengths")->delimiter(',');
  bench_cmd->add_option("--candidates", bench.candidates, "Candidate-set sizes")->delimiter(',');
  bench_cmd->add_option("--warmup", bench.warmup, "Warmup iterations")
      ->check(CLI::NonNegativeNumber);
  bench_cmd->add_option("--iters", bench.iterations, "Measured iterations")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--tolerance", bench.tolerance, "Tolerance")->check(CLI::Range(0.0, 1.0));
  bench_cmd->add_option("--dim", bench.dim, "Encoder dimension without --params")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--seed", bench.seed, "Seed");
  bench_cmd->add_option("--out", bench.out, "Write the report JSON here");

  ServeFlags serve;
  CLI::App* serve_cmd = app.add_subcommand("serve", "Run the HTTP routing service");
  serve_cmd->add_option("--params", serve.params, "Parameter file")
      ->required()
      ->check(CLI::ExistingFile);
  serve_cmd->add_option("--host", serve.host, "Bind address");
  serve_cmd->add_option("--port", serve.port, "Port (0 picks one)")->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--threads", serve.threads, "Worker threads")->check(CLI::PositiveNumber);
  AddRouterFlags(serve_cmd, serve.router);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*synth_cmd) return RunSynth(synth, *ResolveRegistry(registry_path), out);
    if (*train_cmd) return RunTrain(train, *ResolveRegistry(registry_path), out);
    if (*route_cmd) return RunRoute(route, ResolveRegistry(registry_path), out);
    if (*eval_cmd) return RunEvaluate(eval, ResolveRegistry(registry_path), out);
    if (*bench_cmd) return RunBenchCommand(bench, ResolveRegistry(registry_path), out);
    if (*serve_cmd) return RunServe(serve, ResolveRegistry(registry_path), out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace qroute::cli
