// Copyright 2026 The Vaxtract Authors.
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

#include "vaxtract/cli.hpp"

#include <pthread.h>
#include <signal.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "vaxtract/annotation.hpp"
#include "vaxtract/config.hpp"
#include "vaxtract/corpus.hpp"
#include "vaxtract/error.hpp"
#include "vaxtract/evaluator.hpp"
#include "vaxtract/lexicon.hpp"
#include "vaxtract/llm_extractor.hpp"
#include "vaxtract/mock_server.hpp"
#include "vaxtract/rule_extractor.hpp"
#include "vaxtract/service.hpp"
#include "vaxtract/text.hpp"

#ifndef VAXTRACT_DEFAULT_DATA_DIR
#define VAXTRACT_DEFAULT_DATA_DIR "data"
#endif

namespace vaxtract {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Reported with exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string DefaultDataPath(const std::string& name) {
  return (fs::path(VAXTRACT_DEFAULT_DATA_DIR) / name).string();
}

struct Options {
  std::string config_path;
  std::string lexicon_path;
  std::string endpoint_url;
  std::string model;
  std::string store_path;
};

// Config, lexicon and overrides shared by the subcommands.
class Context {
 public:
  explicit Context(const Options& opts) : opts_(opts) {
    std::string path = opts.config_path;
    if (path.empty()) {
      if (const char* env = std::getenv("VAXTRACT_CONFIG"); env != nullptr) path = env;
    }
    if (!path.empty()) {
      config_ = LoadConfigFile(path);
      ValidateConfig(config_);
      have_config_ = true;
    }
    if (!opts.lexicon_path.empty()) config_.lexicon_path = opts.lexicon_path;
    if (config_.lexicon_path.empty()) config_.lexicon_path = DefaultDataPath("lexicon.json");
    if (!opts.endpoint_url.empty()) {
      ModelEndpoint ep = config_.endpoint.value_or(ModelEndpoint{});
      ep.base_url = opts.endpoint_url;
      if (ep.model_name.empty()) ep.model_name = config_.decoding.model_name;
      config_.endpoint = ep;
    }
    if (!opts.model.empty()) {
      if (!config_.endpoint) throw UsageError("--model needs an endpoint (--endpoint or config)");
      config_.endpoint->model_name = opts.model;
      config_.decoding.model_name = opts.model;
    }
    if (config_.endpoint) config_.endpoint->validate();
    if (!opts.store_path.empty()) config_.store_path = opts.store_path;
  }

  const ToolkitConfig& config() const { return config_; }
  bool have_config() const { return have_config_; }

  const Lexicon& lexicon() {
    if (!lexicon_) lexicon_ = std::make_unique<Lexicon>(Lexicon::LoadFile(config_.lexicon_path));
    return *lexicon_;
  }

  Engine engine(const std::string& requested) const {
    if (requested.empty()) return config_.endpoint ? Engine::kLlm : Engine::kRules;
    const Engine e = ParseEngine(requested);
    if (e == Engine::kLlm && !config_.endpoint) {
      throw UsageError("the llm engine needs an endpoint (--endpoint or config)");
    }
    return e;
  }

  std::vector<ExtractionResult> extract(const std::vector<TriageNote>& notes, Engine engine) {
    if (engine == Engine::kLlm) return ExtractBatch(notes, *config_.endpoint, lexicon(), config_.decoding);
    std::vector<ExtractionResult> results;
    results.reserve(notes.size());
    for (const auto& note : notes) results.push_back(ExtractWithRules(note, lexicon(), config_.rules));
    return results;
  }

  StoreOptions store_options() const {
    if (config_.store_path.empty()) throw UsageError("no annotation store: pass --store or set store.path");
    return config_.store_options();
  }

 private:
  Options opts_;
  ToolkitConfig config_;
  bool have_config_ = false;
  std::unique_ptr<Lexicon> lexicon_;
};

void WriteOutput(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << content;
    return;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
  f << content;
  if (!f) throw Error(ErrorCode::kIo, "short write to '" + path + "'");
}

std::vector<Prediction> LoadPredictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open predictions '" + path + "'");
  std::vector<Prediction> predictions;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (TrimWhitespace(line).empty()) continue;
    try {
      predictions.push_back(Prediction::From(json::parse(line).get<ExtractionResult>()));
    } catch (const std::exception& e) {
      Error err(ErrorCode::kMalformedRecord, "line " + std::to_string(n) + ": " + e.what());
      err.line = n;
      throw err;
    }
  }
  return predictions;
}

// Blocks SIGINT/SIGTERM and calls `stop` from a helper thread when one
// arrives. Destruction releases the helper.
class SignalStopper {
 public:
  explicit SignalStopper(std::function<void()> stop) {
    sigemptyset(&set_);
    sigaddset(&set_, SIGINT);
    sigaddset(&set_, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set_, nullptr);
    thread_ = std::thread([this, stop = std::move(stop)] {
      int sig = 0;
      sigwait(&set_, &sig);
      if (!released_) stop();
    });
  }
  ~SignalStopper() {
    released_ = true;
    pthread_kill(thread_.native_handle(), SIGTERM);
    thread_.join();
    pthread_sigmask(SIG_UNBLOCK, &set_, nullptr);
  }

 private:
  sigset_t set_{};
  std::atomic<bool> released_{false};
  std::thread thread_;
};

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Vaccine mention extraction from ED triage notes", "vaxtract"};
  app.require_subcommand(1);
  app.fallthrough();
  Options opts;
  app.add_option("--config", opts.config_path, "Toolkit config (default: $VAXTRACT_CONFIG)");
  app.add_option("--lexicon", opts.lexicon_path, "Lexicon file, overrides the config");

  auto add_endpoint = [&opts](CLI::App* cmd) {
    cmd->add_option("--endpoint", opts.endpoint_url, "Chat-completions base URL, overrides the config");
    cmd->add_option("--model", opts.model, "Model name sent to the endpoint");
  };

  // extract
  std::string in_path, out_path, engine_name;
  auto* extract = app.add_subcommand("extract", "Label every note in a file");
  extract->add_option("--in", in_path, "Notes (.jsonl or .csv)")->required();
  extract->add_option("--out", out_path, "Results JSONL (default: stdout)");
  extract->add_option("--engine", engine_name, "rules | llm")->check(CLI::IsMember({"rules", "llm"}));
  add_endpoint(extract);

  // eval
  std::string pred_path, gold_path, report_path, model_label = "model";
  bool as_json = false;
  auto* eval = app.add_subcommand("eval", "Score predictions against gold labels");
  eval->add_option("--pred", pred_path, "Predictions JSONL (extract output)")->required();
  eval->add_option("--gold", gold_path, "Gold notes (.jsonl or .csv)")->required();
  eval->add_option("--report", report_path, "Also write the EvalReport JSON here");
  eval->add_option("--name", model_label, "Row label in the tables");
  eval->add_flag("--json", as_json, "Print the EvalReport JSON instead of the tables");

  // prelabel
  auto* prelabel = app.add_subcommand("prelabel", "Queue notes for review with proposed labels");
  prelabel->add_option("--in", in_path, "Notes (.jsonl or .csv)")->required();
  prelabel->add_option("--engine", engine_name, "rules | llm")->check(CLI::IsMember({"rules", "llm"}));
  prelabel->add_option("--store", opts.store_path, "Decision log, overrides the config");
  add_endpoint(prelabel);

  // export
  std::string manifest_path;
  auto* exportc = app.add_subcommand("export", "Write reviewed labels as a chat fine-tuning set");
  exportc->add_option("--out", out_path, "Chat JSONL (default: stdout)");
  exportc->add_option("--manifest", manifest_path, "Manifest JSON");
  exportc->add_option("--store", opts.store_path, "Decision log, overrides the config");

  // synth
  std::uint64_t seed = 0;
  std::size_t n = 0;
  double fraction = 238.0 / 259.0;
  std::string templates_path = DefaultDataPath("synth_templates.json");
  auto* synth = app.add_subcommand("synth", "Generate a seeded synthetic corpus");
  synth->add_option("--seed", seed, "RNG seed")->required();
  synth->add_option("--n", n, "Number of notes")->required();
  synth->add_option("--fraction", fraction, "Share of vaccine-present notes")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  synth->add_option("--templates", templates_path, "Template set")->capture_default_str();
  synth->add_option("--out", out_path, "Notes JSONL (default: stdout)");

  // serve
  std::string host;
  int port = -1;
  std::string ui_dir;
  auto* serve = app.add_subcommand("serve", "Run the HTTP API and review UI");
  serve->add_option("--host", host, "Listen address, overrides the config");
  serve->add_option("--port", port, "Listen port, overrides the config")->check(CLI::Range(0, 65535));
  serve->add_option("--ui", ui_dir, "UI asset directory, overrides the config");
  serve->add_option("--store", opts.store_path, "Decision log, overrides the config");
  add_endpoint(serve);

  // lexicon check
  auto* lexicon_cmd = app.add_subcommand("lexicon", "Lexicon tools");
  lexicon_cmd->require_subcommand(1);
  auto* lexicon_check = lexicon_cmd->add_subcommand("check", "Validate a lexicon and summarize it");

  // mock-llm
  std::string responses_path;
  auto* mock = app.add_subcommand("mock-llm", "Serve scripted chat completions for a note file");
  mock->add_option("--notes", in_path, "Notes the responses refer to")->required();
  mock->add_option("--responses", responses_path, "Scripted responses JSON")->required();
  mock->add_option("--host", host, "Listen address");
  mock->add_option("--port", port, "Listen port")->required()->check(CLI::Range(1, 65535));

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::Success& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    Context ctx(opts);

    if (*extract) {
      const Dataset data = LoadNotesFile(in_path, nullptr);
      const auto results = ctx.extract(data.notes, ctx.engine(engine_name));
      std::string body;
      std::size_t with_gold = 0, agree = 0;
      for (std::size_t i = 0; i < results.size(); ++i) {
        body += json(results[i]).dump() + "\n";
        if (data.notes[i].gold) {
          ++with_gold;
          agree += ctx.lexicon().equivalent(results[i].label, *data.notes[i].gold) ? 1 : 0;
        }
      }
      WriteOutput(out_path, body, out);
      err << results.size() << " notes labelled";
      if (with_gold > 0) err << "; " << agree << "/" << with_gold << " match gold";
      err << "\n";
      return kExitOk;
    }

    if (*eval) {
      const Lexicon& lex = ctx.lexicon();
      const auto predictions = LoadPredictions(pred_path);
      const auto golds = GoldFromDataset(LoadNotesFile(gold_path, &lex));
      const EvalReport report = Report(predictions, golds, lex);
      const std::string report_json = json(report).dump(2) + "\n";
      if (!report_path.empty()) WriteOutput(report_path, report_json, out);
      if (as_json) {
        out << report_json;
      } else {
        out << RenderReportTable(report, model_label);
      }
      return kExitOk;
    }

    if (*prelabel) {
      const Dataset data = LoadNotesFile(in_path, &ctx.lexicon());
      const Engine engine = ctx.engine(engine_name);
      AnnotationStore store(ctx.store_options());
      const std::size_t added = store.prelabel(
          data, [&](const std::vector<TriageNote>& notes) { return ctx.extract(notes, engine); });
      out << added << " records enqueued (" << to_string(engine) << ")\n";
      return kExitOk;
    }

    if (*exportc) {
      AnnotationStore store(ctx.store_options());
      const ExportResult result = store.export_dataset(ctx.lexicon());
      WriteOutput(out_path, result.jsonl, out);
      if (!manifest_path.empty()) WriteOutput(manifest_path, result.manifest.dump(2) + "\n", out);
      err << result.manifest["examples"].get<std::size_t>() << " examples exported\n";
      return kExitOk;
    }

    if (*synth) {
      if (n == 0) throw UsageError("--n must be positive");
      const Dataset data = GenerateSynthetic(seed, n, fraction, LoadTemplatesFile(templates_path));
      std::ostringstream buf;
      WriteNotesJsonl(buf, data);
      WriteOutput(out_path, buf.str(), out);
      const ClassCounts counts = data.class_counts();
      err << data.notes.size() << " notes (" << counts.present << " vaccine-present, " << counts.absent
          << " absent)\n";
      return kExitOk;
    }

    if (*serve) {
      const ToolkitConfig& cfg = ctx.config();
      AnnotationStore store(cfg.store_path.empty() ? StoreOptions{} : cfg.store_options());
      ServiceOptions so;
      so.lexicon = &ctx.lexicon();
      so.store = &store;
      so.rules = cfg.rules;
      so.endpoint = cfg.endpoint;
      so.decoding = cfg.decoding;
      so.ui_assets = ui_dir.empty() ? cfg.ui_assets : ui_dir;
      so.api_token = cfg.api_token;
      Service service(std::move(so));
      const std::string bind_host = host.empty() ? cfg.host : host;
      const int bound = service.bind(bind_host, port >= 0 ? port : cfg.port);
      if (cfg.store_path.empty()) err << "warning: no store path; annotations are kept in memory\n";
      err << "listening on http://" << bind_host << ":" << bound << "\n";
      {
        SignalStopper stopper([&service] { service.stop(); });
        service.run();
      }
      store.snapshot();
      err << "stopped\n";
      return kExitOk;
    }

    if (*lexicon_check) {
      const Lexicon& lex = ctx.lexicon();
      std::size_t surfaces = 0;
      for (const auto& e : lex.entries()) surfaces += e.surfaces.size();
      out << "lexicon " << ctx.config().lexicon_path << " ok\n"
          << "  version " << lex.version() << "\n"
          << "  entries " << lex.entries().size() << " (" << surfaces << " surfaces)\n"
          << "  generic triggers " << lex.generic_triggers().size() << ", injection words "
          << lex.injection_words().size() << ", future cues " << lex.future_cues().size() << "\n"
          << "  sha256 " << lex.content_hash() << "\n";
      return kExitOk;
    }

    if (*mock) {
      const Dataset data = LoadNotesFile(in_path, nullptr);
      MockChatServer server(LoadMockFixturesFile(data, responses_path));
      const std::string bind_host = host.empty() ? "127.0.0.1" : host;
      err << "mock endpoint on http://" << bind_host << ":" << port << "\n";
      SignalStopper stopper([&server] { server.stop(); });
      server.listen(bind_host, port);
      return kExitOk;
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace vaxtract
