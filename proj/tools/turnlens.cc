// Copyright 2026 The TurnLens Authors.
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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "turnlens/config.h"
#include "turnlens/corpus.h"
#include "turnlens/errors.h"
#include "turnlens/evaluation.h"
#include "turnlens/pipeline.h"
#include "turnlens/synthetic.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace turnlens {
namespace {

constexpr int kManifestVersion = 1;

struct Globals {
  fs::path run_dir = "run";
  std::string config_path;
  std::vector<std::string> overrides;
};

PipelineConfig ResolveConfig(const Globals& g) {
  return LoadConfig(g.config_path, g.overrides);
}

json ReadJsonFile(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("missing artifact " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
}

void WriteText(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

void WriteJsonFile(const fs::path& path, const json& j, int indent = 2) {
  WriteText(path, j.dump(indent) + "\n");
}

// Records the resolved config and every artifact written by a subcommand.
class Manifest {
 public:
  explicit Manifest(fs::path run_dir) : run_dir_(std::move(run_dir)) {
    const fs::path p = run_dir_ / "manifest.json";
    if (fs::exists(p)) {
      data_ = ReadJsonFile(p);
    } else {
      data_ = {{"version", kManifestVersion}, {"artifacts", json::object()}};
    }
  }

  void SetConfig(const PipelineConfig& config) { data_["config"] = ConfigToJson(config); }

  // Timing artifacts vary between runs, so their size is not recorded.
  void Add(const std::string& name, const fs::path& relative, const std::string& command,
           bool record_size = true) {
    json entry = {{"path", relative.generic_string()}, {"written_by", command}};
    if (record_size) entry["bytes"] = fs::file_size(run_dir_ / relative);
    data_["artifacts"][name] = std::move(entry);
  }

  void Save() const { WriteJsonFile(run_dir_ / "manifest.json", data_); }

 private:
  fs::path run_dir_;
  json data_;
};

Corpus LoadRunCorpus(const fs::path& run_dir) {
  const fs::path p = run_dir / "corpus.jsonl";
  if (!fs::exists(p)) throw IoError("missing artifact " + p.string() + " (run ingest or generate)");
  return LoadCorpus(p);
}

SplitAssignment LoadRunSplit(const fs::path& run_dir) {
  return SplitFromJson(ReadJsonFile(run_dir / "split.json"));
}

fs::path ModelDir(const fs::path& run_dir) { return run_dir / "models"; }

void WriteCorpusFile(const Corpus& corpus, const Globals& g, const PipelineConfig& config,
                     const std::string& command) {
  std::ostringstream out;
  WriteCorpus(corpus, out);
  WriteText(g.run_dir / "corpus.jsonl", out.str());
  Manifest m(g.run_dir);
  m.SetConfig(config);
  m.Add("corpus", "corpus.jsonl", command);
  m.Save();
  std::printf("%zu dialogues -> %s\n", corpus.size(), (g.run_dir / "corpus.jsonl").c_str());
}

int CmdIngest(const Globals& g, const fs::path& input) {
  const auto config = ResolveConfig(g);
  WriteCorpusFile(LoadCorpus(input), g, config, "ingest");
  return 0;
}

int CmdGenerate(const Globals& g, int dialogues) {
  const auto config = ResolveConfig(g);
  SyntheticConfig sc;
  sc.dialogues = dialogues;
  sc.seed = config.seed;
  WriteCorpusFile(GenerateSyntheticCorpus(sc), g, config, "generate");
  return 0;
}

int CmdSplit(const Globals& g) {
  const auto config = ResolveConfig(g);
  const auto corpus = LoadRunCorpus(g.run_dir);
  const auto split = SplitByDialogue(corpus, config.split, config.seed);
  WriteJsonFile(g.run_dir / "split.json", SplitToJson(split));
  Manifest m(g.run_dir);
  m.SetConfig(config);
  m.Add("split", "split.json", "split");
  m.Save();
  std::printf("train %zu, val %zu, test %zu\n", split.Count(SplitPart::kTrain),
              split.Count(SplitPart::kVal), split.Count(SplitPart::kTest));
  return 0;
}

TurnDetector LoadDetector(const fs::path& run_dir, const std::string& file) {
  return TurnDetector::FromJson(ReadJsonFile(ModelDir(run_dir) / file));
}

std::vector<TeacherDialogue> RunTeacher(const Globals& g, const PipelineConfig& config,
                                        const Corpus& corpus, const SplitAssignment& split) {
  const auto token = LoadDetector(g.run_dir, "token_detector.json");
  const auto da = LoadDetector(g.run_dir, "da_detector.json");
  const auto train = SplitDialogues(corpus, split, SplitPart::kTrain);
  return ComputeTeacher(train, token, da, config.attribution);
}

int CmdTrain(const Globals& g, const std::string& dimension) {
  const auto config = ResolveConfig(g);
  const auto corpus = LoadRunCorpus(g.run_dir);
  const auto split = LoadRunSplit(g.run_dir);
  Manifest m(g.run_dir);
  m.SetConfig(config);

  auto train_turn = [&](Dimension d, const std::string& file) {
    const auto train = TurnSamples(SplitDialogues(corpus, split, SplitPart::kTrain));
    const auto val = TurnSamples(SplitDialogues(corpus, split, SplitPart::kVal));
    TurnTrainingReport report;
    const auto& dc = d == Dimension::kTokens ? config.token_detector : config.da_detector;
    const auto det = TurnDetector::Train(train, val, d, dc, &report);
    WriteJsonFile(ModelDir(g.run_dir) / file, det.ToJson(), -1);
    m.Add(std::string(DimensionName(d)) + "_detector", fs::path("models") / file, "train");
    std::printf("%s detector: loss %.6f, val macro-F1 %.4f\n", std::string(DimensionName(d)).c_str(),
                report.final_loss, report.val_macro_f1);
  };

  if (dimension == "tokens" || dimension == "all") train_turn(Dimension::kTokens, "token_detector.json");
  if (dimension == "das" || dimension == "all") train_turn(Dimension::kDas, "da_detector.json");
  if (dimension == "dialogue" || dimension == "all") {
    const auto teacher = RunTeacher(g, config, corpus, split);
    TrainingReport report;
    const auto det = DialogueDetector::Train(
        DialogueSamplesFromTeacher(teacher, config.k_tokens, config.k_das), config.dialogue,
        &report);
    WriteJsonFile(ModelDir(g.run_dir) / "dialogue_detector.json", det.ToJson(), -1);
    m.Add("dialogue_detector", "models/dialogue_detector.json", "train");
    std::printf("dialogue detector: loss %.6f after %d epochs\n", report.final_loss,
                report.epochs);
  }
  m.Save();
  return 0;
}

int CmdAggregate(const Globals& g) {
  const auto config = ResolveConfig(g);
  const auto corpus = LoadRunCorpus(g.run_dir);
  const auto split = LoadRunSplit(g.run_dir);
  const auto teacher = RunTeacher(g, config, corpus, split);
  const TrigramEmbeddingProvider provider({.dimension = config.embedding_dimension});
  const auto indices = BuildAggregation(AggregationInputsFromTeacher(teacher), provider,
                                        LexiconFor(config), config.aggregation);
  WriteJsonFile(ModelDir(g.run_dir) / "aggregation_index.json", indices.semi_global.ToJson());
  WriteJsonFile(ModelDir(g.run_dir) / "global_index.json", indices.global.ToJson());
  Manifest m(g.run_dir);
  m.SetConfig(config);
  m.Add("aggregation_index", "models/aggregation_index.json", "aggregate");
  m.Add("global_index", "models/global_index.json", "aggregate");
  m.Save();
  std::printf("%zu DA groups indexed\n", indices.semi_global.groups.size());
  return 0;
}

std::string SafeName(std::string s) {
  for (char& c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  }
  return s.empty() ? "dialogue" : s;
}

// One turn per input line; "dialogue_id" switches the session.
int CmdExplain(const Globals& g, const std::string& input, std::string dialogue_id, bool html) {
  const auto config = ResolveConfig(g);
  const auto models = PipelineModels::Load(ModelDir(g.run_dir));
  const auto tmpl = TemplateFor(config);
  const auto provider = DaProviderFor(config);

  std::ifstream file;
  if (input != "-") {
    file.open(input);
    if (!file) throw IoError("cannot open " + input);
  }
  std::istream& in = input == "-" ? std::cin : file;

  Manifest manifest(g.run_dir);
  manifest.SetConfig(config);
  std::optional<OnlineSession> session;
  std::string current;
  auto finish = [&] {
    if (!session || session->trace().turns.empty()) return;
    const auto& last = session->trace().turns.back();
    const json verdict = {{"dialogue_id", current},
                          {"turns", static_cast<int>(session->trace().turns.size())},
                          {"label", AuthorshipName(last.dialogue.label)},
                          {"p_human", last.dialogue.probs.human},
                          {"p_ai", last.dialogue.probs.ai}};
    const fs::path rel = fs::path("explain") / SafeName(current) / "verdict.json";
    WriteJsonFile(g.run_dir / rel, verdict);
    manifest.Add("explain/" + current + "/verdict", rel, "explain");
    std::cout << json{{"verdict", verdict}}.dump() << std::endl;
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(e.what(), line_no);
    }
    if (j.is_object() && j.contains("dialogue_id")) {
      dialogue_id = j["dialogue_id"].get<std::string>();
      j.erase("dialogue_id");
    }
    Turn turn;
    try {
      turn = TurnFromJson(j);
    } catch (const SchemaError& e) {
      throw ParseError(e.what(), line_no);
    }
    if (!session || dialogue_id != current) {
      finish();
      current = dialogue_id;
      session.emplace(models, config, tmpl, *provider, current);
    }
    if (turn.speaker != Speaker::kUser) continue;
    const auto& t = session->Push(turn);
    const int n = static_cast<int>(session->trace().turns.size());
    const fs::path rel = fs::path("explain") / SafeName(current) / ("turn-" + std::to_string(n) + ".json");
    WriteJsonFile(g.run_dir / rel, ReportToJson(t.report));
    manifest.Add("explain/" + current + "/turn-" + std::to_string(n), rel, "explain");
    if (html) {
      fs::path html_rel = rel;
      html_rel.replace_extension(".html");
      WriteReport(t.report, ReportFormat::kHtml, g.run_dir / html_rel);
    }
    std::cout << json{{"dialogue_id", current},
                      {"turn", n},
                      {"turn_label", AuthorshipName(t.token_probs.Argmax())},
                      {"dialogue_label", AuthorshipName(t.dialogue.label)},
                      {"report", rel.generic_string()}}
                     .dump()
              << std::endl;
  }
  finish();
  manifest.Save();
  return 0;
}

int CmdEvaluate(const Globals& g, const std::string& what, std::optional<int> k) {
  auto config = ResolveConfig(g);
  if (k) config.aopc_k_max = *k;
  const auto corpus = LoadRunCorpus(g.run_dir);
  const auto split = LoadRunSplit(g.run_dir);
  const auto models = PipelineModels::Load(ModelDir(g.run_dir));
  const auto test = SplitDialogues(corpus, split, SplitPart::kTest);
  const auto tmpl = TemplateFor(config);
  const auto provider = DaProviderFor(config);

  json out;
  std::string file;
  if (what == "f1") {
    out = EvaluateDetection(test, models, config, tmpl, *provider).ToJson();
    file = "eval_f1.json";
  } else if (what == "aopc") {
    const auto samples = AopcSamples(test);
    const auto scorer = TokenScorer(models.token);
    const AopcOptions options{config.aopc_k_max, config.aopc_skip_absent};
    for (Authorship c : {Authorship::kAI, Authorship::kHuman}) {
      out[std::string(AuthorshipName(c))] =
          CompareAggregations(scorer, samples, models.semi_global, models.global, c, options)
              .ToJson();
    }
    file = "eval_aopc.json";
  } else {
    out = TimeBreakdown(test, models, config, tmpl, *provider, config.timing_samples).ToJson();
    file = "timing.json";
  }
  WriteJsonFile(g.run_dir / file, out);
  Manifest m(g.run_dir);
  m.SetConfig(config);
  m.Add("evaluate_" + what, file, "evaluate", what != "timing");
  m.Save();
  std::cout << out.dump(2) << std::endl;
  return 0;
}

int CmdReport(const std::vector<std::string>& inputs, const std::string& format,
              const std::string& out_dir) {
  for (const auto& input : inputs) {
    const auto bundle = ReportFromJson(ReadJsonFile(input));
    bundle.Validate();
    fs::path target = out_dir.empty() ? fs::path(input) : fs::path(out_dir) / fs::path(input).filename();
    target.replace_extension(format == "html" ? ".html" : ".json");
    if (!target.parent_path().empty()) fs::create_directories(target.parent_path());
    WriteReport(bundle, format == "html" ? ReportFormat::kHtml : ReportFormat::kJson, target);
    std::printf("%s\n", target.c_str());
  }
  return 0;
}

int Main(int argc, char** argv) {
  CLI::App app{"turnlens: explain-then-detect for LLM-written user turns"};
  app.require_subcommand(1);
  Globals g;
  std::string run_dir = "run";
  app.add_option("--run-dir", run_dir, "Directory holding all artifacts and the manifest");
  app.add_option("-c,--config", g.config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--set", g.overrides, "Override a config key, e.g. --set selection.k_tokens=1");

  auto* ingest = app.add_subcommand("ingest", "Validate a JSONL corpus and copy it into the run");
  std::string ingest_input;
  ingest->add_option("input", ingest_input, "Corpus JSONL")->required();

  auto* generate = app.add_subcommand("generate", "Write a seeded synthetic corpus into the run");
  int dialogues = 400;
  generate->add_option("-n,--dialogues", dialogues, "Number of dialogues")->check(CLI::PositiveNumber);

  auto* split = app.add_subcommand("split", "Seeded train/val/test split by dialogue");

  auto* train = app.add_subcommand("train", "Train detectors");
  std::string dimension = "all";
  train->add_option("--dimension", dimension, "Model to train")
      ->check(CLI::IsMember({"tokens", "das", "dialogue", "all"}));

  auto* aggregate = app.add_subcommand("aggregate", "Build semi-global and global indices");

  auto* explain = app.add_subcommand("explain", "Stream turns (JSONL) and write a report per turn");
  std::string explain_input = "-";
  std::string dialogue_id = "dialogue";
  bool html = false;
  explain->add_option("input", explain_input, "Turn JSONL, '-' for stdin");
  explain->add_option("--dialogue-id", dialogue_id, "Id used until a line sets dialogue_id");
  explain->add_flag("--html", html, "Also write HTML reports");

  auto* evaluate = app.add_subcommand("evaluate", "Evaluate on the test split");
  std::string metric;
  std::optional<int> k;
  evaluate->add_option("metric", metric, "f1 | aopc | timing")
      ->required()
      ->check(CLI::IsMember({"f1", "aopc", "timing"}));
  evaluate->add_option("--k", k, "Largest k for AOPC")->check(CLI::Range(1, 1000));

  auto* report = app.add_subcommand("report", "Render report bundles");
  std::vector<std::string> report_inputs;
  std::string format = "html";
  std::string out_dir;
  report->add_option("inputs", report_inputs, "Report bundle JSON files")->required();
  report->add_option("--format", format)->check(CLI::IsMember({"html", "json"}));
  report->add_option("-o,--out-dir", out_dir, "Output directory (default: next to input)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  g.run_dir = run_dir;

  try {
    if (*ingest) return CmdIngest(g, ingest_input);
    if (*generate) return CmdGenerate(g, dialogues);
    if (*split) return CmdSplit(g);
    if (*train) return CmdTrain(g, dimension);
    if (*aggregate) return CmdAggregate(g);
    if (*explain) return CmdExplain(g, explain_input, dialogue_id, html);
    if (*evaluate) return CmdEvaluate(g, metric, k);
    if (*report) return CmdReport(report_inputs, format, out_dir);
  } catch (const SchemaError& e) {
    std::fprintf(stderr, "error: invalid key %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}

}  // namespace
}  // namespace turnlens

int main(int argc, char** argv) { return turnlens::Main(argc, argv); }
