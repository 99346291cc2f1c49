// Copyright 2026 The mlasr Authors
// SPDX-License-Identifier: Apache-2.0

#include "mlasr/pipeline.hpp"

#include <fstream>
#include <iostream>

#include <json.hpp>

#include "mlasr/errors.hpp"

namespace mlasr {

using nlohmann::json;

System clone_base_as_per_language(const System& base, const LoraConfig& lora, int n_languages,
                                  uint64_t seed) {
  System sys;
  sys.kind = SystemKind::PerLanguage;
  sys.n_languages = n_languages;
  sys.backbone = base.backbone;
  Rng rng = rng_for(seed, "init/lora");
  sys.bank = AdapterBank::make_per_language(lora, sys.backbone.config.n_layers, n_languages,
                                            sys.backbone.config.hidden, sys.backbone.config.vocab,
                                            rng);
  return sys;
}

System clone_base_as_hierarchical(const System& base, const LoraConfig& lora, int n_languages,
                                  int split_k, uint64_t seed) {
  System sys;
  sys.kind = SystemKind::Hierarchical;
  sys.n_languages = n_languages;
  sys.backbone = base.backbone;
  sys.backbone.config.split_k = split_k;
  sys.backbone.config.validate();
  Rng rng = rng_for(seed, "init/lora");
  sys.bank = AdapterBank::make_hierarchical(lora, sys.backbone.config.n_layers, split_k,
                                            n_languages, sys.backbone.config.hidden,
                                            sys.backbone.config.vocab, rng);
  Rng lid_rng = rng_for(seed, "init/lid");
  sys.lid = LidHead::init(n_languages, sys.backbone.config.hidden, lid_rng);
  return sys;
}

void pipeline_gen_data(const RunConfig& cfg) {
  const RunPaths paths = RunPaths::for_out(cfg.out_dir);
  const auto source_specs = build_language_specs(cfg.data, cfg.seed);
  std::vector<LanguageSpec> target_specs;
  for (const auto& sp : source_specs) target_specs.push_back(domain_shift(sp, cfg.shift, cfg.seed));

  for (const auto& [domain, specs] :
       std::vector<std::pair<std::string, const std::vector<LanguageSpec>*>>{
           {"source", &source_specs}, {"target", &target_specs}}) {
    const int train_count =
        domain == "target" ? cfg.target_train_count() : cfg.train_per_language;
    const std::vector<std::pair<std::string, int>> splits = {
        {"train", train_count}, {"dev", cfg.dev_per_language}, {"test", cfg.test_per_language}};
    for (const auto& [split, count] : splits) {
      GenParams gp = cfg.gen;
      gp.count_per_language = count;
      const Corpus corpus = gen_corpus(*specs, domain, split, gp);
      save_corpus(corpus, paths.manifest(domain, split));
    }
  }

  std::filesystem::create_directories(paths.root);
  std::ofstream cfg_out(paths.root / "config.json");
  cfg_out << run_config_to_json(cfg).dump(2) << "\n";
}

namespace {

struct OpenedLog {
  std::ofstream stream;
  TrainLog log{nullptr};
};

std::unique_ptr<OpenedLog> open_train_log(const RunConfig& cfg, const RunPaths& paths,
                                          const std::string& mode, json extra) {
  auto out = std::make_unique<OpenedLog>();
  const auto path = paths.train_log(mode);
  std::filesystem::create_directories(path.parent_path());
  out->stream.open(path, std::ios::trunc);
  if (!out->stream) throw IoError("cannot write training log " + path.string());
  extra["type"] = "meta";
  extra["mode"] = mode;
  extra["config_hash"] = config_hash(cfg);
  out->stream << extra.dump() << "\n";
  out->log = TrainLog(&out->stream);
  return out;
}

}  // namespace

double pipeline_train_base(const RunConfig& cfg) {
  const RunPaths paths = RunPaths::for_out(cfg.out_dir);
  const Tokenizer tk = build_tokenizer(cfg.data);
  const Corpus train = load_corpus(paths.manifest("source", "train"), cfg.data.languages);
  const Corpus dev = load_corpus(paths.manifest("source", "dev"), cfg.data.languages);

  Rng init = rng_for(cfg.seed, "init/backbone");
  System sys;
  sys.kind = SystemKind::Base;
  sys.n_languages = cfg.data.languages;
  sys.backbone = Backbone::init(cfg.model, init);

  auto log = open_train_log(cfg, paths, "base",
                            json{{"split_k", cfg.model.split_k},
                                 {"rank", cfg.lora.rank},
                                 {"alpha", cfg.lora.alpha},
                                 {"lambda", cfg.train.lambda_lid}});
  const double dev_err = train_base(sys, train, dev, tk, cfg.train, log->log);
  save_system(sys, paths.checkpoint("base"), config_hash(cfg));
  return dev_err;
}

double pipeline_train_adapted(const RunConfig& cfg, SystemKind kind,
                              const std::filesystem::path& base_ckpt, std::optional<int> split_k,
                              std::optional<double> lambda, const std::string& ckpt_name) {
  if (kind != SystemKind::PerLanguage && kind != SystemKind::Hierarchical)
    throw ConfigError("train: adapted mode must be lidlora or hlora");
  const RunPaths paths = RunPaths::for_out(cfg.out_dir);
  const LoadedSystem base = load_system(base_ckpt);  // upstream dependency comes first
  if (base.system.kind != SystemKind::Base)
    throw DependencyError("train: " + base_ckpt.string() + " is not a base checkpoint");

  const Tokenizer tk = build_tokenizer(cfg.data);
  const Corpus train = load_corpus(paths.manifest("target", "train"), cfg.data.languages);
  const Corpus dev = load_corpus(paths.manifest("target", "dev"), cfg.data.languages);

  TrainConfig tc = cfg.train;
  if (lambda) tc.lambda_lid = *lambda;
  const std::string mode = system_kind_name(kind);
  const int k = split_k.value_or(cfg.model.split_k);

  double dev_err;
  System sys;
  if (kind == SystemKind::PerLanguage) {
    sys = clone_base_as_per_language(base.system, cfg.lora, cfg.data.languages, cfg.seed);
    auto log = open_train_log(cfg, paths, mode,
                              json{{"rank", cfg.lora.rank}, {"alpha", cfg.lora.alpha}});
    dev_err = train_per_language_adapters(sys, train, dev, tk, tc, log->log);
  } else {
    sys = clone_base_as_hierarchical(base.system, cfg.lora, cfg.data.languages, k, cfg.seed);
    auto log = open_train_log(cfg, paths, mode,
                              json{{"split_k", k},
                                   {"rank", cfg.lora.rank},
                                   {"alpha", cfg.lora.alpha},
                                   {"lambda", tc.lambda_lid}});
    dev_err = train_hierarchical(sys, train, dev, tk, tc, log->log);
  }
  save_system(sys, paths.checkpoint(ckpt_name.empty() ? mode : ckpt_name), config_hash(cfg));
  return dev_err;
}

EvalOutcome pipeline_eval(const RunConfig& cfg, const std::filesystem::path& ckpt,
                          const std::filesystem::path& manifest, Strategy strategy,
                          const std::filesystem::path& report_dir) {
  const LoadedSystem loaded = load_system(ckpt);
  check_strategy_compat(loaded.system.kind, strategy);
  const Tokenizer tk = build_tokenizer(cfg.data);
  const Corpus corpus = load_corpus(manifest, cfg.data.languages);
  const auto units = units_from_setup(cfg.data);

  EvalOutcome out = run_eval(loaded.system, corpus, strategy, tk, units);
  const std::string hash = config_hash(cfg);
  write_rates_csv(report_dir / "rates.csv", out.rates, hash);
  write_confusion_csv(report_dir / "confusion.csv", out.confusion, hash);
  write_timing_csv(report_dir / "timing.csv", strategy_name(strategy), out.timing, hash);
  write_decode_log(report_dir / "decode.jsonl", out.records, hash);
  return out;
}

AblationTable pipeline_ablate_k(const RunConfig& cfg, const std::filesystem::path& base_ckpt,
                                const std::vector<int>& ks) {
  if (ks.empty()) throw ConfigError("ablate-k: empty k list");
  for (int k : ks)
    if (k < 1 || k >= cfg.model.n_layers)
      throw ConfigError("ablate-k: k=" + std::to_string(k) + " outside [1, N-1] with N=" +
                        std::to_string(cfg.model.n_layers));

  const RunPaths paths = RunPaths::for_out(cfg.out_dir);
  AblationTable table;
  table.ks = ks;
  table.per_language.assign(static_cast<size_t>(cfg.data.languages), {});
  for (int k : ks) {
    const std::string name = "hlora-k" + std::to_string(k);
    pipeline_train_adapted(cfg, SystemKind::Hierarchical, base_ckpt, k, std::nullopt, name);
    const EvalOutcome out =
        pipeline_eval(cfg, paths.checkpoint(name), paths.manifest("target", "dev"),
                      Strategy::SinglePass, paths.report_dir(name));
    for (int l = 0; l < cfg.data.languages; ++l)
      table.per_language[static_cast<size_t>(l)].push_back(out.rates.per_language[static_cast<size_t>(l)]);
    table.avg.push_back(out.rates.macro_avg);
  }

  std::filesystem::create_directories(paths.root / "reports");
  std::ofstream os(paths.root / "reports" / "ablate_k.csv", std::ios::trunc);
  if (!os) throw IoError("cannot write ablation table");
  os << "# config_hash=" << config_hash(cfg) << "\n";
  os << "language";
  for (int k : ks) os << ",k=" << k;
  os << "\n";
  for (int l = 0; l < cfg.data.languages; ++l) {
    os << "L" << l;
    for (size_t i = 0; i < ks.size(); ++i)
      os << "," << format_double(table.per_language[static_cast<size_t>(l)][i]);
    os << "\n";
  }
  os << "avg";
  for (size_t i = 0; i < ks.size(); ++i) os << "," << format_double(table.avg[i]);
  os << "\n";
  return table;
}

ConfusionComparison pipeline_confusion(const RunConfig& cfg,
                                       const std::filesystem::path& lidlora_ckpt,
                                       const std::filesystem::path& hlora_ckpt,
                                       const std::filesystem::path& manifest) {
  const RunPaths paths = RunPaths::for_out(cfg.out_dir);
  const LoadedSystem lidlora = load_system(lidlora_ckpt);
  const LoadedSystem hlora = load_system(hlora_ckpt);
  check_strategy_compat(lidlora.system.kind, Strategy::TwoStage);
  check_strategy_compat(hlora.system.kind, Strategy::SinglePass);

  const Tokenizer tk = build_tokenizer(cfg.data);
  const Corpus corpus = load_corpus(manifest, cfg.data.languages);
  const auto units = units_from_setup(cfg.data);

  ConfusionComparison out;
  out.two_stage = run_eval(lidlora.system, corpus, Strategy::TwoStage, tk, units).confusion;
  out.single_pass = run_eval(hlora.system, corpus, Strategy::SinglePass, tk, units).confusion;
  out.accuracy_delta = out.single_pass.accuracy() - out.two_stage.accuracy();

  const std::string hash = config_hash(cfg);
  const auto dir = paths.report_dir("confusion");
  write_confusion_csv(dir / "confusion-two-stage.csv", out.two_stage, hash);
  write_confusion_csv(dir / "confusion-single-pass.csv", out.single_pass, hash);
  std::filesystem::create_directories(dir);
  std::ofstream os(dir / "summary.csv", std::ios::trunc);
  os << "# config_hash=" << hash << "\n";
  os << "metric,two_stage,single_pass,delta\n";
  os << "lid_accuracy," << format_double(out.two_stage.accuracy()) << ","
     << format_double(out.single_pass.accuracy()) << "," << format_double(out.accuracy_delta)
     << "\n";
  return out;
}

}  // namespace mlasr
