// Copyright 2026 The mlasr Authors
// SPDX-License-Identifier: Apache-2.0
//
// Desk-scale multilingual CTC recognizer with hierarchical LoRA experts:
// data generation, base + adapter training, the three decoding strategies,
// the k ablation and LID confusion reports, all driven from one config.

#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "mlasr/errors.hpp"
#include "mlasr/pipeline.hpp"

using namespace mlasr;

namespace {

struct CommonArgs {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::optional<std::string> out_dir;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "Run config JSON; defaults apply when omitted");
  cmd->add_option("--seed", args.seed, "Override the config seed");
  cmd->add_option("--out", args.out_dir, "Override the run directory");
}

RunConfig resolve_config(const CommonArgs& args) {
  RunConfig cfg = args.config_path.empty() ? default_run_config()
                                           : load_run_config(args.config_path);
  if (args.seed) cfg.seed = *args.seed;        // flags win over the file
  if (args.out_dir) cfg.out_dir = *args.out_dir;
  cfg.finalize();
  return cfg;
}

std::vector<int> parse_k_list(const std::string& csv) {
  std::vector<int> ks;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    ks.push_back(std::stoi(item));
  }
  return ks;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mlasr: trainable multilingual CTC recognizer with routed low-rank experts"};
  app.require_subcommand(1);

  CommonArgs gen_args, base_args, lid_args, hlora_args, eval_args, ablate_args, conf_args;
  std::string eval_ckpt, eval_manifest, eval_strategy = "known";
  std::string adapt_ckpt;  // base checkpoint for adaptation commands
  std::optional<double> hlora_lambda;
  std::optional<int> hlora_split_k;
  std::string ablate_ckpt, ablate_ks = "1,3,5";
  std::string conf_lidlora, conf_hlora, conf_manifest;

  CLI::App* gen = app.add_subcommand("gen-data", "Generate source + shifted target corpora");
  add_common(gen, gen_args);

  CLI::App* train_base_cmd =
      app.add_subcommand("train-base", "Two-phase base training on the source domain");
  add_common(train_base_cmd, base_args);

  CLI::App* train_lid = app.add_subcommand(
      "train-lidlora", "Per-language adapters over a frozen base (two-stage family)");
  add_common(train_lid, lid_args);
  train_lid->add_option("--checkpoint", adapt_ckpt, "Base checkpoint (default <out>/checkpoints/base.ckpt)");

  CLI::App* train_hl = app.add_subcommand(
      "train-hlora", "Shared + language experts with the LID-routed head (single-pass family)");
  add_common(train_hl, hlora_args);
  train_hl->add_option("--checkpoint", adapt_ckpt, "Base checkpoint (default <out>/checkpoints/base.ckpt)");
  train_hl->add_option("--lambda", hlora_lambda, "Override the LID loss weight");
  train_hl->add_option("--split-k", hlora_split_k, "Override the shared/language split");

  CLI::App* eval = app.add_subcommand("eval", "Decode a manifest and emit report files");
  add_common(eval, eval_args);
  eval->add_option("--checkpoint", eval_ckpt, "Checkpoint to evaluate")->required();
  eval->add_option("--manifest", eval_manifest, "Manifest (JSON lines) to decode")->required();
  eval->add_option("--strategy", eval_strategy, "known | two-stage | single-pass");

  CLI::App* ablate = app.add_subcommand("ablate-k", "Train + evaluate one hlora system per k");
  add_common(ablate, ablate_args);
  ablate->add_option("--checkpoint", ablate_ckpt, "Base checkpoint (default <out>/checkpoints/base.ckpt)");
  ablate->add_option("--k", ablate_ks, "Comma-separated split points (default 1,3,5)");

  CLI::App* confusion =
      app.add_subcommand("confusion", "Side-by-side LID confusion of the two agnostic strategies");
  add_common(confusion, conf_args);
  confusion->add_option("--lidlora-checkpoint", conf_lidlora, "Default <out>/checkpoints/lidlora.ckpt");
  confusion->add_option("--hlora-checkpoint", conf_hlora, "Default <out>/checkpoints/hlora.ckpt");
  confusion->add_option("--manifest", conf_manifest, "Default target dev manifest");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;  // usage error
  }

  try {
    if (gen->parsed()) {
      const RunConfig cfg = resolve_config(gen_args);
      pipeline_gen_data(cfg);
      std::cout << "generated 2 domains x 3 splits x " << cfg.data.languages
                << " languages under " << cfg.out_dir << "/data (config " << config_hash(cfg)
                << ")\n";
    } else if (train_base_cmd->parsed()) {
      const RunConfig cfg = resolve_config(base_args);
      const double dev = pipeline_train_base(cfg);
      std::cout << "base model done, source dev error rate " << format_double(dev) << "\n";
    } else if (train_lid->parsed()) {
      const RunConfig cfg = resolve_config(lid_args);
      const RunPaths paths = RunPaths::for_out(cfg.out_dir);
      const auto ckpt = adapt_ckpt.empty() ? paths.checkpoint("base")
                                           : std::filesystem::path(adapt_ckpt);
      const double dev = pipeline_train_adapted(cfg, SystemKind::PerLanguage, ckpt);
      std::cout << "lidlora adapters done, target dev error rate " << format_double(dev) << "\n";
    } else if (train_hl->parsed()) {
      const RunConfig cfg = resolve_config(hlora_args);
      const RunPaths paths = RunPaths::for_out(cfg.out_dir);
      const auto ckpt = adapt_ckpt.empty() ? paths.checkpoint("base")
                                           : std::filesystem::path(adapt_ckpt);
      const double dev =
          pipeline_train_adapted(cfg, SystemKind::Hierarchical, ckpt, hlora_split_k, hlora_lambda);
      std::cout << "hlora experts done, target dev error rate " << format_double(dev) << "\n";
    } else if (eval->parsed()) {
      const RunConfig cfg = resolve_config(eval_args);
      const RunPaths paths = RunPaths::for_out(cfg.out_dir);
      const Strategy strategy = strategy_from_name(eval_strategy);
      const auto tag = std::string(strategy_name(strategy)) + "-" +
                       std::filesystem::path(eval_manifest).parent_path().filename().string() +
                       "-" + std::filesystem::path(eval_manifest).stem().string();
      const EvalOutcome out =
          pipeline_eval(cfg, eval_ckpt, eval_manifest, strategy, paths.report_dir(tag));
      std::cout << "strategy " << strategy_name(strategy) << ": macro error rate "
                << format_double(out.rates.macro_avg) << ", lid accuracy "
                << format_double(out.confusion.accuracy()) << ", reports under "
                << paths.report_dir(tag).string() << "\n";
    } else if (ablate->parsed()) {
      const RunConfig cfg = resolve_config(ablate_args);
      const RunPaths paths = RunPaths::for_out(cfg.out_dir);
      const auto ckpt = ablate_ckpt.empty() ? paths.checkpoint("base")
                                            : std::filesystem::path(ablate_ckpt);
      const AblationTable table = pipeline_ablate_k(cfg, ckpt, parse_k_list(ablate_ks));
      std::cout << "k";
      for (int k : table.ks) std::cout << "\t" << k;
      std::cout << "\navg";
      for (double v : table.avg) std::cout << "\t" << format_double(v);
      std::cout << "\ntable written to " << (paths.root / "reports" / "ablate_k.csv").string()
                << "\n";
    } else if (confusion->parsed()) {
      const RunConfig cfg = resolve_config(conf_args);
      const RunPaths paths = RunPaths::for_out(cfg.out_dir);
      const auto lid_ckpt = conf_lidlora.empty() ? paths.checkpoint("lidlora")
                                                 : std::filesystem::path(conf_lidlora);
      const auto hl_ckpt = conf_hlora.empty() ? paths.checkpoint("hlora")
                                              : std::filesystem::path(conf_hlora);
      const auto manifest = conf_manifest.empty() ? paths.manifest("target", "dev")
                                                  : std::filesystem::path(conf_manifest);
      const ConfusionComparison cmp = pipeline_confusion(cfg, lid_ckpt, hl_ckpt, manifest);
      std::cout << "lid accuracy: two-stage " << format_double(cmp.two_stage.accuracy())
                << ", single-pass " << format_double(cmp.single_pass.accuracy()) << ", delta "
                << format_double(cmp.accuracy_delta) << "\n";
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 1;
  } catch (const CorpusError& e) {
    std::cerr << "corpus error: " << e.what() << "\n";
    return 1;
  } catch (const MetricsError& e) {
    std::cerr << "metrics error: " << e.what() << "\n";
    return 1;
  } catch (const DependencyError& e) {
    std::cerr << "dependency error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
