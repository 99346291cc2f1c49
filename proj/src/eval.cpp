// Copyright 2026 The mlasr Authors
// SPDX-License-Identifier: Apache-2.0

#include "mlasr/eval.hpp"

#include <fstream>

#include <json.hpp>

#include "mlasr/config.hpp"
#include "mlasr/errors.hpp"

namespace mlasr {

using nlohmann::json;

std::vector<UnitType> units_from_setup(const LanguageSetup& setup) {
  std::vector<UnitType> units(static_cast<size_t>(setup.languages), UnitType::Word);
  for (int c : setup.char_like)
    if (c >= 0 && c < setup.languages) units[static_cast<size_t>(c)] = UnitType::Char;
  return units;
}

EvalOutcome run_eval(const System& sys, const Corpus& corpus, Strategy strategy,
                     const Tokenizer& tokenizer, const std::vector<UnitType>& units) {
  check_strategy_compat(sys.kind, strategy);
  const int L = tokenizer.num_languages();
  if (static_cast<int>(units.size()) != L)
    throw ConfigError("run_eval: unit labels do not cover the language set");

  EvalOutcome out;
  out.strategy = strategy;
  out.confusion = ConfusionMatrix(L);
  std::vector<ErrorCounts> counts(static_cast<size_t>(L));
  std::vector<int64_t> scored(static_cast<size_t>(L), 0);
  std::vector<DecodeResult> results;
  results.reserve(corpus.utterances.size());

  for (const auto& utt : corpus.utterances) {
    DecodeResult res;
    switch (strategy) {
      case Strategy::Known:
        res = decode_language_known(sys, utt, LidTag::make(utt.lang), tokenizer);
        break;
      case Strategy::TwoStage:
        res = decode_two_stage(sys, utt, tokenizer);
        break;
      case Strategy::SinglePass:
        res = decode_single_pass(sys, utt, tokenizer);
        break;
    }
    counts[static_cast<size_t>(utt.lang)] += edit_distance(utt.tokens, res.hypothesis);
    ++scored[static_cast<size_t>(utt.lang)];
    out.confusion.add(utt.lang, res.predicted_lang.id);

    EvalRecord rec;
    rec.utt_id = utt.utt_id;
    rec.true_lang = utt.lang;
    rec.pred_lang = res.predicted_lang.id;
    rec.ref_tokens = utt.tokens;
    rec.hyp_tokens = res.hypothesis;
    rec.strategy = strategy_name(strategy);
    rec.stage_ms = res.stage_ms;
    out.records.push_back(std::move(rec));
    results.push_back(std::move(res));
  }
  out.rates = mixture_error_rate(counts, units, scored);
  out.timing = timing_report(results);
  return out;
}

namespace {
std::ofstream open_report(const std::filesystem::path& path, const std::string& config_hash) {
  if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot write report " + path.string());
  os << "# config_hash=" << config_hash << "\n";
  return os;
}
}  // namespace

void write_rates_csv(const std::filesystem::path& path, const MixtureRates& rates,
                     const std::string& config_hash) {
  auto os = open_report(path, config_hash);
  os << "language,unit,substitutions,insertions,deletions,ref_len,error_rate\n";
  for (size_t l = 0; l < rates.per_language.size(); ++l) {
    const ErrorCounts& c = rates.counts[l];
    os << "L" << l << "," << unit_type_name(rates.units[l]) << "," << c.substitutions << ","
       << c.insertions << "," << c.deletions << "," << c.ref_len << ","
       << format_double(rates.per_language[l]) << "\n";
  }
  os << "avg,macro,,,,," << format_double(rates.macro_avg) << "\n";
}

void write_confusion_csv(const std::filesystem::path& path, const ConfusionMatrix& cm,
                         const std::string& config_hash) {
  auto os = open_report(path, config_hash);
  os << "true\\pred";
  for (int c = 0; c < cm.target_count(); ++c) os << ",L" << c;
  os << ",OTS\n";
  for (int r = 0; r < cm.target_count(); ++r) {
    os << "L" << r;
    for (int c = 0; c <= cm.target_count(); ++c) os << "," << cm.at(r, c);
    os << "\n";
  }
  os << "accuracy," << format_double(cm.accuracy()) << "\n";
}

void write_timing_csv(const std::filesystem::path& path, const std::string& strategy,
                      const TimingSummary& timing, const std::string& config_hash) {
  auto os = open_report(path, config_hash);
  os << "strategy,count,mean_ms,median_ms,mean_forward_passes\n";
  os << strategy << "," << timing.count << "," << format_double(timing.mean_ms) << ","
     << format_double(timing.median_ms) << "," << format_double(timing.mean_forward_passes)
     << "\n";
}

void write_decode_log(const std::filesystem::path& path, const std::vector<EvalRecord>& records,
                      const std::string& config_hash) {
  if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot write decode log " + path.string());
  os << json{{"type", "meta"}, {"config_hash", config_hash}}.dump() << "\n";
  for (const auto& r : records) {
    os << json{{"utt_id", r.utt_id},     {"true_lang", r.true_lang},
               {"pred_lang", r.pred_lang}, {"ref_tokens", r.ref_tokens},
               {"hyp_tokens", r.hyp_tokens}, {"strategy", r.strategy},
               {"stage_times_ms", r.stage_ms}}
              .dump()
       << "\n";
  }
}

}  // namespace mlasr
