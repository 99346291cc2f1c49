// Copyright 2026 The mlasr Authors
// SPDX-License-Identifier: Apache-2.0

#include "mlasr/data.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "mlasr/errors.hpp"

namespace mlasr {

using nlohmann::json;

const char* unit_type_name(UnitType u) { return u == UnitType::Word ? "word" : "char"; }

std::string Tokenizer::surface(int id) const {
  if (id == 0) return "<blk>";
  if (is_language_token(id)) return "<L" + std::to_string(language_of_token(id)) + ">";
  if (id > 0 && id < vocab_) return "t" + std::to_string(id);
  throw ConfigError("tokenizer: id " + std::to_string(id) + " outside vocabulary");
}

int Tokenizer::id_of(const std::string& surface) const {
  if (surface == "<blk>") return 0;
  if (surface.size() > 3 && surface.rfind("<L", 0) == 0 && surface.back() == '>')
    return language_token(std::stoi(surface.substr(2, surface.size() - 3)));
  if (!surface.empty() && surface[0] == 't') {
    const int id = std::stoi(surface.substr(1));
    if (is_content(id)) return id;
  }
  throw ConfigError("tokenizer: unknown surface '" + surface + "'");
}

int LanguageSetup::shared_tokens() const {
  return static_cast<int>(std::lround(overlap_fraction * tokens_per_language));
}

Tokenizer build_tokenizer(const LanguageSetup& setup) {
  return Tokenizer(setup.languages, setup.content_count());
}

std::vector<LanguageSpec> build_language_specs(const LanguageSetup& setup, uint64_t seed) {
  if (setup.languages < 1) throw ConfigError("language setup: need at least one language");
  if (setup.tokens_per_language < 1) throw ConfigError("language setup: empty token inventory");
  if (setup.unique_tokens() < 0)
    throw ConfigError("language setup: overlap fraction above 1");
  const Tokenizer tk = build_tokenizer(setup);
  const int shared = setup.shared_tokens();
  const int unique = setup.unique_tokens();

  std::vector<LanguageSpec> specs;
  for (int lang = 0; lang < setup.languages; ++lang) {
    Rng rng = rng_for(seed, "data/spec", static_cast<uint64_t>(lang));
    LanguageSpec sp;
    sp.lang = LidTag::make(lang);
    sp.unit = UnitType::Word;
    for (int c : setup.char_like)
      if (c == lang) sp.unit = UnitType::Char;
    // shared pool first, then this language's private block
    for (int i = 0; i < shared; ++i) sp.inventory.push_back(tk.first_content_id() + i);
    const int base = tk.first_content_id() + shared + lang * unique;
    for (int i = 0; i < unique; ++i) sp.inventory.push_back(base + i);

    const int n = static_cast<int>(sp.inventory.size());
    sp.bigram = Tensor({n, n});
    for (int i = 0; i < n; ++i) {
      double row_sum = 0.0;
      for (int j = 0; j < n; ++j) {
        const double w = rng.uniform() + 0.05;  // keep every transition reachable
        sp.bigram.at(i, j) = w;
        row_sum += w;
      }
      for (int j = 0; j < n; ++j) sp.bigram.at(i, j) /= row_sum;
    }

    sp.templates.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      Tensor tmpl({setup.frames_per_token, setup.feat_dim});
      rng.fill_normal(tmpl.data(), tmpl.size(), 0.0, 1.0);
      sp.templates.push_back(std::move(tmpl));
    }
    sp.channel_offset = Tensor({1, setup.feat_dim});
    rng.fill_normal(sp.channel_offset.data(), sp.channel_offset.size(), 0.0, setup.offset_std);
    sp.noise_std = setup.noise_std;
    specs.push_back(std::move(sp));
  }
  return specs;
}

namespace {

// M = I + strength * R / sqrt(F) with R ~ N(0,1); near-identity mixing.
Tensor mixing_matrix(int64_t feat_dim, double strength, Rng& rng) {
  Tensor m({feat_dim, feat_dim});
  const double scale = strength / std::sqrt(static_cast<double>(feat_dim));
  for (int64_t i = 0; i < feat_dim; ++i)
    for (int64_t j = 0; j < feat_dim; ++j)
      m.at(i, j) = (i == j ? 1.0 : 0.0) + scale * rng.normal(0.0, 1.0);
  return m;
}

void apply_mix_row(const Tensor& m, const double* in, double* out, int64_t feat_dim) {
  for (int64_t i = 0; i < feat_dim; ++i) {
    double acc = 0.0;
    for (int64_t j = 0; j < feat_dim; ++j) acc += m.at(i, j) * in[j];
    out[i] = acc;
  }
}

void apply_mix(const Tensor& m, Tensor& rows) {
  const int64_t feat_dim = rows.cols();
  std::vector<double> tmp(static_cast<size_t>(feat_dim));
  for (int64_t r = 0; r < rows.rows(); ++r) {
    apply_mix_row(m, rows.data() + r * feat_dim, tmp.data(), feat_dim);
    for (int64_t f = 0; f < feat_dim; ++f) rows.at(r, f) = tmp[static_cast<size_t>(f)];
  }
}

}  // namespace

LanguageSpec domain_shift(const LanguageSpec& spec, const ShiftParams& shift, uint64_t seed) {
  if (shift.noise_mult < 0.0) throw ConfigError("domain shift: negative noise multiplier");
  LanguageSpec out = spec;
  const int64_t feat_dim = spec.channel_offset.size();

  // language-independent channel change, drawn identically per language
  if (shift.global_gain_jitter != 0.0 || shift.global_offset_shift != 0.0 ||
      shift.global_mix != 0.0) {
    Rng global = rng_for(seed, "data/shift/global");
    const Tensor mix = mixing_matrix(feat_dim, shift.global_mix, global);
    Tensor gain({1, feat_dim});
    Tensor delta({1, feat_dim});
    for (int64_t f = 0; f < feat_dim; ++f) gain[f] = 1.0 + global.normal(0.0, shift.global_gain_jitter);
    for (int64_t f = 0; f < feat_dim; ++f) delta[f] = global.normal(0.0, shift.global_offset_shift);
    for (auto& tmpl : out.templates) {
      if (shift.global_mix != 0.0) apply_mix(mix, tmpl);
      for (int64_t r = 0; r < tmpl.rows(); ++r)
        for (int64_t f = 0; f < feat_dim; ++f) tmpl.at(r, f) *= gain[f];
    }
    if (shift.global_mix != 0.0) apply_mix(mix, out.channel_offset);
    for (int64_t f = 0; f < feat_dim; ++f)
      out.channel_offset[f] = gain[f] * out.channel_offset[f] + delta[f];
  }

  // per-language components
  Rng rng = rng_for(seed, "data/shift", static_cast<uint64_t>(spec.lang.id));
  if (shift.lang_mix != 0.0) {
    const Tensor mix = mixing_matrix(feat_dim, shift.lang_mix, rng);
    for (auto& tmpl : out.templates) apply_mix(mix, tmpl);
    apply_mix(mix, out.channel_offset);
  }
  if (shift.template_jitter != 0.0)
    for (auto& tmpl : out.templates)
      for (int64_t i = 0; i < tmpl.size(); ++i)
        tmpl[i] += rng.normal(0.0, shift.template_jitter);
  if (shift.offset_shift != 0.0)
    for (int64_t i = 0; i < out.channel_offset.size(); ++i)
      out.channel_offset[i] += rng.normal(0.0, shift.offset_shift);
  out.noise_std = spec.noise_std * shift.noise_mult;
  return out;
}

std::vector<std::vector<int>> Corpus::indices_by_language(int n_languages) const {
  std::vector<std::vector<int>> by_lang(static_cast<size_t>(n_languages));
  for (size_t i = 0; i < utterances.size(); ++i) {
    const int l = utterances[i].lang;
    if (l < 0 || l >= n_languages)
      throw CorpusError("corpus: utterance " + utterances[i].utt_id + " has language id " +
                        std::to_string(l) + " outside the declared set");
    by_lang[static_cast<size_t>(l)].push_back(static_cast<int>(i));
  }
  return by_lang;
}

Corpus gen_corpus(const std::vector<LanguageSpec>& specs, const std::string& domain,
                  const std::string& split, const GenParams& params) {
  if (specs.empty()) throw CorpusError("gen_corpus: no language specs");
  if (params.count_per_language < 1)
    throw CorpusError("gen_corpus: need at least one utterance per language per split");
  if (params.u_min < 1 || params.u_max < params.u_min)
    throw CorpusError("gen_corpus: bad token-length range [" + std::to_string(params.u_min) +
                      "," + std::to_string(params.u_max) + "]");
  if (params.downsample < 1) throw CorpusError("gen_corpus: bad downsample stride");
  for (const auto& sp : specs) {
    if (sp.inventory.empty()) throw CorpusError("gen_corpus: language " + sp.lang.code + " has an empty inventory");
    if (sp.templates.size() != sp.inventory.size() || sp.templates[0].rows() < 1)
      throw CorpusError("gen_corpus: language " + sp.lang.code + " has inconsistent templates");
  }

  Corpus corpus;
  corpus.domain = domain;
  corpus.split = split;
  for (const auto& sp : specs) {
    Rng rng = rng_for(params.seed, "data/" + domain + "/" + split,
                      static_cast<uint64_t>(sp.lang.id));
    const int64_t feat_dim = sp.channel_offset.size();
    const int64_t dur = sp.templates[0].rows();
    for (int n = 0; n < params.count_per_language; ++n) {
      const int64_t u_len = rng.uniform_int(params.u_min, params.u_max);
      // bigram chain over inventory positions
      std::vector<int> positions;
      int pos = static_cast<int>(rng.uniform_int(0, static_cast<int64_t>(sp.inventory.size()) - 1));
      positions.push_back(pos);
      for (int64_t u = 1; u < u_len; ++u) {
        const double r = rng.uniform();
        double acc = 0.0;
        int next = static_cast<int>(sp.inventory.size()) - 1;
        for (int j = 0; j < static_cast<int>(sp.inventory.size()); ++j) {
          acc += sp.bigram.at(pos, j);
          if (r < acc) {
            next = j;
            break;
          }
        }
        pos = next;
        positions.push_back(pos);
      }

      // feasibility: frames must survive downsampling with the worst-case
      // 2U+1 alignment requirement
      const int64_t emitted = u_len * dur;
      const int64_t required = static_cast<int64_t>(params.downsample) * (2 * u_len + 1);
      const int64_t t_len = std::max(emitted, required);

      Utterance utt;
      utt.lang = sp.lang.id;
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%s-%s-L%d-%04d", domain.c_str(), split.c_str(),
                    sp.lang.id, n);
      utt.utt_id = buf;
      utt.features = Tensor({t_len, feat_dim});
      for (int64_t u = 0; u < u_len; ++u) {
        utt.tokens.push_back(sp.inventory[static_cast<size_t>(positions[static_cast<size_t>(u)])]);
        const Tensor& tmpl = sp.templates[static_cast<size_t>(positions[static_cast<size_t>(u)])];
        for (int64_t r = 0; r < dur; ++r)
          for (int64_t f = 0; f < feat_dim; ++f)
            utt.features.at(u * dur + r, f) = tmpl.at(r, f);
      }
      // trailing rows beyond emitted frames stay at the template-free
      // silence level; offset and noise cover every frame
      for (int64_t t = 0; t < t_len; ++t)
        for (int64_t f = 0; f < feat_dim; ++f)
          utt.features.at(t, f) += sp.channel_offset[f] +
                                   (sp.noise_std > 0.0 ? rng.normal(0.0, sp.noise_std) : 0.0);
      corpus.utterances.push_back(std::move(utt));
    }
  }
  return corpus;
}

namespace {

void write_u32(std::ostream& os, uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
void write_u64(std::ostream& os, uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); }

uint32_t read_u32(std::istream& is) {
  uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 4);
  return v;
}
uint64_t read_u64(std::istream& is) {
  uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 8);
  return v;
}

std::filesystem::path feats_path_for(const std::filesystem::path& manifest_path) {
  std::filesystem::path p = manifest_path;
  p.replace_extension(".feats");
  return p;
}

}  // namespace

void save_corpus(const Corpus& corpus, const std::filesystem::path& manifest_path) {
  std::filesystem::create_directories(manifest_path.parent_path().empty()
                                          ? "."
                                          : manifest_path.parent_path());
  const auto feats_path = feats_path_for(manifest_path);
  std::ofstream feats(feats_path, std::ios::binary | std::ios::trunc);
  if (!feats) throw IoError("cannot write feature file " + feats_path.string());
  std::ofstream manifest(manifest_path, std::ios::trunc);
  if (!manifest) throw IoError("cannot write manifest " + manifest_path.string());

  for (const auto& utt : corpus.utterances) {
    const int64_t offset = static_cast<int64_t>(feats.tellp());
    write_u32(feats, 2);
    write_u64(feats, static_cast<uint64_t>(utt.features.rows()));
    write_u64(feats, static_cast<uint64_t>(utt.features.cols()));
    feats.write(reinterpret_cast<const char*>(utt.features.data()),
                static_cast<std::streamsize>(utt.features.size() * 8));
    json rec = {{"utt_id", utt.utt_id}, {"lang", utt.lang},       {"offset", offset},
                {"T", utt.features.rows()}, {"F", utt.features.cols()}, {"tokens", utt.tokens},
                {"domain", corpus.domain},  {"split", corpus.split}};
    manifest << rec.dump() << "\n";
  }
  if (!feats || !manifest) throw IoError("short write under " + manifest_path.string());
}

CorpusManifest load_manifest(const std::filesystem::path& manifest_path, int expected_languages) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open manifest " + manifest_path.string());
  CorpusManifest mf;
  std::unordered_set<std::string> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
      ManifestRecord r;
      r.utt_id = rec.at("utt_id").get<std::string>();
      r.lang = rec.at("lang").get<int>();
      r.offset = rec.at("offset").get<int64_t>();
      r.t_len = rec.at("T").get<int64_t>();
      r.feat_dim = rec.at("F").get<int64_t>();
      r.tokens = rec.at("tokens").get<TokenSeq>();
      r.domain = rec.at("domain").get<std::string>();
      r.split = rec.at("split").get<std::string>();
      mf.records.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw ParseError("manifest " + manifest_path.string() + " line " + std::to_string(line_no) +
                       ": " + e.what());
    }
    const ManifestRecord& r = mf.records.back();
    if (!seen.insert(r.utt_id).second)
      throw CorpusError("manifest " + manifest_path.string() + " line " + std::to_string(line_no) +
                        ": duplicate utt_id " + r.utt_id);
    if (r.lang < 0 || (expected_languages >= 0 && r.lang >= expected_languages))
      throw CorpusError("manifest " + manifest_path.string() + " line " + std::to_string(line_no) +
                        ": language id " + std::to_string(r.lang) +
                        " outside the declared language set");
    if (mf.records.size() == 1) {
      mf.domain = r.domain;
      mf.split = r.split;
    }
  }
  return mf;
}

Corpus load_corpus(const std::filesystem::path& manifest_path, int expected_languages) {
  const CorpusManifest mf = load_manifest(manifest_path, expected_languages);
  const auto feats_path = feats_path_for(manifest_path);
  std::ifstream feats(feats_path, std::ios::binary);
  if (!feats) throw IoError("cannot open feature file " + feats_path.string());

  Corpus corpus;
  corpus.domain = mf.domain;
  corpus.split = mf.split;
  for (const auto& r : mf.records) {
    feats.seekg(r.offset);
    const uint32_t ndim = read_u32(feats);
    if (!feats || ndim != 2)
      throw ParseError("feature file " + feats_path.string() + ": bad shape header for " + r.utt_id);
    const int64_t t_len = static_cast<int64_t>(read_u64(feats));
    const int64_t feat_dim = static_cast<int64_t>(read_u64(feats));
    if (t_len != r.t_len || feat_dim != r.feat_dim)
      throw ParseError("feature file " + feats_path.string() + ": shape mismatch for " + r.utt_id);
    Utterance utt;
    utt.utt_id = r.utt_id;
    utt.lang = r.lang;
    utt.tokens = r.tokens;
    utt.features = Tensor({t_len, feat_dim});
    feats.read(reinterpret_cast<char*>(utt.features.data()),
               static_cast<std::streamsize>(t_len * feat_dim * 8));
    if (!feats) throw ParseError("feature file " + feats_path.string() + ": truncated data for " + r.utt_id);
    corpus.utterances.push_back(std::move(utt));
  }
  return corpus;
}

}  // namespace mlasr
