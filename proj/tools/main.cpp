#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "advdga/adv_train.hpp"
#include "advdga/alphabet.hpp"
#include "advdga/attacks_discrete.hpp"
#include "advdga/attacks_embedding.hpp"
#include "advdga/dataset.hpp"
#include "advdga/discretize.hpp"
#include "advdga/errors.hpp"
#include "advdga/eval.hpp"
#include "advdga/gemm.hpp"
#include "advdga/model.hpp"
#include "advdga/rng.hpp"
#include "advdga/serialize.hpp"
#include "advdga/suffix_list.hpp"
#include "advdga/synth.hpp"
#include "advdga/train.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace advdga;

constexpr const char* kToolVersion = "1.0.0";
constexpr int kReportVersion = 1;

struct GlobalOpts {
  std::uint64_t seed = 0;
  int threads = 0;  // 0 = library default
  std::string log_level = "info";
};

ArchMeta default_arch() {
  ArchMeta meta;
  meta.vocab = Alphabet::standard().size();
  return meta;
}

void apply_global(const GlobalOpts& g) {
  if (g.threads > 0) set_blas_threads(g.threads);
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << content;
  if (!out) throw IoError("short write to '" + path.string() + "'");
}

void write_json(const fs::path& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

// Manifests make runs reproducible: seed, full effective config, and a hash
// of that config.  No timestamps, so reruns are byte-identical.
void write_manifest(const fs::path& dir, const std::string& subcommand,
                    std::uint64_t seed, const json& config) {
  json manifest;
  manifest["tool"] = "advdga";
  manifest["tool_version"] = kToolVersion;
  manifest["report_version"] = kReportVersion;
  manifest["model_format_version"] = kTensorFileVersion;
  manifest["subcommand"] = subcommand;
  manifest["seed"] = seed;
  manifest["config"] = config;
  const std::string dumped = config.dump();
  char hash[16];
  std::snprintf(hash, sizeof hash, "%08x",
                crc32(dumped.data(), dumped.size()));
  manifest["config_hash"] = hash;
  write_json(dir / "manifest.json", manifest);
}

constexpr const char* kRecordsHeader = "label,family,first_seen,domain";

void write_records(const fs::path& path, const std::vector<LabeledRecord>& records) {
  std::ostringstream out;
  out << kRecordsHeader << "\n";
  for (const LabeledRecord& r : records) {
    out << r.label << ',' << r.family << ',' << r.first_seen << ',' << r.domain.text << "\n";
  }
  write_text(path, out.str());
}

std::vector<LabeledRecord> read_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileNotFound("'" + path + "' not readable");
  std::vector<LabeledRecord> records;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (first && line == kRecordsHeader) {
      first = false;
      continue;
    }
    first = false;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t pos = 0;
    for (int i = 0; i < 3; ++i) {
      std::size_t comma = line.find(',', pos);
      if (comma == std::string::npos) {
        throw CorruptFile("'" + path + "': expected " + kRecordsHeader);
      }
      fields.push_back(line.substr(pos, comma - pos));
      pos = comma + 1;
    }
    fields.push_back(line.substr(pos));
    LabeledRecord r;
    r.label = fields[0] == "1" ? 1 : 0;
    r.family = fields[1];
    r.first_seen = fields[2];
    r.domain = Domain::from_text(fields[3]);
    records.push_back(std::move(r));
  }
  if (records.empty()) throw EmptyDataset("'" + path + "' holds no records");
  return records;
}

Fold pick_fold(const std::vector<LabeledRecord>& records, int k, int fold_index,
               std::uint64_t seed) {
  FoldSpec spec;
  spec.k = k;
  spec.test = 1.0 / k;
  spec.train = 1.0 - spec.val - spec.test;
  spec.seed = seed;
  std::vector<Fold> folds = stratified_folds(records, spec);
  if (fold_index < 0 || fold_index >= static_cast<int>(folds.size())) {
    throw InvalidConfig("fold index out of range");
  }
  return std::move(folds[static_cast<std::size_t>(fold_index)]);
}

// Seeded subsample of the fold's malicious test records (attack inputs come
// from the test split only).
std::vector<EncodedDomain> attack_origins(const Fold& fold, int samples,
                                          std::uint64_t seed) {
  std::vector<EncodedDomain> malicious;
  std::set<std::string> test_texts;
  for (const LabeledRecord& r : fold.test) {
    test_texts.insert(r.domain.text);
    if (r.label == 1) malicious.push_back(encode(r.domain));
  }
  if (malicious.empty()) throw EmptyAfterFiltering("no malicious test records");
  Rng rng(seed);
  rng.shuffle(malicious);
  if (samples > 0 && static_cast<int>(malicious.size()) > samples) {
    malicious.resize(static_cast<std::size_t>(samples));
  }
  assert_from_test_split(malicious, test_texts);
  return malicious;
}

json report_to_json(const AttackReport& r) {
  json j;
  j["attack_id"] = r.attack_id;
  j["fnr"] = r.fnr;
  j["unique_fraction"] = r.unique_fraction;
  j["useable_fraction"] = r.useable_fraction;
  j["mean_confidence"] = r.mean_confidence;
  j["mean_l2_dist"] = r.mean_l2_dist;
  j["mean_linf_dist"] = r.mean_linf_dist;
  j["mean_levenshtein"] = r.mean_levenshtein;
  j["sample_count"] = r.sample_count;
  return j;
}

std::string samples_csv(const std::vector<AdversarialSample>& samples) {
  std::ostringstream out;
  out << "origin,adversarial,logit,l2,linf,levenshtein\n";
  for (const AdversarialSample& s : samples) {
    char row[256];
    std::snprintf(row, sizeof row, ",%.9g,%.9g,%.9g,%d\n",
                  static_cast<double>(s.logit), static_cast<double>(s.l2_dist),
                  static_cast<double>(s.linf_dist), s.levenshtein_dist);
    out << decode(s.origin).text << ',' << s.domain.text << row;
  }
  return out.str();
}

json clean_metrics(const Model& m, const Fold& fold, double bound) {
  LabeledDataset test = to_labeled(fold.test);
  std::vector<float> z = logits_for_domains(m, test.x);
  std::vector<float> zb, zm;
  for (std::size_t i = 0; i < z.size(); ++i) {
    (test.y[i] >= 0.5f ? zm : zb).push_back(z[i]);
  }
  json j;
  j["balanced_accuracy"] = balanced_accuracy(m, test);
  if (!zb.empty() && !zm.empty()) {
    RocCurve curve = roc_bounded(zb, zm, bound);
    j["bounded_auc_normalized"] = curve.bounded_auc_normalized;
    j["bound"] = curve.bound;
    j["tpr_at_fpr_0.001"] = tpr_at_fpr(curve, 0.001);
    j["tpr_at_fpr_0.01"] = tpr_at_fpr(curve, 0.01);
  }
  return j;
}

json layout_json(const MinibatchLayout& layout, const std::string& scheme) {
  BatchManifest m;
  m.scheme = scheme;
  m.benign = layout.benign;
  for (const Slot& s : layout.slots) m.slots.emplace_back(s.id(), s.count);
  return json::parse(m.to_json());
}

// ---- subcommand payloads -------------------------------------------------

struct DatasetBuildOpts {
  std::string benign, malicious, out, suffix_list, cutoff;
  int cap = 2350;
  bool naive = false;
  bool no_balance = false;
};

void run_dataset_build(const DatasetBuildOpts& o, const GlobalOpts& g) {
  apply_global(g);
  SuffixList sl = o.suffix_list.empty() ? SuffixList::naive()
                                        : SuffixList::from_file(o.suffix_list);
  if (o.naive) sl.set_fallback(true);
  DatasetConfig cfg;
  cfg.cap_per_family = o.cap;
  cfg.cutoff_date = o.cutoff;
  cfg.balance = !o.no_balance;
  cfg.seed = g.seed;
  BuiltDataset built = build_dataset(o.benign, o.malicious, sl, cfg);

  fs::create_directories(o.out);
  write_records(fs::path(o.out) / "dataset.csv", built.records);
  write_records(fs::path(o.out) / "unknown.csv", built.unknown_holdout);
  std::ostringstream malformed;
  for (const std::string& line : built.malformed) malformed << line << "\n";
  write_text(fs::path(o.out) / "malformed.txt", malformed.str());

  json report;
  report["benign_count"] = built.benign_count;
  report["malicious_count"] = built.malicious_count;
  report["duplicates_dropped"] = built.duplicates_dropped;
  report["over_cutoff_dropped"] = built.over_cutoff_dropped;
  report["balance_dropped"] = built.balance_dropped;
  report["malformed_count"] = built.malformed.size();
  report["unknown_holdout_count"] = built.unknown_holdout.size();
  write_json(fs::path(o.out) / "report.json", report);

  json cfg_json{{"benign", o.benign},       {"malicious", o.malicious},
                {"suffix_list", o.suffix_list}, {"naive", o.naive},
                {"cap", o.cap},             {"cutoff", o.cutoff},
                {"balance", !o.no_balance}};
  write_manifest(o.out, "dataset build", g.seed, cfg_json);
  std::fprintf(stderr, "dataset: %d benign, %d malicious, %zu malformed\n",
               built.benign_count, built.malicious_count, built.malformed.size());
}

struct DatasetSynthOpts {
  std::string out;
  SynthConfig cfg;
};

void run_dataset_synth(DatasetSynthOpts o, const GlobalOpts& g) {
  apply_global(g);
  o.cfg.seed = g.seed;
  std::vector<LabeledRecord> records = synth_dataset(o.cfg);
  fs::create_directories(o.out);
  write_records(fs::path(o.out) / "dataset.csv", records);
  json cfg_json{{"benign_count", o.cfg.benign_count},
                {"malicious_count", o.cfg.malicious_count},
                {"min_tokens", o.cfg.min_tokens},
                {"max_tokens", o.cfg.max_tokens},
                {"hyphen_prob", o.cfg.hyphen_prob},
                {"mal_min_len", o.cfg.mal_min_len},
                {"mal_max_len", o.cfg.mal_max_len},
                {"mal_alphabet", o.cfg.mal_alphabet}};
  write_manifest(o.out, "dataset synth", g.seed, cfg_json);
  std::fprintf(stderr, "synthesized %zu records\n", records.size());
}

struct TrainOpts {
  std::string data, out;
  int k = 5, fold = 0;
  TrainConfig cfg;
};

void run_train(TrainOpts o, const GlobalOpts& g) {
  apply_global(g);
  o.cfg.seed = g.seed;
  std::vector<LabeledRecord> records = read_records(o.data);
  Fold fold = pick_fold(records, o.k, o.fold, g.seed);
  Model m = train(to_labeled(fold.train), to_labeled(fold.val), default_arch(), o.cfg);
  fs::create_directories(o.out);
  save_model(m, (fs::path(o.out) / "model.bin").string());

  json report;
  report["clean"] = clean_metrics(m, fold, 0.01);
  report["train_size"] = fold.train.size();
  report["val_size"] = fold.val.size();
  report["test_size"] = fold.test.size();
  write_json(fs::path(o.out) / "train_report.json", report);

  json cfg_json{{"data", o.data},           {"k", o.k},
                {"fold", o.fold},           {"epochs", o.cfg.max_epochs},
                {"patience", o.cfg.patience}, {"batch", o.cfg.batch_size},
                {"lr", o.cfg.learning_rate}};
  write_manifest(o.out, "train", g.seed, cfg_json);
}

struct AttackOpts {
  std::string model, data, attack, out, samples_file;
  int k = 5, fold = 0, samples = 0, iterations = 50, flips = 1, beam = 10;
  double epsilon = -1.0, kappa = 0.0;
};

// Splits "pgd_l2+lbf_l2" into its attack and discretizer parts.
std::pair<std::string, std::string> split_combo(const std::string& id) {
  std::size_t plus = id.find('+');
  if (plus == std::string::npos) return {id, ""};
  return {id.substr(0, plus), id.substr(plus + 1)};
}

DiscretizerSpec parse_disc_id(const std::string& id) {
  std::size_t sep = id.find('_');
  if (sep == std::string::npos) throw InvalidConfig("bad discretizer id '" + id + "'");
  DiscretizerSpec spec;
  spec.length_rule = parse_length_rule(id.substr(0, sep));
  spec.metric = parse_metric(id.substr(sep + 1));
  return spec;
}

float default_epsilon(AttackKind kind) {
  switch (kind) {
    case AttackKind::PgdLinf:
    case AttackKind::BatLinf:
      return 1.f;
    default:
      return 89.7997772825746f;  // sqrt(63 * 128)
  }
}

void run_attack_cmd(const AttackOpts& o, const GlobalOpts& g) {
  apply_global(g);
  Model m = load_model(o.model);
  ModelScorer scorer(m);
  fs::create_directories(o.out);

  json cfg_json{{"model", o.model},   {"data", o.data},     {"attack", o.attack},
                {"k", o.k},           {"fold", o.fold},     {"samples", o.samples},
                {"iterations", o.iterations}, {"epsilon", o.epsilon},
                {"kappa", o.kappa},   {"flips", o.flips},   {"beam", o.beam},
                {"samples_file", o.samples_file}};

  if (o.attack == "replay") {
    if (o.samples_file.empty()) throw InvalidConfig("replay needs --samples-file");
    AttackReport report = replay_blackbox(o.samples_file, scorer);
    write_json(fs::path(o.out) / "report.json", report_to_json(report));
    write_manifest(o.out, "attack", g.seed, cfg_json);
    std::fprintf(stderr, "replay: fnr %.4f over %lld samples\n", report.fnr,
                 static_cast<long long>(report.sample_count));
    return;
  }

  std::vector<LabeledRecord> records = read_records(o.data);
  Fold fold = pick_fold(records, o.k, o.fold, g.seed);
  std::vector<EncodedDomain> origins = attack_origins(fold, o.samples, g.seed);

  auto [attack_id, disc_id] = split_combo(o.attack);
  std::vector<AdversarialSample> samples;

  if (attack_id == "hotflip" || attack_id == "maskdga" || attack_id == "hyphen" ||
      attack_id == "length") {
    if (!disc_id.empty()) throw InvalidConfig("discrete attacks take no discretizer");
    Rng rng(g.seed);
    std::vector<Domain> domains;
    domains.reserve(origins.size());
    for (const EncodedDomain& e : origins) {
      if (attack_id == "hotflip") {
        BeamConfig bc;
        bc.flips = o.flips;
        bc.beam_width = o.beam;
        domains.push_back(hotflip(scorer, e, bc));
      } else if (attack_id == "maskdga") {
        domains.push_back(maskdga_wb(scorer, e));
      } else if (attack_id == "hyphen") {
        domains.push_back(hyphen_dga(decode(e), rng).domain);
      } else {
        domains.push_back(length_dga(decode(e)));
      }
    }
    std::vector<EncodedDomain> enc;
    enc.reserve(domains.size());
    for (const Domain& d : domains) enc.push_back(encode(d));
    std::vector<float> z = scorer.logits_for(enc);
    for (std::size_t i = 0; i < domains.size(); ++i) {
      samples.push_back(measure_sample(scorer, domains[i], origins[i], z[i]));
    }
  } else {
    AttackConfig acfg;
    acfg.kind = parse_attack_kind(attack_id);
    acfg.iterations = o.iterations;
    acfg.seed = g.seed;
    acfg.epsilon = o.epsilon < 0 ? default_epsilon(acfg.kind)
                                 : static_cast<float>(o.epsilon);
    acfg.kappa = static_cast<float>(o.kappa);
    if (disc_id.empty()) {
      // Embedding-space stage only: persist the adversarial embeddings for a
      // later `discretize` run.
      Tensor v0 = scorer.embed_batch(origins);
      BatchAttackResult r = run_attack(scorer, v0, acfg);
      TensorFile tf;
      tf.meta["count"] = static_cast<std::int64_t>(origins.size());
      tf.meta["seq_len"] = m.meta.seq_len;
      tf.meta["embed_dim"] = m.meta.embed_dim;
      tf.tensors.emplace_back("v", r.v);
      save_tensor_file((fs::path(o.out) / "embeddings.dgaf").string(), tf);
      std::ostringstream org;
      for (const EncodedDomain& e : origins) org << decode(e).text << "\n";
      write_text(fs::path(o.out) / "origins.txt", org.str());
      json report;
      report["attack_id"] = o.attack;
      double fooled = 0.0;
      for (float z : r.logits) fooled += z < 0.f ? 1.0 : 0.0;
      report["embedding_fnr"] = fooled / static_cast<double>(r.logits.size());
      report["sample_count"] = origins.size();
      write_json(fs::path(o.out) / "report.json", report);
      write_manifest(o.out, "attack", g.seed, cfg_json);
      std::fprintf(stderr, "%s: embedding-space fnr %.4f\n", o.attack.c_str(),
                   fooled / static_cast<double>(r.logits.size()));
      return;
    }
    samples = attack_and_discretize_batch(scorer, origins, acfg, parse_disc_id(disc_id));
  }

  AttackReport report = compute_report(o.attack, samples);
  write_text(fs::path(o.out) / "adversarial.csv", samples_csv(samples));
  write_json(fs::path(o.out) / "report.json", report_to_json(report));
  write_manifest(o.out, "attack", g.seed, cfg_json);
  std::fprintf(stderr, "%s: fnr %.4f, useable %.4f\n", o.attack.c_str(),
               report.fnr, report.useable_fraction);
}

struct DiscretizeOpts {
  std::string model, embeddings, origins, disc, out;
};

void run_discretize(const DiscretizeOpts& o, const GlobalOpts& g) {
  apply_global(g);
  Model m = load_model(o.model);
  ModelScorer scorer(m);
  TensorFile tf = load_tensor_file(o.embeddings);
  const Tensor* v = nullptr;
  for (const auto& [name, tensor] : tf.tensors) {
    if (name == "v") v = &tensor;
  }
  if (!v) throw CorruptFile("'" + o.embeddings + "' holds no tensor named 'v'");

  std::ifstream in(o.origins);
  if (!in) throw FileNotFound("'" + o.origins + "' not readable");
  std::vector<EncodedDomain> origins;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) origins.push_back(encode(Domain::from_text(line)));
  }
  if (static_cast<std::int64_t>(origins.size()) != v->dim(0)) {
    throw CorruptFile("origin count does not match the embedding batch");
  }

  Discretizer disc(scorer, parse_disc_id(o.disc));
  std::vector<Domain> domains = disc.apply_batch(*v);
  std::vector<EncodedDomain> enc;
  enc.reserve(domains.size());
  for (const Domain& d : domains) enc.push_back(encode(d));
  std::vector<float> z = scorer.logits_for(enc);
  std::vector<AdversarialSample> samples;
  samples.reserve(domains.size());
  for (std::size_t i = 0; i < domains.size(); ++i) {
    samples.push_back(measure_sample(scorer, domains[i], origins[i], z[i]));
  }

  fs::create_directories(o.out);
  AttackReport report = compute_report(o.disc, samples);
  write_text(fs::path(o.out) / "adversarial.csv", samples_csv(samples));
  write_json(fs::path(o.out) / "report.json", report_to_json(report));
  json cfg_json{{"model", o.model},
                {"embeddings", o.embeddings},
                {"origins", o.origins},
                {"disc", o.disc}};
  write_manifest(o.out, "discretize", g.seed, cfg_json);
  std::fprintf(stderr, "%s: fnr %.4f\n", o.disc.c_str(), report.fnr);
}

struct HardenOpts {
  std::string model, data, scheme = "joint", hold_out, out;
  int k = 5, fold = 0;
  AdvTrainConfig cfg;
};

void run_harden(HardenOpts o, const GlobalOpts& g) {
  apply_global(g);
  o.cfg.seed = g.seed;
  if (!o.hold_out.empty()) o.cfg.hold_out = parse_group(o.hold_out);
  Model base = load_model(o.model);
  std::vector<LabeledRecord> records = read_records(o.data);
  Fold fold = pick_fold(records, o.k, o.fold, g.seed);
  Model hardened = adv_train(base, to_labeled(fold.train), parse_scheme(o.scheme), o.cfg);

  fs::create_directories(o.out);
  save_model(hardened, (fs::path(o.out) / "model.bin").string());
  write_json(fs::path(o.out) / "layout_embedding.json",
             layout_json(embedding_layout(o.cfg.hold_out), "embedding"));
  write_json(fs::path(o.out) / "layout_discrete.json",
             layout_json(discrete_layout(o.cfg.hold_out), "discrete"));
  json report;
  report["clean"] = clean_metrics(hardened, fold, 0.01);
  write_json(fs::path(o.out) / "harden_report.json", report);

  json cfg_json{{"model", o.model},       {"data", o.data},
                {"scheme", o.scheme},     {"hold_out", o.hold_out},
                {"k", o.k},               {"fold", o.fold},
                {"epochs", o.cfg.max_epochs}, {"steps", o.cfg.steps_per_epoch},
                {"lr", o.cfg.learning_rate},
                {"attack_iterations", o.cfg.attack_iterations},
                {"cw_iterations", o.cfg.cw_iterations},
                {"cw_binary_steps", o.cfg.cw_binary_steps},
                {"hotflip_beam", o.cfg.hotflip_beam},
                {"p_embedding", o.cfg.joint_embedding_prob}};
  write_manifest(o.out, "harden", g.seed, cfg_json);
}

struct EvalOpts {
  std::vector<std::string> models;
  std::string data, out, combos = "all", hold_out;
  int k = 5, fold = 0, samples = 256, iterations = 50;
};

void run_eval(const EvalOpts& o, const GlobalOpts& g) {
  apply_global(g);
  if (o.models.empty()) throw InvalidConfig("eval needs at least one --model");
  std::vector<Model> models;
  models.reserve(o.models.size());
  for (const std::string& path : o.models) models.push_back(load_model(path));

  std::vector<LabeledRecord> records = read_records(o.data);
  Fold fold = pick_fold(records, o.k, o.fold, g.seed);
  std::vector<EncodedDomain> origins = attack_origins(fold, o.samples, g.seed);

  std::vector<WhiteBoxCombo> combos = white_box_combos();
  if (o.combos != "all") {
    std::set<std::string> wanted;
    std::stringstream ss(o.combos);
    std::string tok;
    while (std::getline(ss, tok, ',')) wanted.insert(tok);
    std::vector<WhiteBoxCombo> filtered;
    for (const WhiteBoxCombo& c : combos) {
      if (wanted.count(c.id)) filtered.push_back(c);
    }
    if (filtered.empty()) throw InvalidConfig("no known combo in '" + o.combos + "'");
    combos = std::move(filtered);
  }

  ComboEvalConfig ccfg;
  ccfg.iterations = o.iterations;
  ccfg.seed = g.seed;

  std::vector<std::pair<std::string, const Model*>> model_refs;
  for (std::size_t i = 0; i < models.size(); ++i) {
    model_refs.emplace_back(fs::path(o.models[i]).stem().string() + "#" +
                                std::to_string(i),
                            &models[i]);
  }
  std::vector<std::pair<std::string, AttackRunner>> runners;
  for (const WhiteBoxCombo& combo : combos) {
    runners.emplace_back(combo.id, [&, combo](const Model& m) {
      std::vector<AdversarialSample> samples = run_combo(m, combo, origins, ccfg);
      return compute_report(combo.id, samples);
    });
  }

  std::set<std::pair<std::string, std::string>> held_out;
  if (!o.hold_out.empty()) {
    AttackGroup group = parse_group(o.hold_out);
    for (const WhiteBoxCombo& combo : combos) {
      if (!combo_uses_group(combo, group)) continue;
      for (const auto& [model_id, _] : model_refs) held_out.insert({combo.id, model_id});
    }
  }

  RobustnessMatrix matrix = robustness_matrix(model_refs, runners, held_out);
  fs::create_directories(o.out);
  write_text(fs::path(o.out) / "matrix.csv", matrix.to_csv());

  json report;
  for (std::size_t i = 0; i < models.size(); ++i) {
    report["models"][model_refs[i].first]["clean"] = clean_metrics(models[i], fold, 0.01);
  }
  write_json(fs::path(o.out) / "eval_report.json", report);

  json cfg_json{{"models", o.models}, {"data", o.data},   {"combos", o.combos},
                {"k", o.k},           {"fold", o.fold},   {"samples", o.samples},
                {"iterations", o.iterations}, {"hold_out", o.hold_out}};
  write_manifest(o.out, "eval", g.seed, cfg_json);
  std::fprintf(stderr, "evaluated %zu combos x %zu models\n", runners.size(),
               models.size());
}

struct LogoOpts {
  std::string model, data, group, out;
  int k = 5, fold = 0, samples = 256;
  AdvTrainConfig cfg;
};

void run_logo(LogoOpts o, const GlobalOpts& g) {
  apply_global(g);
  o.cfg.seed = g.seed;
  AttackGroup group = parse_group(o.group);
  Model base = load_model(o.model);
  std::vector<LabeledRecord> records = read_records(o.data);
  Fold fold = pick_fold(records, o.k, o.fold, g.seed);
  Model hardened = logo_train(base, to_labeled(fold.train), group, o.cfg);

  fs::create_directories(o.out);
  save_model(hardened, (fs::path(o.out) / "model.bin").string());

  std::vector<EncodedDomain> origins = attack_origins(fold, o.samples, g.seed);
  ComboEvalConfig ccfg;
  ccfg.seed = g.seed;
  std::vector<std::pair<std::string, const Model*>> model_refs{
      {"baseline", &base}, {"hardened", &hardened}};
  std::vector<std::pair<std::string, AttackRunner>> runners;
  std::set<std::pair<std::string, std::string>> held_out;
  for (const WhiteBoxCombo& combo : white_box_combos()) {
    runners.emplace_back(combo.id, [&, combo](const Model& m) {
      std::vector<AdversarialSample> samples = run_combo(m, combo, origins, ccfg);
      return compute_report(combo.id, samples);
    });
    if (combo_uses_group(combo, group)) {
      held_out.insert({combo.id, "baseline"});
      held_out.insert({combo.id, "hardened"});
    }
  }
  RobustnessMatrix matrix = robustness_matrix(model_refs, runners, held_out);
  write_text(fs::path(o.out) / "matrix.csv", matrix.to_csv());

  json report;
  report["held_out_group"] = o.group;
  report["clean_baseline"] = clean_metrics(base, fold, 0.01);
  report["clean_hardened"] = clean_metrics(hardened, fold, 0.01);
  write_json(fs::path(o.out) / "logo_report.json", report);

  json cfg_json{{"model", o.model}, {"data", o.data},   {"group", o.group},
                {"k", o.k},         {"fold", o.fold},   {"samples", o.samples},
                {"epochs", o.cfg.max_epochs}, {"steps", o.cfg.steps_per_epoch}};
  write_manifest(o.out, "logo", g.seed, cfg_json);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Character-level DGA classifier: training, white-box attacks, "
               "discretization, hardening, evaluation"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Config file (key=value); flags override");

  GlobalOpts g;
  app.add_option("--seed", g.seed, "Global RNG seed")->capture_default_str();
  app.add_option("--threads", g.threads, "BLAS thread count (0 = library default)")
      ->capture_default_str();
  app.add_option("--log-level", g.log_level, "quiet | info | debug")
      ->capture_default_str();

  auto* dataset_cmd = app.add_subcommand("dataset", "Dataset construction");
  dataset_cmd->require_subcommand(1);

  DatasetBuildOpts db;
  auto* build_cmd = dataset_cmd->add_subcommand("build", "Build from domain feeds");
  build_cmd->add_option("--benign", db.benign, "Benign feed, one domain per line")->required();
  build_cmd->add_option("--malicious", db.malicious, "CSV: family,domain[,first_seen]")->required();
  build_cmd->add_option("--out", db.out, "Output directory")->required();
  build_cmd->add_option("--suffix-list", db.suffix_list, "Public suffix list file");
  build_cmd->add_flag("--naive", db.naive, "Fall back to last-label suffixes");
  build_cmd->add_option("--cap", db.cap, "Per-family cap")->capture_default_str();
  build_cmd->add_option("--cutoff", db.cutoff, "Temporal cutoff (YYYY-MM-DD)");
  build_cmd->add_flag("--no-balance", db.no_balance, "Keep class sizes as ingested");
  build_cmd->callback([&] { run_dataset_build(db, g); });

  DatasetSynthOpts dsy;
  auto* synth_cmd = dataset_cmd->add_subcommand("synth", "Generate synthetic data");
  synth_cmd->add_option("--out", dsy.out, "Output directory")->required();
  synth_cmd->add_option("--benign", dsy.cfg.benign_count, "Benign count")->capture_default_str();
  synth_cmd->add_option("--malicious", dsy.cfg.malicious_count, "Malicious count")->capture_default_str();
  synth_cmd->add_option("--min-tokens", dsy.cfg.min_tokens)->capture_default_str();
  synth_cmd->add_option("--max-tokens", dsy.cfg.max_tokens)->capture_default_str();
  synth_cmd->add_option("--hyphen-prob", dsy.cfg.hyphen_prob)->capture_default_str();
  synth_cmd->add_option("--mal-min-len", dsy.cfg.mal_min_len)->capture_default_str();
  synth_cmd->add_option("--mal-max-len", dsy.cfg.mal_max_len)->capture_default_str();
  synth_cmd->add_option("--mal-alphabet", dsy.cfg.mal_alphabet)->capture_default_str();
  synth_cmd->callback([&] { run_dataset_synth(dsy, g); });

  TrainOpts tr;
  auto* train_cmd = app.add_subcommand("train", "Train the classifier");
  train_cmd->add_option("--data", tr.data, "dataset.csv from `dataset`")->required();
  train_cmd->add_option("--out", tr.out, "Output directory")->required();
  train_cmd->add_option("--k", tr.k, "Fold count")->capture_default_str();
  train_cmd->add_option("--fold", tr.fold, "Fold index")->capture_default_str();
  train_cmd->add_option("--epochs", tr.cfg.max_epochs)->capture_default_str();
  train_cmd->add_option("--patience", tr.cfg.patience)->capture_default_str();
  train_cmd->add_option("--batch", tr.cfg.batch_size)->capture_default_str();
  train_cmd->add_option("--lr", tr.cfg.learning_rate)->capture_default_str();
  train_cmd->callback([&] { run_train(tr, g); });

  AttackOpts at;
  auto* attack_cmd = app.add_subcommand("attack", "Attack a trained model");
  attack_cmd->add_option("--model", at.model, "model.bin")->required();
  attack_cmd->add_option("--data", at.data, "dataset.csv (test split supplies origins)");
  attack_cmd
      ->add_option("--attack", at.attack,
                   "pgd_l2 | pgd_linf | bat_l2 | bat_linf | cw_l2 "
                   "[+lbf_l2|+lbf_linf|+lbf_cosine|+lco_l2|+lco_linf|+lco_cosine] "
                   "| hotflip | maskdga | hyphen | length | replay")
      ->required();
  attack_cmd->add_option("--out", at.out, "Output directory")->required();
  attack_cmd->add_option("--samples", at.samples, "Origin cap (0 = all)")->capture_default_str();
  attack_cmd->add_option("--k", at.k)->capture_default_str();
  attack_cmd->add_option("--fold", at.fold)->capture_default_str();
  attack_cmd->add_option("--iterations", at.iterations)->capture_default_str();
  attack_cmd->add_option("--epsilon", at.epsilon, "Budget (< 0 = family default)")->capture_default_str();
  attack_cmd->add_option("--kappa", at.kappa, "CW confidence")->capture_default_str();
  attack_cmd->add_option("--flips", at.flips, "HotFlip substitutions")->capture_default_str();
  attack_cmd->add_option("--beam", at.beam, "HotFlip beam width")->capture_default_str();
  attack_cmd->add_option("--samples-file", at.samples_file, "Replay: pre-generated domains");
  attack_cmd->callback([&] {
    if (at.attack != "replay" && at.data.empty()) {
      throw CLI::RequiredError("--data");
    }
    run_attack_cmd(at, g);
  });

  DiscretizeOpts dc;
  auto* disc_cmd = app.add_subcommand("discretize", "Map stored adversarial embeddings to domains");
  disc_cmd->add_option("--model", dc.model)->required();
  disc_cmd->add_option("--embeddings", dc.embeddings, "embeddings.dgaf from `attack`")->required();
  disc_cmd->add_option("--origins", dc.origins, "origins.txt from `attack`")->required();
  disc_cmd->add_option("--disc", dc.disc, "lbf_l2 | lbf_linf | lbf_cosine | lco_l2 | lco_linf | lco_cosine")->required();
  disc_cmd->add_option("--out", dc.out)->required();
  disc_cmd->callback([&] { run_discretize(dc, g); });

  HardenOpts hd;
  auto* harden_cmd = app.add_subcommand("harden", "Adversarially train a model");
  harden_cmd->add_option("--model", hd.model, "Baseline model.bin")->required();
  harden_cmd->add_option("--data", hd.data)->required();
  harden_cmd->add_option("--out", hd.out)->required();
  harden_cmd->add_option("--scheme", hd.scheme, "embedding | discrete | joint")->capture_default_str();
  harden_cmd->add_option("--hold-out", hd.hold_out, "Attack group excluded from batches");
  harden_cmd->add_option("--k", hd.k)->capture_default_str();
  harden_cmd->add_option("--fold", hd.fold)->capture_default_str();
  harden_cmd->add_option("--epochs", hd.cfg.max_epochs)->capture_default_str();
  harden_cmd->add_option("--steps", hd.cfg.steps_per_epoch, "Steps per epoch (0 = pool size / 256)")->capture_default_str();
  harden_cmd->add_option("--lr", hd.cfg.learning_rate)->capture_default_str();
  harden_cmd->add_option("--attack-iterations", hd.cfg.attack_iterations)->capture_default_str();
  harden_cmd->add_option("--cw-iterations", hd.cfg.cw_iterations)->capture_default_str();
  harden_cmd->add_option("--cw-binary-steps", hd.cfg.cw_binary_steps)->capture_default_str();
  harden_cmd->add_option("--hotflip-beam", hd.cfg.hotflip_beam)->capture_default_str();
  harden_cmd->add_option("--p-embedding", hd.cfg.joint_embedding_prob)->capture_default_str();
  harden_cmd->callback([&] { run_harden(hd, g); });

  EvalOpts ev;
  auto* eval_cmd = app.add_subcommand("eval", "Robustness matrix over attack combos");
  eval_cmd->add_option("--model", ev.models, "model.bin (repeatable)")->required();
  eval_cmd->add_option("--data", ev.data)->required();
  eval_cmd->add_option("--out", ev.out)->required();
  eval_cmd->add_option("--combos", ev.combos, "all | comma-separated ids")->capture_default_str();
  eval_cmd->add_option("--hold-out", ev.hold_out, "Flag this group's rows as held out");
  eval_cmd->add_option("--k", ev.k)->capture_default_str();
  eval_cmd->add_option("--fold", ev.fold)->capture_default_str();
  eval_cmd->add_option("--samples", ev.samples)->capture_default_str();
  eval_cmd->add_option("--iterations", ev.iterations)->capture_default_str();
  eval_cmd->callback([&] { run_eval(ev, g); });

  LogoOpts lg;
  auto* logo_cmd = app.add_subcommand("logo", "Leave-one-group-out hardening + evaluation");
  logo_cmd->add_option("--model", lg.model, "Baseline model.bin")->required();
  logo_cmd->add_option("--data", lg.data)->required();
  logo_cmd->add_option("--group", lg.group, "Held-out attack group")->required();
  logo_cmd->add_option("--out", lg.out)->required();
  logo_cmd->add_option("--k", lg.k)->capture_default_str();
  logo_cmd->add_option("--fold", lg.fold)->capture_default_str();
  logo_cmd->add_option("--samples", lg.samples)->capture_default_str();
  logo_cmd->add_option("--epochs", lg.cfg.max_epochs)->capture_default_str();
  logo_cmd->add_option("--steps", lg.cfg.steps_per_epoch)->capture_default_str();
  logo_cmd->callback([&] { run_logo(lg, g); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const InvalidConfig& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 1;
  } catch (const UnknownGroup& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 1;
  } catch (const Error& e) {
    const bool internal = dynamic_cast<const ShapeMismatch*>(&e) ||
                          dynamic_cast<const NotOnTape*>(&e) ||
                          dynamic_cast<const NotAScalar*>(&e) ||
                          dynamic_cast<const ZeroVector*>(&e);
    std::fprintf(stderr, "%s: %s\n", internal ? "internal error" : "data error",
                 e.what());
    return internal ? 3 : 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 3;
  }
  return 0;
}
