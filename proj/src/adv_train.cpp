#include "advdga/adv_train.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <span>
#include <utility>

#include "json.hpp"

#include "advdga/attacks_discrete.hpp"
#include "advdga/errors.hpp"
#include "advdga/scorer.hpp"
#include "advdga/tape.hpp"

namespace advdga {
namespace {

constexpr std::array<AttackGroup, 5> kEmbeddingAttacks = {
    AttackGroup::PgdL2, AttackGroup::PgdLinf, AttackGroup::BatL2,
    AttackGroup::BatLinf, AttackGroup::CwL2};
constexpr std::array<AttackGroup, 6> kDiscretizerGroups = {
    AttackGroup::LbfL2,  AttackGroup::LbfLinf, AttackGroup::LbfCosine,
    AttackGroup::LcoL2,  AttackGroup::LcoLinf, AttackGroup::LcoCosine};

bool is_discretizer(AttackGroup g) {
  return std::find(kDiscretizerGroups.begin(), kDiscretizerGroups.end(), g) !=
         kDiscretizerGroups.end();
}

DiscretizerSpec spec_for(AttackGroup g) {
  DiscretizerSpec s;
  switch (g) {
    case AttackGroup::LbfL2:     s.length_rule = LengthRule::Lbf; s.metric = DistanceMetric::L2; break;
    case AttackGroup::LbfLinf:   s.length_rule = LengthRule::Lbf; s.metric = DistanceMetric::Linf; break;
    case AttackGroup::LbfCosine: s.length_rule = LengthRule::Lbf; s.metric = DistanceMetric::Cosine; break;
    case AttackGroup::LcoL2:     s.length_rule = LengthRule::Lco; s.metric = DistanceMetric::L2; break;
    case AttackGroup::LcoLinf:   s.length_rule = LengthRule::Lco; s.metric = DistanceMetric::Linf; break;
    case AttackGroup::LcoCosine: s.length_rule = LengthRule::Lco; s.metric = DistanceMetric::Cosine; break;
    default: throw InvalidConfig("group is not a discretizer");
  }
  return s;
}

AttackGroup group_for_spec(const DiscretizerSpec& s) {
  for (AttackGroup g : kDiscretizerGroups) {
    DiscretizerSpec t = spec_for(g);
    if (t.length_rule == s.length_rule && t.metric == s.metric) return g;
  }
  throw InvalidConfig("unmapped discretizer spec");
}

AttackKind kind_for(AttackGroup g) {
  switch (g) {
    case AttackGroup::PgdL2:   return AttackKind::PgdL2;
    case AttackGroup::PgdLinf: return AttackKind::PgdLinf;
    case AttackGroup::BatL2:   return AttackKind::BatL2;
    case AttackGroup::BatLinf: return AttackKind::BatLinf;
    case AttackGroup::CwL2:    return AttackKind::CwL2;
    default: throw InvalidConfig("group is not an embedding attack");
  }
}

int base_embedding_count(AttackGroup g) {
  return g == AttackGroup::CwL2 ? 52 : 51;
}

// Floor-rescales the counts to sum to `target`; the last slot absorbs the
// rounding remainder, which keeps the result deterministic.
void rescale_slots(std::span<Slot> slots, int target) {
  if (slots.empty()) return;
  std::int64_t current = 0;
  for (const Slot& s : slots) current += s.count;
  if (current == target) return;
  int acc = 0;
  for (Slot& s : slots) {
    s.count = static_cast<int>(static_cast<std::int64_t>(s.count) * target / current);
    acc += s.count;
  }
  slots.back().count += target - acc;
}

// One attack configuration per slot; epsilon draws are shared across the
// minibatch per norm family, CW confidences are drawn per sample.
AttackConfig slot_attack_config(AttackGroup g, float eps2, float epsinf,
                                int batch, const AdvTrainConfig& cfg, Rng& rng) {
  AttackConfig a;
  a.kind = kind_for(g);
  a.iterations = cfg.attack_iterations;
  a.seed = rng.next_u64();
  switch (g) {
    case AttackGroup::PgdL2:
    case AttackGroup::BatL2:
      a.epsilon = eps2;
      break;
    case AttackGroup::PgdLinf:
    case AttackGroup::BatLinf:
      a.epsilon = epsinf;
      break;
    case AttackGroup::CwL2:
      a.iterations = cfg.cw_iterations;
      a.cw_binary_steps = cfg.cw_binary_steps;
      a.kappa_per_sample.resize(static_cast<std::size_t>(batch));
      for (float& k : a.kappa_per_sample) {
        k = rng.uniform() < cfg.policy.kappa_zero_prob
                ? 0.f
                : static_cast<float>(rng.uniform(0.0, cfg.policy.kappa_hi));
      }
      break;
    default:
      throw InvalidConfig("group is not an embedding attack");
  }
  return a;
}

void copy_rows(const Tensor& src, Tensor& dst, int dst_row) {
  std::copy(src.v.begin(), src.v.end(),
            dst.v.begin() + static_cast<std::ptrdiff_t>(dst_row) * src.dim(1) * src.dim(2));
}

double step_params(Model& m, Adam& opt, Tape& tape, const TensorPtr& loss) {
  tape.backward(loss);
  opt.step();
  return static_cast<double>(loss->v[0]);
}

}  // namespace

const char* group_name(AttackGroup g) {
  switch (g) {
    case AttackGroup::PgdL2:     return "pgd_l2";
    case AttackGroup::PgdLinf:   return "pgd_linf";
    case AttackGroup::BatL2:     return "bat_l2";
    case AttackGroup::BatLinf:   return "bat_linf";
    case AttackGroup::CwL2:      return "cw_l2";
    case AttackGroup::LbfL2:     return "lbf_l2";
    case AttackGroup::LbfLinf:   return "lbf_linf";
    case AttackGroup::LbfCosine: return "lbf_cosine";
    case AttackGroup::LcoL2:     return "lco_l2";
    case AttackGroup::LcoLinf:   return "lco_linf";
    case AttackGroup::LcoCosine: return "lco_cosine";
    case AttackGroup::HotFlip:   return "hotflip";
    case AttackGroup::MaskDga:   return "maskdga";
  }
  return "?";
}

AttackGroup parse_group(const std::string& name) {
  for (AttackGroup g : all_groups()) {
    if (name == group_name(g)) return g;
  }
  throw UnknownGroup("no attack group named '" + name + "'");
}

std::vector<AttackGroup> all_groups() {
  std::vector<AttackGroup> out(kEmbeddingAttacks.begin(), kEmbeddingAttacks.end());
  out.insert(out.end(), kDiscretizerGroups.begin(), kDiscretizerGroups.end());
  out.push_back(AttackGroup::HotFlip);
  out.push_back(AttackGroup::MaskDga);
  return out;
}

std::string Slot::id() const {
  if (!disc) return attack_id;
  return attack_id + "+" + length_rule_name(disc->length_rule) + "_" +
         metric_name(disc->metric);
}

int MinibatchLayout::adversarial_total() const {
  int n = 0;
  for (const Slot& s : slots) n += s.count;
  return n;
}

MinibatchLayout embedding_layout(std::optional<AttackGroup> held_out) {
  MinibatchLayout layout;
  for (AttackGroup g : kEmbeddingAttacks) {
    if (held_out && *held_out == g) continue;
    layout.slots.push_back({group_name(g), std::nullopt, base_embedding_count(g)});
  }
  rescale_slots(layout.slots, 256);
  return layout;
}

MinibatchLayout discrete_layout(std::optional<AttackGroup> held_out) {
  MinibatchLayout layout;
  const bool disc_held = held_out && is_discretizer(*held_out);
  for (AttackGroup a : kEmbeddingAttacks) {
    if (held_out && *held_out == a) continue;
    std::vector<Slot> per_attack;
    for (AttackGroup d : kDiscretizerGroups) {
      if (held_out && *held_out == d) continue;
      per_attack.push_back({group_name(a), spec_for(d), 6});
    }
    // A held-out discretizer redistributes within each attack's 36 samples,
    // leaving the attack-level proportions untouched.
    if (disc_held) rescale_slots(per_attack, 36);
    for (Slot& s : per_attack) layout.slots.push_back(std::move(s));
  }
  if (!(held_out && *held_out == AttackGroup::HotFlip)) {
    layout.slots.push_back({"hotflip", std::nullopt, 38});
  }
  if (!(held_out && *held_out == AttackGroup::MaskDga)) {
    layout.slots.push_back({"maskdga", std::nullopt, 38});
  }
  rescale_slots(layout.slots, 256);
  return layout;
}

std::string BatchManifest::to_json() const {
  nlohmann::json j;
  j["scheme"] = scheme;
  j["benign"] = benign;
  auto arr = nlohmann::json::array();
  for (const auto& [id, count] : slots) {
    arr.push_back({{"slot", id}, {"count", count}});
  }
  j["slots"] = arr;
  return j.dump(2);
}

const char* scheme_name(AtScheme s) {
  switch (s) {
    case AtScheme::Embedding: return "embedding";
    case AtScheme::Discrete:  return "discrete";
    case AtScheme::Joint:     return "joint";
  }
  return "?";
}

AtScheme parse_scheme(const std::string& name) {
  if (name == "embedding") return AtScheme::Embedding;
  if (name == "discrete") return AtScheme::Discrete;
  if (name == "joint") return AtScheme::Joint;
  throw InvalidConfig("no hardening scheme named '" + name + "'");
}

SampleQueue::SampleQueue(std::vector<EncodedDomain> pool, Rng rng)
    : pool_(std::move(pool)), rng_(rng) {
  if (pool_.empty()) throw PoolExhausted("sample pool is empty");
  rng_.shuffle(pool_);
}

std::vector<EncodedDomain> SampleQueue::take(int n) {
  std::vector<EncodedDomain> out;
  out.reserve(static_cast<std::size_t>(n));
  while (static_cast<int>(out.size()) < n) {
    if (cursor_ == pool_.size()) {
      rng_.shuffle(pool_);
      cursor_ = 0;
    }
    out.push_back(pool_[cursor_++]);
  }
  return out;
}

void SampleQueue::new_epoch() {
  rng_.shuffle(pool_);
  cursor_ = 0;
}

EmbeddingBatch build_embedding_batch(const Model& m, SampleQueue& benign,
                                     SampleQueue& malicious,
                                     const MinibatchLayout& layout,
                                     const AdvTrainConfig& cfg, Rng& rng) {
  ModelScorer scorer(m);
  const int n = m.meta.seq_len, d = m.meta.embed_dim;
  EmbeddingBatch batch;
  batch.v = Tensor({layout.total(), n, d});
  batch.y.assign(static_cast<std::size_t>(layout.total()), 0.f);
  batch.manifest.scheme = "embedding";
  batch.manifest.benign = layout.benign;

  const float eps2 = static_cast<float>(rng.uniform(cfg.policy.eps2_lo, cfg.policy.eps2_hi));
  const float epsinf = static_cast<float>(rng.uniform(cfg.policy.epsinf_lo, cfg.policy.epsinf_hi));

  std::vector<EncodedDomain> ben = benign.take(layout.benign);
  Tensor vb = scorer.embed_batch(ben);
  copy_rows(vb, batch.v, 0);

  int row = layout.benign;
  for (const Slot& slot : layout.slots) {
    std::vector<EncodedDomain> origins = malicious.take(slot.count);
    Tensor v0 = scorer.embed_batch(origins);
    AttackConfig acfg = slot_attack_config(parse_group(slot.attack_id), eps2,
                                           epsinf, slot.count, cfg, rng);
    BatchAttackResult r = run_attack(scorer, v0, acfg);
    copy_rows(r.v, batch.v, row);
    std::fill_n(batch.y.begin() + row, slot.count, 1.f);
    batch.manifest.slots.emplace_back(slot.id(), slot.count);
    row += slot.count;
  }
  return batch;
}

DiscreteBatch build_discrete_batch(const Model& m, SampleQueue& benign,
                                   SampleQueue& malicious,
                                   const MinibatchLayout& layout,
                                   const AdvTrainConfig& cfg, Rng& rng) {
  ModelScorer scorer(m);
  DiscreteBatch batch;
  batch.manifest.scheme = "discrete";
  batch.manifest.benign = layout.benign;

  for (const EncodedDomain& e : benign.take(layout.benign)) {
    batch.x.push_back(e);
    batch.y.push_back(0.f);
  }

  const float eps2 = static_cast<float>(rng.uniform(cfg.policy.eps2_lo, cfg.policy.eps2_hi));
  const float epsinf = static_cast<float>(rng.uniform(cfg.policy.epsinf_lo, cfg.policy.epsinf_hi));

  for (const Slot& slot : layout.slots) {
    std::vector<EncodedDomain> origins = malicious.take(slot.count);
    if (slot.disc) {
      AttackConfig acfg = slot_attack_config(parse_group(slot.attack_id), eps2,
                                             epsinf, slot.count, cfg, rng);
      std::vector<AdversarialSample> samples =
          attack_and_discretize_batch(scorer, origins, acfg, *slot.disc);
      for (const AdversarialSample& s : samples) {
        batch.x.push_back(encode(s.domain));
        batch.y.push_back(1.f);
      }
    } else if (slot.attack_id == "hotflip") {
      for (const EncodedDomain& e : origins) {
        BeamConfig bc;
        bc.flips = static_cast<int>(rng.uniform_int(1, cfg.policy.flips_max));
        bc.beam_width = cfg.hotflip_beam;
        batch.x.push_back(encode(hotflip(scorer, e, bc)));
        batch.y.push_back(1.f);
      }
    } else if (slot.attack_id == "maskdga") {
      for (const EncodedDomain& e : origins) {
        batch.x.push_back(encode(maskdga_wb(scorer, e)));
        batch.y.push_back(1.f);
      }
    } else {
      throw InvalidConfig("unknown discrete slot '" + slot.attack_id + "'");
    }
    batch.manifest.slots.emplace_back(slot.id(), slot.count);
  }
  return batch;
}

Model adv_train(const Model& base, const LabeledDataset& train_split,
                AtScheme scheme, const AdvTrainConfig& cfg) {
  if (cfg.max_epochs < 1) throw InvalidConfig("max_epochs must be >= 1");
  if (cfg.attack_iterations < 1) throw InvalidConfig("attack_iterations must be >= 1");
  if (cfg.joint_embedding_prob < 0.0 || cfg.joint_embedding_prob > 1.0) {
    throw InvalidConfig("joint_embedding_prob must be within [0, 1]");
  }
  if (train_split.size() == 0) throw EmptyDataset("hardening needs training data");

  std::vector<EncodedDomain> benign_pool, malicious_pool;
  for (std::size_t i = 0; i < train_split.size(); ++i) {
    (train_split.y[i] >= 0.5f ? malicious_pool : benign_pool).push_back(train_split.x[i]);
  }
  if (benign_pool.empty() || malicious_pool.empty()) {
    throw PoolExhausted("hardening needs both classes in the train split");
  }

  Model m = base.clone();
  Rng rng(cfg.seed);
  SampleQueue benign(std::move(benign_pool), rng.fork(1));
  SampleQueue malicious(std::move(malicious_pool), rng.fork(2));

  const MinibatchLayout emb = embedding_layout(cfg.hold_out);
  const MinibatchLayout disc = discrete_layout(cfg.hold_out);
  const int steps = cfg.steps_per_epoch > 0
                        ? cfg.steps_per_epoch
                        : std::max<int>(1, static_cast<int>(malicious.size() / 256));

  Adam opt(m.parameters(), cfg.learning_rate);
  m.set_parameter_grads(false);

  // Fixed-length schedule: the final parameters are the result, no early
  // stopping and no validation-based selection.
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    benign.new_epoch();
    malicious.new_epoch();
    double loss_sum = 0.0;
    for (int step = 0; step < steps; ++step) {
      const bool use_embedding =
          scheme == AtScheme::Embedding ||
          (scheme == AtScheme::Joint && rng.uniform() < cfg.joint_embedding_prob);
      if (use_embedding) {
        EmbeddingBatch batch = build_embedding_batch(m, benign, malicious, emb, cfg, rng);
        m.set_parameter_grads(true);
        Tape tape;
        TensorPtr v = tape.leaf(batch.v.shape);
        v->v = batch.v.v;  // detached: the embedding gets no gradient
        TensorPtr loss = tape.bce_loss(model_logits(tape, m, v), batch.y);
        loss_sum += step_params(m, opt, tape, loss);
      } else {
        DiscreteBatch batch = build_discrete_batch(m, benign, malicious, disc, cfg, rng);
        m.set_parameter_grads(true);
        Tape tape;
        TensorPtr v = model_embed(tape, m, batch.x);
        TensorPtr loss = tape.bce_loss(model_logits(tape, m, v), batch.y);
        loss_sum += step_params(m, opt, tape, loss);
      }
      m.set_parameter_grads(false);
    }
    if (cfg.verbose) {
      std::fprintf(stderr, "hardening epoch %d/%d: mean batch loss %.6f\n",
                   epoch + 1, cfg.max_epochs, loss_sum / steps);
    }
  }
  m.set_parameter_grads(true);
  return m;
}

Model logo_train(const Model& base, const LabeledDataset& train_split,
                 AttackGroup held_out, AdvTrainConfig cfg) {
  cfg.hold_out = held_out;
  return adv_train(base, train_split, AtScheme::Joint, cfg);
}

std::vector<WhiteBoxCombo> white_box_combos() {
  std::vector<WhiteBoxCombo> out;
  for (AttackGroup a : kEmbeddingAttacks) {
    for (AttackGroup d : kDiscretizerGroups) {
      WhiteBoxCombo c;
      c.id = std::string(group_name(a)) + "+" + group_name(d);
      c.attack = a;
      c.disc = spec_for(d);
      out.push_back(std::move(c));
    }
  }
  out.push_back({"hotflip", AttackGroup::HotFlip, std::nullopt});
  out.push_back({"maskdga", AttackGroup::MaskDga, std::nullopt});
  return out;
}

bool combo_uses_group(const WhiteBoxCombo& combo, AttackGroup g) {
  if (combo.attack == g) return true;
  if (combo.disc && is_discretizer(g)) return group_for_spec(*combo.disc) == g;
  return false;
}

std::vector<AdversarialSample> run_combo(const Model& m,
                                         const WhiteBoxCombo& combo,
                                         std::span<const EncodedDomain> origins,
                                         const ComboEvalConfig& cfg) {
  ModelScorer scorer(m);
  if (combo.disc) {
    AttackConfig a;
    a.kind = kind_for(combo.attack);
    a.iterations = cfg.iterations;
    a.seed = cfg.seed;
    a.cw_binary_steps = cfg.cw_binary_steps;
    a.kappa = cfg.kappa;
    a.epsilon = (combo.attack == AttackGroup::PgdLinf ||
                 combo.attack == AttackGroup::BatLinf)
                    ? cfg.eps_linf
                    : cfg.eps_l2;
    return attack_and_discretize_batch(scorer, origins, a, *combo.disc);
  }

  std::vector<Domain> domains;
  domains.reserve(origins.size());
  if (combo.attack == AttackGroup::HotFlip) {
    BeamConfig bc;
    bc.flips = cfg.hotflip_flips;
    bc.beam_width = cfg.hotflip_beam;
    for (const EncodedDomain& e : origins) domains.push_back(hotflip(scorer, e, bc));
  } else if (combo.attack == AttackGroup::MaskDga) {
    for (const EncodedDomain& e : origins) domains.push_back(maskdga_wb(scorer, e));
  } else {
    throw InvalidConfig("combo without a discretizer must be a discrete attack");
  }

  std::vector<EncodedDomain> encoded;
  encoded.reserve(domains.size());
  for (const Domain& d : domains) encoded.push_back(encode(d));
  std::vector<float> z = scorer.logits_for(encoded);

  std::vector<AdversarialSample> out;
  out.reserve(domains.size());
  for (std::size_t i = 0; i < domains.size(); ++i) {
    out.push_back(measure_sample(scorer, domains[i], origins[i], z[i]));
  }
  return out;
}

}  // namespace advdga
