#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "advdga/attacks_embedding.hpp"
#include "advdga/discretize.hpp"
#include "advdga/model.hpp"
#include "advdga/rng.hpp"
#include "advdga/train.hpp"

namespace advdga {

// The 13 leave-one-group-out units: five embedding attacks, six
// discretization schemes, two gradient-guided discrete attacks.
enum class AttackGroup {
  PgdL2,
  PgdLinf,
  BatL2,
  BatLinf,
  CwL2,
  LbfL2,
  LbfLinf,
  LbfCosine,
  LcoL2,
  LcoLinf,
  LcoCosine,
  HotFlip,
  MaskDga,
};

const char* group_name(AttackGroup g);
AttackGroup parse_group(const std::string& name);
std::vector<AttackGroup> all_groups();

struct Slot {
  std::string attack_id;                 // e.g. "pgd_l2", "hotflip"
  std::optional<DiscretizerSpec> disc;   // set for discretized embedding slots
  int count = 0;

  std::string id() const;
};

struct MinibatchLayout {
  int benign = 256;
  std::vector<Slot> slots;

  int adversarial_total() const;
  int total() const { return benign + adversarial_total(); }
};

// Embedding-space layout: 256 benign + (51,51,51,51,52) over PGD L2,
// PGD Linf, BAT L2, BAT Linf, CW L2.  Holding out an embedding attack
// rescales the remaining counts proportionally (floor, remainder to the
// last slot).
MinibatchLayout embedding_layout(std::optional<AttackGroup> held_out = {});

// Discrete layout: 256 benign + per embedding attack 36 samples split 6/6/
// 6/6/6/6 over {LBF,LCO} x {L2,Linf,cosine}, plus 38 HotFlip and 38
// MaskDGA.  Held-out discretizers redistribute within each attack's 36;
// held-out attacks rescale the remaining slots globally.
MinibatchLayout discrete_layout(std::optional<AttackGroup> held_out = {});

// Per-batch hyperparameter sampling: one epsilon draw per minibatch per
// norm family, kappa and flip counts per sample.
struct SamplingPolicy {
  float eps2_lo = 0.5f;
  float eps2_hi = 89.7997772825746f;  // sqrt(63 * 128)
  float epsinf_lo = 0.01f;
  float epsinf_hi = 1.f;
  float kappa_hi = 100.f;
  double kappa_zero_prob = 0.5;
  int flips_max = 10;
};

struct BatchManifest {
  std::string scheme;  // "embedding" or "discrete"
  int benign = 0;
  std::vector<std::pair<std::string, int>> slots;  // (slot id, count)

  std::string to_json() const;
};

enum class AtScheme { Embedding, Discrete, Joint };
const char* scheme_name(AtScheme s);
AtScheme parse_scheme(const std::string& name);

struct AdvTrainConfig {
  int max_epochs = 50;       // exact; no early stopping
  float learning_rate = 1e-3f;
  std::uint64_t seed = 0;
  int steps_per_epoch = 0;   // 0 = one pass over the malicious pool
  int attack_iterations = 10;  // PGD/BAT steps while generating batches
  int cw_iterations = 50;
  int cw_binary_steps = 2;
  int hotflip_beam = 1;
  double joint_embedding_prob = 0.5;
  SamplingPolicy policy;
  std::optional<AttackGroup> hold_out;
  bool verbose = true;
};

// Cycling sample pool: reshuffled at every epoch boundary and whenever it
// wraps, so draws within one pass are without replacement.
class SampleQueue {
 public:
  SampleQueue(std::vector<EncodedDomain> pool, Rng rng);
  std::vector<EncodedDomain> take(int n);
  void new_epoch();
  std::size_t size() const { return pool_.size(); }

 private:
  std::vector<EncodedDomain> pool_;
  Rng rng_;
  std::size_t cursor_ = 0;
};

struct EmbeddingBatch {
  Tensor v;  // [total, seq_len, embed_dim]
  std::vector<float> y;
  BatchManifest manifest;
};

struct DiscreteBatch {
  std::vector<EncodedDomain> x;
  std::vector<float> y;
  BatchManifest manifest;
};

// Both builders attack with the model's current parameters; the embedding
// batch feeds detached embedding vectors (W receives no gradient from it).
EmbeddingBatch build_embedding_batch(const Model& m, SampleQueue& benign,
                                     SampleQueue& malicious,
                                     const MinibatchLayout& layout,
                                     const AdvTrainConfig& cfg, Rng& rng);
DiscreteBatch build_discrete_batch(const Model& m, SampleQueue& benign,
                                   SampleQueue& malicious,
                                   const MinibatchLayout& layout,
                                   const AdvTrainConfig& cfg, Rng& rng);

// Hardens a trained model: exactly cfg.max_epochs epochs, final parameters
// returned (no early stopping, no validation-based selection).
Model adv_train(const Model& base, const LabeledDataset& train_split,
                AtScheme scheme, const AdvTrainConfig& cfg);

// Joint-scheme hardening with one group excluded from all batch layouts.
Model logo_train(const Model& base, const LabeledDataset& train_split,
                 AttackGroup held_out, AdvTrainConfig cfg);

// The 32 white-box evaluation combinations: 5 embedding attacks x 6
// discretizers + HotFlip + MaskDGA.
struct WhiteBoxCombo {
  std::string id;
  AttackGroup attack;                   // embedding attack or discrete attack
  std::optional<DiscretizerSpec> disc;  // present for the 30 discretized combos
};
std::vector<WhiteBoxCombo> white_box_combos();

// Group membership of a combo (for LOGO held-out flags).
bool combo_uses_group(const WhiteBoxCombo& combo, AttackGroup g);

// Full-strength evaluation settings for one combo run.
struct ComboEvalConfig {
  int iterations = 50;
  float eps_linf = 1.f;
  float eps_l2 = 89.7997772825746f;  // sqrt(63 * 128), effectively unbounded
  float kappa = 0.f;
  int cw_binary_steps = 5;
  int hotflip_flips = 2;
  int hotflip_beam = 10;
  std::uint64_t seed = 0;
};

std::vector<AdversarialSample> run_combo(const Model& m,
                                         const WhiteBoxCombo& combo,
                                         std::span<const EncodedDomain> origins,
                                         const ComboEvalConfig& cfg);

}  // namespace advdga
