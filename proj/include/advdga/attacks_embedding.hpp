#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "advdga/model.hpp"
#include "advdga/scorer.hpp"
#include "advdga/tensor.hpp"

namespace advdga {

enum class AttackKind { PgdL2, PgdLinf, CwL2, BatL2, BatLinf };

const char* attack_kind_name(AttackKind kind);
AttackKind parse_attack_kind(const std::string& name);

struct AttackConfig {
  AttackKind kind = AttackKind::PgdLinf;
  float epsilon = 1.f;  // perturbation budget; ignored by CW_L2
  float kappa = 0.f;    // CW confidence; ignored by the others
  int iterations = 50;
  int restarts = 1;
  std::uint64_t seed = 0;
  int cw_binary_steps = 5;
  float cw_lr = 0.01f;
  // Optional per-sample CW confidences (size = batch); overrides kappa.
  std::vector<float> kappa_per_sample;
};

struct BatchAttackResult {
  Tensor v;                   // [B, seq_len, embed_dim] adversarial embeddings
  std::vector<float> logits;  // logit at the returned iterate
  std::vector<bool> success;  // CW: z <= -kappa reached; others: z < 0
};

// All attacks maximize the classification loss for label "malicious" (so a
// successful result is scored benign).  v0 holds the embedded originals,
// one sample per batch row; each sample is handled independently.
BatchAttackResult pgd(const EmbeddingScorer& scorer, const Tensor& v0,
                      const AttackConfig& cfg);
BatchAttackResult cw_l2(const EmbeddingScorer& scorer, const Tensor& v0,
                        const AttackConfig& cfg);
BatchAttackResult bat(const EmbeddingScorer& scorer, const Tensor& v0,
                      const AttackConfig& cfg);
BatchAttackResult run_attack(const EmbeddingScorer& scorer, const Tensor& v0,
                             const AttackConfig& cfg);

// Single-sample convenience wrapper.
EmbeddedDomain run_attack(const EmbeddingScorer& scorer, const EmbeddedDomain& v0,
                          const AttackConfig& cfg);

// The ten evaluation configurations per attack family: epsilon sweeps for
// PGD/BAT, confidence sweep for CW, 50 iterations each.
std::vector<AttackConfig> hyperparameter_grid(AttackKind kind);

}  // namespace advdga
