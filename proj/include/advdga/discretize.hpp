#pragma once

#include <span>
#include <string>
#include <vector>

#include "advdga/attacks_embedding.hpp"
#include "advdga/domain.hpp"
#include "advdga/scorer.hpp"
#include "advdga/tensor.hpp"

namespace advdga {

enum class DistanceMetric { L2, Linf, Cosine };
enum class LengthRule { Lco, Lbf };

const char* metric_name(DistanceMetric m);
const char* length_rule_name(LengthRule r);
DistanceMetric parse_metric(const std::string& name);
LengthRule parse_length_rule(const std::string& name);

struct DiscretizerSpec {
  LengthRule length_rule = LengthRule::Lco;
  DistanceMetric metric = DistanceMetric::L2;
  int min_length = kMinAttackLength;
  int max_length = kMaxDomainLength;
};

// Nearest allowed symbol to x under the metric, rows of w_norm indexed by
// alphabet position.  `allowed` must be sorted ascending so that ties
// resolve to the lowest alphabet index.
int round_char(std::span<const float> x, std::span<const int> allowed,
               const Tensor& w_norm, DistanceMetric metric);

// Unit-L2-normalizes each row (zero rows stay zero).
Tensor normalize_rows(const Tensor& w);

// Maps adversarial embedding matrices to valid e2LDs.  Distances are taken
// against the row-normalized embedding matrix of the scorer.
class Discretizer {
 public:
  Discretizer(const EmbeddingScorer& scorer, const DiscretizerSpec& spec);

  // Rounds the first `length` positions of v ([seq_len, embed_dim]) to a
  // valid e2LD of exactly that length.
  Domain discretize(const Tensor& v, int length) const;
  // Index of the first position (2-based scan) whose unconstrained nearest
  // neighbor is the padding symbol, clamped to [min_length, max_length].
  int length_lco(const Tensor& v) const;
  // Length in [min_length, max_length] whose discretization maximizes the
  // classifier loss for the malicious label; ties pick the smallest.
  int length_lbf(const Tensor& v) const;

  // Full pipeline honoring the spec's length rule.
  Domain apply(const Tensor& v) const;
  // v: [B, seq_len, embed_dim]; batches the LBF length scan internally.
  std::vector<Domain> apply_batch(const Tensor& v) const;

  const DiscretizerSpec& spec() const { return spec_; }

 private:
  Tensor sample_view(const Tensor& v, std::size_t b) const;
  const EmbeddingScorer& scorer_;
  DiscretizerSpec spec_;
  Tensor w_norm_;
};

// One attack output after discretization, with the metrics the evaluation
// reports need.  Distances are between the embeddings of the emitted domain
// and of the origin; levenshtein is on the strings.
struct AdversarialSample {
  Domain domain;
  EncodedDomain origin;
  float logit = 0.f;
  float l2_dist = 0.f;
  float linf_dist = 0.f;
  int levenshtein_dist = 0;
};

AdversarialSample attack_and_discretize(const EmbeddingScorer& scorer,
                                        const EncodedDomain& e,
                                        const AttackConfig& attack_cfg,
                                        const DiscretizerSpec& spec);
std::vector<AdversarialSample> attack_and_discretize_batch(
    const EmbeddingScorer& scorer, std::span<const EncodedDomain> batch,
    const AttackConfig& attack_cfg, const DiscretizerSpec& spec);

// Fills metric fields of a sample given its domain and origin.
AdversarialSample measure_sample(const EmbeddingScorer& scorer, Domain domain,
                                 const EncodedDomain& origin, float logit);

}  // namespace advdga
