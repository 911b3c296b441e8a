#pragma once

#include <string>

#include "advdga/domain.hpp"
#include "advdga/eval.hpp"
#include "advdga/rng.hpp"
#include "advdga/scorer.hpp"

namespace advdga {

struct BeamConfig {
  int flips = 1;       // substitution rounds (0 = identity, allowed)
  int beam_width = 10;
};

// Gradient-guided beam search over single-character substitutions.
// Candidates are scored by the first-order gain (W_new - W_cur) . dL/dv_i,
// surviving beams re-scored by true loss; the best valid string seen
// anywhere (including the input) is returned.
Domain hotflip(const EmbeddingScorer& scorer, const EncodedDomain& e,
               const BeamConfig& cfg);

// Single-gradient saliency attack: ranks positions by their best
// first-order gain and replaces exactly ceil(L/2) of them with the
// gain-maximizing valid symbol (always different from the current one).
Domain maskdga_wb(const EmbeddingScorer& scorer, const EncodedDomain& e);

struct HyphenResult {
  Domain domain;
  bool changed = false;
};

// Replaces floor(L/2) interior characters with hyphens (fewer when validity
// leaves fewer eligible positions); too-short inputs come back unchanged
// with changed = false.
HyphenResult hyphen_dga(const Domain& d, Rng& rng);

// Prepends 'i' up to length 48; longer inputs (or inputs whose extension
// would be invalid) are returned unchanged.
Domain length_dga(const Domain& d);

// Scores a newline-delimited file of pre-generated domains: filters to
// valid e2LDs, then reports FNR/uniqueness (no gradients involved).
AttackReport replay_blackbox(const std::string& samples_file,
                             const EmbeddingScorer& scorer);

}  // namespace advdga
