#include "advdga/attacks_discrete.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>

#include "advdga/errors.hpp"

namespace advdga {
namespace {

double sigmoid_d(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

// dL/dz of BCE at label 1: sigmoid(z) - 1 = -sigmoid(-z), always negative,
// computed in the cancellation-free form.
double bce_slope(double z) { return -sigmoid_d(-z); }

double bce_value(double z) {
  // softplus(-z), stable for both signs.
  return std::max(-z, 0.0) + std::log1p(std::exp(-std::fabs(z)));
}

// Symbols a substitution may place at `pos` of a length-L string so the
// result stays a valid e2LD, given the current symbols (covers the
// positions-3-4 hyphen interaction).
std::vector<int> allowed_at(const EncodedDomain& e, int pos) {
  const Alphabet& alpha = Alphabet::standard();
  const int L = e.length;
  bool is_end = pos == 0 || pos == L - 1;
  std::vector<int> allowed = is_end ? alpha.letters_digits() : alpha.e2ld_subset();
  const int hyphen = alpha.index_of('-');
  if (!is_end && L >= 5) {
    bool banned = (pos == 2 && e.indices[3] == hyphen) ||
                  (pos == 3 && e.indices[2] == hyphen);
    if (banned) std::erase(allowed, hyphen);
  }
  return allowed;
}

struct Flip {
  int pos;
  int symbol;
  double est_loss;  // member loss + first-order gain
};

// All valid single-symbol flips of `e`, scored by first-order gain from the
// raw embedding rows; base_loss is the member's true loss.
std::vector<Flip> score_flips(const EmbeddingScorer& scorer, const EncodedDomain& e,
                              const float* grad, double z, double base_loss) {
  const Tensor& W = scorer.embedding_rows();
  const int d = scorer.embed_dim();
  const double slope = bce_slope(z);
  std::vector<Flip> flips;
  for (int pos = 0; pos < e.length; ++pos) {
    const float* g_i = grad + static_cast<std::size_t>(pos) * d;
    const float* w_cur = W.v.data() + static_cast<std::size_t>(e.indices[static_cast<std::size_t>(pos)]) * d;
    double cur_dot = 0.0;
    for (int j = 0; j < d; ++j) cur_dot += static_cast<double>(w_cur[j]) * g_i[j];
    for (int sym : allowed_at(e, pos)) {
      if (sym == e.indices[static_cast<std::size_t>(pos)]) continue;
      const float* w_new = W.v.data() + static_cast<std::size_t>(sym) * d;
      double new_dot = 0.0;
      for (int j = 0; j < d; ++j) new_dot += static_cast<double>(w_new[j]) * g_i[j];
      flips.push_back({pos, sym, base_loss + slope * (new_dot - cur_dot)});
    }
  }
  return flips;
}

EncodedDomain apply_flip(const EncodedDomain& e, const Flip& f) {
  EncodedDomain out = e;
  out.indices[static_cast<std::size_t>(f.pos)] = static_cast<std::uint8_t>(f.symbol);
  return out;
}

std::string key_of(const EncodedDomain& e) { return decode(e).text; }

}  // namespace

Domain hotflip(const EmbeddingScorer& scorer, const EncodedDomain& e,
               const BeamConfig& cfg) {
  if (cfg.flips < 0 || cfg.beam_width < 1) {
    throw InvalidConfig("hotflip: flips >= 0 and beam_width >= 1 required");
  }
  std::vector<EncodedDomain> beam{e};
  std::vector<float> beam_z = scorer.logits_for(beam);
  EncodedDomain best = e;
  double best_z = beam_z[0];

  for (int round = 0; round < cfg.flips; ++round) {
    Tensor v = scorer.embed_batch(beam);
    Tensor grads(v.shape);
    std::vector<float> z = scorer.logits_and_grad(v, grads);
    const std::size_t block =
        static_cast<std::size_t>(scorer.seq_len()) * scorer.embed_dim();

    // Expand: per member keep the beam_width best flips by estimated loss.
    std::vector<std::pair<double, EncodedDomain>> pool;
    std::set<std::string> seen;
    for (std::size_t m = 0; m < beam.size(); ++m) {
      std::vector<Flip> flips = score_flips(scorer, beam[m],
                                            grads.v.data() + m * block, z[m],
                                            bce_value(z[m]));
      std::size_t keep = std::min<std::size_t>(flips.size(),
                                               static_cast<std::size_t>(cfg.beam_width));
      std::partial_sort(flips.begin(), flips.begin() + static_cast<std::ptrdiff_t>(keep),
                        flips.end(),
                        [](const Flip& a, const Flip& b) { return a.est_loss > b.est_loss; });
      for (std::size_t i = 0; i < keep; ++i) {
        EncodedDomain cand = apply_flip(beam[m], flips[i]);
        if (seen.insert(key_of(cand)).second) {
          pool.emplace_back(flips[i].est_loss, std::move(cand));
        }
      }
    }
    if (pool.empty()) break;

    // Re-score the pool by true loss; keep the top beam_width.
    std::vector<EncodedDomain> cands;
    cands.reserve(pool.size());
    for (auto& [est, cand] : pool) cands.push_back(cand);
    std::vector<float> cand_z = scorer.logits_for(cands);
    std::vector<std::size_t> order(cands.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&cand_z](std::size_t a, std::size_t b) {
      return cand_z[a] < cand_z[b];  // lower logit = higher loss
    });
    std::size_t keep = std::min<std::size_t>(order.size(),
                                             static_cast<std::size_t>(cfg.beam_width));
    beam.clear();
    for (std::size_t i = 0; i < keep; ++i) beam.push_back(cands[order[i]]);
    if (cand_z[order[0]] < best_z) {
      best_z = cand_z[order[0]];
      best = beam[0];
    }
  }
  return decode(best);
}

Domain maskdga_wb(const EmbeddingScorer& scorer, const EncodedDomain& e) {
  if (e.length < 1) throw EmptyDomain("maskdga_wb: empty input");
  std::vector<EncodedDomain> one{e};
  Tensor v = scorer.embed_batch(one);
  Tensor grads(v.shape);
  std::vector<float> z = scorer.logits_and_grad(v, grads);

  // Rank positions by their best achievable first-order gain under the
  // single clean-input gradient.
  std::vector<Flip> flips = score_flips(scorer, e, grads.v.data(), z[0],
                                        bce_value(z[0]));
  std::map<int, Flip> best_per_pos;
  for (const Flip& f : flips) {
    auto it = best_per_pos.find(f.pos);
    if (it == best_per_pos.end() || f.est_loss > it->second.est_loss) {
      best_per_pos[f.pos] = f;
    }
  }
  std::vector<Flip> ranked;
  for (auto& [pos, f] : best_per_pos) ranked.push_back(f);
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const Flip& a, const Flip& b) { return a.est_loss > b.est_loss; });

  const int target = (e.length + 1) / 2;
  EncodedDomain out = e;
  const Alphabet& alpha = Alphabet::standard();
  const int hyphen = alpha.index_of('-');
  int applied = 0;
  for (const Flip& f : ranked) {
    if (applied == target) break;
    int sym = f.symbol;
    // Earlier replacements may have placed a hyphen that now forbids this
    // one; fall back to the best valid non-hyphen symbol for the position.
    if (sym == hyphen) {
      std::vector<int> allowed = allowed_at(out, f.pos);
      if (std::find(allowed.begin(), allowed.end(), hyphen) == allowed.end()) {
        double best_gain = -std::numeric_limits<double>::infinity();
        sym = -1;
        for (const Flip& g : flips) {
          if (g.pos != f.pos || g.symbol == hyphen) continue;
          if (g.symbol == out.indices[static_cast<std::size_t>(f.pos)]) continue;
          if (g.est_loss > best_gain) {
            best_gain = g.est_loss;
            sym = g.symbol;
          }
        }
        if (sym < 0) continue;
      }
    }
    out.indices[static_cast<std::size_t>(f.pos)] = static_cast<std::uint8_t>(sym);
    ++applied;
  }
  Domain result = decode(out);
  return result;
}

HyphenResult hyphen_dga(const Domain& d, Rng& rng) {
  ValidityVerdict verdict = validate_e2ld(d.text);
  if (!verdict.valid()) throw InvalidDomain("hyphen_dga requires a valid e2LD");
  const int L = static_cast<int>(d.text.size());
  HyphenResult result{d, false};
  if (L < 3) return result;  // no interior positions

  std::vector<int> interior;
  for (int i = 1; i < L - 1; ++i) {
    if (d.text[static_cast<std::size_t>(i)] != '-') interior.push_back(i);
  }
  rng.shuffle(interior);
  const int target = L / 2;
  int placed = 0;
  std::string text = d.text;
  for (int pos : interior) {
    if (placed == target) break;
    // Keep the positions-3-4 rule intact while placing.
    if (L >= 4 && ((pos == 2 && text[3] == '-') || (pos == 3 && text[2] == '-'))) {
      continue;
    }
    text[static_cast<std::size_t>(pos)] = '-';
    ++placed;
  }
  if (placed == 0) return result;
  result.domain.text = std::move(text);
  result.changed = true;
  return result;
}

Domain length_dga(const Domain& d) {
  ValidityVerdict verdict = validate_e2ld(d.text);
  if (!verdict.valid()) throw InvalidDomain("length_dga requires a valid e2LD");
  constexpr int kTarget = 48;
  const int L = static_cast<int>(d.text.size());
  if (L >= kTarget) return d;
  Domain out;
  out.text = std::string(static_cast<std::size_t>(kTarget - L), 'i') + d.text;
  // Shifting can slide an interior hyphen pair onto positions 3-4; the
  // only in-contract fallback is the identity.
  if (!validate_e2ld(out.text).valid()) return d;
  return out;
}

AttackReport replay_blackbox(const std::string& samples_file,
                             const EmbeddingScorer& scorer) {
  std::ifstream in(samples_file);
  if (!in) throw FileNotFound("cannot open: " + samples_file);
  std::vector<Domain> domains;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line.empty()) continue;
    std::string folded;
    folded.reserve(line.size());
    for (char c : line) {
      folded.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
    }
    if (validate_e2ld(folded).valid()) domains.push_back(Domain{folded});
  }
  if (domains.empty()) throw EmptyAfterFiltering("no valid e2LDs in " + samples_file);

  std::vector<EncodedDomain> encoded;
  encoded.reserve(domains.size());
  for (const Domain& d : domains) encoded.push_back(encode(d));
  std::vector<float> z = scorer.logits_for(encoded);

  // Replayed samples carry no origin; distance columns are reported as 0.
  std::vector<AdversarialSample> samples;
  samples.reserve(domains.size());
  for (std::size_t i = 0; i < domains.size(); ++i) {
    AdversarialSample s;
    s.domain = domains[i];
    s.origin = encoded[i];
    s.logit = z[i];
    samples.push_back(std::move(s));
  }
  return compute_report("replay", samples);
}

}  // namespace advdga
