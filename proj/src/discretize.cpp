#include "advdga/discretize.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>

#include "advdga/errors.hpp"

namespace advdga {
namespace {

double metric_distance(DistanceMetric metric, const float* row, const float* x,
                       int d) {
  switch (metric) {
    case DistanceMetric::L2: {
      double acc = 0.0;
      for (int i = 0; i < d; ++i) {
        double diff = static_cast<double>(row[i]) - x[i];
        acc += diff * diff;
      }
      return acc;  // squared; monotone in the true distance
    }
    case DistanceMetric::Linf: {
      double acc = 0.0;
      for (int i = 0; i < d; ++i) {
        acc = std::max(acc, std::fabs(static_cast<double>(row[i]) - x[i]));
      }
      return acc;
    }
    case DistanceMetric::Cosine: {
      double dot = 0.0, nr = 0.0, nx = 0.0;
      for (int i = 0; i < d; ++i) {
        dot += static_cast<double>(row[i]) * x[i];
        nr += static_cast<double>(row[i]) * row[i];
        nx += static_cast<double>(x[i]) * x[i];
      }
      if (nx == 0.0) throw ZeroVector("cosine distance undefined for zero vector");
      if (nr == 0.0) return std::numeric_limits<double>::infinity();
      return 1.0 - dot / (std::sqrt(nr) * std::sqrt(nx));
    }
  }
  return 0.0;
}

constexpr int kLbfChunkSamples = 16;

}  // namespace

const char* metric_name(DistanceMetric m) {
  switch (m) {
    case DistanceMetric::L2: return "l2";
    case DistanceMetric::Linf: return "linf";
    case DistanceMetric::Cosine: return "cosine";
  }
  return "?";
}

const char* length_rule_name(LengthRule r) {
  return r == LengthRule::Lco ? "lco" : "lbf";
}

DistanceMetric parse_metric(const std::string& name) {
  for (DistanceMetric m : {DistanceMetric::L2, DistanceMetric::Linf, DistanceMetric::Cosine}) {
    if (name == metric_name(m)) return m;
  }
  throw InvalidConfig("unknown metric: " + name);
}

LengthRule parse_length_rule(const std::string& name) {
  if (name == "lco") return LengthRule::Lco;
  if (name == "lbf") return LengthRule::Lbf;
  throw InvalidConfig("unknown length rule: " + name);
}

int round_char(std::span<const float> x, std::span<const int> allowed,
               const Tensor& w_norm, DistanceMetric metric) {
  if (allowed.empty()) throw InvalidConfig("round_char: empty symbol set");
  const int d = w_norm.dim(1);
  if (static_cast<int>(x.size()) != d) throw ShapeMismatch("round_char dimension");
  int best = allowed[0];
  double best_dist = std::numeric_limits<double>::infinity();
  for (int c : allowed) {
    const float* row = w_norm.v.data() + static_cast<std::size_t>(c) * d;
    double dist = metric_distance(metric, row, x.data(), d);
    if (dist < best_dist) {
      best_dist = dist;
      best = c;
    }
  }
  return best;
}

Tensor normalize_rows(const Tensor& w) {
  Tensor out = w;
  const int rows = w.dim(0), d = w.dim(1);
  for (int r = 0; r < rows; ++r) {
    float* p = out.v.data() + static_cast<std::size_t>(r) * d;
    double norm2 = 0.0;
    for (int i = 0; i < d; ++i) norm2 += static_cast<double>(p[i]) * p[i];
    double norm = std::sqrt(norm2);
    if (norm == 0.0) continue;
    for (int i = 0; i < d; ++i) p[i] = static_cast<float>(p[i] / norm);
  }
  return out;
}

Discretizer::Discretizer(const EmbeddingScorer& scorer, const DiscretizerSpec& spec)
    : scorer_(scorer), spec_(spec), w_norm_(normalize_rows(scorer.embedding_rows())) {
  if (spec.min_length < 1 || spec.min_length > spec.max_length ||
      spec.max_length > kMaxDomainLength) {
    throw InvalidConfig("discretizer length bounds");
  }
}

Domain Discretizer::discretize(const Tensor& v, int length) const {
  if (length < 1 || length > kMaxDomainLength) {
    throw LengthOutOfRange("discretize length must be in [1,63]");
  }
  if (v.rank() != 2 || v.dim(1) != scorer_.embed_dim()) {
    throw ShapeMismatch("discretize expects [seq_len, embed_dim]");
  }
  const Alphabet& alpha = Alphabet::standard();
  const int d = scorer_.embed_dim();
  const std::vector<int>& interior = alpha.e2ld_subset();
  const std::vector<int>& ends = alpha.letters_digits();

  std::vector<int> symbols(static_cast<std::size_t>(length));
  for (int i = 0; i < length; ++i) {
    std::span<const float> col(v.v.data() + static_cast<std::size_t>(i) * d,
                               static_cast<std::size_t>(d));
    bool is_end = i == 0 || i == length - 1;
    symbols[static_cast<std::size_t>(i)] =
        round_char(col, is_end ? ends : interior, w_norm_, spec_.metric);
  }

  // Hyphens at both positions 3 and 4 are reserved for encodings: the
  // column closer to the hyphen row keeps it, the other falls back to its
  // second-closest (non-hyphen) symbol.
  const int hyphen = alpha.index_of('-');
  if (length >= 5 && symbols[2] == hyphen && symbols[3] == hyphen) {
    std::span<const float> col3(v.v.data() + 2 * static_cast<std::size_t>(d),
                                static_cast<std::size_t>(d));
    std::span<const float> col4(v.v.data() + 3 * static_cast<std::size_t>(d),
                                static_cast<std::size_t>(d));
    const float* hrow = w_norm_.v.data() + static_cast<std::size_t>(hyphen) * d;
    double d3 = metric_distance(spec_.metric, hrow, col3.data(), d);
    double d4 = metric_distance(spec_.metric, hrow, col4.data(), d);
    if (d3 <= d4) {
      symbols[3] = round_char(col4, ends, w_norm_, spec_.metric);
    } else {
      symbols[2] = round_char(col3, ends, w_norm_, spec_.metric);
    }
  }

  Domain out;
  out.text.reserve(static_cast<std::size_t>(length));
  for (int s : symbols) out.text.push_back(alpha.symbol(s));
  assert(validate_e2ld(out.text).valid());
  return out;
}

int Discretizer::length_lco(const Tensor& v) const {
  const Alphabet& alpha = Alphabet::standard();
  const int d = scorer_.embed_dim();
  std::vector<int> all(static_cast<std::size_t>(alpha.size()));
  for (int i = 0; i < alpha.size(); ++i) all[static_cast<std::size_t>(i)] = i;

  int cut = spec_.max_length;
  for (int i = 1; i < kMaxDomainLength; ++i) {
    std::span<const float> col(v.v.data() + static_cast<std::size_t>(i) * d,
                               static_cast<std::size_t>(d));
    if (round_char(col, all, w_norm_, spec_.metric) == alpha.pad_index()) {
      cut = i;
      break;
    }
  }
  return std::clamp(cut, spec_.min_length, spec_.max_length);
}

int Discretizer::length_lbf(const Tensor& v) const {
  const int count = spec_.max_length - spec_.min_length + 1;
  std::vector<EncodedDomain> candidates;
  candidates.reserve(static_cast<std::size_t>(count));
  for (int len = spec_.min_length; len <= spec_.max_length; ++len) {
    candidates.push_back(encode(discretize(v, len)));
  }
  std::vector<float> z = scorer_.logits_for(candidates);
  // Maximizing BCE loss for label 1 = minimizing the logit; first minimum
  // keeps the smallest length.
  int best = 0;
  for (int i = 1; i < count; ++i) {
    if (z[static_cast<std::size_t>(i)] < z[static_cast<std::size_t>(best)]) best = i;
  }
  return spec_.min_length + best;
}

Domain Discretizer::apply(const Tensor& v) const {
  int len = spec_.length_rule == LengthRule::Lco ? length_lco(v) : length_lbf(v);
  return discretize(v, len);
}

Tensor Discretizer::sample_view(const Tensor& v, std::size_t b) const {
  const int n = v.dim(1), d = v.dim(2);
  Tensor s({n, d});
  std::copy_n(v.v.data() + b * static_cast<std::size_t>(n) * d,
              static_cast<std::size_t>(n) * d, s.v.data());
  return s;
}

std::vector<Domain> Discretizer::apply_batch(const Tensor& v) const {
  const std::size_t B = static_cast<std::size_t>(v.dim(0));
  std::vector<Domain> out(B);
  if (spec_.length_rule == LengthRule::Lco) {
    for (std::size_t b = 0; b < B; ++b) {
      Tensor s = sample_view(v, b);
      out[b] = discretize(s, length_lco(s));
    }
    return out;
  }
  // LBF: score all candidate lengths of a group of samples in one batch.
  const int count = spec_.max_length - spec_.min_length + 1;
  for (std::size_t start = 0; start < B; start += kLbfChunkSamples) {
    std::size_t group = std::min<std::size_t>(kLbfChunkSamples, B - start);
    std::vector<EncodedDomain> candidates;
    std::vector<std::vector<Domain>> texts(group);
    candidates.reserve(group * static_cast<std::size_t>(count));
    for (std::size_t g = 0; g < group; ++g) {
      Tensor s = sample_view(v, start + g);
      for (int len = spec_.min_length; len <= spec_.max_length; ++len) {
        texts[g].push_back(discretize(s, len));
        candidates.push_back(encode(texts[g].back()));
      }
    }
    std::vector<float> z = scorer_.logits_for(candidates);
    for (std::size_t g = 0; g < group; ++g) {
      const float* zg = z.data() + g * static_cast<std::size_t>(count);
      int best = 0;
      for (int i = 1; i < count; ++i) {
        if (zg[i] < zg[best]) best = i;
      }
      out[start + g] = texts[g][static_cast<std::size_t>(best)];
    }
  }
  return out;
}

AdversarialSample measure_sample(const EmbeddingScorer& scorer, Domain domain,
                                 const EncodedDomain& origin, float logit) {
  AdversarialSample s;
  s.origin = origin;
  s.logit = logit;
  EncodedDomain adv = encode(domain);
  std::array<EncodedDomain, 2> pair{adv, origin};
  Tensor both = scorer.embed_batch(pair);
  const std::size_t block = static_cast<std::size_t>(scorer.seq_len()) * scorer.embed_dim();
  double l2 = 0.0;
  float linf = 0.f;
  for (std::size_t i = 0; i < block; ++i) {
    double diff = static_cast<double>(both.v[i]) - both.v[block + i];
    l2 += diff * diff;
    linf = std::max(linf, std::fabs(static_cast<float>(diff)));
  }
  s.l2_dist = static_cast<float>(std::sqrt(l2));
  s.linf_dist = linf;
  s.levenshtein_dist = levenshtein(domain.text, decode(origin).text);
  s.domain = std::move(domain);
  return s;
}

std::vector<AdversarialSample> attack_and_discretize_batch(
    const EmbeddingScorer& scorer, std::span<const EncodedDomain> batch,
    const AttackConfig& attack_cfg, const DiscretizerSpec& spec) {
  Tensor v0 = scorer.embed_batch(batch);
  BatchAttackResult attacked = run_attack(scorer, v0, attack_cfg);
  Discretizer disc(scorer, spec);
  std::vector<Domain> domains = disc.apply_batch(attacked.v);

  std::vector<EncodedDomain> encoded;
  encoded.reserve(domains.size());
  for (const Domain& d : domains) encoded.push_back(encode(d));
  std::vector<float> z = scorer.logits_for(encoded);

  std::vector<AdversarialSample> out;
  out.reserve(domains.size());
  for (std::size_t b = 0; b < domains.size(); ++b) {
    out.push_back(measure_sample(scorer, domains[b], batch[b], z[b]));
  }
  return out;
}

AdversarialSample attack_and_discretize(const EmbeddingScorer& scorer,
                                        const EncodedDomain& e,
                                        const AttackConfig& attack_cfg,
                                        const DiscretizerSpec& spec) {
  std::array<EncodedDomain, 1> one{e};
  return attack_and_discretize_batch(scorer, one, attack_cfg, spec)[0];
}

}  // namespace advdga
