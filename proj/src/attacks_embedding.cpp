#include "advdga/attacks_embedding.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "advdga/errors.hpp"
#include "advdga/rng.hpp"

namespace advdga {
namespace {

double stable_sigmoid_d(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

// Both surrogate losses are strictly decreasing in the logit, so "higher
// loss" and "lower logit" order iterates identically; best-so-far tracking
// works on logits directly.
enum class SurrogateLoss { Bce, Margin };

// dL/dz for label 1: bce -> -sigmoid(-z), margin(-z) -> -1.
double loss_slope(SurrogateLoss loss, double z) {
  if (loss == SurrogateLoss::Margin) return -1.0;
  return -stable_sigmoid_d(-z);
}

std::size_t sample_size(const Tensor& v) {
  return static_cast<std::size_t>(v.dim(1)) * static_cast<std::size_t>(v.dim(2));
}

void project_linf(float* v, const float* v0, std::size_t n, float eps) {
  for (std::size_t i = 0; i < n; ++i) {
    float d = v[i] - v0[i];
    v[i] = v0[i] + std::clamp(d, -eps, eps);
  }
}

void project_l2(float* v, const float* v0, std::size_t n, float eps) {
  // Rescaling in float can land a hair outside the ball; re-check and pull
  // the target radius in by an ulp-scale notch until containment holds.
  double target = eps;
  for (int pass = 0; pass < 8; ++pass) {
    double norm2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double d = static_cast<double>(v[i]) - v0[i];
      norm2 += d * d;
    }
    double norm = std::sqrt(norm2);
    if (norm <= eps || norm == 0.0) return;
    float scale = static_cast<float>(target / norm);
    for (std::size_t i = 0; i < n; ++i) v[i] = v0[i] + (v[i] - v0[i]) * scale;
    target *= 1.0 - 6e-8;
  }
}

void project(bool l2, float* v, const float* v0, std::size_t n, float eps) {
  if (l2) {
    project_l2(v, v0, n, eps);
  } else {
    project_linf(v, v0, n, eps);
  }
}

// v = start + eta * step_direction(scale * g), then projected.  L-inf uses
// the sign of the gradient, L2 its unit vector.
void ascend(bool l2, float* v, const float* start, const float* g, double scale,
            float eta, std::size_t n) {
  if (l2) {
    double norm2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double x = scale * g[i];
      norm2 += x * x;
    }
    double norm = std::sqrt(norm2);
    if (norm == 0.0) {
      std::copy_n(start, n, v);
      return;
    }
    float k = static_cast<float>(eta * scale / norm);
    for (std::size_t i = 0; i < n; ++i) v[i] = start[i] + k * g[i];
  } else {
    float s = scale < 0 ? -eta : eta;
    for (std::size_t i = 0; i < n; ++i) {
      float gi = g[i];
      v[i] = start[i] + (gi > 0.f ? s : gi < 0.f ? -s : 0.f);
    }
  }
}

void sample_in_ball(bool l2, float* delta, std::size_t n, float eps, Rng& rng) {
  if (l2) {
    double norm2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      delta[i] = static_cast<float>(rng.normal());
      norm2 += static_cast<double>(delta[i]) * delta[i];
    }
    double norm = std::sqrt(norm2);
    if (norm == 0.0) return;
    double radius =
        eps * std::pow(rng.uniform(), 1.0 / static_cast<double>(n)) / norm;
    for (std::size_t i = 0; i < n; ++i) delta[i] = static_cast<float>(delta[i] * radius);
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      delta[i] = static_cast<float>(rng.uniform(-eps, eps));
    }
  }
}

void check_input(const EmbeddingScorer& scorer, const Tensor& v0) {
  if (v0.rank() != 3 || v0.dim(1) != scorer.seq_len() || v0.dim(2) != scorer.embed_dim()) {
    throw ShapeMismatch("attack input must be [B, seq_len, embed_dim]");
  }
}

struct Best {
  Tensor v;
  std::vector<float> logits;

  Best(const Tensor& v0, const std::vector<float>& z0) : v(v0), logits(z0) {}

  // Keeps the lowest-logit iterate per sample.
  void offer(const Tensor& cand, const std::vector<float>& z, std::size_t block) {
    for (std::size_t b = 0; b < z.size(); ++b) {
      if (z[b] < logits[b]) {
        logits[b] = z[b];
        std::copy_n(cand.v.data() + b * block, block, v.v.data() + b * block);
      }
    }
  }
};

}  // namespace

const char* attack_kind_name(AttackKind kind) {
  switch (kind) {
    case AttackKind::PgdL2: return "pgd_l2";
    case AttackKind::PgdLinf: return "pgd_linf";
    case AttackKind::CwL2: return "cw_l2";
    case AttackKind::BatL2: return "bat_l2";
    case AttackKind::BatLinf: return "bat_linf";
  }
  return "?";
}

AttackKind parse_attack_kind(const std::string& name) {
  for (AttackKind k : {AttackKind::PgdL2, AttackKind::PgdLinf, AttackKind::CwL2,
                       AttackKind::BatL2, AttackKind::BatLinf}) {
    if (name == attack_kind_name(k)) return k;
  }
  throw InvalidConfig("unknown attack kind: " + name);
}

BatchAttackResult pgd(const EmbeddingScorer& scorer, const Tensor& v0,
                      const AttackConfig& cfg) {
  if (cfg.kind != AttackKind::PgdL2 && cfg.kind != AttackKind::PgdLinf) {
    throw InvalidConfig("pgd requires a PGD config");
  }
  if (cfg.epsilon <= 0.f || cfg.iterations < 1) {
    throw InvalidConfig("pgd: epsilon > 0 and iterations >= 1 required");
  }
  check_input(scorer, v0);
  const bool l2 = cfg.kind == AttackKind::PgdL2;
  const std::size_t block = sample_size(v0);
  const std::size_t B = static_cast<std::size_t>(v0.dim(0));
  const float alpha = 2.5f * cfg.epsilon / static_cast<float>(cfg.iterations);

  Best best(v0, scorer.logits(v0));
  Rng rng(cfg.seed);

  for (int restart = 0; restart < std::max(1, cfg.restarts); ++restart) {
    Rng rr = rng.fork(static_cast<std::uint64_t>(restart));
    Tensor v = v0;
    std::vector<float> delta(block);
    for (std::size_t b = 0; b < B; ++b) {
      sample_in_ball(l2, delta.data(), block, cfg.epsilon, rr);
      float* vb = v.v.data() + b * block;
      for (std::size_t i = 0; i < block; ++i) vb[i] += delta[i];
      project(l2, vb, v0.v.data() + b * block, block, cfg.epsilon);
    }

    Tensor grads(v0.shape);
    for (int it = 0; it < cfg.iterations; ++it) {
      std::vector<float> z = scorer.logits_and_grad(v, grads);
      best.offer(v, z, block);
      for (std::size_t b = 0; b < B; ++b) {
        float* vb = v.v.data() + b * block;
        const float* v0b = v0.v.data() + b * block;
        double slope = loss_slope(SurrogateLoss::Bce, z[b]);
        ascend(l2, vb, vb, grads.v.data() + b * block, slope, alpha, block);
        project(l2, vb, v0b, block, cfg.epsilon);
      }
    }
    best.offer(v, scorer.logits(v), block);
  }

  BatchAttackResult result{std::move(best.v), std::move(best.logits), {}};
  result.success.resize(B);
  for (std::size_t b = 0; b < B; ++b) result.success[b] = result.logits[b] < 0.f;
  return result;
}

BatchAttackResult cw_l2(const EmbeddingScorer& scorer, const Tensor& v0,
                        const AttackConfig& cfg) {
  if (cfg.kind != AttackKind::CwL2) throw InvalidConfig("cw_l2 requires a CW config");
  if (cfg.kappa < 0.f || cfg.iterations < 1) {
    throw InvalidConfig("cw_l2: kappa >= 0 and iterations >= 1 required");
  }
  check_input(scorer, v0);
  const std::size_t block = sample_size(v0);
  const std::size_t B = static_cast<std::size_t>(v0.dim(0));
  std::vector<float> kap(B, cfg.kappa);
  if (!cfg.kappa_per_sample.empty()) {
    if (cfg.kappa_per_sample.size() != B) {
      throw InvalidConfig("cw_l2: kappa_per_sample size must match the batch");
    }
    kap = cfg.kappa_per_sample;
    for (float k : kap) {
      if (k < 0.f) throw InvalidConfig("cw_l2: kappa >= 0 required");
    }
  }

  std::vector<float> z0 = scorer.logits(v0);

  // Per-sample best: smallest ||delta||_2 among iterates with z <= -kappa.
  Tensor best_v = v0;
  std::vector<float> best_logit = z0;
  std::vector<double> best_norm(B, std::numeric_limits<double>::infinity());
  std::vector<bool> succeeded(B, false);
  for (std::size_t b = 0; b < B; ++b) {
    if (z0[b] <= -kap[b]) {
      best_norm[b] = 0.0;
      succeeded[b] = true;
    }
  }

  // Binary search over the hinge weight c (log scale), first probe c = 1.
  std::vector<double> lo(B, 1e-3), hi(B, 1e2), c(B, 1.0);
  Tensor v(v0.shape), grads(v0.shape);
  Tensor final_v = v0;
  std::vector<float> final_z = z0;

  for (int search = 0; search < std::max(1, cfg.cw_binary_steps); ++search) {
    // Fresh delta = 0 per c-value, standard Adam on the relaxation.
    v = v0;
    std::vector<float> adam_m(B * block, 0.f), adam_s(B * block, 0.f);
    std::vector<bool> round_success(B, false);
    for (int it = 1; it <= cfg.iterations; ++it) {
      std::vector<float> z = scorer.logits_and_grad(v, grads);
      // Track the running best before stepping so the evaluated iterate and
      // the tracked iterate always coincide.
      for (std::size_t b = 0; b < B; ++b) {
        if (z[b] <= -kap[b]) {
          round_success[b] = true;
          double norm2 = 0.0;
          const float* vb = v.v.data() + b * block;
          const float* v0b = v0.v.data() + b * block;
          for (std::size_t i = 0; i < block; ++i) {
            double d = static_cast<double>(vb[i]) - v0b[i];
            norm2 += d * d;
          }
          double norm = std::sqrt(norm2);
          if (norm < best_norm[b]) {
            best_norm[b] = norm;
            best_logit[b] = z[b];
            succeeded[b] = true;
            std::copy_n(vb, block, best_v.v.data() + b * block);
          }
        }
      }
      const float bc1 = 1.f - std::pow(0.9f, static_cast<float>(it));
      const float bc2 = 1.f - std::pow(0.999f, static_cast<float>(it));
      for (std::size_t b = 0; b < B; ++b) {
        float* vb = v.v.data() + b * block;
        const float* v0b = v0.v.data() + b * block;
        const float* gb = grads.v.data() + b * block;
        const bool hinge_active = z[b] + kap[b] > 0.f;
        const float cb = static_cast<float>(c[b]);
        float* mb = adam_m.data() + b * block;
        float* sb = adam_s.data() + b * block;
        for (std::size_t i = 0; i < block; ++i) {
          float g = 2.f * (vb[i] - v0b[i]) + (hinge_active ? cb * gb[i] : 0.f);
          mb[i] = 0.9f * mb[i] + 0.1f * g;
          sb[i] = 0.999f * sb[i] + 0.001f * g * g;
          vb[i] -= cfg.cw_lr * (mb[i] / bc1) / (std::sqrt(sb[i] / bc2) + 1e-8f);
        }
      }
    }
    final_z = scorer.logits(v);
    for (std::size_t b = 0; b < B; ++b) {
      if (final_z[b] <= -kap[b]) {
        round_success[b] = true;
        double norm2 = 0.0;
        const float* vb = v.v.data() + b * block;
        const float* v0b = v0.v.data() + b * block;
        for (std::size_t i = 0; i < block; ++i) {
          double d = static_cast<double>(vb[i]) - v0b[i];
          norm2 += d * d;
        }
        double norm = std::sqrt(norm2);
        if (norm < best_norm[b]) {
          best_norm[b] = norm;
          best_logit[b] = final_z[b];
          succeeded[b] = true;
          std::copy_n(vb, block, best_v.v.data() + b * block);
        }
      }
      if (round_success[b]) {
        hi[b] = c[b];
      } else {
        lo[b] = c[b];
      }
      c[b] = std::sqrt(lo[b] * hi[b]);
    }
    final_v = v;
  }

  BatchAttackResult result{std::move(best_v), std::move(best_logit), std::move(succeeded)};
  // Unsuccessful samples fall back to the final iterate, unless it scores
  // higher than the clean input (attacks never make things worse).
  for (std::size_t b = 0; b < B; ++b) {
    if (!result.success[b] && final_z[b] < z0[b]) {
      std::copy_n(final_v.v.data() + b * block, block, result.v.v.data() + b * block);
      result.logits[b] = final_z[b];
    }
  }
  return result;
}

BatchAttackResult bat(const EmbeddingScorer& scorer, const Tensor& v0,
                      const AttackConfig& cfg) {
  if (cfg.kind != AttackKind::BatL2 && cfg.kind != AttackKind::BatLinf) {
    throw InvalidConfig("bat requires a BAT config");
  }
  if (cfg.epsilon <= 0.f || cfg.iterations < 1) {
    throw InvalidConfig("bat: epsilon > 0 and iterations >= 1 required");
  }
  check_input(scorer, v0);
  const bool l2 = cfg.kind == AttackKind::BatL2;
  const std::size_t block = sample_size(v0);
  const std::size_t B = static_cast<std::size_t>(v0.dim(0));
  const int T = cfg.iterations;
  const float mom = 0.75f;

  // Auto-step-size checkpoints (fractions 0.22, then shrinking gaps with a
  // floor of 0.06).
  std::vector<int> checkpoints{0};
  {
    double p_prev = 0.0, p_cur = 0.22;
    while (true) {
      int w = static_cast<int>(std::ceil(p_cur * T));
      if (w >= T) break;
      if (w > checkpoints.back()) checkpoints.push_back(w);
      double p_next = p_cur + std::max(p_cur - p_prev - 0.03, 0.06);
      p_prev = p_cur;
      p_cur = p_next;
    }
  }

  Best best(v0, scorer.logits(v0));

  for (SurrogateLoss loss : {SurrogateLoss::Bce, SurrogateLoss::Margin}) {
    Tensor v = v0, v_prev = v0, grads(v0.shape);
    std::vector<float> eta(B, 2.f * cfg.epsilon);
    std::vector<float> run_best_z = best.logits;  // loss-run best (on logits)
    Tensor run_best_v = best.v;
    std::vector<int> improved(B, 0);
    std::vector<float> z_prev(B, 0.f);
    std::vector<float> ckpt_eta(B), ckpt_best(B);
    std::size_t next_ckpt = 1;
    for (std::size_t b = 0; b < B; ++b) {
      ckpt_eta[b] = eta[b];
      ckpt_best[b] = run_best_z[b];
    }

    for (int it = 0; it < T; ++it) {
      std::vector<float> z = scorer.logits_and_grad(v, grads);
      for (std::size_t b = 0; b < B; ++b) {
        if (z[b] < run_best_z[b]) {
          run_best_z[b] = z[b];
          std::copy_n(v.v.data() + b * block, block, run_best_v.v.data() + b * block);
        }
        if (it > 0 && z[b] < z_prev[b]) ++improved[b];
        z_prev[b] = z[b];
      }

      if (next_ckpt < checkpoints.size() && it == checkpoints[next_ckpt]) {
        int span = checkpoints[next_ckpt] - checkpoints[next_ckpt - 1];
        for (std::size_t b = 0; b < B; ++b) {
          bool too_few = improved[b] < static_cast<int>(0.75 * span);
          bool stalled = eta[b] == ckpt_eta[b] && run_best_z[b] == ckpt_best[b];
          if (too_few || stalled) {
            eta[b] *= 0.5f;
            // Restart the trajectory from the best-known point.
            std::copy_n(run_best_v.v.data() + b * block, block, v.v.data() + b * block);
            std::copy_n(run_best_v.v.data() + b * block, block,
                        v_prev.v.data() + b * block);
          }
          ckpt_eta[b] = eta[b];
          ckpt_best[b] = run_best_z[b];
          improved[b] = 0;
        }
        ++next_ckpt;
        z = scorer.logits(v);  // v may have moved; refresh for bookkeeping
        for (std::size_t b = 0; b < B; ++b) z_prev[b] = z[b];
        scorer.logits_and_grad(v, grads);
      }

      std::vector<float> step_target(block);
      for (std::size_t b = 0; b < B; ++b) {
        float* vb = v.v.data() + b * block;
        float* vpb = v_prev.v.data() + b * block;
        const float* v0b = v0.v.data() + b * block;
        double slope = loss_slope(loss, z[b]);
        // z_step = P(v + eta * dir); v_next = P(v + mom*(z_step - v) + (1-mom)*(v - v_prev)).
        ascend(l2, step_target.data(), vb, grads.v.data() + b * block, slope,
               eta[b], block);
        project(l2, step_target.data(), v0b, block, cfg.epsilon);
        for (std::size_t i = 0; i < block; ++i) {
          float next = vb[i] + mom * (step_target[i] - vb[i]) + (1.f - mom) * (vb[i] - vpb[i]);
          vpb[i] = vb[i];
          vb[i] = next;
        }
        project(l2, vb, v0b, block, cfg.epsilon);
      }
    }
    best.offer(v, scorer.logits(v), block);
    best.offer(run_best_v, run_best_z, block);
  }

  BatchAttackResult result{std::move(best.v), std::move(best.logits), {}};
  result.success.resize(B);
  for (std::size_t b = 0; b < B; ++b) result.success[b] = result.logits[b] < 0.f;
  return result;
}

BatchAttackResult run_attack(const EmbeddingScorer& scorer, const Tensor& v0,
                             const AttackConfig& cfg) {
  switch (cfg.kind) {
    case AttackKind::PgdL2:
    case AttackKind::PgdLinf:
      return pgd(scorer, v0, cfg);
    case AttackKind::CwL2:
      return cw_l2(scorer, v0, cfg);
    case AttackKind::BatL2:
    case AttackKind::BatLinf:
      return bat(scorer, v0, cfg);
  }
  throw InvalidConfig("unreachable attack kind");
}

EmbeddedDomain run_attack(const EmbeddingScorer& scorer, const EmbeddedDomain& v0,
                          const AttackConfig& cfg) {
  Tensor batch({1, scorer.seq_len(), scorer.embed_dim()});
  batch.v = v0.matrix.v;
  BatchAttackResult result = run_attack(scorer, batch, cfg);
  EmbeddedDomain out;
  out.origin = v0.origin;
  out.matrix = Tensor({scorer.seq_len(), scorer.embed_dim()});
  out.matrix.v = std::move(result.v.v);
  return out;
}

std::vector<AttackConfig> hyperparameter_grid(AttackKind kind) {
  static const float eps_inf[] = {0.01f, 0.02f, 0.03f, 0.05f, 0.08f,
                                  0.15f, 0.25f, 0.5f,  0.7f,  1.f};
  static const float eps_l2[] = {0.5f, 0.9f, 1.6f, 2.8f, 5.f,
                                 9.f,  16.f, 32.f, 50.f, std::sqrt(8064.f)};
  static const float kappas[] = {0.f,   0.03f, 0.08f, 0.2f, 0.6f,
                                 1.7f,  4.6f,  13.f,  36.f, 100.f};
  std::vector<AttackConfig> grid;
  for (int i = 0; i < 10; ++i) {
    AttackConfig cfg;
    cfg.kind = kind;
    cfg.iterations = 50;
    switch (kind) {
      case AttackKind::PgdLinf:
      case AttackKind::BatLinf:
        cfg.epsilon = eps_inf[i];
        break;
      case AttackKind::PgdL2:
      case AttackKind::BatL2:
        cfg.epsilon = eps_l2[i];
        break;
      case AttackKind::CwL2:
        cfg.epsilon = 0.f;
        cfg.kappa = kappas[i];
        break;
    }
    grid.push_back(cfg);
  }
  return grid;
}

}  // namespace advdga
