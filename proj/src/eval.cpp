#include "advdga/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <unordered_set>

#include "advdga/errors.hpp"

namespace advdga {
namespace {

double sigmoid_d(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

AttackReport compute_report(const std::string& attack_id,
                            std::span<const AdversarialSample> outputs) {
  if (outputs.empty()) throw EmptyInput("compute_report: no attack outputs");
  AttackReport r;
  r.attack_id = attack_id;
  r.sample_count = static_cast<std::int64_t>(outputs.size());

  std::unordered_set<std::string> seen;
  std::int64_t fooling = 0, useable = 0;
  double conf = 0.0, l2 = 0.0, linf = 0.0, lev = 0.0;
  for (const AdversarialSample& s : outputs) {
    // Prediction threshold: sigmoid(z) >= 0.5, ties malicious.
    bool fools = s.logit < 0.f;
    bool first = seen.insert(s.domain.text).second;
    if (fools) ++fooling;
    if (fools && first) ++useable;
    conf += sigmoid_d(s.logit);
    l2 += s.l2_dist;
    linf += s.linf_dist;
    lev += s.levenshtein_dist;
  }
  double n = static_cast<double>(outputs.size());
  r.fnr = static_cast<double>(fooling) / n;
  r.unique_fraction = static_cast<double>(seen.size()) / n;
  r.useable_fraction = static_cast<double>(useable) / n;
  r.mean_confidence = conf / n;
  r.mean_l2_dist = l2 / n;
  r.mean_linf_dist = linf / n;
  r.mean_levenshtein = lev / n;
  return r;
}

RocCurve roc_bounded(std::span<const float> scores_benign,
                     std::span<const float> scores_malicious, double bound) {
  if (scores_benign.empty() || scores_malicious.empty()) {
    throw EmptyInput("roc_bounded: both classes must be nonempty");
  }
  // Sweep thresholds from +inf downward; at each distinct score value emit
  // the (fpr, tpr) reached after classifying all samples >= value as
  // malicious.  Ties across classes advance both counts before emitting,
  // which yields the conventional diagonal segment.
  std::vector<std::pair<float, int>> events;  // (score, class)
  events.reserve(scores_benign.size() + scores_malicious.size());
  for (float s : scores_benign) events.emplace_back(s, 0);
  for (float s : scores_malicious) events.emplace_back(s, 1);
  std::sort(events.begin(), events.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });

  RocCurve curve;
  curve.bound = bound;
  curve.points.emplace_back(0.0, 0.0);
  const double nb = static_cast<double>(scores_benign.size());
  const double nm = static_cast<double>(scores_malicious.size());
  std::size_t i = 0;
  std::int64_t fp = 0, tp = 0;
  while (i < events.size()) {
    float value = events[i].first;
    while (i < events.size() && events[i].first == value) {
      if (events[i].second == 1) {
        ++tp;
      } else {
        ++fp;
      }
      ++i;
    }
    curve.points.emplace_back(fp / nb, tp / nm);
  }

  // Area under the curve for fpr in [0, bound], trapezoid over the curve's
  // vertices with linear interpolation at the clipping boundary.
  double area = 0.0;
  for (std::size_t k = 1; k < curve.points.size(); ++k) {
    auto [x0, y0] = curve.points[k - 1];
    auto [x1, y1] = curve.points[k];
    if (x0 >= bound) break;
    double cx1 = x1, cy1 = y1;
    if (x1 > bound) {
      double t = (bound - x0) / (x1 - x0);
      cx1 = bound;
      cy1 = y0 + t * (y1 - y0);
    }
    area += 0.5 * (y0 + cy1) * (cx1 - x0);
    if (x1 >= bound) break;
  }
  curve.bounded_auc_normalized = area / bound;
  return curve;
}

double tpr_at_fpr(const RocCurve& curve, double fpr) {
  double best = 0.0;
  for (std::size_t k = 0; k < curve.points.size(); ++k) {
    auto [x, y] = curve.points[k];
    if (x <= fpr) {
      best = std::max(best, y);
    } else if (k > 0) {
      // Interpolate along the segment entering the bound.
      auto [x0, y0] = curve.points[k - 1];
      if (x0 < fpr && x > x0) {
        double t = (fpr - x0) / (x - x0);
        best = std::max(best, y0 + t * (y - y0));
      }
      break;
    } else {
      break;
    }
  }
  return best;
}

std::string RobustnessMatrix::to_csv() const {
  std::ostringstream out;
  out << "attack";
  for (const std::string& m : model_ids) out << "," << m;
  out << "\n";
  for (std::size_t r = 0; r < attack_ids.size(); ++r) {
    out << attack_ids[r];
    for (std::size_t c = 0; c < model_ids.size(); ++c) {
      const MatrixCell& cell = cells[r][c];
      char buf[64];
      std::snprintf(buf, sizeof(buf), ",%.6f%s", cell.fnr,
                    cell.held_out ? " (held-out)" : "");
      out << buf;
    }
    out << "\n";
  }
  return out.str();
}

RobustnessMatrix robustness_matrix(
    const std::vector<std::pair<std::string, const Model*>>& models,
    const std::vector<std::pair<std::string, AttackRunner>>& attacks,
    const std::set<std::pair<std::string, std::string>>& held_out) {
  if (models.empty() || attacks.empty()) {
    throw EmptyInput("robustness_matrix: need at least one model and attack");
  }
  std::vector<std::pair<std::string, AttackRunner>> rows(attacks.begin(), attacks.end());
  std::sort(rows.begin(), rows.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  RobustnessMatrix matrix;
  for (const auto& [id, _] : rows) matrix.attack_ids.push_back(id);
  for (const auto& [id, _] : models) matrix.model_ids.push_back(id);
  matrix.cells.assign(rows.size(), std::vector<MatrixCell>(models.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < models.size(); ++c) {
      AttackReport report = rows[r].second(*models[c].second);
      matrix.cells[r][c].fnr = report.fnr;
      matrix.cells[r][c].held_out =
          held_out.count({rows[r].first, models[c].first}) > 0;
    }
  }
  return matrix;
}

PerDgaSummary per_dga_eval(const Model& m, std::span<const EncodedDomain> benign,
                           const std::map<std::string, std::vector<EncodedDomain>>& per_dga,
                           double bound) {
  if (benign.empty()) throw EmptyInput("per_dga_eval: benign set empty");
  PerDgaSummary summary;
  std::vector<float> benign_scores = logits_for_domains(m, benign);

  for (const auto& [dga, samples] : per_dga) {
    if (samples.empty()) {
      std::fprintf(stderr, "warning: skipping empty DGA set '%s'\n", dga.c_str());
      continue;
    }
    std::vector<float> mal_scores = logits_for_domains(m, samples);
    PerDgaResult result;
    result.dga = dga;
    result.curve = roc_bounded(benign_scores, mal_scores, bound);
    result.tpr_at_fpr_0001 = tpr_at_fpr(result.curve, 0.001);
    result.tpr_at_fpr_001 = tpr_at_fpr(result.curve, 0.01);
    summary.runs.push_back(std::move(result));
  }

  const int grid_points = 101;
  for (int i = 0; i < grid_points; ++i) {
    summary.fpr_grid.push_back(bound * i / (grid_points - 1));
  }
  for (double f : summary.fpr_grid) {
    double mean = 0.0, lo = 1.0, hi = 0.0;
    for (const PerDgaResult& r : summary.runs) {
      double t = tpr_at_fpr(r.curve, f);
      mean += t;
      lo = std::min(lo, t);
      hi = std::max(hi, t);
    }
    std::size_t n = summary.runs.size();
    summary.mean_tpr.push_back(n ? mean / static_cast<double>(n) : 0.0);
    summary.min_tpr.push_back(n ? lo : 0.0);
    summary.max_tpr.push_back(n ? hi : 0.0);
  }
  return summary;
}

void assert_from_test_split(std::span<const EncodedDomain> attack_inputs,
                            const std::set<std::string>& test_split_texts) {
  for (const EncodedDomain& e : attack_inputs) {
    std::string text = decode(e).text;
    if (!test_split_texts.count(text)) {
      throw HygieneViolation("attack input not in test split: " + text);
    }
  }
}

}  // namespace advdga
