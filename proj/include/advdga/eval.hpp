#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "advdga/discretize.hpp"
#include "advdga/model.hpp"
#include "advdga/train.hpp"

namespace advdga {

struct AttackReport {
  std::string attack_id;
  double fnr = 0.0;              // malicious-origin inputs scored benign
  double unique_fraction = 0.0;  // distinct outputs / outputs
  double useable_fraction = 0.0; // fools the classifier AND first occurrence
  double mean_confidence = 0.0;  // mean sigmoid(logit)
  double mean_l2_dist = 0.0;
  double mean_linf_dist = 0.0;
  double mean_levenshtein = 0.0;
  std::int64_t sample_count = 0;
};

AttackReport compute_report(const std::string& attack_id,
                            std::span<const AdversarialSample> outputs);

struct RocCurve {
  std::vector<std::pair<double, double>> points;  // (fpr, tpr), fpr ascending
  double bounded_auc_normalized = 0.0;
  double bound = 0.01;
};

// Threshold-sweep ROC with the area under fpr <= bound, normalized by the
// bound.  Scores may be logits or probabilities (any monotone transform
// yields the same curve); higher score = more malicious.
RocCurve roc_bounded(std::span<const float> scores_benign,
                     std::span<const float> scores_malicious, double bound = 0.01);

// Highest TPR achievable at FPR <= fpr (linear interpolation on diagonal
// tie segments).
double tpr_at_fpr(const RocCurve& curve, double fpr);

struct MatrixCell {
  double fnr = 0.0;
  bool held_out = false;
};

struct RobustnessMatrix {
  std::vector<std::string> attack_ids;  // rows, sorted
  std::vector<std::string> model_ids;   // columns, input order
  std::vector<std::vector<MatrixCell>> cells;

  std::string to_csv() const;
};

using AttackRunner = std::function<AttackReport(const Model&)>;

// Runs every attack against every model; cells named in `held_out` are
// executed but flagged (LOGO reporting).
RobustnessMatrix robustness_matrix(
    const std::vector<std::pair<std::string, const Model*>>& models,
    const std::vector<std::pair<std::string, AttackRunner>>& attacks,
    const std::set<std::pair<std::string, std::string>>& held_out = {});

struct PerDgaResult {
  std::string dga;
  RocCurve curve;
  double tpr_at_fpr_0001 = 0.0;
  double tpr_at_fpr_001 = 0.0;
};

struct PerDgaSummary {
  std::vector<PerDgaResult> runs;
  std::vector<double> fpr_grid;
  std::vector<double> mean_tpr, min_tpr, max_tpr;
};

// One evaluation run per DGA family against the full benign set; families
// with no samples are skipped with a warning on stderr.
PerDgaSummary per_dga_eval(const Model& m, std::span<const EncodedDomain> benign,
                           const std::map<std::string, std::vector<EncodedDomain>>& per_dga,
                           double bound = 0.01);

// Asserts every attack input is a member of the test split (by decoded
// text); throws HygieneViolation otherwise.
void assert_from_test_split(std::span<const EncodedDomain> attack_inputs,
                            const std::set<std::string>& test_split_texts);

}  // namespace advdga
