#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "advdga/domain.hpp"
#include "advdga/suffix_list.hpp"
#include "advdga/train.hpp"

namespace advdga {

struct LabeledRecord {
  Domain domain;
  int label = 0;           // 0 benign, 1 malicious
  std::string family;      // DGA name; empty for benign
  std::string first_seen;  // ISO-8601 date or empty
};

struct DatasetConfig {
  int cap_per_family = 2350;
  std::string cutoff_date;  // ISO-8601; empty disables the temporal filter
  bool balance = true;      // subsample the larger class to the smaller
  std::uint64_t seed = 0;
};

struct BuiltDataset {
  std::vector<LabeledRecord> records;
  // Families whose earliest first_seen postdates the cutoff: kept apart as
  // the unknown-DGA holdout.
  std::vector<LabeledRecord> unknown_holdout;
  int benign_count = 0;
  int malicious_count = 0;
  int duplicates_dropped = 0;
  int over_cutoff_dropped = 0;
  int balance_dropped = 0;
  std::vector<std::string> malformed;  // offending input lines, with reasons
};

// Benign feed: one domain per line ('#' comments allowed); lines with dots
// go through e2LD extraction, bare labels are taken as e2LDs directly.
// Malicious feed: CSV rows family,domain[,first_seen].
BuiltDataset build_dataset(const std::string& benign_file,
                           const std::string& malicious_csv,
                           const SuffixList& suffixes,
                           const DatasetConfig& cfg);
BuiltDataset build_dataset_from_lines(std::span<const std::string> benign_lines,
                                      std::span<const std::string> csv_lines,
                                      const SuffixList& suffixes,
                                      const DatasetConfig& cfg);

struct FoldSpec {
  int k = 5;
  double train = 0.75;
  double val = 0.05;
  double test = 0.20;
  std::uint64_t seed = 0;
};

struct Fold {
  std::vector<LabeledRecord> train, val, test;
};

// Stratified k-fold split by (label, family): the k test chunks partition
// each stratum; validation rotates with the fold. Strata smaller than k go
// entirely to train with a warning.
std::vector<Fold> stratified_folds(const std::vector<LabeledRecord>& records,
                                   const FoldSpec& spec);

LabeledDataset to_labeled(const std::vector<LabeledRecord>& records);

}  // namespace advdga
