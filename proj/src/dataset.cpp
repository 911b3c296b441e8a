#include "advdga/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <unordered_map>
#include <unordered_set>
#include <utility>

#include "advdga/errors.hpp"
#include "advdga/rng.hpp"

namespace advdga {
namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileNotFound("'" + path + "' not readable");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

bool iso_date_like(const std::string& s) {
  if (s.size() < 10) return false;
  for (int i = 0; i < 10; ++i) {
    if (i == 4 || i == 7) {
      if (s[static_cast<std::size_t>(i)] != '-') return false;
    } else if (!std::isdigit(static_cast<unsigned char>(s[static_cast<std::size_t>(i)]))) {
      return false;
    }
  }
  return true;
}

// Extracts the e2LD for dotted names; bare labels are e2LDs already.
Domain ingest_domain(const std::string& text, const SuffixList& suffixes) {
  if (text.find('.') != std::string::npos) return extract_e2ld(text, suffixes);
  std::string folded = text;
  std::transform(folded.begin(), folded.end(), folded.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return Domain::from_text(folded);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t pos = 0;
  while (true) {
    std::size_t comma = line.find(',', pos);
    fields.push_back(trim(line.substr(pos, comma == std::string::npos ? comma : comma - pos)));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return fields;
}

// Seeded uniform subsample to at most `cap`, preserving input order.
void cap_records(std::vector<LabeledRecord>& recs, int cap, Rng& rng) {
  if (static_cast<int>(recs.size()) <= cap) return;
  std::vector<std::size_t> keep =
      rng.sample_without_replacement(recs.size(), static_cast<std::size_t>(cap));
  std::sort(keep.begin(), keep.end());
  std::vector<LabeledRecord> out;
  out.reserve(keep.size());
  for (std::size_t i : keep) out.push_back(std::move(recs[i]));
  recs = std::move(out);
}

}  // namespace

BuiltDataset build_dataset(const std::string& benign_file,
                           const std::string& malicious_csv,
                           const SuffixList& suffixes, const DatasetConfig& cfg) {
  std::vector<std::string> benign = read_lines(benign_file);
  std::vector<std::string> malicious = read_lines(malicious_csv);
  return build_dataset_from_lines(benign, malicious, suffixes, cfg);
}

BuiltDataset build_dataset_from_lines(std::span<const std::string> benign_lines,
                                      std::span<const std::string> csv_lines,
                                      const SuffixList& suffixes,
                                      const DatasetConfig& cfg) {
  if (cfg.cap_per_family < 1) throw InvalidConfig("cap_per_family must be >= 1");
  if (!cfg.cutoff_date.empty() && !iso_date_like(cfg.cutoff_date)) {
    throw InvalidConfig("cutoff_date must be ISO-8601 (YYYY-MM-DD)");
  }

  BuiltDataset out;
  std::vector<LabeledRecord> parsed;
  std::unordered_set<std::string> seen;

  auto add = [&](LabeledRecord rec) {
    // Duplicate e2LDs keep their first occurrence, whatever its label.
    if (!seen.insert(rec.domain.text).second) {
      ++out.duplicates_dropped;
      return;
    }
    parsed.push_back(std::move(rec));
  };

  for (const std::string& raw : benign_lines) {
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    try {
      add({ingest_domain(line, suffixes), 0, "", ""});
    } catch (const std::exception& e) {
      out.malformed.push_back(line + ": " + e.what());
    }
  }

  for (const std::string& raw : csv_lines) {
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields = split_csv(line);
    if (fields.size() < 2 || fields.size() > 3 || fields[0].empty() || fields[1].empty()) {
      out.malformed.push_back(line + ": expected family,domain[,first_seen]");
      continue;
    }
    std::string first_seen = fields.size() == 3 ? fields[2] : "";
    if (!first_seen.empty() && !iso_date_like(first_seen)) {
      out.malformed.push_back(line + ": first_seen is not ISO-8601");
      continue;
    }
    try {
      add({ingest_domain(fields[1], suffixes), 1, fields[0], first_seen});
    } catch (const std::exception& e) {
      out.malformed.push_back(line + ": " + e.what());
    }
  }

  // A family is "unknown" when every dated record postdates the cutoff and
  // it has no undated ones; such families form the separate holdout.
  std::unordered_map<std::string, bool> family_known;
  if (!cfg.cutoff_date.empty()) {
    for (const LabeledRecord& r : parsed) {
      if (r.label != 1) continue;
      bool pre = r.first_seen.empty() || r.first_seen <= cfg.cutoff_date;
      auto [it, inserted] = family_known.emplace(r.family, pre);
      if (!inserted) it->second = it->second || pre;
    }
  }

  // Group per family (first-appearance order) for capping.
  std::vector<LabeledRecord> benign_recs;
  std::vector<std::string> family_order;
  std::unordered_map<std::string, std::vector<LabeledRecord>> by_family;
  std::unordered_map<std::string, std::vector<LabeledRecord>> holdout_by_family;

  for (LabeledRecord& r : parsed) {
    if (r.label == 0) {
      benign_recs.push_back(std::move(r));
      continue;
    }
    const bool unknown_family =
        !cfg.cutoff_date.empty() && !family_known[r.family];
    auto& target = unknown_family ? holdout_by_family : by_family;
    if (std::find(family_order.begin(), family_order.end(), r.family) ==
        family_order.end()) {
      family_order.push_back(r.family);
    }
    if (!unknown_family && !cfg.cutoff_date.empty() && !r.first_seen.empty() &&
        r.first_seen > cfg.cutoff_date) {
      ++out.over_cutoff_dropped;
      continue;
    }
    target[r.family].push_back(std::move(r));
  }

  Rng rng(cfg.seed);
  for (const std::string& fam : family_order) {
    if (auto it = by_family.find(fam); it != by_family.end()) {
      cap_records(it->second, cfg.cap_per_family, rng);
      for (LabeledRecord& r : it->second) out.records.push_back(std::move(r));
    }
    if (auto it = holdout_by_family.find(fam); it != holdout_by_family.end()) {
      cap_records(it->second, cfg.cap_per_family, rng);
      for (LabeledRecord& r : it->second) out.unknown_holdout.push_back(std::move(r));
    }
  }

  int malicious_total = static_cast<int>(out.records.size());
  int benign_total = static_cast<int>(benign_recs.size());
  if (cfg.balance) {
    if (benign_total > malicious_total && malicious_total > 0) {
      out.balance_dropped = benign_total - malicious_total;
      cap_records(benign_recs, malicious_total, rng);
    } else if (malicious_total > benign_total && benign_total > 0) {
      out.balance_dropped = malicious_total - benign_total;
      std::vector<LabeledRecord> mal = std::move(out.records);
      cap_records(mal, benign_total, rng);
      out.records = std::move(mal);
    }
  }

  out.malicious_count = static_cast<int>(out.records.size());
  out.benign_count = static_cast<int>(benign_recs.size());
  out.records.insert(out.records.end(),
                     std::make_move_iterator(benign_recs.begin()),
                     std::make_move_iterator(benign_recs.end()));
  return out;
}

std::vector<Fold> stratified_folds(const std::vector<LabeledRecord>& records,
                                   const FoldSpec& spec) {
  if (records.empty()) throw EmptyDataset("cannot fold an empty dataset");
  if (spec.k < 2) throw InvalidConfig("k must be >= 2");
  if (std::fabs(spec.train + spec.val + spec.test - 1.0) > 1e-9) {
    throw InvalidConfig("fold fractions must sum to 1");
  }
  if (std::fabs(spec.test * spec.k - 1.0) > 1e-6) {
    throw InvalidConfig("test fraction must equal 1/k");
  }

  // Strata keyed by (label, family), in first-appearance order.
  std::vector<std::vector<std::size_t>> strata;
  std::map<std::pair<int, std::string>, std::size_t> stratum_of;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto key = std::make_pair(records[i].label, records[i].family);
    auto [it, inserted] = stratum_of.emplace(key, strata.size());
    if (inserted) strata.emplace_back();
    strata[it->second].push_back(i);
  }

  Rng rng(spec.seed);
  std::vector<Fold> folds(static_cast<std::size_t>(spec.k));
  for (std::vector<std::size_t>& idx : strata) {
    rng.shuffle(idx);
    const std::size_t m = idx.size();
    if (m < static_cast<std::size_t>(spec.k)) {
      std::fprintf(stderr,
                   "stratified_folds: stratum of %zu records is smaller than "
                   "k=%d, keeping it in train only\n",
                   m, spec.k);
      for (Fold& f : folds) {
        for (std::size_t i : idx) f.train.push_back(records[i]);
      }
      continue;
    }
    const auto val_n = static_cast<std::size_t>(std::lround(
        static_cast<double>(m) * spec.val));
    for (int f = 0; f < spec.k; ++f) {
      const std::size_t begin = m * static_cast<std::size_t>(f) / static_cast<std::size_t>(spec.k);
      const std::size_t end = m * static_cast<std::size_t>(f + 1) / static_cast<std::size_t>(spec.k);
      Fold& fold = folds[static_cast<std::size_t>(f)];
      for (std::size_t i = begin; i < end; ++i) fold.test.push_back(records[idx[i]]);
      // Remaining records in circular order after the test chunk; the first
      // val_n become validation, so validation rotates with the fold.
      std::size_t rest = m - (end - begin);
      for (std::size_t j = 0; j < rest; ++j) {
        std::size_t i = (end + j) % m;
        auto& dst = j < val_n ? fold.val : fold.train;
        dst.push_back(records[idx[i]]);
      }
    }
  }
  return folds;
}

LabeledDataset to_labeled(const std::vector<LabeledRecord>& records) {
  LabeledDataset ds;
  for (const LabeledRecord& r : records) {
    ds.push(encode(r.domain), r.label == 1 ? 1.f : 0.f);
  }
  return ds;
}

}  // namespace advdga
