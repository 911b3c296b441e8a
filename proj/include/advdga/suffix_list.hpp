#pragma once

#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "advdga/domain.hpp"

namespace advdga {

// Public-suffix matcher over rules in the usual list format: one rule per
// line, '*.' wildcards (one label), '!' exceptions, '//' comments.
class SuffixList {
 public:
  static SuffixList from_file(const std::string& path);
  static SuffixList from_lines(std::span<const std::string> lines);
  // Ruleless matcher that treats the final label as the suffix.
  static SuffixList naive();

  // When on, inputs matching no rule fall back to a one-label suffix
  // instead of raising UnknownSuffix.
  void set_fallback(bool on) { fallback_ = on; }
  bool fallback() const { return fallback_; }

  // Label count of the public suffix of `labels` (already lowercased).
  // Exceptions beat other rules; otherwise the longest match wins.
  int suffix_labels(const std::vector<std::string>& labels) const;

  std::size_t rule_count() const {
    return exact_.size() + wildcard_.size() + exception_.size();
  }

 private:
  std::unordered_set<std::string> exact_;
  std::unordered_set<std::string> wildcard_;   // rule text after "*."
  std::unordered_set<std::string> exception_;  // rule text after '!'
  bool fallback_ = false;
};

// Lowercases, strips one trailing dot, splits on '.'; empty labels raise
// InvalidDomain.
std::vector<std::string> split_labels(std::string_view fqdn);

// Registrable label immediately left of the matched public suffix.
Domain extract_e2ld(std::string_view fqdn, const SuffixList& suffixes);

}  // namespace advdga
