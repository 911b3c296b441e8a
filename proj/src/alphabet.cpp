#include "advdga/alphabet.hpp"

#include <algorithm>

namespace advdga {

Alphabet::Alphabet() {
  for (char c = 'a'; c <= 'z'; ++c) chars_.push_back(c);
  for (char c = '0'; c <= '9'; ++c) chars_.push_back(c);
  chars_.push_back('-');
  chars_.push_back('_');
  chars_.push_back('~');
  pad_index_ = static_cast<int>(chars_.size()) - 1;

  lookup_.fill(-1);
  for (int i = 0; i < static_cast<int>(chars_.size()); ++i) {
    lookup_[static_cast<unsigned char>(chars_[i])] = i;
  }

  is_e2ld_.assign(chars_.size(), false);
  for (int i = 0; i < static_cast<int>(chars_.size()); ++i) {
    char c = chars_[i];
    bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-';
    is_e2ld_[i] = ok;
    if (ok) e2ld_subset_.push_back(i);
    if (ok && c != '-') letters_digits_.push_back(i);
  }
}

const Alphabet& Alphabet::standard() {
  static const Alphabet instance;
  return instance;
}

bool ValidityVerdict::has(Violation v) const {
  return std::find(violations.begin(), violations.end(), v) != violations.end();
}

ValidityVerdict validate_e2ld(std::string_view text) {
  ValidityVerdict verdict;
  if (text.empty()) {
    verdict.violations.push_back(Violation::Empty);
    return verdict;
  }
  if (text.size() > kMaxDomainLength) {
    verdict.violations.push_back(Violation::TooLong);
  }
  const Alphabet& a = Alphabet::standard();
  bool bad_char = false;
  for (char c : text) {
    int idx = a.index_of(c);
    if (idx < 0 || !a.in_e2ld_subset(idx)) bad_char = true;
  }
  if (bad_char) verdict.violations.push_back(Violation::BadCharacter);
  if (text.front() == '-') verdict.violations.push_back(Violation::LeadingHyphen);
  if (text.back() == '-') verdict.violations.push_back(Violation::TrailingHyphen);
  if (text.size() >= 4 && text[2] == '-' && text[3] == '-') {
    verdict.violations.push_back(Violation::HyphenPositions34);
  }
  return verdict;
}

const char* violation_name(Violation v) {
  switch (v) {
    case Violation::Empty: return "empty";
    case Violation::TooLong: return "too_long";
    case Violation::BadCharacter: return "bad_character";
    case Violation::LeadingHyphen: return "leading_hyphen";
    case Violation::TrailingHyphen: return "trailing_hyphen";
    case Violation::HyphenPositions34: return "hyphen_positions_3_4";
  }
  return "unknown";
}

}  // namespace advdga
