#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace advdga {

inline constexpr int kMaxDomainLength = 63;
inline constexpr int kMinAttackLength = 7;

// Character set used by the classifier and all attacks:
// 'a'..'z', '0'..'9', '-', '_', and the padding symbol '~'.
// Underscore occurs in real-world domain data and is therefore encodable,
// but it is never part of a valid e2LD and attacks never emit it.
class Alphabet {
 public:
  static const Alphabet& standard();

  int size() const { return static_cast<int>(chars_.size()); }
  int pad_index() const { return pad_index_; }
  char pad_symbol() const { return chars_[pad_index_]; }

  // -1 when the character is not in the alphabet.
  int index_of(char c) const {
    unsigned char u = static_cast<unsigned char>(c);
    return lookup_[u];
  }
  char symbol(int index) const { return chars_[index]; }
  const std::string& chars() const { return chars_; }

  // Indices allowed inside a valid e2LD: letters, digits, hyphen.
  const std::vector<int>& e2ld_subset() const { return e2ld_subset_; }
  // e2ld_subset without the hyphen; the only set allowed at either end.
  const std::vector<int>& letters_digits() const { return letters_digits_; }
  bool in_e2ld_subset(int index) const { return is_e2ld_[index]; }

 private:
  Alphabet();
  std::string chars_;
  int pad_index_;
  std::array<int, 256> lookup_;
  std::vector<int> e2ld_subset_;
  std::vector<int> letters_digits_;
  std::vector<bool> is_e2ld_;
};

// Reasons a string fails e2LD validation; a verdict may carry several.
enum class Violation {
  Empty,
  TooLong,
  BadCharacter,
  LeadingHyphen,
  TrailingHyphen,
  HyphenPositions34,
};

struct ValidityVerdict {
  std::vector<Violation> violations;
  bool valid() const { return violations.empty(); }
  bool has(Violation v) const;
};

// Checks the e2LD well-formedness rules: 1..63 characters, every character
// in {a-z, 0-9, '-'}, no hyphen at the first or last position, and not
// hyphens at both positions 3 and 4 (1-indexed), which is reserved for
// encodings like punycode.
ValidityVerdict validate_e2ld(std::string_view text);

const char* violation_name(Violation v);

}  // namespace advdga
