#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "advdga/alphabet.hpp"

namespace advdga {

// A single DNS label (no dots), lowercase, at most 63 characters.  This is
// the unit the classifier works on; e2LD well-formedness is a separate,
// stricter check (validate_e2ld) because real traffic contains labels, e.g.
// with underscores, that are classifiable but not valid e2LDs.
struct Domain {
  std::string text;

  // Lowercases ASCII letters; throws EmptyDomain, DomainTooLong or
  // InvalidDomain (dots or characters outside the alphabet).
  static Domain from_text(std::string_view raw);

  bool operator==(const Domain& other) const = default;
};

// Fixed-width index form fed to the embedding layer: indices[i] is the
// alphabet index of character i, positions >= length hold the pad index.
struct EncodedDomain {
  std::array<std::uint8_t, kMaxDomainLength> indices;
  int length = 0;

  bool operator==(const EncodedDomain& other) const;
};

EncodedDomain encode(const Domain& d);
// Convenience entry point that folds case and validates in one step.
EncodedDomain encode(std::string_view text);
Domain decode(const EncodedDomain& e);

// Edit distance with unit costs for insert, delete, substitute.
int levenshtein(std::string_view a, std::string_view b);

}  // namespace advdga
