#include "advdga/domain.hpp"

#include <algorithm>
#include <vector>

#include "advdga/errors.hpp"

namespace advdga {

Domain Domain::from_text(std::string_view raw) {
  if (raw.empty()) throw EmptyDomain();
  if (raw.size() > kMaxDomainLength) {
    throw DomainTooLong("domain longer than 63 characters: " + std::string(raw));
  }
  const Alphabet& a = Alphabet::standard();
  Domain d;
  d.text.reserve(raw.size());
  for (char c : raw) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    if (c == '.') throw InvalidDomain("domain must be a single label: " + std::string(raw));
    if (c == a.pad_symbol()) {
      throw InvalidDomain("padding symbol not allowed in domain text");
    }
    if (a.index_of(c) < 0) {
      throw UnknownSymbol(std::string("character not in alphabet: '") + c + "'");
    }
    d.text.push_back(c);
  }
  return d;
}

bool EncodedDomain::operator==(const EncodedDomain& other) const {
  return length == other.length &&
         std::equal(indices.begin(), indices.begin() + length, other.indices.begin());
}

EncodedDomain encode(const Domain& d) {
  if (d.text.empty()) throw EmptyDomain();
  if (d.text.size() > kMaxDomainLength) throw DomainTooLong();
  const Alphabet& a = Alphabet::standard();
  EncodedDomain e;
  e.length = static_cast<int>(d.text.size());
  e.indices.fill(static_cast<std::uint8_t>(a.pad_index()));
  for (int i = 0; i < e.length; ++i) {
    int idx = a.index_of(d.text[static_cast<std::size_t>(i)]);
    if (idx < 0 || idx == a.pad_index()) {
      throw UnknownSymbol(std::string("character not encodable: '") + d.text[i] + "'");
    }
    e.indices[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(idx);
  }
  return e;
}

EncodedDomain encode(std::string_view text) { return encode(Domain::from_text(text)); }

Domain decode(const EncodedDomain& e) {
  const Alphabet& a = Alphabet::standard();
  Domain d;
  d.text.reserve(static_cast<std::size_t>(e.length));
  for (int i = 0; i < e.length; ++i) {
    d.text.push_back(a.symbol(e.indices[static_cast<std::size_t>(i)]));
  }
  return d;
}

int levenshtein(std::string_view a, std::string_view b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<int> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= m; ++j) {
      int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

}  // namespace advdga
