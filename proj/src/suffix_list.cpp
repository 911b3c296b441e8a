#include "advdga/suffix_list.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "advdga/errors.hpp"

namespace advdga {
namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return s;
}

std::string join_from(const std::vector<std::string>& labels, std::size_t i) {
  std::string out;
  for (std::size_t j = i; j < labels.size(); ++j) {
    if (j > i) out += '.';
    out += labels[j];
  }
  return out;
}

}  // namespace

SuffixList SuffixList::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileNotFound("suffix list '" + path + "' not readable");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return from_lines(lines);
}

SuffixList SuffixList::from_lines(std::span<const std::string> lines) {
  SuffixList list;
  for (const std::string& raw : lines) {
    std::string rule = trim(raw);
    if (rule.empty() || rule.rfind("//", 0) == 0) continue;
    rule = lower(std::move(rule));
    if (rule[0] == '!') {
      list.exception_.insert(rule.substr(1));
    } else if (rule == "*") {
      list.wildcard_.insert("");
    } else if (rule.rfind("*.", 0) == 0) {
      list.wildcard_.insert(rule.substr(2));
    } else {
      list.exact_.insert(rule);
    }
  }
  return list;
}

SuffixList SuffixList::naive() {
  SuffixList list;
  list.fallback_ = true;
  return list;
}

int SuffixList::suffix_labels(const std::vector<std::string>& labels) const {
  // An exception rule cancels suffix status for its own leftmost label.
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (exception_.count(join_from(labels, i))) {
      return static_cast<int>(labels.size() - i) - 1;
    }
  }
  int best = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int n = static_cast<int>(labels.size() - i);
    if (exact_.count(join_from(labels, i))) best = std::max(best, n);
    if (wildcard_.count(join_from(labels, i + 1))) best = std::max(best, n);
  }
  if (best == 0) {
    if (!fallback_) throw UnknownSuffix("no suffix rule matches '" + join_from(labels, 0) + "'");
    best = 1;
  }
  return best;
}

std::vector<std::string> split_labels(std::string_view fqdn) {
  std::string text = lower(std::string(fqdn));
  if (!text.empty() && text.back() == '.') text.pop_back();
  if (text.empty()) throw InvalidDomain("fqdn needs at least one label");
  std::vector<std::string> labels;
  std::size_t pos = 0;
  while (true) {
    std::size_t dot = text.find('.', pos);
    std::string label = text.substr(pos, dot == std::string::npos ? dot : dot - pos);
    if (label.empty()) throw InvalidDomain("empty label in '" + text + "'");
    labels.push_back(std::move(label));
    if (dot == std::string::npos) break;
    pos = dot + 1;
  }
  return labels;
}

Domain extract_e2ld(std::string_view fqdn, const SuffixList& suffixes) {
  std::vector<std::string> labels = split_labels(fqdn);
  const int s = suffixes.suffix_labels(labels);
  if (s >= static_cast<int>(labels.size())) {
    throw NoRegistrableLabel("'" + join_from(labels, 0) + "' is itself a public suffix");
  }
  return Domain::from_text(labels[labels.size() - static_cast<std::size_t>(s) - 1]);
}

}  // namespace advdga
