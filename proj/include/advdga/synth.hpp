#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "advdga/dataset.hpp"

namespace advdga {

// Stand-in data for desk-scale experiments: benign names are compounds of
// dictionary tokens (optionally hyphen-joined), malicious names are uniform
// random strings.  All outputs are unique valid e2LDs.
struct SynthConfig {
  int benign_count = 20000;
  int malicious_count = 20000;
  int min_tokens = 2;
  int max_tokens = 4;
  double hyphen_prob = 0.35;
  int mal_min_len = 10;
  int mal_max_len = 32;
  std::string mal_alphabet = "abcdefghijklmnopqrstuvwxyz";
  std::uint64_t seed = 0;
};

std::vector<LabeledRecord> synth_dataset(const SynthConfig& cfg);

const std::vector<std::string>& synth_wordlist();

}  // namespace advdga
