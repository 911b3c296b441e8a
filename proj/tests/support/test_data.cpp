#include "test_data.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "advdga/alphabet.hpp"
#include "advdga/errors.hpp"

namespace advdga::testing {

Domain random_valid_domain(Rng& rng, int min_len, int max_len) {
  const Alphabet& a = Alphabet::standard();
  const std::vector<int>& inner = a.e2ld_subset();
  const std::vector<int>& ends = a.letters_digits();
  const int len = rng.uniform_int(min_len, max_len);
  std::string text(static_cast<std::size_t>(len), '?');
  for (int i = 0; i < len; ++i) {
    const bool end = i == 0 || i == len - 1;
    const std::vector<int>& pool = end ? ends : inner;
    text[static_cast<std::size_t>(i)] =
        a.symbol(pool[rng.uniform_index(pool.size())]);
  }
  // Positions 3 and 4 (1-indexed) may not both be hyphens.
  if (len >= 4 && text[2] == '-' && text[3] == '-') {
    text[3] = a.symbol(ends[rng.uniform_index(ends.size())]);
  }
  ValidityVerdict verdict = validate_e2ld(text);
  if (!verdict.valid()) throw InvalidDomain("fixture generator emitted " + text);
  return Domain::from_text(text);
}

std::vector<EncodedDomain> random_valid_batch(Rng& rng, int count, int min_len,
                                              int max_len) {
  std::vector<EncodedDomain> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    out.push_back(encode(random_valid_domain(rng, min_len, max_len)));
  }
  return out;
}

Tensor random_embedding_batch(Rng& rng, int batch, int seq_len, int embed_dim,
                              float scale) {
  Tensor t({batch, seq_len, embed_dim});
  for (float& x : t.v) x = static_cast<float>(rng.normal()) * scale;
  return t;
}

std::string scratch_dir(const std::string& tag) {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / ("advdga_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileNotFound("'" + path + "' not readable");
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace advdga::testing
