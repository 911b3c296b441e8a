#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "doctest.h"

#include "advdga/alphabet.hpp"
#include "advdga/errors.hpp"
#include "advdga/model.hpp"
#include "advdga/rng.hpp"
#include "advdga/scorer.hpp"
#include "advdga/serialize.hpp"
#include "advdga/train.hpp"
#include "reference_model.hpp"
#include "test_data.hpp"

using namespace advdga;
using doctest::Approx;

namespace {

ArchMeta small_arch(int d = 16, int blocks = 2) {
  ArchMeta a;
  a.vocab = Alphabet::standard().size();
  a.embed_dim = d;
  a.channels = d;
  a.blocks = blocks;
  return a;
}

bool params_equal(const Model& a, const Model& b) {
  std::vector<TensorPtr> pa = a.parameters(), pb = b.parameters();
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (pa[i]->shape != pb[i]->shape || pa[i]->v != pb[i]->v) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("init validates the architecture") {
  ArchMeta bad = small_arch();
  bad.channels = bad.embed_dim + 1;
  CHECK_THROWS_AS(Model::init(bad, 0), InvalidConfig);
  bad = small_arch();
  bad.vocab = 0;
  CHECK_THROWS_AS(Model::init(bad, 0), InvalidConfig);
}

TEST_CASE("init shapes and parameter inventory") {
  ArchMeta arch = small_arch(8, 2);
  Model m = Model::init(arch, 1);
  CHECK(m.W->shape == std::vector<int>{arch.vocab, 8});
  REQUIRE(m.blocks.size() == 2);
  for (const Model::Block& b : m.blocks) {
    CHECK(b.w1->shape == std::vector<int>{3, 8, 8});
    CHECK(b.b1->shape == std::vector<int>{8});
    CHECK(b.w2->shape == std::vector<int>{3, 8, 8});
    CHECK(b.b2->shape == std::vector<int>{8});
  }
  CHECK(m.head_w->shape == std::vector<int>{8, 1});
  CHECK(m.head_b->shape == std::vector<int>{1});
  CHECK(m.parameters().size() == 1 + 2 * 4 + 2);

  m.set_parameter_grads(true);
  for (const TensorPtr& p : m.parameters()) CHECK(p->needs_grad);
  m.set_parameter_grads(false);
  for (const TensorPtr& p : m.parameters()) CHECK_FALSE(p->needs_grad);
}

TEST_CASE("init is seed-deterministic") {
  ArchMeta arch = small_arch();
  CHECK(params_equal(Model::init(arch, 42), Model::init(arch, 42)));
  CHECK_FALSE(params_equal(Model::init(arch, 42), Model::init(arch, 43)));
}

TEST_CASE("clone detaches storage") {
  Model m = Model::init(small_arch(), 5);
  Model c = m.clone();
  CHECK(params_equal(m, c));
  c.W->v[0] += 1.f;
  CHECK_FALSE(params_equal(m, c));
}

TEST_CASE("embed gathers embedding rows including padding") {
  Model m = Model::init(small_arch(8), 2);
  EncodedDomain e = encode("ab");
  EmbeddedDomain v = embed(m, e);
  REQUIRE(v.matrix.shape == std::vector<int>{m.meta.seq_len, 8});
  const Alphabet& a = Alphabet::standard();
  for (int t = 0; t < m.meta.seq_len; ++t) {
    int row = t < 2 ? e.indices[static_cast<std::size_t>(t)] : a.pad_index();
    for (int j = 0; j < 8; ++j) {
      CHECK(v.matrix.v[static_cast<std::size_t>(t * 8 + j)] ==
            m.W->v[static_cast<std::size_t>(row * 8 + j)]);
    }
  }
  CHECK(v.origin == e);
}

TEST_CASE("forward agrees with the double-precision oracle") {
  Model m = Model::init(small_arch(12), 9);
  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    EncodedDomain e = encode(advdga::testing::random_valid_domain(rng, 1, 63));
    float z = forward(m, embed(m, e));
    CHECK(std::isfinite(z));
    double ref = advdga::testing::ref_logit(m, e);
    CHECK(z == Approx(ref).epsilon(1e-3));
  }
}

TEST_CASE("batched paths match the single-sample path") {
  Model m = Model::init(small_arch(8), 4);
  Rng rng(6);
  std::vector<EncodedDomain> batch = advdga::testing::random_valid_batch(rng, 33, 1, 63);
  std::vector<float> zb = logits_for_domains(m, batch);
  REQUIRE(zb.size() == batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    float zi = forward(m, embed(m, batch[i]));
    CHECK(zb[i] == Approx(zi).epsilon(1e-4));
  }
  // And twice in a row, bit for bit.
  CHECK(logits_for_domains(m, batch) == zb);
}

TEST_CASE("model_logits rejects wrong shapes") {
  Model m = Model::init(small_arch(8), 4);
  Tape tape;
  TensorPtr bad = tape.leaf({2, m.meta.seq_len, 9});
  CHECK_THROWS_AS(model_logits(tape, m, bad), ShapeMismatch);
  Tensor flat({4});
  CHECK_THROWS_AS(logits_for_embeddings(m, flat), ShapeMismatch);
}

TEST_CASE("scorer input gradients match finite differences") {
  Model m = Model::init(small_arch(8), 11);
  ModelScorer scorer(m);
  Rng rng(13);
  std::vector<EncodedDomain> batch = advdga::testing::random_valid_batch(rng, 3, 10, 40);
  Tensor v = scorer.embed_batch(batch);
  Tensor grads;
  std::vector<float> z = scorer.logits_and_grad(v, grads);
  REQUIRE(grads.shape == v.shape);

  // Directional finite differences per sample; h large enough to dominate
  // float forward noise, small enough to stay in the local linear regime.
  const std::size_t stride = static_cast<std::size_t>(m.meta.seq_len) * 8;
  const float h = 1e-2f;
  for (int b = 0; b < 3; ++b) {
    Rng dir(100 + static_cast<std::uint64_t>(b));
    std::vector<float> u(stride);
    double norm = 0.0;
    for (float& x : u) {
      x = static_cast<float>(dir.normal());
      norm += static_cast<double>(x) * x;
    }
    norm = std::sqrt(norm);
    double dot = 0.0;
    Tensor plus = v, minus = v;
    for (std::size_t j = 0; j < stride; ++j) {
      float uj = static_cast<float>(u[j] / norm);
      plus.v[stride * static_cast<std::size_t>(b) + j] += h * uj;
      minus.v[stride * static_cast<std::size_t>(b) + j] -= h * uj;
      dot += static_cast<double>(grads.v[stride * static_cast<std::size_t>(b) + j]) * uj;
    }
    double fd = (scorer.logits(plus)[static_cast<std::size_t>(b)] -
                 scorer.logits(minus)[static_cast<std::size_t>(b)]) /
                (2.0 * h);
    CHECK(dot == Approx(fd).epsilon(0.02).scale(0.05));
  }
}

TEST_CASE("training separates two trivial classes") {
  // Benign: words over a..m. Malicious: words over n..z. A one-conv model
  // separates these perfectly; training must find that solution.
  Rng rng(17);
  LabeledDataset train_split, val_split;
  auto make = [&](const char* charset, int n, LabeledDataset& out, float y) {
    for (int i = 0; i < n; ++i) {
      std::string s;
      int len = 5 + static_cast<int>(rng.uniform_index(10));
      for (int j = 0; j < len; ++j) s.push_back(charset[rng.uniform_index(13)]);
      out.push(encode(s), y);
    }
  };
  const char* lo = "abcdefghijklm";
  const char* hi = "nopqrstuvwxyz";
  make(lo, 120, train_split, 0.f);
  make(hi, 120, train_split, 1.f);
  make(lo, 24, val_split, 0.f);
  make(hi, 24, val_split, 1.f);

  TrainConfig cfg;
  cfg.max_epochs = 12;
  cfg.batch_size = 32;
  cfg.seed = 3;
  Model m = train(train_split, val_split, small_arch(8, 1), cfg);
  CHECK(balanced_accuracy(m, train_split) >= 0.99);
  CHECK(balanced_accuracy(m, val_split) >= 0.99);
  CHECK(dataset_loss(m, train_split) < 0.2);
}

TEST_CASE("training is seed-deterministic") {
  Rng rng(19);
  LabeledDataset train_split, val_split;
  for (int i = 0; i < 40; ++i) {
    train_split.push(encode(advdga::testing::random_valid_domain(rng, 5, 20)),
                     i % 2 ? 1.f : 0.f);
  }
  for (int i = 0; i < 8; ++i) {
    val_split.push(encode(advdga::testing::random_valid_domain(rng, 5, 20)),
                   i % 2 ? 1.f : 0.f);
  }
  TrainConfig cfg;
  cfg.max_epochs = 2;
  cfg.batch_size = 8;
  cfg.seed = 21;
  Model a = train(train_split, val_split, small_arch(8, 1), cfg);
  Model b = train(train_split, val_split, small_arch(8, 1), cfg);
  CHECK(params_equal(a, b));
}

TEST_CASE("training validates its configuration") {
  LabeledDataset d;
  d.push(encode("abc"), 0.f);
  d.push(encode("xyz"), 1.f);
  TrainConfig cfg;
  cfg.patience = 0;
  CHECK_THROWS_AS(train(d, d, small_arch(8), cfg), InvalidConfig);
  cfg = TrainConfig{};
  cfg.batch_size = 7;
  CHECK_THROWS_AS(train(d, d, small_arch(8), cfg), InvalidConfig);
  cfg = TrainConfig{};
  LabeledDataset empty;
  CHECK_THROWS_AS(train(empty, d, small_arch(8), cfg), EmptyDataset);
  CHECK_THROWS_AS(train(d, empty, small_arch(8), cfg), EmptyDataset);
  CHECK_THROWS_AS(dataset_loss(Model::init(small_arch(8), 0), empty), EmptyDataset);
}

TEST_CASE("model save and load round trip") {
  std::string dir = advdga::testing::scratch_dir("model_io");
  std::string path = dir + "/m.bin";
  Model m = Model::init(small_arch(8), 23);
  save_model(m, path);
  Model r = load_model(path);
  CHECK(r.meta.vocab == m.meta.vocab);
  CHECK(r.meta.embed_dim == 8);
  CHECK(r.meta.blocks == m.meta.blocks);
  CHECK(params_equal(m, r));

  Rng rng(29);
  std::vector<EncodedDomain> batch = advdga::testing::random_valid_batch(rng, 16, 3, 60);
  CHECK(logits_for_domains(m, batch) == logits_for_domains(r, batch));
}

TEST_CASE("tensor file round trip with metadata") {
  std::string dir = advdga::testing::scratch_dir("tensor_io");
  std::string path = dir + "/t.dgaf";
  TensorFile f;
  f.meta["answer"] = 42;
  f.meta["negative"] = -7;
  Tensor t({2, 3});
  t.v = {1, 2, 3, 4, 5, 6};
  f.tensors.emplace_back("payload", t);
  save_tensor_file(path, f);
  TensorFile r = load_tensor_file(path);
  CHECK(r.meta.at("answer") == 42);
  CHECK(r.meta.at("negative") == -7);
  REQUIRE(r.tensors.size() == 1);
  CHECK(r.tensors[0].first == "payload");
  CHECK(r.tensors[0].second.shape == t.shape);
  CHECK(r.tensors[0].second.v == t.v);
}

TEST_CASE("loading rejects corrupt and foreign files") {
  std::string dir = advdga::testing::scratch_dir("serialize_errors");
  std::string good = dir + "/good.bin";
  Model m = Model::init(small_arch(8), 31);
  save_model(m, good);
  std::string bytes = advdga::testing::slurp(good);

  auto write_bytes = [&](const std::string& name, const std::string& data) {
    std::string p = dir + "/" + name;
    std::FILE* fp = std::fopen(p.c_str(), "wb");
    REQUIRE(fp != nullptr);
    std::fwrite(data.data(), 1, data.size(), fp);
    std::fclose(fp);
    return p;
  };

  // Truncation anywhere, including inside the trailing checksum.
  CHECK_THROWS_AS(load_model(write_bytes("trunc.bin", bytes.substr(0, bytes.size() / 2))),
                  CorruptFile);
  CHECK_THROWS_AS(load_model(write_bytes("trunc2.bin", bytes.substr(0, bytes.size() - 2))),
                  CorruptFile);

  std::string flipped = bytes;
  flipped[bytes.size() / 3] ^= 0x40;
  CHECK_THROWS_AS(load_model(write_bytes("flip.bin", flipped)), CorruptFile);

  std::string trailing = bytes + "x";
  CHECK_THROWS_AS(load_model(write_bytes("tail.bin", trailing)), CorruptFile);

  std::string magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS_AS(load_model(write_bytes("magic.bin", magic)), FormatVersionMismatch);

  CHECK_THROWS_AS(load_model(dir + "/missing.bin"), IoError);
}

TEST_CASE("crc32 reference vector") {
  const char* s = "123456789";
  CHECK(crc32(s, 9) == 0xCBF43926u);
  CHECK(crc32("", 0) == 0u);
}
