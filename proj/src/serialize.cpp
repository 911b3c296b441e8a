#include "advdga/serialize.hpp"

#include <array>
#include <cstring>
#include <fstream>

#include "advdga/errors.hpp"

namespace advdga {
namespace {

constexpr char kMagic[4] = {'D', 'G', 'A', 'F'};

std::array<std::uint32_t, 256> make_crc_table() {
  std::array<std::uint32_t, 256> table{};
  for (std::uint32_t i = 0; i < 256; ++i) {
    std::uint32_t c = i;
    for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
    table[i] = c;
  }
  return table;
}

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const char* c = static_cast<const char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  template <typename T>
  void pod(T value) {
    bytes(&value, sizeof(T));
  }
  void str(const std::string& s) {
    pod(static_cast<std::uint16_t>(s.size()));
    bytes(s.data(), s.size());
  }
  const std::vector<char>& data() const { return buf_; }

 private:
  std::vector<char> buf_;
};

class Reader {
 public:
  explicit Reader(std::vector<char> data) : buf_(std::move(data)) {}
  void bytes(void* p, std::size_t n) {
    if (pos_ + n > buf_.size()) throw CorruptFile("unexpected end of file");
    std::memcpy(p, buf_.data() + pos_, n);
    pos_ += n;
  }
  template <typename T>
  T pod() {
    T value;
    bytes(&value, sizeof(T));
    return value;
  }
  std::string str() {
    auto n = pod<std::uint16_t>();
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }
  std::size_t pos() const { return pos_; }
  const std::vector<char>& data() const { return buf_; }

 private:
  std::vector<char> buf_;
  std::size_t pos_ = 0;
};

}  // namespace

std::uint32_t crc32(const void* data, std::size_t len, std::uint32_t seed) {
  static const auto table = make_crc_table();
  std::uint32_t c = seed ^ 0xFFFFFFFFu;
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) c = table[(c ^ p[i]) & 0xFF] ^ (c >> 8);
  return c ^ 0xFFFFFFFFu;
}

void save_tensor_file(const std::string& path, const TensorFile& file) {
  Writer w;
  w.bytes(kMagic, 4);
  w.pod(kTensorFileVersion);
  w.pod(static_cast<std::uint16_t>(file.meta.size()));
  for (const auto& [key, value] : file.meta) {
    w.str(key);
    w.pod(static_cast<std::int64_t>(value));
  }
  w.pod(static_cast<std::uint32_t>(file.tensors.size()));
  for (const auto& [name, tensor] : file.tensors) {
    w.str(name);
    w.pod(static_cast<std::uint8_t>(tensor.rank()));
    for (int d : tensor.shape) w.pod(static_cast<std::uint32_t>(d));
    w.bytes(tensor.v.data(), tensor.v.size() * sizeof(float));
  }
  std::uint32_t checksum = crc32(w.data().data(), w.data().size());

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.write(w.data().data(), static_cast<std::streamsize>(w.data().size()));
  out.write(reinterpret_cast<const char*>(&checksum), sizeof(checksum));
  if (!out) throw IoError("write failed: " + path);
}

TensorFile load_tensor_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::vector<char> raw((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
  if (raw.size() < 4 + sizeof(std::uint16_t) + sizeof(std::uint32_t)) {
    throw CorruptFile("file too short");
  }
  if (std::memcmp(raw.data(), kMagic, 4) != 0) {
    throw FormatVersionMismatch("bad magic");
  }
  std::uint32_t stored;
  std::memcpy(&stored, raw.data() + raw.size() - sizeof(stored), sizeof(stored));
  std::uint32_t actual = crc32(raw.data(), raw.size() - sizeof(stored));
  if (stored != actual) throw CorruptFile("checksum mismatch");
  raw.resize(raw.size() - sizeof(stored));

  Reader r(std::move(raw));
  char magic[4];
  r.bytes(magic, 4);
  auto version = r.pod<std::uint16_t>();
  if (version != kTensorFileVersion) {
    throw FormatVersionMismatch("unsupported version " + std::to_string(version));
  }
  TensorFile file;
  auto meta_count = r.pod<std::uint16_t>();
  for (int i = 0; i < meta_count; ++i) {
    std::string key = r.str();
    file.meta[key] = r.pod<std::int64_t>();
  }
  auto tensor_count = r.pod<std::uint32_t>();
  for (std::uint32_t i = 0; i < tensor_count; ++i) {
    std::string name = r.str();
    auto rank = r.pod<std::uint8_t>();
    std::vector<int> shape;
    for (int j = 0; j < rank; ++j) shape.push_back(static_cast<int>(r.pod<std::uint32_t>()));
    Tensor t(shape);
    r.bytes(t.v.data(), t.v.size() * sizeof(float));
    file.tensors.emplace_back(std::move(name), std::move(t));
  }
  if (r.pos() != r.data().size()) throw CorruptFile("trailing bytes");
  return file;
}

void save_model(const Model& m, const std::string& path) {
  TensorFile file;
  file.meta["vocab"] = m.meta.vocab;
  file.meta["embed_dim"] = m.meta.embed_dim;
  file.meta["seq_len"] = m.meta.seq_len;
  file.meta["channels"] = m.meta.channels;
  file.meta["blocks"] = m.meta.blocks;
  file.meta["kernel"] = m.meta.kernel;
  auto put = [&file](const std::string& name, const TensorPtr& t) {
    Tensor copy(t->shape);
    copy.v = t->v;
    file.tensors.emplace_back(name, std::move(copy));
  };
  put("embedding", m.W);
  for (std::size_t b = 0; b < m.blocks.size(); ++b) {
    std::string prefix = "block" + std::to_string(b);
    put(prefix + ".conv1.w", m.blocks[b].w1);
    put(prefix + ".conv1.b", m.blocks[b].b1);
    put(prefix + ".conv2.w", m.blocks[b].w2);
    put(prefix + ".conv2.b", m.blocks[b].b2);
  }
  put("head.w", m.head_w);
  put("head.b", m.head_b);
  save_tensor_file(path, file);
}

Model load_model(const std::string& path) {
  TensorFile file = load_tensor_file(path);
  auto meta_at = [&file](const char* key) {
    auto it = file.meta.find(key);
    if (it == file.meta.end()) throw CorruptFile(std::string("missing meta: ") + key);
    return static_cast<int>(it->second);
  };
  ArchMeta meta;
  meta.vocab = meta_at("vocab");
  meta.embed_dim = meta_at("embed_dim");
  meta.seq_len = meta_at("seq_len");
  meta.channels = meta_at("channels");
  meta.blocks = meta_at("blocks");
  meta.kernel = meta_at("kernel");

  std::map<std::string, Tensor> by_name;
  for (auto& [name, tensor] : file.tensors) by_name[name] = std::move(tensor);
  auto take = [&by_name](const std::string& name) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw CorruptFile("missing tensor: " + name);
    auto t = make_tensor(it->second.shape);
    t->v = std::move(it->second.v);
    return t;
  };

  Model m;
  m.meta = meta;
  m.W = take("embedding");
  for (int b = 0; b < meta.blocks; ++b) {
    std::string prefix = "block" + std::to_string(b);
    Model::Block blk;
    blk.w1 = take(prefix + ".conv1.w");
    blk.b1 = take(prefix + ".conv1.b");
    blk.w2 = take(prefix + ".conv2.w");
    blk.b2 = take(prefix + ".conv2.b");
    m.blocks.push_back(std::move(blk));
  }
  m.head_w = take("head.w");
  m.head_b = take("head.b");
  if (m.W->dim(0) != meta.vocab || m.W->dim(1) != meta.embed_dim) {
    throw CorruptFile("embedding shape disagrees with meta");
  }
  return m;
}

}  // namespace advdga
