#include "disdf/model_io.hpp"

#include <zlib.h>

#include <bit>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include "disdf/errors.hpp"

namespace disdf {
namespace {

constexpr char kTagConfig[4] = {'C', 'O', 'N', 'F'};
constexpr char kTagMeta[4] = {'M', 'E', 'T', 'A'};
constexpr char kTagNames[4] = {'N', 'A', 'M', 'E'};
constexpr char kTagLevel[4] = {'L', 'E', 'V', 'L'};

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int b = 0; b < 4; ++b) u8(static_cast<std::uint8_t>(v >> (8 * b)));
  }
  void u64(std::uint64_t v) {
    for (int b = 0; b < 8; ++b) u8(static_cast<std::uint8_t>(v >> (8 * b)));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u64(s.size());
    buf_.append(s);
  }
  void raw(std::string_view s) { buf_.append(s); }

  void section(const char (&tag)[4], const Writer& body) {
    buf_.append(tag, 4);
    u64(body.buf_.size());
    buf_.append(body.buf_);
  }

  const std::string& bytes() const noexcept { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}

  bool done() const noexcept { return pos_ == data_.size(); }

  std::string_view rest() {
    std::string_view s = data_.substr(pos_);
    pos_ = data_.size();
    return s;
  }

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) {
      v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(data_[pos_++])) << (8 * b);
    }
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) {
      v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(data_[pos_++])) << (8 * b);
    }
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::size_t count(std::size_t max_elem_bytes = 1) {
    const std::uint64_t n = u64();
    if (max_elem_bytes != 0 && n > (data_.size() - pos_) / max_elem_bytes) {
      fail(ErrorCode::kFormat, "model file: element count exceeds section size");
    }
    return static_cast<std::size_t>(n);
  }
  std::string_view str() {
    const std::size_t n = count();
    std::string_view s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  // Reads a section with the expected tag and returns a reader over its body.
  Reader section(const char (&tag)[4]) {
    need(4);
    if (std::memcmp(data_.data() + pos_, tag, 4) != 0) {
      fail(ErrorCode::kFormat, "model file: expected section '" + std::string(tag, 4) + "'");
    }
    pos_ += 4;
    const std::size_t n = count();
    Reader body(data_.substr(pos_, n));
    pos_ += n;
    return body;
  }

  void expect_done(std::string_view what) const {
    if (!done()) fail(ErrorCode::kFormat, "model file: trailing bytes in " + std::string(what));
  }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) fail(ErrorCode::kFormat, "model file: section truncated");
  }

  std::string_view data_;
  std::size_t pos_ = 0;
};

void write_tree(Writer& w, const TreeModel& tree) {
  w.u8(static_cast<std::uint8_t>(tree.kind()));
  w.u64(tree.input_dim());
  w.u32(static_cast<std::uint32_t>(tree.num_classes()));
  w.u64(tree.nodes().size());
  for (const TreeNode& node : tree.nodes()) {
    w.i32(node.feature);
    w.i32(node.left);
    w.i32(node.right);
    w.i32(node.leaf);
    w.f64(node.threshold);
  }
  w.u64(tree.leaf_dists().size());
  for (double v : tree.leaf_dists()) w.f64(v);
}

TreeKind read_kind(Reader& r) {
  const std::uint8_t k = r.u8();
  if (k > 1) fail(ErrorCode::kFormat, "model file: unknown tree kind " + std::to_string(k));
  return static_cast<TreeKind>(k);
}

TreeModel read_tree(Reader& r) {
  const TreeKind kind = read_kind(r);
  const std::size_t input_dim = r.u64();
  const auto num_classes = static_cast<int>(r.u32());
  std::vector<TreeNode> nodes(r.count(24));
  for (TreeNode& node : nodes) {
    node.feature = r.i32();
    node.left = r.i32();
    node.right = r.i32();
    node.leaf = r.i32();
    node.threshold = r.f64();
  }
  std::vector<double> leaves(r.count(8));
  for (double& v : leaves) v = r.f64();
  try {
    return TreeModel(kind, input_dim, num_classes, std::move(nodes), std::move(leaves));
  } catch (const Error& e) {
    fail(ErrorCode::kFormat, std::string("model file: invalid tree: ") + e.what());
  }
}

void write_forest(Writer& w, const ForestModel& forest) {
  w.u8(static_cast<std::uint8_t>(forest.kind()));
  w.u64(forest.num_trees());
  for (const TreeModel& tree : forest.trees()) write_tree(w, tree);
  for (double v : forest.weights().values()) w.f64(v);
}

ForestModel read_forest(Reader& r) {
  const TreeKind kind = read_kind(r);
  std::vector<TreeModel> trees(r.count(8));
  for (TreeModel& tree : trees) tree = read_tree(r);
  std::vector<double> weights(trees.size());
  for (double& v : weights) v = r.f64();
  try {
    return ForestModel(kind, std::move(trees), WeightVector(std::move(weights)));
  } catch (const Error& e) {
    fail(ErrorCode::kFormat, std::string("model file: invalid forest: ") + e.what());
  }
}

std::uint32_t crc32_of(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large payloads in chunks.
  constexpr std::size_t kChunk = std::numeric_limits<uInt>::max() / 2;
  for (std::size_t off = 0; off < bytes.size(); off += kChunk) {
    const std::size_t len = std::min(kChunk, bytes.size() - off);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + off), static_cast<uInt>(len));
  }
  return static_cast<std::uint32_t>(crc);
}

template <typename T>
T parse_header_field(std::string_view token, std::string_view prefix, int base) {
  if (token.substr(0, prefix.size()) != prefix) {
    fail(ErrorCode::kFormat, "model file: malformed header field '" + std::string(token) + "'");
  }
  token.remove_prefix(prefix.size());
  T value{};
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value, base);
  if (ec != std::errc{} || ptr != token.data() + token.size()) {
    fail(ErrorCode::kFormat, "model file: malformed header field '" + std::string(prefix) +
                                 std::string(token) + "'");
  }
  return value;
}

}  // namespace

std::string serialize_model(const CascadeModel& model, const TrainConfig& config) {
  Writer payload;

  Writer conf;
  conf.raw(config.to_text());
  payload.section(kTagConfig, conf);

  Writer meta;
  meta.u64(model.base_dim());
  meta.u32(static_cast<std::uint32_t>(model.num_classes()));
  meta.u8(static_cast<std::uint8_t>(model.mode()));
  meta.u64(model.levels().size());
  payload.section(kTagMeta, meta);

  Writer names;
  names.u64(model.class_names().size());
  for (const std::string& name : model.class_names()) names.str(name);
  payload.section(kTagNames, names);

  for (const LevelModel& level : model.levels()) {
    Writer lv;
    lv.u64(level.input_dim);
    lv.u64(level.forests.size());
    for (const ForestModel& forest : level.forests) write_forest(lv, forest);
    payload.section(kTagLevel, lv);
  }

  const std::string& body = payload.bytes();
  char crc_hex[9];
  const auto crc = crc32_of(body);
  std::snprintf(crc_hex, sizeof crc_hex, "%08x", crc);
  std::string out = std::string(kModelMagic) + " v" + std::to_string(kModelFormatVersion) +
                    " crc32=" + crc_hex + " bytes=" + std::to_string(body.size()) + "\n";
  out += body;
  return out;
}

ModelFile deserialize_model(std::string_view bytes) {
  const std::size_t eol = bytes.find('\n');
  if (eol == std::string_view::npos || eol > 128) {
    fail(ErrorCode::kFormat, "model file: missing header line");
  }
  std::istringstream header{std::string(bytes.substr(0, eol))};
  std::string magic, version, crc_field, size_field, extra;
  header >> magic >> version >> crc_field >> size_field;
  if (magic != kModelMagic) fail(ErrorCode::kFormat, "model file: bad magic (not a disdf model)");
  const auto v = parse_header_field<std::uint32_t>(version, "v", 10);
  if (v != kModelFormatVersion) {
    fail(ErrorCode::kVersionMismatch, "model file: format version " + std::to_string(v) +
                                          " is not supported (expected " +
                                          std::to_string(kModelFormatVersion) + ")");
  }
  const auto expected_crc = parse_header_field<std::uint32_t>(crc_field, "crc32=", 16);
  const auto expected_size = parse_header_field<std::uint64_t>(size_field, "bytes=", 10);
  if (header >> extra) fail(ErrorCode::kFormat, "model file: unexpected header field '" + extra + "'");

  const std::string_view body = bytes.substr(eol + 1);
  if (body.size() != expected_size) {
    fail(ErrorCode::kChecksum, "model file: payload is " + std::to_string(body.size()) +
                                   " bytes, header says " + std::to_string(expected_size) +
                                   " (truncated or padded)");
  }
  if (crc32_of(body) != expected_crc) {
    fail(ErrorCode::kChecksum, "model file: checksum mismatch (file corrupted)");
  }

  Reader r(body);
  ModelFile out;
  {
    Reader conf = r.section(kTagConfig);
    const std::string_view text = conf.rest();
    try {
      out.config.apply_text(text);
    } catch (const Error& e) {
      fail(ErrorCode::kFormat, std::string("model file: bad config echo: ") + e.what());
    }
  }
  Reader meta = r.section(kTagMeta);
  const std::size_t base_dim = meta.u64();
  const auto num_classes = static_cast<int>(meta.u32());
  const std::uint8_t mode = meta.u8();
  if (mode > 1) fail(ErrorCode::kFormat, "model file: unknown mode " + std::to_string(mode));
  const std::size_t num_levels = meta.u64();
  meta.expect_done("META");

  Reader names_r = r.section(kTagNames);
  std::vector<std::string> names(names_r.count(8));
  for (std::string& name : names) name = std::string(names_r.str());
  names_r.expect_done("NAME");

  std::vector<LevelModel> levels;
  for (std::size_t q = 0; q < num_levels; ++q) {
    Reader lv = r.section(kTagLevel);
    LevelModel level;
    level.input_dim = lv.u64();
    level.forests.resize(lv.count(9));
    for (ForestModel& forest : level.forests) forest = read_forest(lv);
    lv.expect_done("LEVL");
    levels.push_back(std::move(level));
  }
  r.expect_done("payload");

  try {
    out.model = CascadeModel(std::move(levels), base_dim, num_classes,
                             static_cast<CascadeMode>(mode), std::move(names));
  } catch (const Error& e) {
    fail(ErrorCode::kFormat, std::string("model file: invalid cascade: ") + e.what());
  }
  return out;
}

void save_model(const std::filesystem::path& path, const CascadeModel& model,
                const TrainConfig& config) {
  const std::string bytes = serialize_model(model, config);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.close();
  if (!out) fail(ErrorCode::kIo, "failed writing '" + path.string() + "'");
}

ModelFile load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open model file '" + path.string() + "'");
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  if (in.bad()) fail(ErrorCode::kIo, "failed reading '" + path.string() + "'");
  return deserialize_model(bytes);
}

}  // namespace disdf
