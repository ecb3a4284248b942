#include "agmh/io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace agmh {

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void magic(const char* m) { buf_.append(m, 8); }

  void to_file(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    if (!out) throw IoError("write failed for " + path.string());
  }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : name_(path.string()) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ArgumentError("cannot open " + name_);
    buf_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }

  std::size_t offset() const { return pos_; }

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(buf_[pos_++]);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf_[pos_++])) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_++])) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }

  void magic(const char* expect) {
    need(8);
    if (std::memcmp(buf_.data() + pos_, expect, 8) != 0) {
      throw FormatError(name_ + ": bad magic, expected " + std::string(expect, 8), pos_);
    }
    pos_ += 8;
  }

  void version(std::uint32_t expect) {
    const std::size_t at = pos_;
    const std::uint32_t v = u32();
    if (v != expect) {
      throw FormatError(name_ + ": unsupported version " + std::to_string(v), at);
    }
  }

  void expect_eof() const {
    if (pos_ != buf_.size()) throw FormatError(name_ + ": trailing data", pos_);
  }

  [[noreturn]] void fail(const std::string& what) const { throw FormatError(name_ + ": " + what, pos_); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > buf_.size()) throw FormatError(name_ + ": unexpected end of file", pos_);
  }

  std::string name_;
  std::string buf_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_features(const FeatureSet& fs, const std::filesystem::path& path) {
  fs.validate();
  Writer w;
  w.magic("AGMHFEAT");
  w.u32(kFormatVersion);
  w.u64(fs.size());
  w.u32(static_cast<std::uint32_t>(fs.channels));
  w.u32(static_cast<std::uint32_t>(fs.height));
  w.u32(static_cast<std::uint32_t>(fs.width));
  for (std::size_t i = 0; i < fs.size(); ++i) {
    w.u64(fs.ids[i]);
    w.u32(fs.labels[i]);
    w.u8(static_cast<std::uint8_t>(fs.splits[i]));
    for (double v : fs.features[i].data) w.f64(v);
  }
  w.to_file(path);
}

FeatureSet load_features(const std::filesystem::path& path) {
  Reader r(path);
  r.magic("AGMHFEAT");
  r.version(kFormatVersion);
  const std::uint64_t n = r.u64();
  FeatureSet fs;
  fs.channels = static_cast<int>(r.u32());
  fs.height = static_cast<int>(r.u32());
  fs.width = static_cast<int>(r.u32());
  if (fs.channels < 1 || fs.height < 1 || fs.width < 1) r.fail("non-positive feature extents");
  const std::size_t numel = static_cast<std::size_t>(fs.channels) *
                            static_cast<std::size_t>(fs.height) *
                            static_cast<std::size_t>(fs.width);
  for (std::uint64_t i = 0; i < n; ++i) {
    fs.ids.push_back(r.u64());
    fs.labels.push_back(r.u32());
    const std::uint8_t split = r.u8();
    if (split > 1) r.fail("invalid split tag " + std::to_string(split));
    fs.splits.push_back(static_cast<Split>(split));
    Tensor t({fs.channels, fs.height, fs.width});
    for (std::size_t e = 0; e < numel; ++e) t[e] = r.f64();
    fs.features.push_back(std::move(t));
  }
  r.expect_eof();
  fs.validate();
  return fs;
}

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  ck.head.validate();
  Writer w;
  w.magic("AGMHMODL");
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(ck.head.input_channels));
  w.u32(static_cast<std::uint32_t>(ck.config.descriptors));
  w.u32(static_cast<std::uint32_t>(ck.config.channels));
  w.u32(static_cast<std::uint32_t>(ck.config.memory_units));
  w.u32(static_cast<std::uint32_t>(ck.config.slots));
  w.u32(static_cast<std::uint32_t>(ck.config.bits));
  w.f64(ck.config.alpha);
  w.f64(ck.config.beta);
  w.u32(static_cast<std::uint32_t>(ck.config.outer_iterations));
  w.u32(static_cast<std::uint32_t>(ck.config.epochs_per_iteration));
  w.u32(static_cast<std::uint32_t>(ck.config.batch_size));
  w.u32(static_cast<std::uint32_t>(ck.config.query_sample_size));
  w.f64(ck.config.lr);
  w.u32(static_cast<std::uint32_t>(ck.config.lr_drop_at));
  w.f64(ck.config.lr_drop_factor);
  w.u64(ck.config.seed);
  w.u8(ck.config.adl_enabled ? 1 : 0);
  w.u8(ck.config.siea_enabled ? 1 : 0);
  w.u8(ck.config.adl_denominator == AdlDenominator::Paper ? 0 : 1);
  w.u8(0);
  for (const DescriptorParams& d : ck.head.descriptors) {
    visit_descriptor_fields(d, [&](const Tensor& t) {
      for (double v : t.data) w.f64(v);
    });
  }
  for (double v : ck.model.weight.data) w.f64(v);
  w.to_file(path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  Reader r(path);
  r.magic("AGMHMODL");
  r.version(kFormatVersion);
  Checkpoint ck;
  const int input_channels = static_cast<int>(r.u32());
  ck.config.descriptors = static_cast<int>(r.u32());
  ck.config.channels = static_cast<int>(r.u32());
  ck.config.memory_units = static_cast<int>(r.u32());
  ck.config.slots = static_cast<int>(r.u32());
  ck.config.bits = static_cast<int>(r.u32());
  ck.config.alpha = r.f64();
  ck.config.beta = r.f64();
  ck.config.outer_iterations = static_cast<int>(r.u32());
  ck.config.epochs_per_iteration = static_cast<int>(r.u32());
  ck.config.batch_size = static_cast<int>(r.u32());
  ck.config.query_sample_size = static_cast<int>(r.u32());
  ck.config.lr = r.f64();
  ck.config.lr_drop_at = static_cast<int>(r.u32());
  ck.config.lr_drop_factor = r.f64();
  ck.config.seed = r.u64();
  ck.config.adl_enabled = r.u8() != 0;
  ck.config.siea_enabled = r.u8() != 0;
  ck.config.adl_denominator = r.u8() == 0 ? AdlDenominator::Paper : AdlDenominator::Pairs;
  r.u8();

  if (ck.config.descriptors < 2 || ck.config.channels < 1 || ck.config.memory_units < 1 ||
      ck.config.slots < 1 || ck.config.bits < 1 || input_channels < 1) {
    r.fail("invalid architecture block");
  }
  ck.head.input_channels = input_channels;
  ck.head.channels = ck.config.channels;
  ck.head.memory_units = ck.config.memory_units;
  ck.head.slots = ck.config.slots;
  ck.head.descriptors.resize(static_cast<std::size_t>(ck.config.descriptors));
  const int c = ck.config.channels, s = ck.config.slots;
  for (DescriptorParams& d : ck.head.descriptors) {
    d.transform_w1 = Tensor({c, input_channels});
    d.transform_b1 = Tensor({c});
    d.transform_w2 = Tensor({c, c});
    d.transform_b2 = Tensor({c});
    d.query_w = Tensor({c, c});
    d.query_b = Tensor({c});
    d.mem_keys.assign(static_cast<std::size_t>(ck.config.memory_units), Tensor({s, c}));
    d.interact.assign(static_cast<std::size_t>(ck.config.memory_units - 1), Tensor({s, 2 * s}));
    d.mem_value = Tensor({s, c});
    d.align_w = Tensor({c, c});
    d.align_b = Tensor({c});
    visit_descriptor_fields(d, [&](Tensor& t) {
      for (double& v : t.data) v = r.f64();
    });
  }
  ck.model.bits = ck.config.bits;
  ck.model.weight = Tensor({ck.config.bits, ck.config.descriptors * c});
  for (double& v : ck.model.weight.data) v = r.f64();
  r.expect_eof();
  ck.head.validate();
  if (!ck.model.weight.all_finite()) r.fail("non-finite encoder weights");
  return ck;
}

void save_codes(const CodeDatabase& db, const std::filesystem::path& path) {
  db.validate();
  Writer w;
  w.magic("AGMHCODE");
  w.u32(kFormatVersion);
  w.u32(db.nbits);
  w.u64(db.size());
  for (std::size_t i = 0; i < db.size(); ++i) {
    w.u64(db.ids[i]);
    w.u32(db.labels[i]);
    for (std::uint64_t word : db.codes[i].words) w.u64(word);
  }
  w.to_file(path);
}

CodeDatabase load_codes(const std::filesystem::path& path) {
  Reader r(path);
  r.magic("AGMHCODE");
  r.version(kFormatVersion);
  CodeDatabase db;
  db.nbits = r.u32();
  if (db.nbits == 0) r.fail("zero code width");
  const std::uint64_t count = r.u64();
  const std::size_t words = (db.nbits + 63) / 64;
  const std::uint64_t pad_mask =
      db.nbits % 64 == 0 ? 0 : ~std::uint64_t{0} << (db.nbits % 64);
  for (std::uint64_t i = 0; i < count; ++i) {
    db.ids.push_back(r.u64());
    db.labels.push_back(r.u32());
    PackedCode c;
    c.nbits = db.nbits;
    for (std::size_t wd = 0; wd < words; ++wd) c.words.push_back(r.u64());
    if ((c.words.back() & pad_mask) != 0) r.fail("nonzero padding bits");
    db.codes.push_back(std::move(c));
  }
  r.expect_eof();
  return db;
}

void write_pgm(const Tensor& map, const std::filesystem::path& path) {
  if (map.rank() != 2) throw DimensionError("write_pgm: map must be HxW, got " + shape_str(map.shape));
  const int h = map.extent(0), w = map.extent(1);
  double vmax = 0.0;
  for (double v : map.data) vmax = std::max(vmax, v);
  if (vmax <= 0.0) vmax = 1.0;
  std::string out = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  for (double v : map.data) {
    const long byte = std::lround(255.0 * std::max(v, 0.0) / vmax);
    out.push_back(static_cast<char>(std::min(byte, 255L)));
  }
  write_text_file(path, out);
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    start = end + 1;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::size_t fs = 0;
    while (true) {
      const std::size_t fe = line.find(',', fs);
      if (fe == std::string::npos) {
        fields.push_back(line.substr(fs));
        break;
      }
      fields.push_back(line.substr(fs, fe - fs));
      fs = fe + 1;
    }
    rows.push_back(std::move(fields));
  }
  return rows;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace agmh
