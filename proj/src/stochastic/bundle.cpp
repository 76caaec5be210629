#include "sdspde/stochastic/bundle.hpp"

#include "sdspde/error.hpp"
#include "sdspde/stochastic/philox.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace sdspde {

namespace {

constexpr char kMagic[8] = {'S', 'D', 'S', 'P', 'D', 'E', 'B', '1'};
constexpr char kSectionTag[4] = {'P', 'R', 'O', 'C'};

class Writer {
 public:
  void bytes(const void* p, size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    out.insert(out.end(), c, c + n);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  std::vector<unsigned char> out;
};

class Reader {
 public:
  explicit Reader(const std::vector<unsigned char>& b) : buf(b) {}
  void need(size_t n) const {
    if (pos + n > buf.size()) throw Error(ErrorCode::io_error, "bundle truncated at byte " + std::to_string(pos));
  }
  void bytes(void* p, size_t n) {
    need(n);
    std::memcpy(p, buf.data() + pos, n);
    pos += n;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[pos++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[pos++]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  bool done() const { return pos == buf.size(); }

  const std::vector<unsigned char>& buf;
  size_t pos = 0;
};

}  // namespace

std::vector<unsigned char> encode_bundle(const BrownianEnsemble& ens, const std::vector<BundleSection>& sections) {
  Writer w;
  const int mm = ens.paths(), nn = ens.steps();
  w.bytes(kMagic, 8);
  w.u32(kBundleVersion);
  w.u32(ens.generator_id());
  w.u64(static_cast<std::uint64_t>(mm));
  w.u64(static_cast<std::uint64_t>(nn));
  w.f64(ens.horizon());
  w.u64(ens.seed());
  w.u32(ens.coarsening());
  w.u32(static_cast<std::uint32_t>(sections.size()));
  for (int m = 0; m < mm; ++m) {
    for (int n = 0; n < nn; ++n) w.f64(ens.dw(m, n));
  }
  for (const auto& s : sections) {
    const auto& d = s.data;
    if (d.paths() != mm || d.steps() != nn) {
      throw Error(ErrorCode::ensemble_mismatch, "bundle section '" + s.name + "' does not match the ensemble");
    }
    w.bytes(kSectionTag, 4);
    w.u32(static_cast<std::uint32_t>(s.name.size()));
    w.bytes(s.name.data(), s.name.size());
    const int dim = d.dim();
    w.u64(static_cast<std::uint64_t>(dim));
    for (int m = 0; m < mm; ++m) {
      for (int i = 0; i < dim; ++i) w.f64(d.x0(i, m));
    }
    for (const auto* part : {&d.drift, &d.diffusion}) {
      for (int m = 0; m < mm; ++m) {
        const auto& a = (*part)[static_cast<size_t>(m)];
        for (int n = 0; n < nn; ++n) {
          for (int i = 0; i < dim; ++i) w.f64(a(i, n));
        }
      }
    }
  }
  return std::move(w.out);
}

Bundle decode_bundle(const std::vector<unsigned char>& bytes) {
  Reader r(bytes);
  char magic[8];
  r.bytes(magic, 8);
  if (std::memcmp(magic, kMagic, 8) != 0) throw Error(ErrorCode::io_error, "not an ensemble bundle (bad magic)");
  const auto version = r.u32();
  if (version != kBundleVersion) {
    throw Error(ErrorCode::io_error, "unsupported bundle version " + std::to_string(version));
  }
  const auto gen = r.u32();
  const auto mm = r.u64(), nn = r.u64();
  const double t = r.f64();
  const auto seed = r.u64();
  const auto coarsening = r.u32();
  const auto count = r.u32();
  if (gen != kPhiloxBoxMuller) throw Error(ErrorCode::io_error, "unknown generator id " + std::to_string(gen));
  if (mm == 0 || nn == 0 || mm > (1u << 30) || nn > (1u << 30)) throw Error(ErrorCode::io_error, "bad bundle shape");
  r.need(mm * nn * 8);
  RowMatrix dw(static_cast<Eigen::Index>(mm), static_cast<Eigen::Index>(nn));
  for (Eigen::Index m = 0; m < dw.rows(); ++m) {
    for (Eigen::Index n = 0; n < dw.cols(); ++n) dw(m, n) = r.f64();
  }
  Bundle b;
  b.ensemble = std::make_shared<const BrownianEnsemble>(seed, t, std::move(dw), coarsening);
  for (std::uint32_t s = 0; s < count; ++s) {
    char tag[4];
    r.bytes(tag, 4);
    if (std::memcmp(tag, kSectionTag, 4) != 0) throw Error(ErrorCode::io_error, "bad section tag");
    BundleSection sec;
    sec.name.resize(r.u32());
    r.bytes(sec.name.data(), sec.name.size());
    const auto dim = r.u64();
    if (dim > (1u << 24)) throw Error(ErrorCode::io_error, "bad section dimension");
    const int id = static_cast<int>(dim), im = static_cast<int>(mm), in = static_cast<int>(nn);
    r.need(8 * dim * mm * (1 + 2 * nn));
    sec.data = ProcessTriple::zeros(id, im, in);
    for (int m = 0; m < im; ++m) {
      for (int i = 0; i < id; ++i) sec.data.x0(i, m) = r.f64();
    }
    for (auto* part : {&sec.data.drift, &sec.data.diffusion}) {
      for (int m = 0; m < im; ++m) {
        auto& a = (*part)[static_cast<size_t>(m)];
        for (int n = 0; n < in; ++n) {
          for (int i = 0; i < id; ++i) a(i, n) = r.f64();
        }
      }
    }
    b.sections.push_back(std::move(sec));
  }
  if (!r.done()) throw Error(ErrorCode::io_error, "trailing bytes after the last section");
  return b;
}

void write_bundle(const std::string& path, const BrownianEnsemble& ens, const std::vector<BundleSection>& sections) {
  const auto bytes = encode_bundle(ens, sections);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::io_error, "cannot open '" + path + "' for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error(ErrorCode::io_error, "write to '" + path + "' failed");
}

Bundle read_bundle(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::io_error, "cannot open bundle '" + path + "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_bundle(bytes);
}

}  // namespace sdspde
