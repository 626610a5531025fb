#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "misi/error.hpp"
#include "misi/io.hpp"

namespace misi {
namespace {

constexpr std::string_view kDatasetMagic = "MISI1";
constexpr std::string_view kNetworkMagic = "MNET1";

class Writer {
 public:
  void magic(std::string_view m) { out_.append(m); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v), 8); }
  void point(Point2 p) {
    f64(p.x);
    f64(p.y);
  }
  void c128(cplx v) {
    f64(v.real());
    f64(v.imag());
  }
  void f64s(std::span<const double> v) {
    for (double x : v) f64(x);
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
  void le(std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
  }
};

class Reader {
 public:
  explicit Reader(std::string_view in, const char* what) : in_(in), what_(what) {}
  void magic(std::string_view m) {
    if (in_.substr(0, m.size()) != m) throw IoError(std::string(what_) + ": bad magic or unsupported version");
    pos_ = m.size();
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  double f64() { return std::bit_cast<double>(le(8)); }
  Point2 point() {
    const double x = f64();
    return {x, f64()};
  }
  cplx c128() {
    const double re = f64();
    return {re, f64()};
  }
  std::size_t remaining() const { return in_.size() - pos_; }
  void need(std::uint64_t bytes) const {
    if (bytes > remaining()) throw IoError(std::string(what_) + ": truncated");
  }

 private:
  std::string_view in_;
  const char* what_;
  std::size_t pos_ = 0;
  std::uint64_t le(int bytes) {
    need(static_cast<std::uint64_t>(bytes));
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in_[pos_ + i])) << (8 * i);
    pos_ += static_cast<std::size_t>(bytes);
    return v;
  }
};

std::uint32_t checked_u32(std::size_t v, const char* name) {
  if (v > std::numeric_limits<std::uint32_t>::max()) throw IoError(std::string("container: ") + name + " too large");
  return static_cast<std::uint32_t>(v);
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path.string());
  return ss.str();
}

void dump(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

std::string encode_container(const MeasurementSet& mset) {
  mset.validate();
  const Scene& sc = mset.scene;
  Writer w;
  w.magic(kDatasetMagic);
  w.u32(checked_u32(sc.n_freq(), "n_freq"));
  w.u32(checked_u32(sc.n_tx(), "n_tx"));
  w.u32(checked_u32(sc.n_rx(), "n_rx"));
  w.u32(checked_u32(sc.n_grid(), "n_grid"));
  w.point(sc.doi_min());
  w.point(sc.doi_max());
  w.f64(sc.obs_radius());
  w.f64s(sc.frequencies());
  for (const auto& p : sc.tx_positions()) w.point(p);
  for (const auto& ring : sc.rx_topology())
    for (const auto& p : ring) w.point(p);
  w.f64(mset.snr_db ? *mset.snr_db : std::numeric_limits<double>::quiet_NaN());
  for (const auto& b : mset.scattered)
    for (const cplx& v : b.data()) w.c128(v);
  for (const auto& b : mset.incident)
    for (const cplx& v : b.data()) w.c128(v);
  return w.take();
}

MeasurementSet decode_container(std::string_view bytes) {
  Reader r(bytes, "container");
  r.magic(kDatasetMagic);
  const std::uint64_t nf = r.u32(), ntx = r.u32(), nrx = r.u32(), ng = r.u32();
  if (nf == 0 || ntx == 0 || nrx == 0 || ng < 2) throw IoError("container: empty dimension in header");
  const Point2 lo = r.point(), hi = r.point();
  const double radius = r.f64();
  // header remainder + payload must match the stored dimensions exactly
  using wide = unsigned __int128;
  const wide expected = wide{8} * (nf + 2 * ntx + wide{2} * ntx * nrx + 1) +
                        wide{16} * (wide{nf} * ntx * nrx + wide{nf} * ntx * ng * ng);
  if (expected != r.remaining())
    throw IoError("container: size mismatch (" + std::to_string(r.remaining()) +
                  " bytes after the fixed header do not match the stored dimensions)");
  std::vector<double> freqs(nf);
  for (auto& f : freqs) f = r.f64();
  std::vector<Point2> tx(ntx);
  for (auto& p : tx) p = r.point();
  std::vector<std::vector<Point2>> rx(ntx, std::vector<Point2>(nrx));
  for (auto& ring : rx)
    for (auto& p : ring) p = r.point();
  const double snr = r.f64();

  std::optional<Scene> scene;
  try {
    scene.emplace(lo, hi, ng, std::move(tx), std::move(rx), std::move(freqs), radius);
  } catch (const ValueError& e) {
    throw IoError(std::string("container: invalid geometry: ") + e.what());
  }
  MeasurementSet m{*scene, {}, {}, std::nullopt};
  if (!std::isnan(snr)) m.snr_db = snr;
  for (std::uint64_t f = 0; f < nf; ++f) {
    ComplexBatch b(ntx, nrx);
    for (auto& v : b.data()) v = r.c128();
    m.scattered.push_back(std::move(b));
  }
  for (std::uint64_t f = 0; f < nf; ++f) {
    ComplexBatch b(ntx, ng * ng);
    for (auto& v : b.data()) v = r.c128();
    m.incident.push_back(std::move(b));
  }
  return m;
}

void write_container(const MeasurementSet& mset, const std::filesystem::path& path) {
  dump(path, encode_container(mset));
}

MeasurementSet read_container(const std::filesystem::path& path) { return decode_container(slurp(path)); }

std::string encode_network(const NetworkState& net) {
  const NetworkConfig& c = net.config();
  Writer w;
  w.magic(kNetworkMagic);
  w.u64(c.features);
  w.u64(c.hidden_layers);
  w.u64(c.width);
  for (double v : {c.sigma_ff, c.eps_max, c.sigma_max, c.lr, c.beta1, c.beta2, c.eps_adam, c.output_bias}) w.f64(v);
  w.u64(net.params().size());
  w.f64s(net.feature_matrix());
  w.f64s(net.params());
  const AdamMoments& a = net.adam();
  w.u64(a.step);
  w.u64(a.m.size());
  w.f64s(a.m);
  w.f64s(a.v);
  return w.take();
}

NetworkState decode_network(std::string_view bytes) {
  Reader r(bytes, "network checkpoint");
  r.magic(kNetworkMagic);
  NetworkConfig c;
  c.features = r.u64();
  c.hidden_layers = r.u64();
  c.width = r.u64();
  for (double* v : {&c.sigma_ff, &c.eps_max, &c.sigma_max, &c.lr, &c.beta1, &c.beta2, &c.eps_adam, &c.output_bias})
    *v = r.f64();
  const std::uint64_t np = r.u64();
  r.need(8 * (2 * c.features + np));
  std::vector<double> feat(2 * c.features), params(np);
  for (auto& v : feat) v = r.f64();
  for (auto& v : params) v = r.f64();
  AdamMoments a;
  a.step = r.u64();
  const std::uint64_t nm = r.u64();
  if (r.remaining() != 16 * nm) throw IoError("network checkpoint: size mismatch");
  a.m.resize(nm);
  a.v.resize(nm);
  for (auto& v : a.m) v = r.f64();
  for (auto& v : a.v) v = r.f64();
  try {
    return NetworkState::from_parts(c, std::move(feat), std::move(params), std::move(a));
  } catch (const Error& e) {
    throw IoError(std::string("network checkpoint: ") + e.what());
  }
}

void save_network(const NetworkState& net, const std::filesystem::path& path) { dump(path, encode_network(net)); }

NetworkState load_network(const std::filesystem::path& path) { return decode_network(slurp(path)); }

void write_text_file(const std::filesystem::path& path, std::string_view content) { dump(path, content); }

std::string read_text_file(const std::filesystem::path& path) { return slurp(path); }

}  // namespace misi
