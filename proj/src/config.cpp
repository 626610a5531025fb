#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "misi/error.hpp"
#include "misi/greens.hpp"
#include "misi/io.hpp"

namespace misi {
namespace {

struct Entry {
  std::string key;
  std::string value;
  std::size_t line;
};

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<Entry> entries(std::string_view text) {
  std::vector<Entry> out;
  std::size_t line = 0, pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line;
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    raw = trim(raw);
    if (raw.empty()) continue;
    const auto eq = raw.find('=');
    if (eq == std::string_view::npos) throw ConfigError("expected 'key = value'", line);
    const std::string_view key = trim(raw.substr(0, eq));
    const std::string_view value = trim(raw.substr(eq + 1));
    if (key.empty()) throw ConfigError("missing key before '='", line);
    if (value.empty()) throw ConfigError("missing value for '" + std::string(key) + "'", line);
    out.push_back({std::string(key), std::string(value), line});
  }
  return out;
}

double to_double(std::string_view s, std::size_t line) {
  s = trim(s);
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v))
    throw ConfigError("not a finite number: '" + std::string(s) + "'", line);
  return v;
}

std::size_t to_count(std::string_view s, std::size_t line) {
  s = trim(s);
  unsigned long long v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw ConfigError("not a non-negative integer: '" + std::string(s) + "'", line);
  return static_cast<std::size_t>(v);
}

std::vector<double> to_list(std::string_view s, std::size_t line) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = s.find(',', pos);
    out.push_back(to_double(s.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos), line));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

class KeySet {
 public:
  void claim(const Entry& e) {
    if (!seen_.insert(e.key).second) throw ConfigError("duplicate key '" + e.key + "'", e.line);
  }

 private:
  std::set<std::string> seen_;
};

[[noreturn]] void unknown(const Entry& e) { throw ConfigError("unknown key '" + e.key + "'", e.line); }

}  // namespace

SceneConfig parse_scene_config(std::string_view text) {
  SceneConfig cfg;
  KeySet keys;
  for (const Entry& e : entries(text)) {
    if (e.key == "disk" || e.key == "annulus") {
      const std::vector<double> v = to_list(e.value, e.line);
      Shape s;
      if (e.key == "disk") {
        if (v.size() != 5) throw ConfigError("disk needs x, y, r, eps_r, sigma", e.line);
        s = Shape{ShapeKind::disk, {v[0], v[1]}, 0.0, v[2], v[3], v[4]};
      } else {
        if (v.size() != 6) throw ConfigError("annulus needs x, y, r_in, r_out, eps_r, sigma", e.line);
        s = Shape{ShapeKind::annulus, {v[0], v[1]}, v[2], v[3], v[4], v[5]};
      }
      try {
        Phantom{{s}}.validate();
      } catch (const ValueError& err) {
        throw ConfigError(err.what(), e.line);
      }
      cfg.phantom.shapes.push_back(s);
      continue;
    }
    keys.claim(e);
    FresnelLayout& l = cfg.layout;
    if (e.key == "n_tx")
      l.n_tx = to_count(e.value, e.line);
    else if (e.key == "blind_deg")
      l.blind_deg = to_double(e.value, e.line);
    else if (e.key == "rx_step_deg")
      l.rx_step_deg = to_double(e.value, e.line);
    else if (e.key == "radius")
      l.radius = to_double(e.value, e.line);
    else if (e.key == "doi_half")
      l.doi_half = to_double(e.value, e.line);
    else if (e.key == "n_grid")
      l.n_grid = to_count(e.value, e.line);
    else if (e.key == "frequencies")
      l.frequencies = to_list(e.value, e.line);
    else
      unknown(e);
  }
  return cfg;
}

SceneConfig load_scene_config(const std::filesystem::path& path) { return parse_scene_config(read_text_file(path)); }

std::string format_scene_config(const SceneConfig& cfg) {
  const FresnelLayout& l = cfg.layout;
  std::ostringstream o;
  o << "n_tx = " << l.n_tx << "\n";
  o << "blind_deg = " << format_number(l.blind_deg) << "\n";
  o << "rx_step_deg = " << format_number(l.rx_step_deg) << "\n";
  o << "radius = " << format_number(l.radius) << "\n";
  o << "doi_half = " << format_number(l.doi_half) << "\n";
  o << "n_grid = " << l.n_grid << "\n";
  o << "frequencies = ";
  for (std::size_t i = 0; i < l.frequencies.size(); ++i) o << (i ? ", " : "") << format_number(l.frequencies[i]);
  o << "\n";
  for (const Shape& s : cfg.phantom.shapes) {
    if (s.kind == ShapeKind::disk)
      o << "disk = " << format_number(s.center.x) << ", " << format_number(s.center.y) << ", "
        << format_number(s.r_outer);
    else
      o << "annulus = " << format_number(s.center.x) << ", " << format_number(s.center.y) << ", "
        << format_number(s.r_inner) << ", " << format_number(s.r_outer);
    o << ", " << format_number(s.eps_r) << ", " << format_number(s.sigma) << "\n";
  }
  return o.str();
}

void apply_net_config(std::string_view text, TrainerConfig& cfg) {
  KeySet keys;
  NetworkConfig& n = cfg.net;
  for (const Entry& e : entries(text)) {
    keys.claim(e);
    const auto num = [&] { return to_double(e.value, e.line); };
    const auto count = [&] { return to_count(e.value, e.line); };
    if (e.key == "features") n.features = count();
    else if (e.key == "sigma_ff") n.sigma_ff = num();
    else if (e.key == "hidden_layers") n.hidden_layers = count();
    else if (e.key == "width") n.width = count();
    else if (e.key == "lr") n.lr = num();
    else if (e.key == "beta1") n.beta1 = num();
    else if (e.key == "beta2") n.beta2 = num();
    else if (e.key == "eps_adam") n.eps_adam = num();
    else if (e.key == "eps_max") n.eps_max = num();
    else if (e.key == "sigma_max") n.sigma_max = num();
    else if (e.key == "output_bias") n.output_bias = num();
    else if (e.key == "n_inner") cfg.n_inner = count();
    else if (e.key == "clip_j") cfg.clip_j = num();
    else if (e.key == "clip_theta") cfg.clip_theta = num();
    else if (e.key == "clip_j_simul") cfg.clip_j_simul = num();
    else if (e.key == "pad_factor") cfg.pad_factor = static_cast<int>(count());
    else if (e.key == "psnr_every") cfg.psnr_every = count();
    else if (e.key == "beta_decay") cfg.beta_decay = num();
    else unknown(e);
  }
  try {
    cfg.validate();
  } catch (const ValueError& err) {
    throw ConfigError(err.what(), 0);
  }
}

void load_net_config(const std::filesystem::path& path, TrainerConfig& cfg) {
  apply_net_config(read_text_file(path), cfg);
}

MeasuredGeometry parse_measured_geometry(std::string_view text) {
  MeasuredGeometry g;
  KeySet keys;
  for (const Entry& e : entries(text)) {
    keys.claim(e);
    if (e.key == "n_tx") g.n_tx = to_count(e.value, e.line);
    else if (e.key == "radius") g.radius = to_double(e.value, e.line);
    else if (e.key == "doi_half") g.doi_half = to_double(e.value, e.line);
    else if (e.key == "n_grid") g.n_grid = to_count(e.value, e.line);
    else if (e.key == "tx_start_deg") g.tx_start_deg = to_double(e.value, e.line);
    else unknown(e);
  }
  if (g.n_tx == 0) throw ConfigError("n_tx must be positive", 0);
  if (!(g.doi_half > 0.0) || !(g.radius > g.doi_half * std::sqrt(2.0)))
    throw ConfigError("need 0 < doi_half and radius > doi_half * sqrt(2)", 0);
  if (g.n_grid < 2) throw ConfigError("n_grid must be >= 2", 0);
  return g;
}

std::vector<MeasuredRow> parse_measured_table(std::string_view text) {
  std::vector<MeasuredRow> rows;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string_view s = raw;
    if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    if (trim(s).empty()) continue;
    std::istringstream fields{std::string(s)};
    std::vector<std::string> tok;
    for (std::string t; fields >> t;) tok.push_back(t);
    if (tok.size() != 5) throw ConfigError("expected 'freq tx_index rx_angle_deg re im'", line);
    MeasuredRow r;
    r.freq = to_double(tok[0], line);
    if (!(r.freq > 0.0)) throw ConfigError("frequency must be positive", line);
    r.tx = to_count(tok[1], line);
    r.angle_deg = to_double(tok[2], line);
    r.value = {to_double(tok[3], line), to_double(tok[4], line)};
    r.line = line;
    rows.push_back(r);
  }
  if (rows.empty()) throw ConfigError("measured table has no data rows", 0);
  return rows;
}

MeasurementSet convert_measured(const std::vector<MeasuredRow>& rows, const MeasuredGeometry& geo,
                                std::size_t stride) {
  if (stride == 0) throw ValueError("convert: stride must be positive");
  std::vector<double> freqs;
  for (const auto& r : rows) freqs.push_back(r.freq);
  std::sort(freqs.begin(), freqs.end());
  freqs.erase(std::unique(freqs.begin(), freqs.end()), freqs.end());
  const auto freq_index = [&](double f) {
    return static_cast<std::size_t>(std::lower_bound(freqs.begin(), freqs.end(), f) - freqs.begin());
  };

  // (freq, tx, angle) -> row
  std::map<std::tuple<std::size_t, std::size_t, double>, const MeasuredRow*> cells;
  std::vector<std::set<double>> angles(geo.n_tx);
  for (const auto& r : rows) {
    if (r.tx >= geo.n_tx)
      throw ConfigError("tx index " + std::to_string(r.tx) + " outside 0.." + std::to_string(geo.n_tx - 1), r.line);
    const auto key = std::make_tuple(freq_index(r.freq), r.tx, r.angle_deg);
    const auto [it, fresh] = cells.emplace(key, &r);
    if (!fresh)
      throw ConfigError("duplicate entry (rows " + std::to_string(it->second->line) + " and " +
                            std::to_string(r.line) + ")",
                        r.line);
    angles[r.tx].insert(r.angle_deg);
  }

  std::vector<std::string> gaps;
  for (std::size_t t = 0; t < geo.n_tx; ++t) {
    if (angles[t].empty()) gaps.push_back("tx " + std::to_string(t) + ": no rows");
    for (std::size_t f = 0; f < freqs.size(); ++f)
      for (double a : angles[t])
        if (!cells.contains({f, t, a}))
          gaps.push_back("freq " + format_number(freqs[f]) + " tx " + std::to_string(t) + " angle " + format_number(a));
  }
  if (!gaps.empty()) {
    std::string msg = "missing measurements (" + std::to_string(gaps.size()) + "):";
    for (std::size_t i = 0; i < gaps.size() && i < 20; ++i) msg += "\n  " + gaps[i];
    if (gaps.size() > 20) msg += "\n  ...";
    throw ConfigError(msg, 0);
  }
  const std::size_t n_all = angles.front().size();
  for (std::size_t t = 1; t < geo.n_tx; ++t)
    if (angles[t].size() != n_all) throw ConfigError("every Tx must list the same number of receiver angles", 0);

  std::vector<Point2> tx;
  std::vector<std::vector<Point2>> rx;
  std::vector<std::vector<double>> kept(geo.n_tx);
  for (std::size_t t = 0; t < geo.n_tx; ++t) {
    const double tx_deg = geo.tx_start_deg + 360.0 * static_cast<double>(t) / static_cast<double>(geo.n_tx);
    const double rad = tx_deg * kPi / 180.0;
    tx.push_back({geo.radius * std::cos(rad), geo.radius * std::sin(rad)});
    std::vector<double> sorted(angles[t].begin(), angles[t].end());
    const auto offset = [tx_deg](double a) { return std::fmod(std::fmod(a - tx_deg, 360.0) + 360.0, 360.0); };
    std::stable_sort(sorted.begin(), sorted.end(), [&](double a, double b) { return offset(a) < offset(b); });
    std::vector<Point2> ring;
    for (std::size_t i = 0; i < sorted.size(); i += stride) {
      kept[t].push_back(sorted[i]);
      const double ar = sorted[i] * kPi / 180.0;
      ring.push_back({geo.radius * std::cos(ar), geo.radius * std::sin(ar)});
    }
    rx.push_back(std::move(ring));
  }

  const Point2 lo{-geo.doi_half, -geo.doi_half}, hi{geo.doi_half, geo.doi_half};
  Scene scene(lo, hi, geo.n_grid, tx, rx, freqs, geo.radius);
  MeasurementSet m{scene, {}, {}, std::nullopt};
  for (std::size_t f = 0; f < freqs.size(); ++f) {
    ComplexBatch y(geo.n_tx, scene.n_rx());
    for (std::size_t t = 0; t < geo.n_tx; ++t)
      for (std::size_t q = 0; q < kept[t].size(); ++q) y(t, q) = cells.at({f, t, kept[t][q]})->value;
    m.scattered.push_back(std::move(y));
    m.incident.push_back(incident_field(scene, freqs[f]));
  }
  return m;
}

}  // namespace misi
