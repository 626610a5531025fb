#include "misi/geometry.hpp"

#include <cmath>
#include <string>

#include "misi/error.hpp"

namespace misi {
namespace {

bool inside_doi(Point2 p, Point2 lo, Point2 hi) {
  return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y;
}

Point2 on_circle(double radius, double deg) {
  const double rad = deg * kPi / 180.0;
  return {radius * std::cos(rad), radius * std::sin(rad)};
}

}  // namespace

Scene::Scene(Point2 doi_min, Point2 doi_max, std::size_t n_grid, std::vector<Point2> tx_positions,
             std::vector<std::vector<Point2>> rx_topology, std::vector<double> frequencies,
             double obs_radius)
    : doi_min_(doi_min),
      doi_max_(doi_max),
      n_grid_(n_grid),
      tx_(std::move(tx_positions)),
      rx_(std::move(rx_topology)),
      freqs_(std::move(frequencies)),
      obs_radius_(obs_radius) {
  if (n_grid_ < 2) throw ValueError("scene: n_grid must be >= 2");
  if (!(doi_max_.x > doi_min_.x) || !(doi_max_.y > doi_min_.y))
    throw ValueError("scene: doi_max must exceed doi_min componentwise");
  const double wx = doi_max_.x - doi_min_.x, wy = doi_max_.y - doi_min_.y;
  if (std::abs(wx - wy) > 1e-12 * std::max(wx, wy))
    throw ValueError("scene: DOI must be square (uniform cell size in x and y)");
  if (tx_.empty()) throw ValueError("scene: at least one transmitter required");
  if (rx_.size() != tx_.size()) throw ValueError("scene: rx topology must list receivers per Tx");
  const std::size_t nrx = rx_.front().size();
  if (nrx == 0) throw ValueError("scene: each Tx needs at least one receiver");
  for (const auto& ring : rx_) {
    if (ring.size() != nrx) throw ValueError("scene: every Tx must have the same receiver count");
    for (const auto& p : ring)
      if (inside_doi(p, doi_min_, doi_max_)) throw ValueError("scene: receiver inside DOI");
  }
  for (const auto& p : tx_)
    if (inside_doi(p, doi_min_, doi_max_)) throw ValueError("scene: transmitter inside DOI");
  if (freqs_.empty()) throw ValueError("scene: at least one frequency required");
  for (std::size_t i = 0; i < freqs_.size(); ++i) {
    if (!(freqs_[i] > 0.0)) throw ValueError("scene: frequencies must be positive");
    if (i > 0 && !(freqs_[i] > freqs_[i - 1]))
      throw ValueError("scene: frequencies must be strictly increasing");
  }
}

Point2 Scene::pixel_center(std::size_t iy, std::size_t ix) const {
  const double d = cell_size();
  return {doi_min_.x + (static_cast<double>(ix) + 0.5) * d,
          doi_min_.y + (static_cast<double>(iy) + 0.5) * d};
}

std::vector<double> Scene::normalized_coords() const {
  std::vector<double> out(2 * n_pixels());
  const double cx = 0.5 * (doi_min_.x + doi_max_.x), cy = 0.5 * (doi_min_.y + doi_max_.y);
  const double hx = 0.5 * (doi_max_.x - doi_min_.x), hy = 0.5 * (doi_max_.y - doi_min_.y);
  for (std::size_t i = 0; i < n_pixels(); ++i) {
    const Point2 p = pixel_center(i);
    out[2 * i] = (p.x - cx) / hx;
    out[2 * i + 1] = (p.y - cy) / hy;
  }
  return out;
}

Scene Scene::with_grid(std::size_t n_grid) const {
  return Scene(doi_min_, doi_max_, n_grid, tx_, rx_, freqs_, obs_radius_);
}

std::size_t fresnel_rx_count(double blind_deg, double rx_step_deg) {
  return static_cast<std::size_t>(std::floor((360.0 - 2.0 * blind_deg) / rx_step_deg + 1e-9)) + 1;
}

Scene build_fresnel_like_scene(const FresnelLayout& l) {
  if (l.n_tx < 1) throw ValueError("fresnel scene: n_tx must be >= 1");
  if (!(l.rx_step_deg > 0.0)) throw ValueError("fresnel scene: rx_step_deg must be positive");
  if (!(l.blind_deg >= 0.0) || !(2.0 * l.blind_deg < 360.0))
    throw ValueError("fresnel scene: blind sector must leave a non-empty arc");
  if (!(l.doi_half > 0.0)) throw ValueError("fresnel scene: doi_half must be positive");
  if (l.radius <= l.doi_half * std::sqrt(2.0))
    throw ValueError("fresnel scene: radius " + std::to_string(l.radius) +
                     " m places antennas inside the DOI");
  const std::size_t nrx = fresnel_rx_count(l.blind_deg, l.rx_step_deg);
  std::vector<Point2> tx;
  std::vector<std::vector<Point2>> rx;
  for (std::size_t p = 0; p < l.n_tx; ++p) {
    const double tx_deg = 360.0 * static_cast<double>(p) / static_cast<double>(l.n_tx);
    tx.push_back(on_circle(l.radius, tx_deg));
    std::vector<Point2> ring;
    ring.reserve(nrx);
    for (std::size_t q = 0; q < nrx; ++q)
      ring.push_back(on_circle(l.radius, tx_deg + l.blind_deg + static_cast<double>(q) * l.rx_step_deg));
    rx.push_back(std::move(ring));
  }
  return Scene({-l.doi_half, -l.doi_half}, {l.doi_half, l.doi_half}, l.n_grid, std::move(tx),
               std::move(rx), l.frequencies, l.radius);
}

void Phantom::validate() const {
  for (const auto& s : shapes) {
    if (!(s.eps_r >= 1.0)) throw ValueError("phantom: eps_r must be >= 1");
    if (!(s.sigma >= 0.0)) throw ValueError("phantom: sigma must be >= 0");
    if (!(s.r_outer > 0.0)) throw ValueError("phantom: radius must be positive");
    if (s.kind == ShapeKind::annulus && !(s.r_inner >= 0.0 && s.r_inner < s.r_outer))
      throw ValueError("phantom: annulus inner radius must be below outer radius");
  }
}

Shape make_disk(Point2 center, double radius, double eps_r, double sigma) {
  return Shape{ShapeKind::disk, center, 0.0, radius, eps_r, sigma};
}

Shape make_annulus(Point2 center, double r_inner, double r_outer, double eps_r, double sigma) {
  return Shape{ShapeKind::annulus, center, r_inner, r_outer, eps_r, sigma};
}

Phantom austria_phantom(double eps_r, double sigma) {
  return Phantom{{make_disk({0.3, -0.15}, 0.1, eps_r, sigma), make_disk({0.3, 0.15}, 0.1, eps_r, sigma),
                  make_annulus({-0.1, 0.0}, 0.15, 0.3, eps_r, sigma)}};
}

Phantom austria_lossy_phantom() {
  return Phantom{{make_disk({0.3, -0.15}, 0.1, 6.0, 0.05), make_disk({0.3, 0.15}, 0.1, 6.0, 0.05),
                  make_annulus({-0.1, 0.0}, 0.15, 0.3, 9.0, 0.03)}};
}

MaterialGrids rasterize_phantom(const Phantom& phantom, const Scene& scene,
                                std::optional<std::size_t> n_grid_override) {
  phantom.validate();
  const Scene grid = n_grid_override ? scene.with_grid(*n_grid_override) : scene;
  const std::size_t n = grid.n_grid();
  MaterialGrids out{RealGrid(n, 1.0), RealGrid(n, 0.0)};
  for (std::size_t i = 0; i < n * n; ++i) {
    const Point2 c = grid.pixel_center(i);
    for (const auto& s : phantom.shapes) {
      const double r = distance(c, s.center);
      const bool in = s.kind == ShapeKind::disk ? r <= s.r_outer : (r >= s.r_inner && r <= s.r_outer);
      if (in) {
        out.eps_r[i] = s.eps_r;
        out.sigma[i] = s.sigma;
      }
    }
  }
  return out;
}

ComplexGrid contrast_of(const RealGrid& eps_r, const RealGrid& sigma, double freq) {
  if (eps_r.n() != sigma.n()) throw DimensionError("contrast_of: grid size mismatch");
  if (!(freq > 0.0)) throw ValueError("contrast_of: frequency must be positive");
  const double scale = 1.0 / (angular_frequency(freq) * kEps0);
  ComplexGrid chi(eps_r.n());
  for (std::size_t i = 0; i < chi.size(); ++i) chi[i] = {eps_r[i] - 1.0, -sigma[i] * scale};
  return chi;
}

}  // namespace misi
