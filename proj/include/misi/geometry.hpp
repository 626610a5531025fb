#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "misi/types.hpp"

namespace misi {

/// Immutable experiment description: square DOI, uniform grid, circular array.
class Scene {
 public:
  /// Validates every invariant; throws ValueError on violation.
  Scene(Point2 doi_min, Point2 doi_max, std::size_t n_grid, std::vector<Point2> tx_positions,
        std::vector<std::vector<Point2>> rx_topology, std::vector<double> frequencies,
        double obs_radius);

  Point2 doi_min() const { return doi_min_; }
  Point2 doi_max() const { return doi_max_; }
  std::size_t n_grid() const { return n_grid_; }
  std::size_t n_pixels() const { return n_grid_ * n_grid_; }
  std::size_t n_tx() const { return tx_.size(); }
  /// Receivers per transmitter (identical for every Tx).
  std::size_t n_rx() const { return rx_.empty() ? 0 : rx_.front().size(); }
  std::size_t n_freq() const { return freqs_.size(); }
  const std::vector<Point2>& tx_positions() const { return tx_; }
  const std::vector<std::vector<Point2>>& rx_topology() const { return rx_; }
  const std::vector<double>& frequencies() const { return freqs_; }
  double obs_radius() const { return obs_radius_; }

  double cell_size() const { return (doi_max_.x - doi_min_.x) / static_cast<double>(n_grid_); }
  double cell_area() const { return cell_size() * cell_size(); }
  Point2 pixel_center(std::size_t iy, std::size_t ix) const;
  Point2 pixel_center(std::size_t index) const { return pixel_center(index / n_grid_, index % n_grid_); }
  /// Pixel centers mapped affinely onto [-1, 1]^2, (x, y) interleaved, row-major.
  std::vector<double> normalized_coords() const;

  /// Same geometry with a different grid resolution.
  Scene with_grid(std::size_t n_grid) const;

  bool operator==(const Scene&) const = default;

 private:
  Point2 doi_min_, doi_max_;
  std::size_t n_grid_;
  std::vector<Point2> tx_;
  std::vector<std::vector<Point2>> rx_;
  std::vector<double> freqs_;
  double obs_radius_;
};

struct FresnelLayout {
  std::size_t n_tx = 12;
  /// Half-width of the excluded sector on each side of the active Tx.
  double blind_deg = 30.0;
  double rx_step_deg = 3.0;
  double radius = 3.0;
  double doi_half = 0.5;
  std::size_t n_grid = 64;
  std::vector<double> frequencies{0.3e9, 0.4e9, 0.5e9};
};

/// Tx uniformly spaced on a circle (first at angle 0); each Tx sees receivers
/// from tx_angle + blind_deg to tx_angle + 360 - blind_deg inclusive, every rx_step_deg.
Scene build_fresnel_like_scene(const FresnelLayout& layout);

std::size_t fresnel_rx_count(double blind_deg, double rx_step_deg);

enum class ShapeKind { disk, annulus };

struct Shape {
  ShapeKind kind = ShapeKind::disk;
  Point2 center;
  double r_inner = 0.0;  // annulus only
  double r_outer = 0.0;  // disk radius or annulus outer radius
  double eps_r = 1.0;
  double sigma = 0.0;
  bool operator==(const Shape&) const = default;
};

/// Background is vacuum (eps_r = 1, sigma = 0). Later shapes overwrite earlier ones.
struct Phantom {
  std::vector<Shape> shapes;
  void validate() const;
  bool operator==(const Phantom&) const = default;
};

Shape make_disk(Point2 center, double radius, double eps_r, double sigma = 0.0);
Shape make_annulus(Point2 center, double r_inner, double r_outer, double eps_r, double sigma = 0.0);

/// Two disks (r = 0.1 m at (0.3, +-0.15)) and a ring (0.15/0.3 m at (-0.1, 0)).
Phantom austria_phantom(double eps_r, double sigma = 0.0);
/// Lossy variant: disks eps_r 6, 0.05 S/m; ring eps_r 9, 0.03 S/m.
Phantom austria_lossy_phantom();

struct MaterialGrids {
  RealGrid eps_r;
  RealGrid sigma;
};

/// Pixel-center membership test at the scene resolution (or n_grid_override).
MaterialGrids rasterize_phantom(const Phantom& phantom, const Scene& scene,
                                std::optional<std::size_t> n_grid_override = std::nullopt);

/// chi = (eps_r - 1) - j sigma / (omega eps0).
ComplexGrid contrast_of(const RealGrid& eps_r, const RealGrid& sigma, double freq);

}  // namespace misi
