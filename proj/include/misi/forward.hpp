#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "misi/geometry.hpp"
#include "misi/greens.hpp"
#include "misi/types.hpp"

namespace misi {

/// Scattered data per (frequency, Tx, Rx) plus incident fields on the inversion grid.
struct MeasurementSet {
  Scene scene;                          // inversion geometry
  std::vector<ComplexBatch> scattered;  // per frequency: n_tx x n_rx
  std::vector<ComplexBatch> incident;   // per frequency: n_tx x n_pixels
  std::optional<double> snr_db;         // empty for clean data

  void validate() const;
  bool operator==(const MeasurementSet&) const = default;
};

/// Relative residual ||E - G_D(chi E) - E_inc|| / ||E_inc|| of one Tx row.
double state_residual(const DomainOperator& op, const ComplexGrid& chi, std::span<const cplx> e_tot,
                      std::span<const cplx> e_inc);

/// Solves (I - G_D diag(chi)) E = E_inc for every Tx row with BiCGStab.
/// Throws ConvergenceError (carrying the achieved residual) after max_iter.
ComplexBatch solve_total_field(const DomainOperator& op, const ComplexGrid& chi, const ComplexBatch& e_inc,
                               double tol = 1e-6, std::size_t max_iter = 2000);

struct SynthesisOptions {
  std::size_t forward_n_grid = 128;
  double tol = 1e-6;
  std::size_t max_iter = 2000;
  int pad_factor = 2;
  /// Permit forward_n_grid <= scene.n_grid() (inverse crime).
  bool allow_inverse_crime = false;
};

MeasurementSet synthesize_measurements(const Scene& scene, const Phantom& phantom,
                                       const SynthesisOptions& opts = {});

/// Complex Gaussian noise at the requested SNR, independently per (frequency, Tx) vector.
/// Vectors with zero norm are left unchanged.
MeasurementSet add_noise(const MeasurementSet& mset, double snr_db, std::uint64_t seed);

/// Line source at tx near a homogeneous circular cylinder centred at the origin.
/// Returns the scattered field at points outside the cylinder and the total field inside.
/// With fixed_order unset the series runs to at least ceil(kb * radius) + 10 terms and
/// stops once a term falls below 1e-12 of the partial sum.
std::vector<cplx> mie_cylinder(double eps_r, double sigma, double radius, double freq,
                               std::span<const Point2> points, Point2 tx,
                               std::optional<int> fixed_order = std::nullopt);

}  // namespace misi
