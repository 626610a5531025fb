#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "misi/geometry.hpp"
#include "misi/types.hpp"

namespace misi {

/// Equal-area-circle (Richmond) discretisation of k^2 * (-j/4) H0^(2)(k|r - r'|)
/// integrated over one cell. a is the equivalent circle radius, kb the background wavenumber.
cplx kernel_offdiag(double kb, double a, double rho);
cplx kernel_self(double kb, double a);
inline double equivalent_radius(double cell_size) { return cell_size / std::sqrt(kPi); }

/// Line-source incident field (-j/4) H0^(2)(kb |r - tx|) at every pixel, one row per Tx.
ComplexBatch incident_field(const Scene& scene, double freq);

/// DOI -> DOI operator G_D applied by zero-padded circular convolution.
class DomainOperator {
 public:
  DomainOperator(const Scene& scene, double freq, int pad_factor = 4);

  double freq() const { return freq_; }
  int pad_factor() const { return pad_; }
  std::size_t n_grid() const { return n_; }
  std::size_t padded_size() const { return n_ * static_cast<std::size_t>(pad_); }
  double cell_area() const { return cell_area_; }
  /// Dense-matrix entry for a pixel offset in cells.
  cplx kernel(long dx, long dy) const;

  void apply(const ComplexBatch& sources, ComplexBatch& out) const;
  ComplexBatch apply(const ComplexBatch& sources) const;
  void apply_adjoint(const ComplexBatch& fields, ComplexBatch& out) const;
  ComplexBatch apply_adjoint(const ComplexBatch& fields) const;

  /// Single-vector form; scratch is resized to padded_size()^2 as needed.
  void apply_vector(std::span<const cplx> in, std::span<cplx> out, bool adjoint,
                    std::vector<cplx>& scratch) const;

 private:
  struct Plans;

  double freq_;
  int pad_;
  std::size_t n_;
  double cell_area_;
  double cell_;
  double kb_;
  double a_;
  std::vector<cplx> kernel_fft_;  // spectrum of the circulant embedding, pre-scaled by 1/P^2
  std::shared_ptr<const Plans> plans_;
};

/// DOI -> receivers operator G_S. Receivers shared between transmitters are stored once;
/// each Tx addresses its rows through an index table.
class SurfaceOperator {
 public:
  SurfaceOperator(const Scene& scene, double freq);

  double freq() const { return freq_; }
  std::size_t n_tx() const { return rows_of_tx_.size(); }
  std::size_t n_rx() const { return rows_of_tx_.empty() ? 0 : rows_of_tx_.front().size(); }
  std::size_t n_pixels() const { return n_pix_; }
  std::size_t unique_receivers() const { return n_unique_; }
  /// Batched (matrix-matrix) application is used when receivers are mostly shared.
  bool batched() const { return batched_; }
  cplx entry(std::size_t tx, std::size_t rx, std::size_t pixel) const;

  /// (n_tx x n_pix) -> (n_tx x n_rx)
  void apply(const ComplexBatch& sources, ComplexBatch& out) const;
  ComplexBatch apply(const ComplexBatch& sources) const;
  /// (n_tx x n_rx) -> (n_tx x n_pix), conjugate transpose.
  void apply_adjoint(const ComplexBatch& data, ComplexBatch& out) const;
  ComplexBatch apply_adjoint(const ComplexBatch& data) const;

  void apply_tx(std::size_t tx, std::span<const cplx> src, std::span<cplx> out) const;
  void apply_adjoint_tx(std::size_t tx, std::span<const cplx> data, std::span<cplx> out) const;

 private:
  double freq_;
  std::size_t n_pix_;
  std::size_t n_unique_ = 0;
  bool batched_ = false;
  std::vector<cplx> matrix_;                          // n_unique x n_pix
  std::vector<cplx> matrix_t_;                        // n_pix x n_unique, batched mode only
  std::vector<std::vector<std::size_t>> rows_of_tx_;  // n_tx x n_rx
};

}  // namespace misi
