#include "misi/forward.hpp"

#include <cmath>
#include <string>

#include "misi/error.hpp"
#include "misi/kernels.hpp"
#include "misi/parallel.hpp"

namespace misi {
namespace {

// y = x - G_D(chi * x)
void apply_state_operator(const DomainOperator& op, const ComplexGrid& chi, std::span<const cplx> x,
                          std::span<cplx> y, std::vector<cplx>& tmp, std::vector<cplx>& scratch) {
  tmp.resize(x.size());
  kernels::mul(chi.values(), x, tmp);
  op.apply_vector(tmp, y, false, scratch);
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] - y[i];
}

double bicgstab_row(const DomainOperator& op, const ComplexGrid& chi, std::span<const cplx> b,
                    std::span<cplx> x, double tol, std::size_t max_iter) {
  const std::size_t n = b.size();
  const double bnorm = std::sqrt(kernels::norm2(b));
  std::copy(b.begin(), b.end(), x.begin());
  if (bnorm == 0.0) return 0.0;

  std::vector<cplx> r(n), r_hat(n), p(n, 0.0), v(n, 0.0), s(n), t(n), tmp, scratch;
  auto true_residual = [&] {
    apply_state_operator(op, chi, x, r, tmp, scratch);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
    return std::sqrt(kernels::norm2(r)) / bnorm;
  };

  double res = true_residual();
  std::size_t it = 0;
  while (res > tol && it < max_iter) {
    // (re)start from the current true residual
    r_hat = r;
    std::fill(p.begin(), p.end(), cplx{});
    std::fill(v.begin(), v.end(), cplx{});
    cplx rho = 1.0, alpha = 1.0, omega = 1.0;
    while (it < max_iter) {
      ++it;
      const cplx rho_new = kernels::dotc(r_hat, r);
      if (std::abs(rho_new) == 0.0) break;
      const cplx beta = (rho_new / rho) * (alpha / omega);
      for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
      apply_state_operator(op, chi, p, v, tmp, scratch);
      const cplx rv = kernels::dotc(r_hat, v);
      if (std::abs(rv) == 0.0) break;
      alpha = rho_new / rv;
      for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
      if (std::sqrt(kernels::norm2(s)) / bnorm <= tol) {
        kernels::axpy(alpha, p, x);
        break;
      }
      apply_state_operator(op, chi, s, t, tmp, scratch);
      const double tt = kernels::norm2(t);
      if (tt == 0.0) break;
      omega = kernels::dotc(t, s) / tt;
      for (std::size_t i = 0; i < n; ++i) {
        x[i] += alpha * p[i] + omega * s[i];
        r[i] = s[i] - omega * t[i];
      }
      rho = rho_new;
      if (std::sqrt(kernels::norm2(r)) / bnorm <= tol) break;
      if (std::abs(omega) == 0.0) break;
    }
    res = true_residual();
  }
  if (res > tol)
    throw ConvergenceError("BiCGStab did not converge: residual " + std::to_string(res) + " after " +
                               std::to_string(it) + " iterations",
                           res, it);
  return res;
}

}  // namespace

void MeasurementSet::validate() const {
  const std::size_t nf = scene.n_freq();
  if (scattered.size() != nf || incident.size() != nf)
    throw DimensionError("measurement set: one data block per frequency required");
  for (std::size_t f = 0; f < nf; ++f) {
    if (scattered[f].rows() != scene.n_tx() || scattered[f].cols() != scene.n_rx())
      throw DimensionError("measurement set: scattered block must be n_tx x n_rx");
    if (incident[f].rows() != scene.n_tx() || incident[f].cols() != scene.n_pixels())
      throw DimensionError("measurement set: incident block must be n_tx x n_pixels");
  }
}

double state_residual(const DomainOperator& op, const ComplexGrid& chi, std::span<const cplx> e_tot,
                      std::span<const cplx> e_inc) {
  std::vector<cplx> y(e_tot.size()), tmp, scratch;
  apply_state_operator(op, chi, e_tot, y, tmp, scratch);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= e_inc[i];
  const double den = std::sqrt(kernels::norm2(e_inc));
  return den > 0.0 ? std::sqrt(kernels::norm2(y)) / den : std::sqrt(kernels::norm2(y));
}

ComplexBatch solve_total_field(const DomainOperator& op, const ComplexGrid& chi, const ComplexBatch& e_inc,
                               double tol, std::size_t max_iter) {
  if (!(tol > 0.0)) throw ValueError("solve_total_field: tol must be positive");
  if (chi.size() != e_inc.cols() || chi.n() != op.n_grid())
    throw DimensionError("solve_total_field: contrast grid does not match operator");
  ComplexBatch out(e_inc.rows(), e_inc.cols());
  parallel_for(e_inc.rows(), [&](std::size_t r) { bicgstab_row(op, chi, e_inc.row(r), out.row(r), tol, max_iter); });
  return out;
}

MeasurementSet synthesize_measurements(const Scene& scene, const Phantom& phantom, const SynthesisOptions& opts) {
  if (opts.forward_n_grid <= scene.n_grid() && !opts.allow_inverse_crime)
    throw ValueError("synthesize: forward grid (" + std::to_string(opts.forward_n_grid) +
                     ") must be finer than the inversion grid (" + std::to_string(scene.n_grid()) + ")");
  const Scene fine = scene.with_grid(opts.forward_n_grid);
  const MaterialGrids mat = rasterize_phantom(phantom, fine);

  MeasurementSet out{scene, {}, {}, std::nullopt};
  for (double f : scene.frequencies()) {
    const ComplexGrid chi = contrast_of(mat.eps_r, mat.sigma, f);
    const DomainOperator op(fine, f, opts.pad_factor);
    const ComplexBatch e_inc_fine = incident_field(fine, f);
    const ComplexBatch e_tot = solve_total_field(op, chi, e_inc_fine, opts.tol, opts.max_iter);
    ComplexBatch j(e_tot.rows(), e_tot.cols());
    for (std::size_t p = 0; p < e_tot.rows(); ++p) kernels::mul(chi.values(), e_tot.row(p), j.row(p));
    out.scattered.push_back(SurfaceOperator(fine, f).apply(j));
    out.incident.push_back(incident_field(scene, f));
  }
  return out;
}

}  // namespace misi
