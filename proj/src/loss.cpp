#include "misi/loss.hpp"

#include <cmath>
#include <limits>

#include "misi/error.hpp"
#include "misi/kernels.hpp"

namespace misi {
namespace {

void check_shapes(const FrequencyProblem& fp, const ComplexBatch& j, const ComplexGrid& chi) {
  if (!j.same_shape(fp.e_inc)) throw DimensionError("loss: source block must be n_tx x n_pixels");
  if (chi.size() != fp.e_inc.cols()) throw DimensionError("loss: contrast grid does not match scene");
}

// out.row(p) = chi * in.row(p)
void scale_rows(const ComplexGrid& chi, const ComplexBatch& in, ComplexBatch& out) {
  if (!out.same_shape(in)) out = ComplexBatch(in.rows(), in.cols());
  for (std::size_t p = 0; p < in.rows(); ++p) kernels::mul(chi.values(), in.row(p), out.row(p));
}

// out.row(p) = conj(chi) * in.row(p)
void scale_rows_conj(const ComplexGrid& chi, const ComplexBatch& in, ComplexBatch& out) {
  if (!out.same_shape(in)) out = ComplexBatch(in.rows(), in.cols());
  for (std::size_t p = 0; p < in.rows(); ++p) kernels::mulc(chi.values(), in.row(p), out.row(p));
}

}  // namespace

InverseProblem::InverseProblem(const MeasurementSet& mset, int pad_factor) : scene_(mset.scene) {
  mset.validate();
  for (std::size_t f = 0; f < scene_.n_freq(); ++f) {
    const double freq = scene_.frequencies()[f];
    const double e2 = kernels::norm2(mset.incident[f].data());
    const double y2 = kernels::norm2(mset.scattered[f].data());
    freqs_.push_back(FrequencyProblem{freq, DomainOperator(scene_, freq, pad_factor), SurfaceOperator(scene_, freq),
                                      mset.incident[f], mset.scattered[f], e2, y2});
  }
}

double beta_schedule(int stage, double k, double K, double decay) {
  if (stage < 1) throw ValueError("beta_schedule: stage is 1-based");
  if (!(K > 0.0) || k < 0.0 || k > K) throw ValueError("beta_schedule: need 0 <= k <= K, K > 0");
  return std::pow(0.5, stage - 1) * std::exp(-decay * k / K);
}

FrequencyState evaluate_state(const FrequencyProblem& fp, const ComplexBatch& j, const ComplexGrid& chi) {
  check_shapes(fp, j, chi);
  return evaluate_state(fp, j, chi, fp.domain.apply(j));
}

FrequencyState evaluate_state(const FrequencyProblem& fp, const ComplexBatch& j, const ComplexGrid& chi,
                              ComplexBatch gj) {
  check_shapes(fp, j, chi);
  ComplexBatch d = fp.surface.apply(j);
  kernels::axpy(-1.0, fp.y.data(), d.data());
  return evaluate_state(fp, j, chi, std::move(gj), std::move(d));
}

FrequencyState evaluate_state(const FrequencyProblem& fp, const ComplexBatch& j, const ComplexGrid& chi,
                              ComplexBatch gj, ComplexBatch d) {
  check_shapes(fp, j, chi);
  if (!gj.same_shape(j) || !d.same_shape(fp.y)) throw DimensionError("loss: cached residual shape mismatch");
  if (!(fp.y_norm2 > 0.0)) throw NumericError("loss: measured data has zero norm");
  if (!(fp.e_inc_norm2 > 0.0)) throw NumericError("loss: incident field has zero norm");
  FrequencyState st;
  st.gj = std::move(gj);
  ComplexBatch e_tot = fp.e_inc;
  kernels::axpy(1.0, st.gj.data(), e_tot.data());
  scale_rows(chi, e_tot, st.w);
  st.r = st.w;
  kernels::axpy(-1.0, j.data(), st.r.data());
  st.d = std::move(d);
  st.rho = fp.surface.apply(st.w);
  kernels::axpy(-1.0, fp.y.data(), st.rho.data());
  return st;
}

FrequencyLoss losses_of(const FrequencyProblem& fp, const FrequencyState& st) {
  FrequencyLoss l;
  l.data = kernels::norm2(st.d.data()) / fp.y_norm2;
  l.state = kernels::norm2(st.r.data()) / fp.e_inc_norm2;
  l.cross = kernels::norm2(st.rho.data()) / fp.y_norm2;
  return l;
}

ComplexBatch gradient_of(const FrequencyProblem& fp, const FrequencyState& st, const ComplexGrid& chi,
                         double beta) {
  const double cs = 2.0 / fp.e_inc_norm2;
  const double cd = 2.0 / fp.y_norm2;
  // inner = cs r + beta cd G_S^H rho, then G_D^H(conj(chi) inner)
  ComplexBatch inner(st.r.rows(), st.r.cols());
  kernels::axpy(cs, st.r.data(), inner.data());
  if (beta != 0.0) {
    const ComplexBatch back = fp.surface.apply_adjoint(st.rho);
    kernels::axpy(beta * cd, back.data(), inner.data());
  }
  ComplexBatch tmp;
  scale_rows_conj(chi, inner, tmp);
  ComplexBatch g = fp.domain.apply_adjoint(tmp);
  kernels::axpy(-cs, st.r.data(), g.data());
  const ComplexBatch back_d = fp.surface.apply_adjoint(st.d);
  kernels::axpy(cd, back_d.data(), g.data());
  return g;
}

DirectionResponse direction_response(const FrequencyProblem& fp, const ComplexBatch& v, const ComplexGrid& chi,
                                     double beta) {
  check_shapes(fp, v, chi);
  DirectionResponse out;
  out.gv = fp.domain.apply(v);
  out.sv = fp.surface.apply(v);
  ComplexBatch u;
  scale_rows(chi, out.gv, u);
  out.av = u;
  kernels::axpy(-1.0, v.data(), out.av.data());
  out.denom = kernels::norm2(out.sv.data()) / fp.y_norm2 + kernels::norm2(out.av.data()) / fp.e_inc_norm2;
  if (beta != 0.0) {
    out.su = fp.surface.apply(u);
    out.denom += beta * kernels::norm2(out.su.data()) / fp.y_norm2;
  }
  return out;
}

LossBreakdown eval_losses(const InverseProblem& prob, std::span<const std::size_t> active, const SourceSet& j,
                          const ContrastSet& chi, double beta) {
  LossBreakdown out;
  out.beta = beta;
  for (std::size_t f : active) {
    const FrequencyProblem& fp = prob.at(f);
    FrequencyLoss l = losses_of(fp, evaluate_state(fp, j.per_freq.at(f), chi.at(f)));
    l.freq_index = f;
    out.total += l.data + l.state + beta * l.cross;
    out.terms.push_back(l);
  }
  return out;
}

SourceSet grad_J(const InverseProblem& prob, std::span<const std::size_t> active, const SourceSet& j,
                 const ContrastSet& chi, double beta) {
  SourceSet g;
  g.per_freq.resize(prob.n_freq());
  for (std::size_t f : active) {
    const FrequencyProblem& fp = prob.at(f);
    g.per_freq[f] = gradient_of(fp, evaluate_state(fp, j.per_freq.at(f), chi.at(f)), chi.at(f), beta);
  }
  return g;
}

void clip_gradient_magnitude(std::span<cplx> g, double threshold) {
  if (!(threshold > 0.0)) throw ValueError("clip: threshold must be positive");
  for (auto& v : g) {
    const double m = std::abs(v);
    if (m > threshold) v *= threshold / m;
  }
}

void clip_gradient_magnitude(SourceSet& g, double threshold) {
  for (auto& b : g.per_freq) clip_gradient_magnitude(b.data(), threshold);
}

std::vector<ComplexBatch> total_fields(const InverseProblem& prob, std::span<const std::size_t> active,
                                       const SourceSet& j) {
  std::vector<ComplexBatch> out(prob.n_freq());
  for (std::size_t f : active) {
    const FrequencyProblem& fp = prob.at(f);
    out[f] = fp.domain.apply(j.per_freq.at(f));
    kernels::axpy(1.0, fp.e_inc.data(), out[f].data());
  }
  return out;
}

ChiGradient grad_chi(const InverseProblem& prob, std::span<const std::size_t> active, const SourceSet& j,
                     const ContrastSet& chi, const std::vector<ComplexBatch>& e_tot, double beta) {
  const std::size_t npix = prob.scene().n_pixels();
  const std::size_t ngrid = prob.scene().n_grid();
  ChiGradient out;
  out.g_chi.resize(prob.n_freq());
  out.d_delta_eps = RealGrid(ngrid, 0.0);
  out.d_sigma = RealGrid(ngrid, 0.0);
  for (std::size_t f : active) {
    const FrequencyProblem& fp = prob.at(f);
    const ComplexBatch& et = e_tot.at(f);
    const ComplexBatch& jf = j.per_freq.at(f);
    check_shapes(fp, jf, chi.at(f));
    if (!et.same_shape(fp.e_inc)) throw DimensionError("grad_chi: total field shape mismatch");
    if (!(fp.y_norm2 > 0.0) || !(fp.e_inc_norm2 > 0.0))
      throw NumericError("grad_chi: zero-norm normalisation");

    ComplexBatch w;
    scale_rows(chi.at(f), et, w);
    ComplexBatch r = w;
    kernels::axpy(-1.0, jf.data(), r.data());
    FrequencyLoss l;
    l.freq_index = f;
    l.state = kernels::norm2(r.data()) / fp.e_inc_norm2;
    l.cross = std::numeric_limits<double>::quiet_NaN();
    out.loss += l.state;

    // per-pixel residual pulled back to the contrast: cs r + beta cd G_S^H rho
    ComplexBatch pull(r.rows(), r.cols());
    kernels::axpy(2.0 / fp.e_inc_norm2, r.data(), pull.data());
    if (beta != 0.0) {
      ComplexBatch rho = fp.surface.apply(w);
      kernels::axpy(-1.0, fp.y.data(), rho.data());
      l.cross = kernels::norm2(rho.data()) / fp.y_norm2;
      out.loss += beta * l.cross;
      const ComplexBatch back = fp.surface.apply_adjoint(rho);
      kernels::axpy(beta * 2.0 / fp.y_norm2, back.data(), pull.data());
    }
    out.terms.push_back(l);
    ComplexGrid g(ngrid, cplx{});
    std::vector<cplx> prod(npix);
    for (std::size_t p = 0; p < et.rows(); ++p) {
      kernels::mulc(et.row(p), pull.row(p), prod);
      for (std::size_t n = 0; n < npix; ++n) g[n] += prod[n];
    }
    const double sigma_scale = 1.0 / (angular_frequency(fp.freq) * kEps0);
    for (std::size_t n = 0; n < npix; ++n) {
      out.d_delta_eps[n] += g[n].real();
      out.d_sigma[n] += -g[n].imag() * sigma_scale;
    }
    out.g_chi[f] = std::move(g);
  }
  return out;
}

ContrastSet contrasts_from_maps(const InverseProblem& prob, std::span<const std::size_t> active,
                                const RealGrid& delta_eps, const RealGrid& sigma) {
  ContrastSet out(prob.n_freq());
  for (std::size_t f : active) {
    const double scale = 1.0 / (angular_frequency(prob.at(f).freq) * kEps0);
    ComplexGrid chi(delta_eps.n());
    for (std::size_t n = 0; n < chi.size(); ++n) chi[n] = {delta_eps[n], -sigma[n] * scale};
    out[f] = std::move(chi);
  }
  return out;
}

}  // namespace misi
