#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "misi/forward.hpp"
#include "misi/greens.hpp"
#include "misi/types.hpp"

namespace misi {

/// Operators and data for one frequency of an inversion.
struct FrequencyProblem {
  double freq;
  DomainOperator domain;
  SurfaceOperator surface;
  ComplexBatch e_inc;  // n_tx x n_pixels
  ComplexBatch y;      // n_tx x n_rx
  double e_inc_norm2;
  double y_norm2;
};

/// Pre-computed operators for every frequency of a measurement set.
class InverseProblem {
 public:
  explicit InverseProblem(const MeasurementSet& mset, int pad_factor = 4);

  const Scene& scene() const { return scene_; }
  std::size_t n_freq() const { return freqs_.size(); }
  const FrequencyProblem& at(std::size_t f) const { return freqs_.at(f); }

 private:
  Scene scene_;
  std::vector<FrequencyProblem> freqs_;
};

/// Contrast sources per scene frequency (n_tx x n_pixels); inactive frequencies may be empty.
struct SourceSet {
  std::vector<ComplexBatch> per_freq;
  bool operator==(const SourceSet&) const = default;
};

using ContrastSet = std::vector<ComplexGrid>;  // per scene frequency

struct FrequencyLoss {
  std::size_t freq_index = 0;
  double data = 0.0;
  double state = 0.0;
  double cross = 0.0;
};

struct LossBreakdown {
  std::vector<FrequencyLoss> terms;  // one per active frequency
  double beta = 0.0;
  double total = 0.0;
};

/// 0.5^(stage-1) * exp(-decay * k / K). stage is 1-based, 0 <= k <= K.
double beta_schedule(int stage, double k, double K, double decay = 10.0);

/// Residuals at one (J, chi) for a single frequency.
struct FrequencyState {
  ComplexBatch gj;   // G_D J
  ComplexBatch w;    // chi (E_inc + G_D J)
  ComplexBatch d;    // G_S J - y
  ComplexBatch r;    // w - J
  ComplexBatch rho;  // G_S w - y
};

FrequencyState evaluate_state(const FrequencyProblem& fp, const ComplexBatch& j, const ComplexGrid& chi);
/// Same, with G_D J supplied by the caller.
FrequencyState evaluate_state(const FrequencyProblem& fp, const ComplexBatch& j, const ComplexGrid& chi,
                              ComplexBatch gj);
/// Same, with G_D J and the data residual G_S J - y both supplied (chi changes neither).
FrequencyState evaluate_state(const FrequencyProblem& fp, const ComplexBatch& j, const ComplexGrid& chi,
                              ComplexBatch gj, ComplexBatch d);
FrequencyLoss losses_of(const FrequencyProblem& fp, const FrequencyState& st);

/// Gradient of l_data + l_state + beta l_cross with respect to J under
/// d/da L(J + a v) = Re<g, v>, <a, b> = sum conj(a) b.
ComplexBatch gradient_of(const FrequencyProblem& fp, const FrequencyState& st, const ComplexGrid& chi,
                         double beta);

/// Response of every residual to a step along v, and the quadratic coefficient
/// Denom(v) = ||G_S v||^2/||y||^2 + ||chi G_D v - v||^2/||E_inc||^2 + beta ||G_S(chi G_D v)||^2/||y||^2.
struct DirectionResponse {
  ComplexBatch gv;  // G_D v
  ComplexBatch sv;  // G_S v
  ComplexBatch av;  // chi G_D v - v
  ComplexBatch su;  // G_S(chi G_D v); empty when beta == 0
  double denom = 0.0;
};

DirectionResponse direction_response(const FrequencyProblem& fp, const ComplexBatch& v, const ComplexGrid& chi,
                                     double beta);

LossBreakdown eval_losses(const InverseProblem& prob, std::span<const std::size_t> active, const SourceSet& j,
                          const ContrastSet& chi, double beta);

SourceSet grad_J(const InverseProblem& prob, std::span<const std::size_t> active, const SourceSet& j,
                 const ContrastSet& chi, double beta);

/// Elementwise: entries with |g| > threshold are rescaled to |g| = threshold, phase kept.
void clip_gradient_magnitude(std::span<cplx> g, double threshold);
void clip_gradient_magnitude(SourceSet& g, double threshold);

/// E_inc + G_D J for each active frequency (other entries empty).
std::vector<ComplexBatch> total_fields(const InverseProblem& prob, std::span<const std::size_t> active,
                                       const SourceSet& j);

struct ChiGradient {
  ContrastSet g_chi;      // per scene frequency; empty when inactive
  RealGrid d_delta_eps;   // summed over active frequencies
  RealGrid d_sigma;
  double loss = 0.0;                // sum over active f of l_state + beta l_cross
  std::vector<FrequencyLoss> terms;  // state and cross only; data left at 0, cross NaN when beta == 0
};

/// Gradient of sum_f (l_state + beta l_cross) with respect to the contrast with
/// J and E_tot held fixed, chained to the (delta eps, sigma) maps.
ChiGradient grad_chi(const InverseProblem& prob, std::span<const std::size_t> active, const SourceSet& j,
                     const ContrastSet& chi, const std::vector<ComplexBatch>& e_tot, double beta);

/// chi_f = delta_eps - j sigma / (omega_f eps0) for every active frequency.
ContrastSet contrasts_from_maps(const InverseProblem& prob, std::span<const std::size_t> active,
                                const RealGrid& delta_eps, const RealGrid& sigma);

}  // namespace misi
