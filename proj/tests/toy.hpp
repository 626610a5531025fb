#pragma once

#include <vector>

#include "misi/forward.hpp"
#include "misi/loss.hpp"
#include "test_util.hpp"

namespace misi::test {

inline Scene toy_scene(std::size_t n_grid, std::size_t n_tx, std::vector<double> freqs) {
  FresnelLayout l;
  l.n_tx = n_tx;
  l.n_grid = n_grid;
  l.rx_step_deg = 10.0;
  l.frequencies = std::move(freqs);
  return build_fresnel_like_scene(l);
}

inline Phantom toy_phantom(double eps_r = 2.0, double sigma = 0.0) {
  return Phantom{{make_disk({0.1, -0.05}, 0.25, eps_r, sigma)}};
}

inline MeasurementSet toy_data(std::size_t n_grid, std::size_t n_tx, std::vector<double> freqs,
                               const Phantom& ph = toy_phantom()) {
  const Scene s = toy_scene(n_grid, n_tx, std::move(freqs));
  SynthesisOptions o;
  o.forward_n_grid = 2 * n_grid;
  o.pad_factor = 2;
  return synthesize_measurements(s, ph, o);
}

inline SourceSet random_sources(const InverseProblem& prob, std::uint64_t seed, double scale = 1e-3) {
  SourceSet j;
  for (std::size_t f = 0; f < prob.n_freq(); ++f)
    j.per_freq.push_back(random_batch(prob.scene().n_tx(), prob.scene().n_pixels(), seed + f, scale));
  return j;
}

inline ContrastSet random_contrasts(const InverseProblem& prob, std::uint64_t seed, double scale = 0.5) {
  ContrastSet c;
  for (std::size_t f = 0; f < prob.n_freq(); ++f) c.push_back(random_grid(prob.scene().n_grid(), seed + 7 * f, scale));
  return c;
}

inline std::vector<std::size_t> all_freqs(const InverseProblem& prob) {
  std::vector<std::size_t> a(prob.n_freq());
  for (std::size_t f = 0; f < a.size(); ++f) a[f] = f;
  return a;
}

}  // namespace misi::test
