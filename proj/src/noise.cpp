#include <cmath>
#include <random>

#include "misi/error.hpp"
#include "misi/forward.hpp"
#include "misi/kernels.hpp"

namespace misi {

MeasurementSet add_noise(const MeasurementSet& mset, double snr_db, std::uint64_t seed) {
  if (!std::isfinite(snr_db)) throw ValueError("add_noise: snr must be finite");
  MeasurementSet out = mset;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double snr_linear = std::pow(10.0, snr_db / 10.0);
  for (auto& block : out.scattered) {
    for (std::size_t p = 0; p < block.rows(); ++p) {
      auto y = block.row(p);
      const double energy = kernels::norm2(y);
      if (energy == 0.0) continue;
      const double scale = std::sqrt(energy / (static_cast<double>(y.size()) * snr_linear)) / std::sqrt(2.0);
      for (auto& v : y) {
        const double re = normal(rng);
        const double im = normal(rng);
        v += scale * cplx(re, im);
      }
    }
  }
  out.snr_db = snr_db;
  return out;
}

}  // namespace misi
