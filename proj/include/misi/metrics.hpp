#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "misi/types.hpp"

namespace misi {

struct TrainRun;

struct TruthProfile {
  RealGrid eps_true;
  RealGrid sigma_true;
  double peak_eps = 0.0;
  double peak_sigma = 0.0;

  /// Peaks are the grid maxima.
  static TruthProfile from_grids(RealGrid eps_r, RealGrid sigma);
};

/// Finite stand-in for an infinite PSNR in numeric output files.
inline constexpr double kPsnrSentinel = 1e9;

/// 10 log10(peak^2 / MSE). Returns +infinity when MSE is zero.
double psnr(const RealGrid& recon, const RealGrid& truth, double peak);
inline double psnr_for_output(double v) { return v > kPsnrSentinel ? kPsnrSentinel : v; }

/// Linear-interpolation quantile (Hyndman-Fan type 7); q in [0, 1].
double quantile(std::vector<double> values, double q);

struct FiveNumber {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  double iqr() const { return q3 - q1; }
};

FiveNumber five_number(std::span<const double> values);

struct CurveBand {
  std::vector<std::size_t> epochs;
  std::vector<double> mean;
  std::vector<double> std;  // population standard deviation
};

struct RunStatistics {
  std::size_t n_runs = 0;
  CurveBand psnr_eps;
  CurveBand psnr_sigma;
  std::vector<double> final_eps;  // per run, in input order
  std::vector<double> final_sigma;
  FiveNumber final_eps_summary;
  FiveNumber final_sigma_summary;
  double final_eps_mean = 0.0;
  double final_eps_std = 0.0;
  /// Index of the run whose final eps PSNR is nearest the median (lowest index on ties).
  std::size_t median_run = 0;
};

/// Per-epoch PSNR bands and final-PSNR statistics. Runs must log PSNR at the same epochs.
RunStatistics summarize_runs(std::span<const TrainRun> runs);

}  // namespace misi
