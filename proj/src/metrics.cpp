#include "misi/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "misi/error.hpp"
#include "misi/trainer.hpp"

namespace misi {
namespace {

struct Moments {
  double mean = 0.0;
  double std = 0.0;
};

Moments moments(std::span<const double> v) {
  Moments m;
  if (v.empty()) return m;
  for (double x : v) m.mean += x;
  m.mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m.mean) * (x - m.mean);
  m.std = std::sqrt(ss / static_cast<double>(v.size()));
  return m;
}

CurveBand band(std::span<const TrainRun> runs, bool eps) {
  CurveBand out;
  const auto pick = [eps](const EpochLog& e) { return eps ? e.psnr_eps : e.psnr_sigma; };
  for (const auto& e : runs.front().epochs)
    if (!std::isnan(pick(e))) out.epochs.push_back(e.epoch);
  std::vector<std::vector<double>> cols(out.epochs.size());
  for (const TrainRun& r : runs) {
    std::size_t i = 0;
    for (const auto& e : r.epochs) {
      if (std::isnan(pick(e))) continue;
      if (i >= out.epochs.size() || out.epochs[i] != e.epoch)
        throw ValueError("summarize_runs: runs have mismatched epoch axes");
      cols[i++].push_back(pick(e));
    }
    if (i != out.epochs.size()) throw ValueError("summarize_runs: runs have mismatched epoch axes");
  }
  for (const auto& c : cols) {
    const Moments m = moments(c);
    out.mean.push_back(m.mean);
    out.std.push_back(m.std);
  }
  return out;
}

double final_psnr(const TrainRun& r, bool eps) {
  for (auto it = r.epochs.rbegin(); it != r.epochs.rend(); ++it) {
    const double v = eps ? it->psnr_eps : it->psnr_sigma;
    if (!std::isnan(v)) return v;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

FiveNumber five_or_nan(const std::vector<double>& v) {
  if (std::any_of(v.begin(), v.end(), [](double x) { return std::isnan(x); })) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return {nan, nan, nan, nan, nan};
  }
  return five_number(v);
}

}  // namespace

TruthProfile TruthProfile::from_grids(RealGrid eps_r, RealGrid sigma) {
  if (eps_r.size() != sigma.size() || eps_r.size() == 0) throw DimensionError("truth: grids must match and be non-empty");
  TruthProfile t;
  t.peak_eps = *std::max_element(eps_r.values().begin(), eps_r.values().end());
  t.peak_sigma = *std::max_element(sigma.values().begin(), sigma.values().end());
  t.eps_true = std::move(eps_r);
  t.sigma_true = std::move(sigma);
  return t;
}

double psnr(const RealGrid& recon, const RealGrid& truth, double peak) {
  if (recon.size() != truth.size() || recon.size() == 0) throw DimensionError("psnr: grid shapes differ");
  if (!(peak > 0.0)) throw ValueError("psnr: peak value must be positive");
  double se = 0.0;
  for (std::size_t i = 0; i < recon.size(); ++i) {
    const double d = recon[i] - truth[i];
    se += d * d;
  }
  const double mse = se / static_cast<double>(recon.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw ValueError("quantile: empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw ValueError("quantile: q must lie in [0, 1]");
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  if (lo == hi || v[lo] == v[hi]) return v[lo];
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

FiveNumber five_number(std::span<const double> values) {
  std::vector<double> v(values.begin(), values.end());
  if (v.empty()) throw ValueError("five_number: empty sample");
  FiveNumber f;
  f.min = *std::min_element(v.begin(), v.end());
  f.max = *std::max_element(v.begin(), v.end());
  f.q1 = quantile(v, 0.25);
  f.median = quantile(v, 0.5);
  f.q3 = quantile(v, 0.75);
  return f;
}

RunStatistics summarize_runs(std::span<const TrainRun> runs) {
  if (runs.empty()) throw ValueError("summarize_runs: need at least one run");
  RunStatistics s;
  s.n_runs = runs.size();
  s.psnr_eps = band(runs, true);
  s.psnr_sigma = band(runs, false);
  for (const TrainRun& r : runs) {
    s.final_eps.push_back(final_psnr(r, true));
    s.final_sigma.push_back(final_psnr(r, false));
  }
  s.final_eps_summary = five_or_nan(s.final_eps);
  s.final_sigma_summary = five_or_nan(s.final_sigma);
  const Moments m = moments(s.final_eps);
  s.final_eps_mean = m.mean;
  s.final_eps_std = m.std;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < s.final_eps.size(); ++i) {
    const double d = std::abs(s.final_eps[i] - s.final_eps_summary.median);
    if (d < best) {
      best = d;
      s.median_run = i;
    }
  }
  return s;
}

}  // namespace misi
