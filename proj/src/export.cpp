#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "misi/error.hpp"
#include "misi/io.hpp"

namespace misi {
namespace {

std::pair<double, double> range_of(const RealGrid& g) {
  if (g.size() == 0) throw DimensionError("export: empty grid");
  const auto [lo, hi] = std::minmax_element(g.values().begin(), g.values().end());
  return {*lo, *hi};
}

std::string psnr_text(double v) { return std::isnan(v) ? "nan" : format_number(psnr_for_output(v)); }

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::string epoch_log_csv(const TrainRun& run, std::size_t n_freq) {
  std::ostringstream o;
  o << "epoch,stage,beta";
  for (const char* name : {"l_data", "l_state", "l_cross"})
    for (std::size_t f = 0; f < n_freq; ++f) o << ',' << name << '_' << f;
  o << ",alpha,gamma,psnr_eps,psnr_sigma\n";
  for (const EpochLog& e : run.epochs) {
    if (e.terms.size() != n_freq) throw DimensionError("export: epoch log frequency count mismatch");
    o << e.epoch << ',' << e.stage << ',' << format_number(e.beta);
    for (std::size_t f = 0; f < n_freq; ++f) o << ',' << format_number(e.terms[f].data);
    for (std::size_t f = 0; f < n_freq; ++f) o << ',' << format_number(e.terms[f].state);
    for (std::size_t f = 0; f < n_freq; ++f) o << ',' << format_number(e.terms[f].cross);
    o << ',' << format_number(e.alpha) << ',' << format_number(e.gamma) << ',' << psnr_text(e.psnr_eps) << ','
      << psnr_text(e.psnr_sigma) << '\n';
  }
  return o.str();
}

std::string grid_csv(const RealGrid& g) {
  std::ostringstream o;
  for (std::size_t iy = 0; iy < g.n(); ++iy) {
    for (std::size_t ix = 0; ix < g.n(); ++ix) o << (ix ? "," : "") << format_number(g.at(iy, ix));
    o << '\n';
  }
  return o.str();
}

std::string grid_pgm(const RealGrid& g) {
  const auto [lo, hi] = range_of(g);
  std::string out = "P5\n" + std::to_string(g.n()) + " " + std::to_string(g.n()) + "\n255\n";
  const double span = hi - lo;
  for (std::size_t r = 0; r < g.n(); ++r) {
    const std::size_t iy = g.n() - 1 - r;
    for (std::size_t ix = 0; ix < g.n(); ++ix) {
      const double t = span > 0.0 ? (g.at(iy, ix) - lo) / span : 0.0;
      out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(t, 0.0, 1.0) * 255.0))));
    }
  }
  return out;
}

std::string range_sidecar(const RealGrid& g) {
  const auto [lo, hi] = range_of(g);
  return "min = " + format_number(lo) + "\nmax = " + format_number(hi) + "\n";
}

std::string run_summary(const TrainRun& run, std::size_t n_freq) {
  std::ostringstream o;
  o << "mode = " << to_string(run.mode) << "\n";
  o << "strategy = " << to_string(run.strategy) << "\n";
  o << "seed = " << run.seed << "\n";
  o << "epochs = " << run.epochs.size() << "\n";
  if (!run.epochs.empty()) {
    const EpochLog& last = run.epochs.back();
    o << "final_total = " << format_number(last.total) << "\n";
    for (std::size_t f = 0; f < n_freq && f < last.terms.size(); ++f) {
      o << "final_l_data_" << f << " = " << format_number(last.terms[f].data) << "\n";
      o << "final_l_state_" << f << " = " << format_number(last.terms[f].state) << "\n";
      o << "final_l_cross_" << f << " = " << format_number(last.terms[f].cross) << "\n";
    }
    o << "final_psnr_eps = " << psnr_text(last.psnr_eps) << "\n";
    o << "final_psnr_sigma = " << psnr_text(last.psnr_sigma) << "\n";
  }
  return o.str();
}

std::string psnr_curve_csv(const RunStatistics& s) {
  std::ostringstream o;
  o << "epoch,mean_psnr_eps,std_psnr_eps,mean_psnr_sigma,std_psnr_sigma\n";
  for (std::size_t i = 0; i < s.psnr_eps.epochs.size(); ++i) {
    o << s.psnr_eps.epochs[i] << ',' << psnr_text(s.psnr_eps.mean[i]) << ',' << format_number(s.psnr_eps.std[i]);
    const bool has_sigma = i < s.psnr_sigma.epochs.size();
    o << ',' << (has_sigma ? psnr_text(s.psnr_sigma.mean[i]) : "nan") << ','
      << (has_sigma ? format_number(s.psnr_sigma.std[i]) : "nan") << '\n';
  }
  return o.str();
}

std::string final_psnr_csv(const RunStatistics& s, std::span<const TrainRun> runs) {
  std::ostringstream o;
  o << "run,seed,final_psnr_eps,final_psnr_sigma\n";
  for (std::size_t i = 0; i < runs.size(); ++i)
    o << i << ',' << runs[i].seed << ',' << psnr_text(s.final_eps[i]) << ',' << psnr_text(s.final_sigma[i]) << '\n';
  return o.str();
}

std::string stats_summary(const RunStatistics& s, std::span<const TrainRun> runs,
                          std::span<const RunFailure> failures) {
  std::ostringstream o;
  const auto five = [&](const char* tag, const FiveNumber& f) {
    o << tag << "_min = " << psnr_text(f.min) << "\n";
    o << tag << "_q1 = " << psnr_text(f.q1) << "\n";
    o << tag << "_median = " << psnr_text(f.median) << "\n";
    o << tag << "_q3 = " << psnr_text(f.q3) << "\n";
    o << tag << "_max = " << psnr_text(f.max) << "\n";
  };
  o << "runs = " << s.n_runs << "\n";
  o << "failed_runs = " << failures.size() << "\n";
  for (const RunFailure& f : failures) o << "failed_seed_" << f.seed << " = " << f.message << "\n";
  o << "final_psnr_eps_mean = " << psnr_text(s.final_eps_mean) << "\n";
  o << "final_psnr_eps_std = " << format_number(s.final_eps_std) << "\n";
  five("final_psnr_eps", s.final_eps_summary);
  five("final_psnr_sigma", s.final_sigma_summary);
  o << "median_run = " << s.median_run << "\n";
  if (s.median_run < runs.size()) o << "median_run_seed = " << runs[s.median_run].seed << "\n";
  return o.str();
}

void write_run_directory(const TrainRun& run, std::size_t n_freq, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_text_file(dir / "epochs.csv", epoch_log_csv(run, n_freq));
  write_text_file(dir / "summary.txt", run_summary(run, n_freq));
  if (run.eps_r.size() > 0) {
    write_text_file(dir / "eps_r.csv", grid_csv(run.eps_r));
    write_text_file(dir / "eps_r.pgm", grid_pgm(run.eps_r));
    write_text_file(dir / "eps_r.range.txt", range_sidecar(run.eps_r));
    write_text_file(dir / "sigma.csv", grid_csv(run.sigma));
    write_text_file(dir / "sigma.pgm", grid_pgm(run.sigma));
    write_text_file(dir / "sigma.range.txt", range_sidecar(run.sigma));
  }
  if (run.net) save_network(*run.net, dir / "net.bin");
}

}  // namespace misi
