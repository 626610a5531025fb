// Acceptance run: one PASS/FAIL line per criterion. Optional arguments select criteria by number.
#include <algorithm>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/hankel.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>
#include <string>

#include "misi/cli.hpp"
#include "misi/io.hpp"
#include "misi/trainer.hpp"
#include "toy.hpp"

using namespace misi;
using namespace misi::test;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

// ---- 1: operators -------------------------------------------------------------

cplx boost_h(int order, double x) {
  const auto v = boost::math::cyl_hankel_2(order, x);
  return {v.real(), v.imag()};
}

// G_D x by direct summation with entries from the closed-form equal-area kernel.
std::vector<cplx> dense_domain_apply(const Scene& s, double f, std::span<const cplx> x) {
  const long n = static_cast<long>(s.n_grid());
  const double kb = wavenumber(f);
  const double a = s.cell_size() / std::sqrt(kPi);
  const cplx off = cplx(0.0, -0.5) * kPi * kb * a * boost::math::cyl_bessel_j(1, kb * a);
  const cplx self = cplx(0.0, -0.5) * (kPi * kb * a * boost_h(1, kb * a) - cplx(0.0, 2.0));
  std::vector<cplx> table((2 * n - 1) * (2 * n - 1));
  for (long dy = -(n - 1); dy < n; ++dy)
    for (long dx = -(n - 1); dx < n; ++dx)
      table[(dy + n - 1) * (2 * n - 1) + dx + n - 1] =
          dx == 0 && dy == 0 ? self : off * boost_h(0, kb * s.cell_size() * std::hypot(double(dx), double(dy)));
  std::vector<cplx> y(x.size());
  for (long iy = 0; iy < n; ++iy)
    for (long ix = 0; ix < n; ++ix) {
      cplx acc{};
      for (long jy = 0; jy < n; ++jy)
        for (long jx = 0; jx < n; ++jx)
          acc += table[(iy - jy + n - 1) * (2 * n - 1) + ix - jx + n - 1] * x[jy * n + jx];
      y[iy * n + ix] = acc;
    }
  return y;
}

Outcome operators() {
  double worst_dense = 0.0, worst_adj = 0.0;
  for (std::size_t n : {16u, 32u}) {
    FresnelLayout l;
    l.n_grid = n;
    l.frequencies = {0.4e9};
    const Scene s = build_fresnel_like_scene(l);
    const DomainOperator gd(s, 0.4e9, 2);
    const SurfaceOperator gs(s, 0.4e9);
    const ComplexBatch x = random_batch(1, s.n_pixels(), 10 + n);
    const ComplexBatch y = gd.apply(x);
    worst_dense = std::max(worst_dense, rel_diff(y.row(0), dense_domain_apply(s, 0.4e9, x.row(0))));

    const ComplexBatch v = random_batch(s.n_tx(), s.n_pixels(), 20 + n);
    const ComplexBatch w = random_batch(s.n_tx(), s.n_pixels(), 30 + n);
    worst_adj = std::max(worst_adj, rel_err(inner(gd.apply(v).data(), w.data()), inner(v.data(), gd.apply_adjoint(w).data())));
    const ComplexBatch d = random_batch(s.n_tx(), s.n_rx(), 40 + n);
    worst_adj = std::max(worst_adj, rel_err(inner(gs.apply(v).data(), d.data()), inner(v.data(), gs.apply_adjoint(d).data())));
  }
  return {worst_dense <= 1e-10 && worst_adj <= 1e-10,
          fmt("FFT vs dense rel err %.2e, adjoint mismatch %.2e (gate 1e-10)", worst_dense, worst_adj)};
}

// ---- 2: Mie gate --------------------------------------------------------------

Outcome mie_gate() {
  const MieCheckReport r = mie_check({});
  return {r.pass, fmt("receiver data vs analytic series: rel L2 error %.4f (gate 0.02)", r.rel_error)};
}

// ---- 3: gradients -------------------------------------------------------------

Outcome gradients() {
  const InverseProblem prob(toy_data(8, 1, {0.3e9}, toy_phantom(2.0, 0.01)));
  const auto active = all_freqs(prob);
  const double beta = 0.5;
  const SourceSet j = random_sources(prob, 3, 1e-3);
  const ContrastSet chi = random_contrasts(prob, 4, 0.5);

  // source gradient, every real coordinate
  const SourceSet g = grad_J(prob, active, j, chi, beta);
  double num = 0.0, den = 0.0;
  const double h = 1e-5 * std::sqrt(sq_norm(j.per_freq[0].data()));
  for (std::size_t i = 0; i < j.per_freq[0].size(); ++i)
    for (const cplx dir : {cplx(1.0, 0.0), cplx(0.0, 1.0)}) {
      SourceSet p = j, m = j;
      p.per_freq[0].data()[i] += h * dir;
      m.per_freq[0].data()[i] -= h * dir;
      const double fd = (eval_losses(prob, active, p, chi, beta).total - eval_losses(prob, active, m, chi, beta).total) /
                        (2.0 * h);
      const cplx gi = g.per_freq[0].data()[i];
      const double an = dir.real() != 0.0 ? gi.real() : gi.imag();
      num += (fd - an) * (fd - an);
      den += an * an;
    }
  const double err_j = std::sqrt(num / den);

  // network chain, every parameter
  NetworkConfig nc;
  nc.features = 8;
  nc.hidden_layers = 2;
  nc.width = 12;
  nc.sigma_ff = 1.0;
  nc.eps_max = 4.0;
  nc.sigma_max = 0.05;
  NetworkState net = NetworkState::init(5, nc);
  const std::vector<double> coords = prob.scene().normalized_coords();
  const auto e_tot = total_fields(prob, active, j);
  auto loss_nn = [&](const NetworkState& s) {
    const MaterialMaps mm = forward_maps(s, coords);
    return grad_chi(prob, active, j, contrasts_from_maps(prob, active, mm.delta_eps, mm.sigma), e_tot, beta).loss;
  };
  ForwardCache cache;
  const MaterialMaps mm = forward_maps(net, coords, &cache);
  const ChiGradient gc = grad_chi(prob, active, j, contrasts_from_maps(prob, active, mm.delta_eps, mm.sigma), e_tot, beta);
  const std::vector<double> an = backward_maps(net, cache, gc.d_delta_eps, gc.d_sigma);
  std::size_t good = 0;
  const std::size_t np = an.size();
  for (std::size_t k = 0; k < np; ++k) {
    const double th = net.params()[k];
    const double step = 1e-6 * std::max(1.0, std::abs(th));
    NetworkState p = net;
    p.mutable_params()[k] = th + step;
    const double lp = loss_nn(p);
    p.mutable_params()[k] = th - step;
    const double lm = loss_nn(p);
    const double fd = (lp - lm) / (2.0 * step);
    const double scale = std::max(std::abs(fd), std::abs(an[k]));
    if (scale == 0.0 || std::abs(fd - an[k]) <= 1e-4 * scale) ++good;
  }
  const double frac = static_cast<double>(good) / static_cast<double>(np);
  return {err_j <= 1e-5 && frac >= 0.99,
          fmt("grad_J rel err %.2e (gate 1e-5); ", err_j) +
              fmt("network parameters within 1e-4: %.1f%% of %.0f (gate 99%%)", 100.0 * frac, static_cast<double>(np))};
}

// ---- 4: line search -----------------------------------------------------------

Outcome line_search() {
  const InverseProblem prob(toy_data(8, 3, {0.3e9, 0.45e9}), 2);
  const auto active = all_freqs(prob);
  double worst = 0.0;
  int monotone = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const SourceSet j = random_sources(prob, 100 + trial, 1e-3);
    const ContrastSet chi = random_contrasts(prob, 300 + trial, 0.6);
    const SourceSet v = random_sources(prob, 500 + trial, 1e-3);
    const double beta = (trial % 5) * 0.25;
    const SourceSet g = grad_J(prob, active, j, chi, beta);
    double slope = 0.0, denom = 0.0;
    for (std::size_t f : active) {
      slope += inner(g.per_freq[f].data(), v.per_freq[f].data()).real();
      denom += direction_response(prob.at(f), v.per_freq[f], chi[f], beta).denom;
    }
    const double alpha = -slope / (2.0 * denom);

    auto line = [&](double a) {
      SourceSet t = j;
      for (std::size_t f : active)
        for (std::size_t i = 0; i < t.per_freq[f].size(); ++i) t.per_freq[f].data()[i] += a * v.per_freq[f].data()[i];
      return eval_losses(prob, active, t, chi, beta).total;
    };
    // dense scan over a symmetric window, then a parabola through the best three samples
    const double span = 4.0 * std::abs(alpha) + 1e-3;
    const int n = 400;
    int best = 0;
    std::vector<double> vals(n + 1);
    for (int i = 0; i <= n; ++i) {
      vals[i] = line(-span + 2.0 * span * i / n);
      if (vals[i] < vals[best]) best = i;
    }
    best = std::clamp(best, 1, n - 1);
    const double dx = 2.0 * span / n;
    const double x0 = -span + dx * best;
    const double curv = vals[best - 1] - 2.0 * vals[best] + vals[best + 1];
    const double scan = x0 + 0.5 * dx * (vals[best - 1] - vals[best + 1]) / curv;
    worst = std::max(worst, std::abs(scan - alpha) / std::abs(alpha));

    SourceSet jj = j;
    CgState cg;
    const PrcgResult r = prcg_step(prob, active, jj, cg, chi, beta);
    if (r.loss_after <= r.loss_before) ++monotone;
  }
  return {worst <= 1e-6 && monotone == 100,
          fmt("analytic vs scanned minimiser worst rel diff %.2e (gate 1e-6); ", worst) +
              fmt("loss_after <= loss_before in %.0f/100 steps", monotone)};
}

// ---- 5: beta schedule -----------------------------------------------------------

Outcome beta_values() {
  const double b1 = beta_schedule(1, 0.0, 500.0), b2 = beta_schedule(2, 0.0, 500.0);
  const double b3 = beta_schedule(1, 500.0, 500.0);
  const bool ok = b1 == 1.0 && b2 == 0.5 && b3 == std::exp(-10.0) && beta_schedule(3, 0.0, 7.0) == 0.25;
  return {ok, fmt("beta(1,0,K) = %.17g, beta(2,0,K) = %.17g, ", b1, b2) + fmt("beta(1,K,K) = %.17g", b3)};
}

// ---- 6: desk-scale convergence --------------------------------------------------

Outcome convergence() {
  FresnelLayout l;
  l.n_grid = 32;
  l.frequencies = {0.3e9};
  const Scene sc = build_fresnel_like_scene(l);
  const Phantom ph{{make_disk({0.0, 0.0}, 0.25, 2.0)}};
  const MeasurementSet m = synthesize_measurements(sc, ph);
  MaterialGrids g = rasterize_phantom(ph, sc);
  const TruthProfile truth = TruthProfile::from_grids(std::move(g.eps_r), std::move(g.sigma));
  const InverseProblem prob(m, 2);

  TrainerConfig c;
  c.epochs = 2000;
  c.pad_factor = 2;
  c.n_inner = 1;
  c.psnr_every = 0;
  c.net.features = 32;
  c.net.hidden_layers = 2;
  c.net.width = 32;
  c.net.sigma_ff = 0.3;
  c.net.eps_max = 3.0;
  c.net.sigma_max = 0.0;
  c.net.lr = 3e-3;
  const MonteCarloResult mc = monte_carlo(prob, c, 11, 0, &truth);
  int ok = 0;
  std::string list;
  for (const TrainRun& r : mc.runs) {
    const double ld = r.epochs.back().terms[0].data;
    const double p = r.epochs.back().psnr_eps;
    if (ld <= 1e-3 && p >= 25.0) ++ok;
    list += fmt("%.2f", p) + (&r == &mc.runs.back() ? "" : " ");
  }
  return {ok >= 9, fmt("%.0f/11 seeds reach l_data <= 1e-3 and PSNR >= 25 dB (gate 9); PSNR: ", ok) + list};
}

// ---- 7: comparative trend ---------------------------------------------------------

Outcome comparative() {
  FresnelLayout l;
  l.n_grid = 32;
  const Scene sc = build_fresnel_like_scene(l);
  const Phantom ph = austria_phantom(4.0);
  const MeasurementSet m = add_noise(synthesize_measurements(sc, ph), 20.0, 1);
  MaterialGrids g = rasterize_phantom(ph, sc);
  const TruthProfile truth = TruthProfile::from_grids(std::move(g.eps_r), std::move(g.sigma));
  const InverseProblem prob(m, 2);

  TrainerConfig c;
  c.epochs = 3000;
  c.strategy = Strategy::hop;
  c.pad_factor = 2;
  c.n_inner = 1;
  c.psnr_every = 0;
  c.net.features = 32;
  c.net.hidden_layers = 2;
  c.net.width = 32;
  c.net.sigma_ff = 0.3;
  c.net.eps_max = 7.0;
  c.net.sigma_max = 0.0;
  c.net.lr = 3e-3;
  FiveNumber s[3];
  std::string detail;
  const Mode modes[3] = {Mode::alt_cc, Mode::alt, Mode::simul_cc};
  for (int i = 0; i < 3; ++i) {
    c.mode = modes[i];
    const MonteCarloResult mc = monte_carlo(prob, c, 5, 0, &truth);
    if (!mc.failures.empty() || !mc.stats) return {false, std::string(to_string(modes[i])) + " runs failed"};
    s[i] = mc.stats->final_eps_summary;
    detail += std::string(i ? "; " : "") + to_string(modes[i]) + fmt(" median %.2f dB IQR %.2f", s[i].median, s[i].iqr());
  }
  const bool order = s[0].median >= s[1].median && s[1].median >= s[2].median;
  const bool spread = s[0].iqr() <= s[1].iqr() && s[0].iqr() <= s[2].iqr();
  return {order && spread, detail + (order ? "" : " [median order violated]") + (spread ? "" : " [IQR not smallest]")};
}

// ---- 8: noise statistics ------------------------------------------------------------

Outcome noise_stats() {
  const MeasurementSet clean = toy_data(8, 3, {0.3e9});
  double worst = 0.0;
  for (double snr : {0.0, 10.0}) {
    double ratio = 0.0;
    for (int k = 0; k < 1000; ++k) {
      const MeasurementSet noisy = add_noise(clean, snr, static_cast<std::uint64_t>(k));
      double noise = 0.0, signal = 0.0;
      for (std::size_t i = 0; i < clean.scattered[0].size(); ++i) {
        noise += std::norm(noisy.scattered[0].data()[i] - clean.scattered[0].data()[i]);
        signal += std::norm(clean.scattered[0].data()[i]);
      }
      ratio += noise / signal;
    }
    worst = std::max(worst, std::abs(ratio / 1000.0 * std::pow(10.0, snr / 10.0) - 1.0));
  }
  return {worst <= 0.05, fmt("worst relative deviation of mean noise power from target %.4f (gate 0.05)", worst)};
}

// ---- 9: CLI determinism ---------------------------------------------------------------

int shell(const std::string& cmd) { return std::system((cmd + " > /dev/null 2>&1").c_str()); }

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / "misi_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  write_text_file(dir / "scene.cfg",
                  "n_tx = 4\nrx_step_deg = 10\nn_grid = 16\nfrequencies = 3e8, 4e8\n"
                  "disk = 0.1, 0, 0.2, 2, 0.01\nannulus = -0.1, 0, 0.05, 0.15, 3, 0\n");
  write_text_file(dir / "net.cfg", "features = 16\nwidth = 32\nhidden_layers = 2\npad_factor = 2\n");
  const std::string cli = MISI_CLI_PATH;
  const std::string d = dir.string();
  int rc = 0;
  for (const char* tag : {"a", "b"}) {
    rc |= shell(cli + " synth --config " + d + "/scene.cfg --out " + d + "/" + tag + ".misi --snr 20 --seed 7 --forward-grid 32");
    rc |= shell(cli + " invert --data " + d + "/" + tag + ".misi --epochs 60 --seed 3 --net-cfg " + d + "/net.cfg --truth " +
                d + "/scene.cfg --out " + d + "/out_" + tag);
  }
  bool same = rc == 0;
  if (same) {
    same = read_text_file(dir / "a.misi") == read_text_file(dir / "b.misi") &&
           read_text_file(dir / "out_a/run_000/epochs.csv") == read_text_file(dir / "out_b/run_000/epochs.csv") &&
           read_text_file(dir / "out_a/run_000/net.bin") == read_text_file(dir / "out_b/run_000/net.bin");
  }
  fs::remove_all(dir);
  if (rc != 0) return {false, "CLI invocation failed"};
  return {same, same ? "containers, epoch logs and checkpoints identical across repeated invocations"
                     : "repeated invocations differ"};
}

// ---- 10: mode equivalence -----------------------------------------------------------------

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

Outcome mode_equivalence() {
  const InverseProblem prob(toy_data(16, 4, {0.3e9, 0.4e9}), 2);
  MaterialGrids g = rasterize_phantom(toy_phantom(), prob.scene());
  const TruthProfile truth = TruthProfile::from_grids(std::move(g.eps_r), std::move(g.sigma));
  TrainerConfig c;
  c.epochs = 300;
  c.pad_factor = 2;
  c.seed = 4;
  c.net.features = 16;
  c.net.width = 32;
  c.net.hidden_layers = 2;
  c.force_zero_beta = true;
  const TrainRun a = run(prob, c, &truth);
  c.force_zero_beta = false;
  c.mode = Mode::alt;
  const TrainRun b = run(prob, c, &truth);
  bool same = a.epochs.size() == b.epochs.size();
  for (std::size_t i = 0; same && i < a.epochs.size(); ++i) {
    const EpochLog &x = a.epochs[i], &y = b.epochs[i];
    same = same_bits(x.total, y.total) && same_bits(x.alpha, y.alpha) && same_bits(x.gamma, y.gamma) &&
           same_bits(x.psnr_eps, y.psnr_eps) && same_bits(x.beta, y.beta);
    for (std::size_t f = 0; same && f < x.terms.size(); ++f)
      same = same_bits(x.terms[f].data, y.terms[f].data) && same_bits(x.terms[f].state, y.terms[f].state);
  }
  same = same && std::ranges::equal(a.eps_r.values(), b.eps_r.values());
  return {same, same ? "300-epoch logs and final maps bitwise identical" : "logs differ"};
}

struct Criterion {
  int id;
  const char* name;
  double limit_s;  // 0 when no runtime limit
  std::function<Outcome()> fn;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "operator correctness", 1.0, operators},
      {2, "forward physics", 30.0, mie_gate},
      {3, "gradient correctness", 60.0, gradients},
      {4, "line-search exactness", 60.0, line_search},
      {5, "beta schedule", 0.0, beta_values},
      {6, "desk-scale convergence", 600.0, convergence},
      {7, "comparative trend", 2700.0, comparative},
      {8, "noise-model statistics", 0.0, noise_stats},
      {9, "determinism", 0.0, determinism},
      {10, "mode equivalence", 0.0, mode_equivalence},
  };
  std::set<int> pick;
  for (int i = 1; i < argc; ++i) pick.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const Criterion& c : all) {
    if (!pick.empty() && !pick.contains(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::string timing = fmt("%.1f s", secs);
    if (c.limit_s > 0.0) {
      timing += fmt(", limit %.0f s", c.limit_s);
      if (secs >= c.limit_s) {
        o.pass = false;
        timing += ", too slow";
      }
    }
    if (!o.pass) ++failed;
    std::printf("%s criterion %d (%s): %s [%s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                timing.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
