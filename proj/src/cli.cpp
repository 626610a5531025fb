#include "misi/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "misi/error.hpp"
#include "misi/io.hpp"
#include "misi/kernels.hpp"

namespace misi {
namespace {

namespace fs = std::filesystem;

class UsageError : public Error {
 public:
  using Error::Error;
};

void refuse_overwrite(const fs::path& p, bool force) {
  if (!force && fs::exists(p)) throw IoError(p.string() + " exists (pass --force to overwrite)");
}

fs::path snr_path(const fs::path& base, double snr) {
  fs::path p = base;
  p.replace_filename(base.stem().string() + "_snr" + format_number(snr) + base.extension().string());
  return p;
}

struct SynthArgs {
  std::string config, out;
  std::vector<double> snr;
  std::uint64_t seed = 0;
  std::size_t forward_grid = 128;
  bool force = false;
};

int do_synth(const SynthArgs& a, std::ostream& out) {
  const SceneConfig cfg = load_scene_config(a.config);
  const Scene scene = build_fresnel_like_scene(cfg.layout);
  SynthesisOptions opts;
  opts.forward_n_grid = a.forward_grid;
  const MeasurementSet clean = synthesize_measurements(scene, cfg.phantom, opts);

  std::vector<std::pair<fs::path, MeasurementSet>> files;
  if (a.snr.empty()) {
    files.emplace_back(a.out, clean);
  } else {
    for (std::size_t k = 0; k < a.snr.size(); ++k) {
      const fs::path p = a.snr.size() == 1 ? fs::path(a.out) : snr_path(a.out, a.snr[k]);
      files.emplace_back(p, add_noise(clean, a.snr[k], a.seed + k));
    }
  }
  for (const auto& [p, m] : files) refuse_overwrite(p, a.force);
  for (const auto& [p, m] : files) {
    write_container(m, p);
    out << "wrote " << p.string() << "\n";
  }
  return kExitOk;
}

struct InvertArgs {
  std::string data, mode = "alt-cc", strategy = "hop", truth, net_cfg, out, stage_split;
  std::size_t epochs = 25000;
  std::uint64_t seed = 0;
  std::size_t runs = 1;
  std::size_t threads = 1;
};

std::vector<double> parse_split(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  for (std::string tok; std::getline(ss, tok, ',');) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(tok, &used));
      if (tok.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw UsageError("--stage-split expects comma-separated numbers, got '" + s + "'");
    }
  }
  return v;
}

int do_invert(const InvertArgs& a, std::ostream& out, std::ostream& err) {
  TrainerConfig cfg;
  try {
    cfg.mode = parse_mode(a.mode);
    cfg.strategy = parse_strategy(a.strategy);
  } catch (const ValueError& e) {
    throw UsageError(e.what());
  }
  cfg.epochs = a.epochs;
  cfg.seed = a.seed;
  if (!a.stage_split.empty()) {
    if (cfg.strategy == Strategy::simul)
      err << "warning: --stage-split is ignored with --strategy simul\n";
    else
      cfg.stage_split = parse_split(a.stage_split);
  }
  if (!a.net_cfg.empty()) load_net_config(a.net_cfg, cfg);
  if (a.runs == 0) throw UsageError("--runs must be at least 1");

  const MeasurementSet mset = read_container(a.data);
  try {
    make_stage_plan(cfg.strategy, mset.scene.n_freq(), cfg.epochs, cfg.stage_split);
  } catch (const ValueError& e) {
    throw UsageError(e.what());
  }
  std::optional<TruthProfile> truth;
  if (!a.truth.empty()) {
    const SceneConfig tc = load_scene_config(a.truth);
    MaterialGrids g = rasterize_phantom(tc.phantom, mset.scene);
    truth = TruthProfile::from_grids(std::move(g.eps_r), std::move(g.sigma));
  }
  const InverseProblem prob(mset, cfg.pad_factor);
  const std::size_t nf = mset.scene.n_freq();
  const fs::path root(a.out);
  const auto run_dir = [&](std::size_t i) {
    std::ostringstream name;
    name << "run_" << std::setw(3) << std::setfill('0') << i;
    return root / name.str();
  };

  const MonteCarloResult mc =
      monte_carlo(prob, cfg, a.runs, a.seed, truth ? &*truth : nullptr, std::max<std::size_t>(a.threads, 1));
  std::size_t ok = 0;
  for (std::size_t i = 0; i < a.runs; ++i) {
    const std::uint64_t seed = a.seed + i;
    const auto it = std::find_if(mc.runs.begin(), mc.runs.end(), [&](const TrainRun& r) { return r.seed == seed; });
    if (it == mc.runs.end()) continue;
    write_run_directory(*it, nf, run_dir(i));
    ++ok;
  }
  for (const RunFailure& f : mc.failures) err << "run with seed " << f.seed << " failed: " << f.message << "\n";
  if (mc.stats) {
    fs::create_directories(root);
    write_text_file(root / "psnr_curve.csv", psnr_curve_csv(*mc.stats));
    write_text_file(root / "final_psnr.csv", final_psnr_csv(*mc.stats, mc.runs));
    write_text_file(root / "stats.txt", stats_summary(*mc.stats, mc.runs, mc.failures));
    if (truth)
      out << "median final PSNR(eps_r) = " << format_number(mc.stats->final_eps_summary.median) << " dB\n";
  }
  out << ok << " of " << a.runs << " runs completed; results in " << root.string() << "\n";
  return mc.failures.empty() ? kExitOk : kExitNumeric;
}

struct ConvertArgs {
  std::string table, geometry, out;
  std::size_t stride = 1;
  bool force = false;
};

int do_convert(const ConvertArgs& a, std::ostream& out) {
  const MeasuredGeometry geo = parse_measured_geometry(read_text_file(a.geometry));
  const std::vector<MeasuredRow> rows = parse_measured_table(read_text_file(a.table));
  const MeasurementSet m = convert_measured(rows, geo, a.stride);
  refuse_overwrite(a.out, a.force);
  write_container(m, a.out);
  out << "wrote " << a.out << " (" << m.scene.n_freq() << " frequencies, " << m.scene.n_tx() << " Tx, "
      << m.scene.n_rx() << " Rx per Tx)\n";
  return kExitOk;
}

}  // namespace

MieCheckReport mie_check(const MieCheckOptions& o) {
  if (!(o.radius > 0.0) || !(o.eps_r >= 1.0) || !(o.freq > 0.0) || o.grid < 2)
    throw ValueError("mie check: need radius > 0, eps_r >= 1, freq > 0, grid >= 2");
  FresnelLayout layout;
  layout.n_grid = o.grid;
  layout.frequencies = {o.freq};
  if (o.radius >= layout.doi_half) throw ValueError("mie check: cylinder must fit inside the DOI");
  const Scene scene = build_fresnel_like_scene(layout);
  Phantom ph{{make_disk({0.0, 0.0}, o.radius, o.eps_r)}};
  SynthesisOptions opts;
  opts.forward_n_grid = o.grid;
  opts.allow_inverse_crime = true;
  const MeasurementSet m = synthesize_measurements(scene, ph, opts);

  double diff = 0.0, ref = 0.0;
  for (std::size_t t = 0; t < scene.n_tx(); ++t) {
    const auto& ring = scene.rx_topology()[t];
    const std::vector<cplx> mie = mie_cylinder(o.eps_r, 0.0, o.radius, o.freq, ring, scene.tx_positions()[t]);
    for (std::size_t q = 0; q < ring.size(); ++q) {
      diff += std::norm(m.scattered[0](t, q) - mie[q]);
      ref += std::norm(mie[q]);
    }
  }
  MieCheckReport r;
  r.mie_norm = std::sqrt(ref);
  r.rel_error = ref > 0.0 ? std::sqrt(diff / ref) : std::sqrt(diff);
  r.pass = r.rel_error <= o.tolerance;
  return r;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-frequency microwave imaging by alternating contrast-source / neural inversion", "misi"};
  app.require_subcommand(1);
  std::string simd = "auto";
  app.add_option("--simd", simd, "Kernel variant: auto, scalar or avx2")->check(CLI::IsMember({"auto", "scalar", "avx2"}));

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Synthesize a dataset from a scene/phantom config");
  synth->add_option("--config", sa.config, "Scene and phantom config")->required()->check(CLI::ExistingFile);
  synth->add_option("--out", sa.out, "Output container path")->required();
  synth->add_option("--snr", sa.snr, "Noise level in dB; repeat for several files")->allow_extra_args(false);
  synth->add_option("--seed", sa.seed, "Noise seed (k-th SNR file uses seed + k)");
  synth->add_option("--forward-grid", sa.forward_grid, "Forward-solver grid (finer than the inversion grid)")
      ->check(CLI::PositiveNumber);
  synth->add_flag("--force", sa.force, "Overwrite existing files");

  InvertArgs ia;
  auto* invert = app.add_subcommand("invert", "Reconstruct permittivity and conductivity maps");
  invert->add_option("--data", ia.data, "Dataset container")->required()->check(CLI::ExistingFile);
  invert->add_option("--mode", ia.mode, "alt-cc, alt or simul-cc")->capture_default_str();
  invert->add_option("--strategy", ia.strategy, "hop or simul")->capture_default_str();
  invert->add_option("--epochs", ia.epochs, "Total epochs")->capture_default_str()->check(CLI::PositiveNumber);
  invert->add_option("--stage-split", ia.stage_split, "Stage percentages, e.g. 20,20,60");
  invert->add_option("--seed", ia.seed, "Seed of the first run")->capture_default_str();
  invert->add_option("--runs", ia.runs, "Monte Carlo runs (seeds seed .. seed + runs - 1)")->capture_default_str();
  invert->add_option("--truth", ia.truth, "Scene config whose phantom is the ground truth")->check(CLI::ExistingFile);
  invert->add_option("--net-cfg", ia.net_cfg, "Network and optimiser config")->check(CLI::ExistingFile);
  invert->add_option("--threads", ia.threads, "Runs trained concurrently")->capture_default_str();
  invert->add_option("--out", ia.out, "Result directory")->required();

  ConvertArgs ca;
  auto* convert = app.add_subcommand("convert-measured", "Convert a measured-data table to a dataset container");
  convert->add_option("--table", ca.table, "Rows: freq tx_index rx_angle_deg re im")->required()->check(CLI::ExistingFile);
  convert->add_option("--geometry", ca.geometry, "Array and DOI geometry config")->required()->check(CLI::ExistingFile);
  convert->add_option("--stride", ca.stride, "Keep every stride-th receiver angle")->check(CLI::PositiveNumber);
  convert->add_option("--out", ca.out, "Output container path")->required();
  convert->add_flag("--force", ca.force, "Overwrite an existing file");

  MieCheckOptions mo;
  auto* mie = app.add_subcommand("mie-check", "Compare the forward solver with the analytic cylinder series");
  mie->add_option("--eps-r", mo.eps_r, "Cylinder permittivity")->capture_default_str();
  mie->add_option("--radius", mo.radius, "Cylinder radius (m)")->capture_default_str();
  mie->add_option("--freq", mo.freq, "Frequency (Hz)")->capture_default_str();
  mie->add_option("--grid", mo.grid, "Forward grid size")->capture_default_str();
  mie->add_option("--tol", mo.tolerance, "Relative L2 gate")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (!kernels::select(simd)) throw UsageError("kernel variant '" + simd + "' is not available on this machine");
    if (*synth) return do_synth(sa, out);
    if (*invert) return do_invert(ia, out, err);
    if (*convert) return do_convert(ca, out);
    if (*mie) {
      const MieCheckReport r = mie_check(mo);
      out << "relative L2 error = " << format_number(r.rel_error) << " (gate " << format_number(mo.tolerance) << ")\n";
      if (!r.pass) {
        err << "mie check failed: error above gate\n";
        return kExitNumeric;
      }
      return kExitOk;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const TrainingError& e) {
    err << "training failed: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    err << "i/o error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitUsage;
}

}  // namespace misi
