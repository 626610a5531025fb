#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "misi/error.hpp"
#include "misi/loss.hpp"
#include "misi/metrics.hpp"
#include "misi/net.hpp"

namespace misi {

enum class Mode { alt_cc, alt, simul_cc };
enum class Strategy { hop, simul };

const char* to_string(Mode m);
const char* to_string(Strategy s);
/// Accepts "alt-cc"/"alt_cc", "alt", "simul-cc"/"simul_cc"; throws ValueError otherwise.
Mode parse_mode(const std::string& s);
Strategy parse_strategy(const std::string& s);

struct Stage {
  std::vector<std::size_t> active;  // frequency indices
  std::size_t epochs = 0;
};

struct StagePlan {
  std::vector<Stage> stages;
  std::size_t total_epochs() const;
};

/// hop: stage s activates the first s frequencies; split holds one positive weight per
/// frequency (default 20/20/60 for three, equal otherwise). K_s = round(E p_s / sum p),
/// the last stage takes the remainder. simul: one stage with every frequency; split ignored.
StagePlan make_stage_plan(Strategy strategy, std::size_t n_freq, std::size_t epochs,
                          std::span<const double> split = {});

struct TrainerConfig {
  Mode mode = Mode::alt_cc;
  Strategy strategy = Strategy::hop;
  std::size_t epochs = 25000;
  std::vector<double> stage_split;
  std::uint64_t seed = 0;
  NetworkConfig net;
  std::size_t n_inner = 2;
  double clip_j = 100.0;      // elementwise magnitude clip on the PR-CG gradient
  double clip_theta = 1.0;    // global-norm clip on network gradients
  double clip_j_simul = 1.0;  // global-norm clip on J gradients in simul_cc
  int pad_factor = 4;
  std::size_t psnr_every = 10;  // 0 logs PSNR at the final epoch only
  double beta_decay = 10.0;
  /// Pins beta to zero whatever the mode.
  bool force_zero_beta = false;

  void validate() const;
};

struct EpochLog {
  std::size_t epoch = 0;  // 1-based, global
  int stage = 1;
  double beta = 0.0;
  std::vector<FrequencyLoss> terms;  // one per scene frequency; NaN when inactive
  double total = 0.0;
  double alpha = 0.0;  // NaN in simul_cc
  double gamma = 0.0;
  double psnr_eps = 0.0;  // NaN when not evaluated
  double psnr_sigma = 0.0;
  bool stationary = false;

  bool operator==(const EpochLog&) const = default;
};

struct TrainRun {
  Mode mode = Mode::alt_cc;
  Strategy strategy = Strategy::hop;
  std::uint64_t seed = 0;
  std::vector<EpochLog> epochs;
  RealGrid eps_r;
  RealGrid sigma;
  SourceSet sources;
  std::optional<NetworkState> net;
};

/// A run that failed part-way; partial() holds every epoch completed before the failure.
class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, TrainRun partial) : Error(what), partial_(std::move(partial)) {}
  const TrainRun& partial() const { return partial_; }

 private:
  TrainRun partial_;
};

/// Per Tx row: J0 = c G_S^H y with c = ||G_S^H y||^2 / ||G_S G_S^H y||^2; zero when y is zero.
ComplexBatch init_sources(const FrequencyProblem& fp);

struct CgState {
  SourceSet g_prev;
  SourceSet v_prev;
  bool first = true;
  void reset();
};

struct PrcgResult {
  double alpha = 0.0;
  double gamma = 0.0;
  double loss_before = 0.0;
  double loss_after = 0.0;
  double denom = 0.0;
  bool reset = false;       // direction fell back to -g
  bool stationary = false;  // Denom below 1e-30, no update
  SourceSet direction;
};

/// Residual caches carried between steps. gj holds G_D J per frequency and d the data
/// residual G_S J - y; entries that are empty are recomputed. state, when filled, must be
/// the residual state at the current (J, chi).
struct StepCache {
  std::vector<ComplexBatch> gj;
  std::vector<ComplexBatch> d;
  std::vector<FrequencyState> state;
};

/// One Polak-Ribiere step on J with chi frozen and an exact line search.
/// On return cache.gj and cache.d describe the updated J; cache.state is cleared.
PrcgResult prcg_step(const InverseProblem& prob, std::span<const std::size_t> active, SourceSet& j, CgState& cg,
                     const ContrastSet& chi, double beta, double clip = 100.0, StepCache* cache = nullptr);

/// Network side of the alternation. Owns the coordinate grid and the forward cache so that
/// the maps of the latest parameters are always available without recomputation.
class ContrastModel {
 public:
  ContrastModel(NetworkState net, std::vector<double> coords);

  const NetworkState& net() const { return net_; }
  NetworkState& net() { return net_; }
  const MaterialMaps& maps();
  /// L_NN = sum_f (l_state + beta l_cross) before each of the n_inner Adam steps.
  std::vector<double> nn_phase(const InverseProblem& prob, std::span<const std::size_t> active, const SourceSet& j,
                               const std::vector<ComplexBatch>& e_tot, double beta, std::size_t n_inner,
                               double clip_theta);
  /// Backward pass for an upstream map gradient against the current parameters.
  std::vector<double> map_gradient(const RealGrid& d_delta_eps, const RealGrid& d_sigma);

 private:
  NetworkState net_;
  std::vector<double> coords_;
  ForwardCache cache_;
  MaterialMaps maps_;
  void refresh();
};

/// Full alternating optimisation. truth enables PSNR logging.
TrainRun run(const InverseProblem& prob, const TrainerConfig& cfg, const TruthProfile* truth = nullptr);

struct RunFailure {
  std::uint64_t seed = 0;
  std::string message;
};

struct MonteCarloResult {
  std::vector<TrainRun> runs;  // successful runs in seed order
  std::vector<RunFailure> failures;
  std::optional<RunStatistics> stats;  // absent when every run failed
};

/// Seeds base_seed .. base_seed + n_runs - 1 (cfg.seed is ignored). Failed runs are excluded from statistics.
MonteCarloResult monte_carlo(const InverseProblem& prob, const TrainerConfig& cfg, std::size_t n_runs,
                             std::uint64_t base_seed, const TruthProfile* truth = nullptr,
                             std::size_t max_threads = 1);

}  // namespace misi
