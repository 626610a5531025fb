#include "misi/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>

#include "misi/kernels.hpp"
#include "misi/parallel.hpp"

namespace misi {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double re_dot(const SourceSet& a, const SourceSet& b, std::span<const std::size_t> active) {
  double s = 0.0;
  for (std::size_t f : active) s += kernels::dotc(a.per_freq[f].data(), b.per_freq[f].data()).real();
  return s;
}

double norm2(const SourceSet& a, std::span<const std::size_t> active) {
  double s = 0.0;
  for (std::size_t f : active) s += kernels::norm2(a.per_freq[f].data());
  return s;
}

bool shapes_match(const SourceSet& a, const SourceSet& b, std::span<const std::size_t> active) {
  for (std::size_t f : active) {
    if (f >= a.per_freq.size() || f >= b.per_freq.size()) return false;
    if (!a.per_freq[f].same_shape(b.per_freq[f]) || a.per_freq[f].rows() == 0) return false;
  }
  return true;
}

// x (complex) viewed as interleaved doubles
std::span<double> as_real(ComplexBatch& b) {
  auto d = b.data();
  return {reinterpret_cast<double*>(d.data()), 2 * d.size()};
}

}  // namespace

const char* to_string(Mode m) {
  switch (m) {
    case Mode::alt_cc: return "alt-cc";
    case Mode::alt: return "alt";
    case Mode::simul_cc: return "simul-cc";
  }
  return "?";
}

const char* to_string(Strategy s) { return s == Strategy::hop ? "hop" : "simul"; }

Mode parse_mode(const std::string& s) {
  if (s == "alt-cc" || s == "alt_cc") return Mode::alt_cc;
  if (s == "alt") return Mode::alt;
  if (s == "simul-cc" || s == "simul_cc") return Mode::simul_cc;
  throw ValueError("unknown mode '" + s + "' (expected alt-cc, alt or simul-cc)");
}

Strategy parse_strategy(const std::string& s) {
  if (s == "hop") return Strategy::hop;
  if (s == "simul") return Strategy::simul;
  throw ValueError("unknown strategy '" + s + "' (expected hop or simul)");
}

std::size_t StagePlan::total_epochs() const {
  std::size_t n = 0;
  for (const auto& s : stages) n += s.epochs;
  return n;
}

StagePlan make_stage_plan(Strategy strategy, std::size_t n_freq, std::size_t epochs, std::span<const double> split) {
  if (n_freq == 0) throw ValueError("stage plan: no frequencies");
  if (epochs == 0) throw ValueError("stage plan: epochs must be positive");
  StagePlan plan;
  if (strategy == Strategy::simul) {
    Stage st;
    st.active.resize(n_freq);
    std::iota(st.active.begin(), st.active.end(), std::size_t{0});
    st.epochs = epochs;
    plan.stages.push_back(std::move(st));
    return plan;
  }
  std::vector<double> p(split.begin(), split.end());
  if (p.empty()) p = n_freq == 3 ? std::vector<double>{20.0, 20.0, 60.0} : std::vector<double>(n_freq, 1.0);
  if (p.size() != n_freq)
    throw ValueError("stage plan: split has " + std::to_string(p.size()) + " entries for " + std::to_string(n_freq) +
                     " frequencies");
  double sum = 0.0;
  for (double v : p) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ValueError("stage plan: split weights must be positive");
    sum += v;
  }
  std::size_t used = 0;
  for (std::size_t s = 0; s < n_freq; ++s) {
    Stage st;
    for (std::size_t f = 0; f <= s; ++f) st.active.push_back(f);
    if (s + 1 < n_freq) {
      st.epochs = static_cast<std::size_t>(std::llround(static_cast<double>(epochs) * p[s] / sum));
    } else {
      if (used >= epochs) throw ValueError("stage plan: too few epochs for the split");
      st.epochs = epochs - used;
    }
    if (st.epochs == 0) throw ValueError("stage plan: stage " + std::to_string(s + 1) + " receives no epochs");
    used += st.epochs;
    plan.stages.push_back(std::move(st));
  }
  return plan;
}

void TrainerConfig::validate() const {
  net.validate();
  if (epochs == 0) throw ValueError("trainer: epochs must be positive");
  if (!(clip_j > 0.0) || !(clip_theta > 0.0) || !(clip_j_simul > 0.0))
    throw ValueError("trainer: clip thresholds must be positive");
  if (pad_factor != 2 && pad_factor != 4) throw ValueError("trainer: pad factor must be 2 or 4");
  if (!(beta_decay >= 0.0)) throw ValueError("trainer: beta decay must be non-negative");
}

ComplexBatch init_sources(const FrequencyProblem& fp) {
  const std::size_t ntx = fp.y.rows();
  const std::size_t npix = fp.e_inc.cols();
  ComplexBatch j(ntx, npix);
  std::vector<cplx> back(npix), fwd(fp.y.cols());
  for (std::size_t t = 0; t < ntx; ++t) {
    std::fill(back.begin(), back.end(), cplx{});
    fp.surface.apply_adjoint_tx(t, fp.y.row(t), back);
    fp.surface.apply_tx(t, back, fwd);
    const double num = kernels::norm2(back);
    const double den = kernels::norm2(fwd);
    if (!(den > 0.0)) continue;
    kernels::axpy(num / den, back, j.row(t));
  }
  return j;
}

void CgState::reset() {
  g_prev = {};
  v_prev = {};
  first = true;
}

PrcgResult prcg_step(const InverseProblem& prob, std::span<const std::size_t> active, SourceSet& j, CgState& cg,
                     const ContrastSet& chi, double beta, double clip, StepCache* cache) {
  const std::size_t nf = prob.n_freq();
  StepCache local;
  StepCache& sc = cache ? *cache : local;
  sc.gj.resize(nf);
  sc.d.resize(nf);
  sc.state.resize(nf);
  std::vector<ComplexBatch>& gjs = sc.gj;

  PrcgResult res;
  std::vector<FrequencyState> st(nf);
  SourceSet g_true, g;
  g_true.per_freq.resize(nf);
  g.per_freq.resize(nf);
  for (std::size_t f : active) {
    const FrequencyProblem& fp = prob.at(f);
    if (sc.state[f].d.rows() != 0) {
      st[f] = std::move(sc.state[f]);
    } else {
      if (!gjs[f].same_shape(j.per_freq.at(f))) gjs[f] = fp.domain.apply(j.per_freq[f]);
      if (sc.d[f].rows() != 0)
        st[f] = evaluate_state(fp, j.per_freq[f], chi.at(f), gjs[f], sc.d[f]);
      else
        st[f] = evaluate_state(fp, j.per_freq[f], chi.at(f), gjs[f]);
    }
    sc.state[f] = FrequencyState{};
    const FrequencyLoss l = losses_of(fp, st[f]);
    res.loss_before += l.data + l.state + beta * l.cross;
    g_true.per_freq[f] = gradient_of(fp, st[f], chi[f], beta);
    g.per_freq[f] = g_true.per_freq[f];
    clip_gradient_magnitude(g.per_freq[f].data(), clip);
  }

  if (!cg.first && shapes_match(g, cg.g_prev, active) && shapes_match(g, cg.v_prev, active)) {
    const double den = norm2(cg.g_prev, active);
    if (den > 0.0) res.gamma = std::max(0.0, (norm2(g, active) - re_dot(g, cg.g_prev, active)) / den);
  }

  SourceSet v;
  v.per_freq.resize(nf);
  for (std::size_t f : active) {
    v.per_freq[f] = ComplexBatch(g.per_freq[f].rows(), g.per_freq[f].cols());
    kernels::axpy(-1.0, g.per_freq[f].data(), v.per_freq[f].data());
    if (res.gamma != 0.0) kernels::axpy(res.gamma, cg.v_prev.per_freq[f].data(), v.per_freq[f].data());
  }
  if (re_dot(g, v, active) >= 0.0 && res.gamma != 0.0) {
    res.reset = true;
    res.gamma = 0.0;
    for (std::size_t f : active) {
      v.per_freq[f] = ComplexBatch(g.per_freq[f].rows(), g.per_freq[f].cols());
      kernels::axpy(-1.0, g.per_freq[f].data(), v.per_freq[f].data());
    }
  }

  std::vector<DirectionResponse> resp(nf);
  for (std::size_t f : active) {
    resp[f] = direction_response(prob.at(f), v.per_freq[f], chi[f], beta);
    res.denom += resp[f].denom;
  }
  // exact minimiser of the quadratic L(J + a v), slope taken from the unclipped gradient
  const double slope = re_dot(g_true, v, active);
  if (res.denom < 1e-30) {
    res.stationary = true;
    res.alpha = 0.0;
  } else {
    res.alpha = -slope / (2.0 * res.denom);
  }

  const double a = res.alpha;
  for (std::size_t f : active) {
    const FrequencyProblem& fp = prob.at(f);
    FrequencyState& s = st[f];
    if (a != 0.0) {
      kernels::axpy(a, v.per_freq[f].data(), j.per_freq[f].data());
      kernels::axpy(a, resp[f].gv.data(), gjs[f].data());
      kernels::axpy(a, resp[f].sv.data(), s.d.data());
      kernels::axpy(a, resp[f].av.data(), s.r.data());
      if (beta != 0.0) kernels::axpy(a, resp[f].su.data(), s.rho.data());
    }
    const FrequencyLoss l = losses_of(fp, s);
    res.loss_after += l.data + l.state + beta * l.cross;
    sc.d[f] = std::move(s.d);
  }

  cg.g_prev = std::move(g);
  cg.v_prev = v;
  cg.first = false;
  res.direction = std::move(v);
  return res;
}

ContrastModel::ContrastModel(NetworkState net, std::vector<double> coords)
    : net_(std::move(net)), coords_(std::move(coords)) {
  refresh();
}

void ContrastModel::refresh() { maps_ = forward_maps(net_, coords_, &cache_); }

const MaterialMaps& ContrastModel::maps() {
  if (cache_.owner != &net_ || cache_.version != net_.version()) refresh();
  return maps_;
}

std::vector<double> ContrastModel::map_gradient(const RealGrid& d_delta_eps, const RealGrid& d_sigma) {
  maps();
  return backward_maps(net_, cache_, d_delta_eps, d_sigma);
}

std::vector<double> ContrastModel::nn_phase(const InverseProblem& prob, std::span<const std::size_t> active,
                                            const SourceSet& j, const std::vector<ComplexBatch>& e_tot, double beta,
                                            std::size_t n_inner, double clip_theta) {
  std::vector<double> losses;
  for (std::size_t i = 0; i < n_inner; ++i) {
    const MaterialMaps& m = maps();
    const ContrastSet chi = contrasts_from_maps(prob, active, m.delta_eps, m.sigma);
    const ChiGradient gc = grad_chi(prob, active, j, chi, e_tot, beta);
    losses.push_back(gc.loss);
    const std::vector<double> grads = backward_maps(net_, cache_, gc.d_delta_eps, gc.d_sigma);
    net_.adam_step(grads, clip_theta, net_.config().lr);
  }
  return losses;
}

namespace {

class Runner {
 public:
  Runner(const InverseProblem& prob, const TrainerConfig& cfg, const TruthProfile* truth)
      : prob_(prob),
        cfg_(cfg),
        truth_(truth),
        model_(NetworkState::init(cfg.seed, cfg.net), prob.scene().normalized_coords()) {
    const std::size_t nf = prob.n_freq();
    run_.mode = cfg.mode;
    run_.strategy = cfg.strategy;
    run_.seed = cfg.seed;
    run_.sources.per_freq.resize(nf);
    cache_.gj.resize(nf);
    cache_.d.resize(nf);
    cache_.state.resize(nf);
    j_moments_.resize(nf);
  }

  TrainRun execute() {
    const StagePlan plan = make_stage_plan(cfg_.strategy, prob_.n_freq(), cfg_.epochs, cfg_.stage_split);
    std::size_t epoch = 0;
    try {
      for (std::size_t s = 0; s < plan.stages.size(); ++s) {
        const Stage& stage = plan.stages[s];
        const int stage_no = static_cast<int>(s) + 1;
        activate(stage.active);
        cg_.reset();
        for (std::size_t k = 1; k <= stage.epochs; ++k) {
          ++epoch;
          const bool zero_beta = cfg_.mode == Mode::alt || cfg_.force_zero_beta;
          const double beta =
              zero_beta ? 0.0
                        : beta_schedule(stage_no, static_cast<double>(k), static_cast<double>(stage.epochs),
                                        cfg_.beta_decay);
          EpochLog log;
          if (cfg_.mode == Mode::simul_cc)
            simul_epoch(stage.active, beta, log);
          else
            alternating_epoch(stage.active, beta, log);
          log.epoch = epoch;
          log.stage = stage_no;
          log.beta = beta;
          record(stage.active, beta, epoch, log);
          run_.epochs.push_back(std::move(log));
        }
      }
    } catch (const Error& e) {
      finish();
      throw TrainingError("training failed at epoch " + std::to_string(epoch) + ": " + e.what(), std::move(run_));
    }
    finish();
    return std::move(run_);
  }

 private:
  const InverseProblem& prob_;
  const TrainerConfig& cfg_;
  const TruthProfile* truth_;
  ContrastModel model_;
  TrainRun run_;
  CgState cg_;
  StepCache cache_;
  std::vector<AdamMoments> j_moments_;

  SourceSet& j() { return run_.sources; }

  void activate(std::span<const std::size_t> active) {
    for (std::size_t f : active) {
      if (j().per_freq[f].rows() != 0) continue;
      const FrequencyProblem& fp = prob_.at(f);
      j().per_freq[f] = init_sources(fp);
      cache_.gj[f] = fp.domain.apply(j().per_freq[f]);
      cache_.d[f] = ComplexBatch{};
      cache_.state[f] = FrequencyState{};
    }
  }

  std::vector<ComplexBatch> fields(std::span<const std::size_t> active) const {
    std::vector<ComplexBatch> e(prob_.n_freq());
    for (std::size_t f : active) {
      e[f] = prob_.at(f).e_inc;
      kernels::axpy(1.0, cache_.gj[f].data(), e[f].data());
    }
    return e;
  }

  ContrastSet current_chi(std::span<const std::size_t> active) {
    const MaterialMaps& m = model_.maps();
    return contrasts_from_maps(prob_, active, m.delta_eps, m.sigma);
  }

  void alternating_epoch(std::span<const std::size_t> active, double beta, EpochLog& log) {
    const ContrastSet chi = current_chi(active);
    const PrcgResult pr = prcg_step(prob_, active, j(), cg_, chi, beta, cfg_.clip_j, &cache_);
    log.alpha = pr.alpha;
    log.gamma = pr.gamma;
    log.stationary = pr.stationary;
    model_.nn_phase(prob_, active, j(), fields(active), beta, cfg_.n_inner, cfg_.clip_theta);
  }

  void simul_epoch(std::span<const std::size_t> active, double beta, EpochLog& log) {
    log.alpha = kNaN;
    log.gamma = kNaN;
    const ContrastSet chi = current_chi(active);
    std::vector<ComplexBatch> gjs(prob_.n_freq());
    double sq = 0.0;
    for (std::size_t f : active) {
      const FrequencyProblem& fp = prob_.at(f);
      const FrequencyState st = evaluate_state(fp, j().per_freq[f], chi[f], cache_.gj[f]);
      gjs[f] = gradient_of(fp, st, chi[f], beta);
      sq += kernels::norm2(gjs[f].data());
    }
    const ChiGradient gc = grad_chi(prob_, active, j(), chi, fields(active), beta);
    const std::vector<double> theta_grads = model_.map_gradient(gc.d_delta_eps, gc.d_sigma);

    const double norm = std::sqrt(sq);
    if (!std::isfinite(norm)) throw NumericError("simul-cc: non-finite source gradient");
    const double scale = norm > cfg_.clip_j_simul ? cfg_.clip_j_simul / norm : 1.0;
    const AdamHyper h{cfg_.net.lr, cfg_.net.beta1, cfg_.net.beta2, cfg_.net.eps_adam};
    for (std::size_t f : active) {
      for (auto& v : gjs[f].data()) v *= scale;
      adam_update(as_real(j().per_freq[f]), as_real(gjs[f]), j_moments_[f], h, 0.0);
      cache_.gj[f] = prob_.at(f).domain.apply(j().per_freq[f]);
      cache_.d[f] = ComplexBatch{};
    }
    model_.net().adam_step(theta_grads, cfg_.clip_theta, cfg_.net.lr);
  }

  void record(std::span<const std::size_t> active, double beta, std::size_t epoch, EpochLog& log) {
    const std::size_t nf = prob_.n_freq();
    log.terms.assign(nf, FrequencyLoss{});
    for (std::size_t f = 0; f < nf; ++f) log.terms[f] = {f, kNaN, kNaN, kNaN};
    const ContrastSet chi = current_chi(active);
    log.total = 0.0;
    for (std::size_t f : active) {
      const FrequencyProblem& fp = prob_.at(f);
      FrequencyState st = cache_.d[f].rows() != 0
                              ? evaluate_state(fp, j().per_freq[f], chi[f], cache_.gj[f], cache_.d[f])
                              : evaluate_state(fp, j().per_freq[f], chi[f], cache_.gj[f]);
      FrequencyLoss l = losses_of(fp, st);
      l.freq_index = f;
      cache_.d[f] = st.d;
      cache_.state[f] = std::move(st);
      if (!std::isfinite(l.data) || !std::isfinite(l.state) || !std::isfinite(l.cross))
        throw NumericError("non-finite loss at frequency index " + std::to_string(f));
      log.total += l.data + l.state + beta * l.cross;
      log.terms[f] = l;
    }
    log.psnr_eps = kNaN;
    log.psnr_sigma = kNaN;
    const bool due = epoch == cfg_.epochs || (cfg_.psnr_every > 0 && epoch % cfg_.psnr_every == 0);
    if (truth_ && due) {
      const MaterialMaps& m = model_.maps();
      RealGrid eps = m.delta_eps;
      for (auto& v : eps.values()) v += 1.0;
      log.psnr_eps = psnr(eps, truth_->eps_true, truth_->peak_eps);
      if (truth_->peak_sigma > 0.0) log.psnr_sigma = psnr(m.sigma, truth_->sigma_true, truth_->peak_sigma);
    }
  }

  void finish() {
    const MaterialMaps& m = model_.maps();
    run_.eps_r = m.delta_eps;
    for (auto& v : run_.eps_r.values()) v += 1.0;
    run_.sigma = m.sigma;
    run_.net = model_.net();
  }
};

}  // namespace

TrainRun run(const InverseProblem& prob, const TrainerConfig& cfg, const TruthProfile* truth) {
  cfg.validate();
  if (truth && truth->eps_true.size() != prob.scene().n_pixels())
    throw DimensionError("run: truth profile does not match the inversion grid");
  Runner r(prob, cfg, truth);
  return r.execute();
}

MonteCarloResult monte_carlo(const InverseProblem& prob, const TrainerConfig& cfg, std::size_t n_runs,
                             std::uint64_t base_seed, const TruthProfile* truth, std::size_t max_threads) {
  if (n_runs == 0) throw ValueError("monte_carlo: need at least one run");
  std::vector<std::optional<TrainRun>> slots(n_runs);
  std::vector<std::string> errors(n_runs);
  parallel_for(
      n_runs,
      [&](std::size_t i) {
        TrainerConfig c = cfg;
        c.seed = base_seed + i;
        try {
          slots[i] = run(prob, c, truth);
        } catch (const Error& e) {
          errors[i] = e.what();
        }
      },
      max_threads);
  MonteCarloResult out;
  for (std::size_t i = 0; i < n_runs; ++i) {
    if (slots[i])
      out.runs.push_back(std::move(*slots[i]));
    else
      out.failures.push_back({base_seed + i, errors[i]});
  }
  if (!out.runs.empty()) out.stats = summarize_runs(out.runs);
  return out;
}

}  // namespace misi
