#include "misi/net.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "misi/error.hpp"
#include "misi/kernels.hpp"

namespace misi {
namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double row_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

void NetworkConfig::validate() const {
  if (features < 1 || width < 1 || hidden_layers < 1) throw ValueError("network: features, width, depth must be >= 1");
  if (!(eps_max > 1.0)) throw ValueError("network: eps_max must exceed 1");
  if (!(sigma_max >= 0.0)) throw ValueError("network: sigma_max must be non-negative");
  if (!(lr > 0.0) || !(sigma_ff >= 0.0)) throw ValueError("network: lr must be positive, sigma_ff non-negative");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(eps_adam > 0.0))
    throw ValueError("network: invalid Adam hyperparameters");
}

double adam_update(std::span<double> params, std::span<const double> grads, AdamMoments& mom,
                   const AdamHyper& h, double max_norm) {
  if (params.size() != grads.size()) throw DimensionError("adam: gradient size does not match parameters");
  double sq = 0.0;
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i]))
      throw NumericError("adam: non-finite gradient at parameter " + std::to_string(i));
    sq += grads[i] * grads[i];
  }
  const double norm = std::sqrt(sq);
  const double scale = (max_norm > 0.0 && norm > max_norm) ? max_norm / norm : 1.0;
  if (mom.m.size() != params.size()) {
    mom.m.assign(params.size(), 0.0);
    mom.v.assign(params.size(), 0.0);
  }
  ++mom.step;
  const double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(mom.step));
  const double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(mom.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i] * scale;
    mom.m[i] = h.beta1 * mom.m[i] + (1.0 - h.beta1) * g;
    mom.v[i] = h.beta2 * mom.v[i] + (1.0 - h.beta2) * g * g;
    const double m_hat = mom.m[i] / bc1;
    const double v_hat = mom.v[i] / bc2;
    params[i] -= h.lr * m_hat / (std::sqrt(v_hat) + h.eps);
  }
  return norm;
}

std::vector<LayerLayout> NetworkState::make_layout(const NetworkConfig& cfg, std::size_t& total) {
  std::vector<LayerLayout> layers;
  std::size_t in = 2 * cfg.features;
  total = 0;
  for (std::size_t l = 0; l <= cfg.hidden_layers; ++l) {
    const std::size_t out = l == cfg.hidden_layers ? 2 : cfg.width;
    LayerLayout ly{in, out, total, total + in * out, total + in * out + out};
    total += in * out + 2 * out;
    layers.push_back(ly);
    in = out;
  }
  return layers;
}

NetworkState NetworkState::init(std::uint64_t seed, const NetworkConfig& cfg) {
  cfg.validate();
  NetworkState net;
  net.cfg_ = cfg;
  std::size_t total = 0;
  net.layers_ = make_layout(cfg, total);
  net.params_.assign(total, 0.0);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  net.b_feat_.resize(cfg.features * 2);
  for (auto& b : net.b_feat_) b = cfg.sigma_ff * normal(rng);

  for (std::size_t l = 0; l < net.layers_.size(); ++l) {
    const LayerLayout& ly = net.layers_[l];
    const double scale = 1.0 / std::sqrt(static_cast<double>(ly.in));
    for (std::size_t i = 0; i < ly.out; ++i) {
      double* v = net.params_.data() + ly.v_offset + i * ly.in;
      for (std::size_t k = 0; k < ly.in; ++k) v[k] = scale * normal(rng);
      net.params_[ly.g_offset + i] = row_norm({v, ly.in});
    }
    const bool output = l + 1 == net.layers_.size();
    for (std::size_t i = 0; i < ly.out; ++i) net.params_[ly.b_offset + i] = output ? cfg.output_bias : 0.0;
  }
  return net;
}

NetworkState NetworkState::from_parts(const NetworkConfig& cfg, std::vector<double> feature_matrix,
                                      std::vector<double> params, AdamMoments adam) {
  cfg.validate();
  NetworkState net;
  net.cfg_ = cfg;
  std::size_t total = 0;
  net.layers_ = make_layout(cfg, total);
  if (feature_matrix.size() != 2 * cfg.features || params.size() != total)
    throw DimensionError("network: stored arrays do not match the configuration");
  if (!adam.m.empty() && (adam.m.size() != total || adam.v.size() != total))
    throw DimensionError("network: Adam moments do not match the parameter count");
  net.b_feat_ = std::move(feature_matrix);
  net.params_ = std::move(params);
  net.adam_ = std::move(adam);
  return net;
}

std::span<const double> NetworkState::direction(std::size_t l) const {
  const auto& ly = layers_.at(l);
  return {params_.data() + ly.v_offset, ly.in * ly.out};
}
std::span<const double> NetworkState::magnitude(std::size_t l) const {
  const auto& ly = layers_.at(l);
  return {params_.data() + ly.g_offset, ly.out};
}
std::span<const double> NetworkState::bias(std::size_t l) const {
  const auto& ly = layers_.at(l);
  return {params_.data() + ly.b_offset, ly.out};
}

double NetworkState::adam_step(std::span<const double> grads, double max_norm, double lr) {
  const AdamHyper h{lr, cfg_.beta1, cfg_.beta2, cfg_.eps_adam};
  const double norm = adam_update(params_, grads, adam_, h, max_norm);
  ++version_;
  return norm;
}

bool NetworkState::same_state(const NetworkState& o) const {
  return cfg_ == o.cfg_ && b_feat_ == o.b_feat_ && params_ == o.params_ && layers_ == o.layers_ &&
         adam_ == o.adam_;
}

MaterialMaps forward_maps(const NetworkState& net, std::span<const double> coords, ForwardCache* cache) {
  if (coords.size() % 2 != 0) throw DimensionError("forward_maps: coords must be (x, y) pairs");
  const std::size_t npts = coords.size() / 2;
  const auto n = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(npts))));
  if (n * n != npts) throw DimensionError("forward_maps: point count must be a square grid");
  const NetworkConfig& cfg = net.config();
  const std::size_t m = cfg.features;
  const auto bf = net.feature_matrix();
  const auto& k = kernels::active();

  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  const bool reuse = std::equal(coords.begin(), coords.end(), c.embed_coords.begin(), c.embed_coords.end()) &&
                     std::equal(bf.begin(), bf.end(), c.embed_features.begin(), c.embed_features.end());
  if (!reuse) {
    c.embedding.assign(npts * 2 * m, 0.0);
    for (std::size_t p = 0; p < npts; ++p) {
      const double x = coords[2 * p], y = coords[2 * p + 1];
      for (std::size_t i = 0; i < m; ++i) {
        const double phase = 2.0 * kPi * (bf[2 * i] * x + bf[2 * i + 1] * y);
        c.embedding[p * 2 * m + i] = std::sin(phase);
        c.embedding[p * 2 * m + m + i] = std::cos(phase);
      }
    }
    c.embed_coords.assign(coords.begin(), coords.end());
    c.embed_features.assign(bf.begin(), bf.end());
  }
  std::vector<double> h = c.embedding;

  c.inputs.clear();
  c.pre.clear();
  c.gates.clear();
  c.weights.clear();
  c.row_norms.clear();
  c.version = net.version();
  c.owner = &net;
  c.n_points = npts;

  const auto params = net.params();
  const auto& layers = net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const LayerLayout& ly = layers[l];
    std::vector<double> w(ly.out * ly.in), norms(ly.out);
    for (std::size_t i = 0; i < ly.out; ++i) {
      const double* v = params.data() + ly.v_offset + i * ly.in;
      norms[i] = row_norm({v, ly.in});
      if (!(norms[i] > 0.0)) throw NumericError("forward_maps: zero-norm weight direction");
      const double s = params[ly.g_offset + i] / norms[i];
      for (std::size_t kk = 0; kk < ly.in; ++kk) w[i * ly.in + kk] = s * v[kk];
    }
    std::vector<double> z(npts * ly.out);
    k.dgemm_nt(h.data(), w.data(), z.data(), npts, ly.out, ly.in);
    for (std::size_t p = 0; p < npts; ++p)
      for (std::size_t i = 0; i < ly.out; ++i) z[p * ly.out + i] += params[ly.b_offset + i];

    const bool output = l + 1 == layers.size();
    std::vector<double> gate(z.size()), next;
    for (std::size_t i = 0; i < z.size(); ++i) gate[i] = sigmoid(z[i]);
    if (!output) {
      next.resize(z.size());
      for (std::size_t i = 0; i < z.size(); ++i) next[i] = z[i] * gate[i];  // SiLU
    }
    c.gates.push_back(std::move(gate));
    c.inputs.push_back(std::move(h));
    c.weights.push_back(std::move(w));
    c.row_norms.push_back(std::move(norms));
    c.pre.push_back(std::move(z));
    h = std::move(next);
  }

  const std::vector<double>& sout = c.gates.back();
  MaterialMaps maps{RealGrid(n), RealGrid(n)};
  for (std::size_t p = 0; p < npts; ++p) {
    maps.delta_eps[p] = (cfg.eps_max - 1.0) * sout[2 * p];
    maps.sigma[p] = cfg.sigma_max * sout[2 * p + 1];
  }
  return maps;
}

std::vector<double> backward_maps(const NetworkState& net, const ForwardCache& c, const RealGrid& d_delta_eps,
                                  const RealGrid& d_sigma) {
  if (c.owner != &net || c.version != net.version())
    throw ValueError("backward_maps: forward cache is stale (parameters changed since the forward pass)");
  const std::size_t npts = c.n_points;
  if (d_delta_eps.size() != npts || d_sigma.size() != npts)
    throw DimensionError("backward_maps: upstream gradient size does not match the forward pass");
  const NetworkConfig& cfg = net.config();
  const auto& layers = net.layers();
  const auto params = net.params();
  const auto& k = kernels::active();
  std::vector<double> grads(params.size(), 0.0);

  std::vector<double> dz(npts * 2);
  const std::vector<double>& sout = c.gates.back();
  for (std::size_t p = 0; p < npts; ++p) {
    const double s1 = sout[2 * p];
    const double s2 = sout[2 * p + 1];
    dz[2 * p] = d_delta_eps[p] * (cfg.eps_max - 1.0) * s1 * (1.0 - s1);
    dz[2 * p + 1] = d_sigma[p] * cfg.sigma_max * s2 * (1.0 - s2);
  }

  for (std::size_t li = layers.size(); li-- > 0;) {
    const LayerLayout& ly = layers[li];
    const std::vector<double>& hin = c.inputs[li];
    std::vector<double> dw(ly.out * ly.in);
    k.dgemm_tn(dz.data(), hin.data(), dw.data(), ly.out, ly.in, npts);
    for (std::size_t p = 0; p < npts; ++p)
      for (std::size_t i = 0; i < ly.out; ++i) grads[ly.b_offset + i] += dz[p * ly.out + i];

    // weight-norm chain: dL/dg = <dW_i, V_i/|V_i|>, dL/dV = g/|V| (dW_i - <dW_i, V_i>/|V_i|^2 V_i)
    for (std::size_t i = 0; i < ly.out; ++i) {
      const double* v = params.data() + ly.v_offset + i * ly.in;
      const double* dwi = dw.data() + i * ly.in;
      const double nv = c.row_norms[li][i];
      double dot = 0.0;
      for (std::size_t kk = 0; kk < ly.in; ++kk) dot += dwi[kk] * v[kk];
      grads[ly.g_offset + i] = dot / nv;
      const double gs = params[ly.g_offset + i] / nv;
      const double proj = dot / (nv * nv);
      double* gv = grads.data() + ly.v_offset + i * ly.in;
      for (std::size_t kk = 0; kk < ly.in; ++kk) gv[kk] = gs * (dwi[kk] - proj * v[kk]);
    }

    if (li == 0) break;
    std::vector<double> dh(npts * ly.in);
    k.dgemm_nn(dz.data(), c.weights[li].data(), dh.data(), npts, ly.in, ly.out);
    const std::vector<double>& zprev = c.pre[li - 1];
    const std::vector<double>& sprev = c.gates[li - 1];
    for (std::size_t i = 0; i < dh.size(); ++i) dh[i] *= sprev[i] * (1.0 + zprev[i] * (1.0 - sprev[i]));
    dz = std::move(dh);
  }
  return grads;
}

}  // namespace misi
