#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "misi/types.hpp"

namespace misi {

struct NetworkConfig {
  std::size_t features = 128;  // Fourier features m; the embedding has 2m inputs
  double sigma_ff = 3.0;
  std::size_t hidden_layers = 3;
  std::size_t width = 256;
  double eps_max = 80.0;   // delta_eps in (0, eps_max - 1)
  double sigma_max = 1.0;  // sigma in (0, sigma_max) S/m; 0 pins sigma to zero
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_adam = 1e-8;
  double output_bias = -3.0;

  void validate() const;
  bool operator==(const NetworkConfig&) const = default;
};

struct AdamMoments {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;
  bool operator==(const AdamMoments&) const = default;
};

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Clips grads to global L2 norm max_norm, then applies a bias-corrected Adam update.
/// Returns the norm before clipping. Throws NumericError on non-finite gradients.
double adam_update(std::span<double> params, std::span<const double> grads, AdamMoments& moments,
                   const AdamHyper& hyper, double max_norm);

/// Weight-normalised linear layer: row i of W is g_i V_i / ||V_i||.
struct LayerLayout {
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t v_offset = 0;
  std::size_t g_offset = 0;
  std::size_t b_offset = 0;
  bool operator==(const LayerLayout&) const = default;
};

/// Fourier-feature MLP parameters and optimiser state. Trainable parameters are
/// stored flat in declaration order (per layer: V, g, b); the feature matrix is fixed.
class NetworkState {
 public:
  static NetworkState init(std::uint64_t seed, const NetworkConfig& cfg);
  /// Rebuilds from stored arrays (checkpoint loading); validates sizes.
  static NetworkState from_parts(const NetworkConfig& cfg, std::vector<double> feature_matrix,
                                 std::vector<double> params, AdamMoments adam);

  const NetworkConfig& config() const { return cfg_; }
  std::span<const double> feature_matrix() const { return b_feat_; }  // m x 2
  std::span<const double> params() const { return params_; }
  /// Mutable access invalidates cached forward passes.
  std::span<double> mutable_params() {
    ++version_;
    return params_;
  }
  const std::vector<LayerLayout>& layers() const { return layers_; }
  const AdamMoments& adam() const { return adam_; }
  std::uint64_t version() const { return version_; }

  std::span<const double> direction(std::size_t layer) const;
  std::span<const double> magnitude(std::size_t layer) const;
  std::span<const double> bias(std::size_t layer) const;

  /// Global-norm clip then Adam on every trainable parameter.
  double adam_step(std::span<const double> grads, double max_norm, double lr);

  /// Parameters, features and optimiser state; the version counter is excluded.
  bool same_state(const NetworkState& o) const;

 private:
  NetworkConfig cfg_;
  std::vector<double> b_feat_;
  std::vector<double> params_;
  std::vector<LayerLayout> layers_;
  AdamMoments adam_;
  std::uint64_t version_ = 0;

  static std::vector<LayerLayout> make_layout(const NetworkConfig& cfg, std::size_t& total);
};

struct MaterialMaps {
  RealGrid delta_eps;  // eps_r - 1
  RealGrid sigma;      // S/m
};

/// Activations retained for the reverse pass.
struct ForwardCache {
  std::uint64_t version = 0;
  const NetworkState* owner = nullptr;
  std::size_t n_points = 0;
  std::vector<std::vector<double>> inputs;   // per layer: P x in
  std::vector<std::vector<double>> pre;      // per layer: P x out
  std::vector<std::vector<double>> gates;    // per layer: sigmoid(pre)
  std::vector<std::vector<double>> weights;  // effective W per layer: out x in
  std::vector<std::vector<double>> row_norms;
  // Fourier embedding, reused while the coordinates and feature matrix are unchanged
  std::vector<double> embed_coords;
  std::vector<double> embed_features;
  std::vector<double> embedding;
};

/// coords: P points as interleaved (x, y) in [-1, 1]^2 with P = n^2 (row-major grid).
MaterialMaps forward_maps(const NetworkState& net, std::span<const double> coords, ForwardCache* cache = nullptr);

/// Exact reverse-mode gradient of sum_n (dL/d delta_eps_n * delta_eps_n + dL/dsigma_n * sigma_n)
/// with respect to the flat parameter vector. Throws ValueError on a stale cache.
std::vector<double> backward_maps(const NetworkState& net, const ForwardCache& cache,
                                  const RealGrid& d_delta_eps, const RealGrid& d_sigma);

}  // namespace misi
