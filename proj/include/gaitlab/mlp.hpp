#pragma once

#include <random>
#include <vector>

#include "gaitlab/common.hpp"

namespace gaitlab {

inline constexpr double kLeakySlope = 0.01;

inline double leaky_relu(double x) { return x > 0.0 ? x : kLeakySlope * x; }

struct DenseLayer {
  /// out x in.
  MatX w;
  VecX b;
};

/// Fully connected network with LeakyReLU hidden layers and a linear output.
/// Batches are column-major: one sample per column.
class Mlp {
 public:
  struct Cache {
    std::vector<MatX> inputs;
    std::vector<MatX> pre;
  };

  Mlp() = default;
  /// Zero-initialised network with layer sizes [in, hidden..., out].
  explicit Mlp(std::vector<int> sizes);
  /// Scaled-normal initialisation; the output layer is further scaled by `output_gain`.
  Mlp(std::vector<int> sizes, std::mt19937_64& rng, double output_gain = 0.01);

  MatX forward(const MatX& x) const;
  MatX forward(const MatX& x, Cache& cache) const;
  /// Accumulates dL/dparams into `grad` (flat layout of params()); returns dL/dx.
  MatX backward(const Cache& cache, const MatX& grad_out, VecX& grad) const;

  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  const std::vector<int>& sizes() const { return sizes_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }

  int num_params() const;
  VecX params() const;
  void set_params(const VecX& p);

 private:
  std::vector<int> sizes_;
  std::vector<DenseLayer> layers_;
};

struct AdamConfig {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam() = default;
  Adam(int n, AdamConfig cfg);

  void step(VecX& params, const VecX& grad);
  void set_lr(double lr) { cfg_.lr = lr; }
  const AdamConfig& config() const { return cfg_; }
  int steps() const { return t_; }

 private:
  AdamConfig cfg_;
  VecX m_;
  VecX v_;
  int t_ = 0;
};

}  // namespace gaitlab
