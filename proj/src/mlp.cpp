#include "gaitlab/mlp.hpp"

#include <cmath>

namespace gaitlab {

namespace {

void check_sizes(const std::vector<int>& sizes) {
  if (sizes.size() < 2) throw InvalidInput("Mlp: need at least input and output sizes");
  for (int s : sizes) {
    if (s <= 0) throw InvalidInput("Mlp: layer sizes must be positive");
  }
}

}  // namespace

Mlp::Mlp(std::vector<int> sizes) : sizes_(std::move(sizes)) {
  check_sizes(sizes_);
  for (size_t l = 0; l + 1 < sizes_.size(); ++l) {
    layers_.push_back({MatX::Zero(sizes_[l + 1], sizes_[l]), VecX::Zero(sizes_[l + 1])});
  }
}

Mlp::Mlp(std::vector<int> sizes, std::mt19937_64& rng, double output_gain) : Mlp(std::move(sizes)) {
  std::normal_distribution<double> n01(0.0, 1.0);
  for (size_t l = 0; l < layers_.size(); ++l) {
    const double fan_in = static_cast<double>(layers_[l].w.cols());
    double scale = std::sqrt(2.0 / fan_in);
    if (l + 1 == layers_.size()) scale *= output_gain;
    for (Eigen::Index i = 0; i < layers_[l].w.size(); ++i) layers_[l].w.data()[i] = scale * n01(rng);
  }
}

MatX Mlp::forward(const MatX& x) const {
  Cache c;
  return forward(x, c);
}

MatX Mlp::forward(const MatX& x, Cache& cache) const {
  if (x.rows() != input_size()) throw ContractViolation("Mlp::forward: input size mismatch");
  cache.inputs.resize(layers_.size());
  cache.pre.resize(layers_.size());
  MatX a = x;
  for (size_t l = 0; l < layers_.size(); ++l) {
    cache.inputs[l] = a;
    MatX z = layers_[l].w * a;
    z.colwise() += layers_[l].b;
    cache.pre[l] = z;
    if (l + 1 < layers_.size()) {
      a = z.unaryExpr([](double v) { return leaky_relu(v); });
    } else {
      a = std::move(z);
    }
  }
  if (!a.allFinite()) throw TrainingDiverged("Mlp::forward: non-finite activations");
  return a;
}

MatX Mlp::backward(const Cache& cache, const MatX& grad_out, VecX& grad) const {
  if (grad.size() != num_params()) grad = VecX::Zero(num_params());
  std::vector<Eigen::Index> offset(layers_.size());
  Eigen::Index o = 0;
  for (size_t l = 0; l < layers_.size(); ++l) {
    offset[l] = o;
    o += layers_[l].w.size() + layers_[l].b.size();
  }
  MatX g = grad_out;
  for (size_t li = layers_.size(); li-- > 0;) {
    const DenseLayer& layer = layers_[li];
    if (li + 1 < layers_.size()) {
      g = g.cwiseProduct(cache.pre[li].unaryExpr([](double v) { return v > 0.0 ? 1.0 : kLeakySlope; }));
    }
    Eigen::Map<MatX> gw(grad.data() + offset[li], layer.w.rows(), layer.w.cols());
    gw.noalias() += g * cache.inputs[li].transpose();
    grad.segment(offset[li] + layer.w.size(), layer.b.size()) += g.rowwise().sum();
    g = layer.w.transpose() * g;
  }
  return g;
}

int Mlp::num_params() const {
  Eigen::Index n = 0;
  for (const auto& l : layers_) n += l.w.size() + l.b.size();
  return static_cast<int>(n);
}

VecX Mlp::params() const {
  VecX p(num_params());
  Eigen::Index o = 0;
  for (const auto& l : layers_) {
    p.segment(o, l.w.size()) = Eigen::Map<const VecX>(l.w.data(), l.w.size());
    o += l.w.size();
    p.segment(o, l.b.size()) = l.b;
    o += l.b.size();
  }
  return p;
}

void Mlp::set_params(const VecX& p) {
  if (p.size() != num_params()) throw ContractViolation("Mlp::set_params: size mismatch");
  Eigen::Index o = 0;
  for (auto& l : layers_) {
    Eigen::Map<VecX>(l.w.data(), l.w.size()) = p.segment(o, l.w.size());
    o += l.w.size();
    l.b = p.segment(o, l.b.size());
    o += l.b.size();
  }
}

Adam::Adam(int n, AdamConfig cfg) : cfg_(cfg), m_(VecX::Zero(n)), v_(VecX::Zero(n)) {}

void Adam::step(VecX& params, const VecX& grad) {
  if (grad.size() != m_.size() || params.size() != m_.size()) throw ContractViolation("Adam::step: size mismatch");
  ++t_;
  m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * grad;
  v_ = cfg_.beta2 * v_ + (1.0 - cfg_.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(cfg_.beta1, t_);
  const double c2 = 1.0 - std::pow(cfg_.beta2, t_);
  params.array() -= cfg_.lr * (m_.array() / c1) / ((v_.array() / c2).sqrt() + cfg_.eps);
}

}  // namespace gaitlab
