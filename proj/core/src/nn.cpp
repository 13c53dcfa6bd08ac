#include "peat/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace peat {

namespace {

double apply_activation(Activation act, double x) {
  switch (act) {
    case Activation::Tanh:
      return std::tanh(x);
    case Activation::Relu:
      return x > 0.0 ? x : 0.0;
  }
  return x;
}

double activation_grad(Activation act, double pre, double post) {
  switch (act) {
    case Activation::Tanh:
      return 1.0 - post * post;
    case Activation::Relu:
      return pre > 0.0 ? 1.0 : 0.0;
  }
  return 1.0;
}

// log(sigmoid(x)) without overflow for large |x|
double log_sigmoid(double x) {
  return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

// log(1 - tanh(u)^2), stable for large |u|
double log_one_minus_tanh_sq(double u) {
  const double a = std::abs(u);
  return 2.0 * (std::log(2.0) - a - std::log1p(std::exp(-2.0 * a)));
}

constexpr double kHalfLog2Pi = 0.9189385332046727;  // 0.5*log(2*pi)

}  // namespace

Mlp make_mlp(const std::vector<int>& layer_sizes, Rng& rng, double output_scale,
             Activation activation) {
  if (layer_sizes.size() < 2) throw std::invalid_argument("an MLP needs at least two layer sizes");
  Mlp net;
  net.activation = activation;
  const int layers = static_cast<int>(layer_sizes.size()) - 1;
  net.weights.reserve(layers);
  net.biases.reserve(layers);
  for (int l = 0; l < layers; ++l) {
    const int fan_in = layer_sizes[l];
    const int fan_out = layer_sizes[l + 1];
    if (fan_in < 1 || fan_out < 1) throw std::invalid_argument("layer sizes must be positive");
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    const double scale = l == layers - 1 ? output_scale : 1.0;
    Matrix w(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r) {
      for (int c = 0; c < fan_in; ++c) w(r, c) = scale * rng.uniform(-limit, limit);
    }
    net.weights.push_back(std::move(w));
    net.biases.push_back(Vector::Zero(fan_out));
  }
  return net;
}

Vector forward(const Mlp& net, const Vector& input, ForwardCache* cache) {
  if (input.size() != net.input_size()) {
    throw std::invalid_argument("input length does not match the network input size");
  }
  if (cache) {
    cache->pre.clear();
    cache->post.clear();
    cache->post.push_back(input);
  }
  Vector x = input;
  const int layers = net.layer_count();
  for (int l = 0; l < layers; ++l) {
    Vector pre = net.weights[l] * x + net.biases[l];
    if (l < layers - 1) {
      x = pre.unaryExpr([&](double v) { return apply_activation(net.activation, v); });
    } else {
      x = pre;
    }
    if (cache) {
      cache->pre.push_back(std::move(pre));
      cache->post.push_back(x);
    }
  }
  return x;
}

void MlpGrad::zero() {
  for (auto& w : weights) w.setZero();
  for (auto& b : biases) b.setZero();
}

MlpGrad zero_grad_like(const Mlp& net) {
  MlpGrad g;
  g.weights.reserve(net.weights.size());
  g.biases.reserve(net.biases.size());
  for (const auto& w : net.weights) g.weights.push_back(Matrix::Zero(w.rows(), w.cols()));
  for (const auto& b : net.biases) g.biases.push_back(Vector::Zero(b.size()));
  return g;
}

Vector backward(const Mlp& net, const ForwardCache& cache, const Vector& output_grad,
                MlpGrad& grad) {
  const int layers = net.layer_count();
  if (static_cast<int>(cache.pre.size()) != layers ||
      static_cast<int>(cache.post.size()) != layers + 1) {
    throw std::logic_error("forward cache does not match the network");
  }
  if (output_grad.size() != net.output_size()) {
    throw std::invalid_argument("output gradient length does not match the network output size");
  }
  Vector delta = output_grad;
  for (int l = layers - 1; l >= 0; --l) {
    if (l < layers - 1) {
      // walk the activation backwards before touching layer l's parameters
      for (Eigen::Index i = 0; i < delta.size(); ++i) {
        delta[i] *= activation_grad(net.activation, cache.pre[l][i], cache.post[l + 1][i]);
      }
    }
    grad.weights[l].noalias() += delta * cache.post[l].transpose();
    grad.biases[l] += delta;
    if (l > 0) delta = net.weights[l].transpose() * delta;
  }
  return net.weights[0].transpose() * delta;
}

namespace {

void append_views(ParamViews& views, std::vector<Matrix>& mats, std::vector<Vector>& vecs) {
  for (auto& m : mats) views.emplace_back(m.data(), m.size());
  for (auto& v : vecs) views.emplace_back(v.data(), v.size());
}

}  // namespace

ParamViews param_views(Mlp& net) {
  ParamViews views;
  append_views(views, net.weights, net.biases);
  return views;
}

ParamViews param_views(MlpGrad& grad) {
  ParamViews views;
  append_views(views, grad.weights, grad.biases);
  return views;
}

double global_norm(const ParamViews& views) {
  double sq = 0.0;
  for (const auto& v : views) sq += (v * v).sum();
  return std::sqrt(sq);
}

void clip_global_norm(ParamViews views, double max_norm) {
  const double norm = global_norm(views);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (auto& v : views) v *= scale;
  }
}

AdamState make_adam(const ParamViews& params, double lr) {
  AdamState state;
  state.lr = lr;
  state.m.reserve(params.size());
  state.v.reserve(params.size());
  for (const auto& p : params) {
    state.m.push_back(Eigen::ArrayXd::Zero(p.size()));
    state.v.push_back(Eigen::ArrayXd::Zero(p.size()));
  }
  return state;
}

void adam_step(AdamState& state, ParamViews params, const ParamViews& grads) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw std::invalid_argument("adam_step: parameter/gradient shapes do not match");
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].size() != grads[i].size() || params[i].size() != state.m[i].size()) {
      throw std::invalid_argument("adam_step: parameter/gradient shapes do not match");
    }
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i] * grads[i];
    params[i] -= state.lr * (state.m[i] / bc1) / ((state.v[i] / bc2).sqrt() + state.epsilon);
  }
}

// --- Bernoulli head -----------------------------------------------------

BernoulliSample bernoulli_sample(const BernoulliHead& head, const Vector& state, Rng& rng) {
  const Vector logits = forward(head.logits_net, state);
  BernoulliSample s;
  s.bits.resize(logits.size());
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    const double p = sigmoid(logits[i]);
    const int bit = rng.bernoulli(p) ? 1 : 0;
    s.bits[i] = bit;
    s.logprob += bit == 1 ? log_sigmoid(logits[i]) : log_sigmoid(-logits[i]);
    s.entropy += -p * log_sigmoid(logits[i]) - (1.0 - p) * log_sigmoid(-logits[i]);
  }
  return s;
}

BernoulliEval logprob_of(const BernoulliHead& head, const Vector& state,
                         const std::vector<int>& bits) {
  if (static_cast<Eigen::Index>(bits.size()) != head.logits_net.output_size()) {
    throw std::invalid_argument("action length does not match the head output size");
  }
  BernoulliEval eval;
  eval.logits = forward(head.logits_net, state, &eval.cache);
  eval.bits = bits;
  eval.probs.resize(eval.logits.size());
  for (Eigen::Index i = 0; i < eval.logits.size(); ++i) {
    const double l = eval.logits[i];
    eval.probs[i] = sigmoid(l);
    eval.logprob += bits[i] == 1 ? log_sigmoid(l) : log_sigmoid(-l);
    eval.entropy += -eval.probs[i] * log_sigmoid(l) - (1.0 - eval.probs[i]) * log_sigmoid(-l);
  }
  return eval;
}

void bernoulli_backward(const BernoulliHead& head, const BernoulliEval& eval, double dlogprob,
                        double dentropy, MlpGrad& grad) {
  Vector dlogits(eval.logits.size());
  for (Eigen::Index i = 0; i < eval.logits.size(); ++i) {
    const double p = eval.probs[i];
    // d logprob / d logit = bit - p;  d entropy / d logit = -logit * p * (1-p)
    dlogits[i] = dlogprob * (static_cast<double>(eval.bits[i]) - p) +
                 dentropy * (-eval.logits[i] * p * (1.0 - p));
  }
  backward(head.logits_net, eval.cache, dlogits, grad);
}

// --- Gaussian head ------------------------------------------------------

void GaussianHead::clamp_log_std() {
  for (Eigen::Index i = 0; i < log_std.size(); ++i) {
    log_std[i] = std::min(kLogStdMax, std::max(kLogStdMin, log_std[i]));
  }
}

namespace {

double squash(double u, double lo, double hi) {
  return lo + (hi - lo) * (std::tanh(u) + 1.0) * 0.5;
}

// logprob contribution of one dimension: Gaussian density of u plus the
// change-of-variables term -log|da/du|.
double squashed_logprob_dim(double u, double mean, double log_std, double lo, double hi) {
  const double std = std::exp(log_std);
  const double zscore = (u - mean) / std;
  const double gauss = -kHalfLog2Pi - log_std - 0.5 * zscore * zscore;
  const double log_dadu = std::log((hi - lo) * 0.5) + log_one_minus_tanh_sq(u);
  return gauss - log_dadu;
}

}  // namespace

GaussianSample gaussian_sample(const GaussianHead& head, const Vector& state, double lo, double hi,
                               Rng& rng) {
  if (!(lo < hi)) throw std::invalid_argument("bounds must satisfy lo < hi");
  const Vector mean = forward(head.mean_net, state);
  GaussianSample s;
  s.actions.resize(mean.size());
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    const double std = std::exp(head.log_std[i]);
    const double u = mean[i] + std * rng.normal();
    s.actions[i] = squash(u, lo, hi);
    s.logprob += squashed_logprob_dim(u, mean[i], head.log_std[i], lo, hi);
    s.entropy += kHalfLog2Pi + 0.5 + head.log_std[i];
  }
  return s;
}

GaussianEval logprob_of(const GaussianHead& head, const Vector& state,
                        const std::vector<double>& actions, double lo, double hi) {
  if (!(lo < hi)) throw std::invalid_argument("bounds must satisfy lo < hi");
  if (static_cast<Eigen::Index>(actions.size()) != head.mean_net.output_size()) {
    throw std::invalid_argument("action length does not match the head output size");
  }
  GaussianEval eval;
  eval.mean = forward(head.mean_net, state, &eval.cache);
  eval.pre_squash.resize(eval.mean.size());
  for (Eigen::Index i = 0; i < eval.mean.size(); ++i) {
    const double a = std::min(hi - 1e-6, std::max(lo + 1e-6, actions[i]));
    const double y = 2.0 * (a - lo) / (hi - lo) - 1.0;
    const double u = std::atanh(y);
    eval.pre_squash[i] = u;
    eval.logprob += squashed_logprob_dim(u, eval.mean[i], head.log_std[i], lo, hi);
    eval.entropy += kHalfLog2Pi + 0.5 + head.log_std[i];
  }
  return eval;
}

void gaussian_backward(const GaussianHead& head, const GaussianEval& eval, double dlogprob,
                       double dentropy, MlpGrad& mean_grad, Vector& log_std_grad) {
  Vector dmean(eval.mean.size());
  for (Eigen::Index i = 0; i < eval.mean.size(); ++i) {
    const double std = std::exp(head.log_std[i]);
    const double zscore = (eval.pre_squash[i] - eval.mean[i]) / std;
    dmean[i] = dlogprob * zscore / std;
    // d logprob / d log_std = zscore^2 - 1;  d entropy / d log_std = 1
    log_std_grad[i] += dlogprob * (zscore * zscore - 1.0) + dentropy;
  }
  backward(head.mean_net, eval.cache, dmean, mean_grad);
}

}  // namespace peat
