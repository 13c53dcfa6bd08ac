#pragma once

#include <Eigen/Dense>
#include <vector>

#include "peat/rng.hpp"

namespace peat {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class Activation { Tanh, Relu };

// Fully connected network with linear output. weights[l] maps layer l's
// post-activation (or the input for l = 0) to layer l+1's pre-activation.
struct Mlp {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  Activation activation = Activation::Tanh;

  int input_size() const { return static_cast<int>(weights.front().cols()); }
  int output_size() const { return static_cast<int>(weights.back().rows()); }
  int layer_count() const { return static_cast<int>(weights.size()); }
};

// Scaled-uniform (Glorot) init; output layer additionally scaled by
// output_scale so a freshly built policy starts close to uniform.
Mlp make_mlp(const std::vector<int>& layer_sizes, Rng& rng, double output_scale = 1.0,
             Activation activation = Activation::Tanh);

// Pre- and post-activation record of one forward pass; post[0] is the input.
struct ForwardCache {
  std::vector<Vector> pre;
  std::vector<Vector> post;
};

Vector forward(const Mlp& net, const Vector& input, ForwardCache* cache = nullptr);

// Parameter-shaped gradient accumulator.
struct MlpGrad {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  void zero();
};

MlpGrad zero_grad_like(const Mlp& net);

// Accumulates exact analytic gradients of the scalar whose output-gradient
// is supplied into grad; returns the gradient with respect to the input.
Vector backward(const Mlp& net, const ForwardCache& cache, const Vector& output_grad,
                MlpGrad& grad);

// Flat views over every parameter tensor of a network (weights then biases,
// layer order). Gradient views must be produced from an MlpGrad of the same
// architecture.
using ParamViews = std::vector<Eigen::Map<Eigen::ArrayXd>>;
ParamViews param_views(Mlp& net);
ParamViews param_views(MlpGrad& grad);

double global_norm(const ParamViews& views);
// Scales gradients so their global norm does not exceed max_norm.
void clip_global_norm(ParamViews views, double max_norm);

// Adaptive-moment estimation with bias correction.
struct AdamState {
  std::vector<Eigen::ArrayXd> m;
  std::vector<Eigen::ArrayXd> v;
  long step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

AdamState make_adam(const ParamViews& params, double lr);
void adam_step(AdamState& state, ParamViews params, const ParamViews& grads);

// --- policy heads ------------------------------------------------------

// Factorized binary policy: N independent Bernoullis over sigmoid(logits).
struct BernoulliHead {
  Mlp logits_net;
};

struct BernoulliSample {
  std::vector<int> bits;
  double logprob = 0.0;
  double entropy = 0.0;
};

BernoulliSample bernoulli_sample(const BernoulliHead& head, const Vector& state, Rng& rng);

// Evaluation of the head's log-mass at a stored action, retaining what the
// backward pass needs.
struct BernoulliEval {
  double logprob = 0.0;
  double entropy = 0.0;
  Vector logits;
  Vector probs;
  std::vector<int> bits;
  ForwardCache cache;
};

BernoulliEval logprob_of(const BernoulliHead& head, const Vector& state,
                         const std::vector<int>& bits);

// Accumulates d(dlogprob*logprob + dentropy*entropy)/dparams into grad.
void bernoulli_backward(const BernoulliHead& head, const BernoulliEval& eval, double dlogprob,
                        double dentropy, MlpGrad& grad);

// Bounded continuous policy: a state-dependent Gaussian mean with
// state-independent log-stds, squashed onto (lo, hi) by a scaled tanh.
// Log-densities carry the exact change-of-variables correction.
struct GaussianHead {
  Mlp mean_net;
  Vector log_std;

  static constexpr double kLogStdMin = -5.0;
  static constexpr double kLogStdMax = 2.0;
  void clamp_log_std();
};

struct GaussianSample {
  std::vector<double> actions;  // strictly inside (lo, hi)
  double logprob = 0.0;
  double entropy = 0.0;  // pre-squash Gaussian entropy
};

GaussianSample gaussian_sample(const GaussianHead& head, const Vector& state, double lo, double hi,
                               Rng& rng);

struct GaussianEval {
  double logprob = 0.0;
  double entropy = 0.0;
  Vector mean;
  Vector pre_squash;  // u recovered from the action
  ForwardCache cache;
};

// Actions exactly at the bounds are clamped inward by 1e-6 before the
// inverse squash.
GaussianEval logprob_of(const GaussianHead& head, const Vector& state,
                        const std::vector<double>& actions, double lo, double hi);

void gaussian_backward(const GaussianHead& head, const GaussianEval& eval, double dlogprob,
                       double dentropy, MlpGrad& mean_grad, Vector& log_std_grad);

}  // namespace peat
