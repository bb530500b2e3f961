#pragma once

// DeepSet networks with diagonal Gaussian heads.
//
//   embed_T(set) = sum_{x in set} W2_T relu(W1_T x + b1_T) + b2_T   (T = a, b)
//   out          = W2 relu(W1 [self; embed_a; embed_b] + b1) + b2
//   mean = out[0:m],  std = softplus(out[m:2m]) + 1e-4
//
// Policy networks take the goal-relative state as `self`; value networks take
// the reached count. An empty set contributes a zero embedding.

#include <cstdint>
#include <span>
#include <vector>

#include "nte/game.hpp"

namespace nte::nn {

inline constexpr double kStdFloor = 1e-4;
inline constexpr int kMaxWidth = 64;

struct Architecture {
  int elem_dim = 4;
  int self_dim = 4;
  int out_dim = 2;
  int hidden = 16;
  int embed = 16;

  std::size_t encoder_parameter_count() const;
  std::size_t outer_parameter_count() const;
  std::size_t parameter_count() const;
  void validate() const;

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

Architecture policy_architecture(const GameSpec& spec);
Architecture value_architecture(const GameSpec& spec);

// Network input with both sets stored flat, `elem_dim` values per element.
struct SetInput {
  std::vector<double> self;
  std::vector<double> set_a;
  std::vector<double> set_b;
};

SetInput policy_input(const Observation& z, int state_dim);
SetInput value_input(const ValueObservation& y, int state_dim);

struct GaussianOutput {
  std::vector<double> mean;
  std::vector<double> std;
};

class Network {
 public:
  Network() = default;
  explicit Network(Architecture arch);

  // Glorot-uniform weights, zero biases.
  static Network initialized(Architecture arch, std::uint64_t seed);

  const Architecture& arch() const { return arch_; }
  std::span<const double> params() const { return params_; }
  std::span<double> params() { return params_; }

  // Elements of each set are pooled in a canonical order, so any permutation
  // of a set gives a bit-identical result.
  GaussianOutput forward(const SetInput& in) const;

 private:
  Architecture arch_;
  std::vector<double> params_;
};

double softplus(double x);

// a = mean + std * eps
std::vector<double> sample(const GaussianOutput& out, std::span<const double> eps);

// (t - mu)^T Sigma^-1 (t - mu) + 1/2 ln|Sigma| with Sigma = diag(std^2).
double nll_loss(const GaussianOutput& out, std::span<const double> target);

// Proper Gaussian negative log-likelihood -ln N(t; mu, diag(std^2)). Used to
// score held-out data, not for training.
double gaussian_nll(const GaussianOutput& out, std::span<const double> target);

struct TrainingSample {
  SetInput input;
  std::vector<double> target;
  std::uint64_t source_seed = 0;
};

// Mean nll_loss over the batch; writes d(mean loss)/d(params) into `grad`.
double loss_and_gradient(const Network& net, std::span<const TrainingSample> batch,
                         std::span<double> grad);

double mean_loss(const Network& net, std::span<const TrainingSample> data);

struct TrainOptions {
  int epochs = 300;
  int batch_size = 1028;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  std::uint64_t seed = 0;
};

struct TrainResult {
  Network network;
  std::vector<double> loss_trace;  // mean training loss per epoch
};

// Shuffled minibatch SGD with heavy-ball momentum.
TrainResult train(Network init, std::span<const TrainingSample> data, const TrainOptions& opt);

}  // namespace nte::nn
