#include "nte/neural.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>

#include "nte/error.hpp"

namespace nte::nn {

namespace {

// Offsets into the flat parameter store, canonical order:
// inner_a, inner_b, outer; each layer weights (row-major) then biases.
struct Layout {
  std::size_t enc_w1, enc_b1, enc_w2, enc_b2;  // relative to encoder start
  std::size_t enc_size;
  std::size_t outer;  // absolute start of outer block
  std::size_t out_w1, out_b1, out_w2, out_b2;  // absolute
  int in_dim;

  explicit Layout(const Architecture& a) {
    enc_w1 = 0;
    enc_b1 = enc_w1 + static_cast<std::size_t>(a.hidden * a.elem_dim);
    enc_w2 = enc_b1 + static_cast<std::size_t>(a.hidden);
    enc_b2 = enc_w2 + static_cast<std::size_t>(a.embed * a.hidden);
    enc_size = enc_b2 + static_cast<std::size_t>(a.embed);
    outer = 2 * enc_size;
    in_dim = a.self_dim + 2 * a.embed;
    out_w1 = outer;
    out_b1 = out_w1 + static_cast<std::size_t>(a.hidden * in_dim);
    out_w2 = out_b1 + static_cast<std::size_t>(a.hidden);
    out_b2 = out_w2 + static_cast<std::size_t>(2 * a.out_dim * a.hidden);
  }
};

using Buf = std::array<double, kMaxWidth * 3>;

struct Cache {
  // per set: per element hidden pre-activations (hidden each)
  std::vector<double> pre_a, pre_b;
  Buf in{};
  Buf pre_hidden{};
  Buf raw{};
};

std::vector<std::size_t> canonical_order(std::span<const double> flat, int dim) {
  const std::size_t n = flat.size() / static_cast<std::size_t>(dim);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t l, std::size_t r) {
    const double* a = flat.data() + l * static_cast<std::size_t>(dim);
    const double* b = flat.data() + r * static_cast<std::size_t>(dim);
    return std::lexicographical_compare(a, a + dim, b, b + dim);
  });
  return idx;
}

// Sum-pooled encoder. Writes the embedding to `emb` and, when `pre` is
// given, the per-element hidden pre-activations.
void encode(const Architecture& a, const double* p, std::span<const double> set, double* emb,
            std::vector<double>* pre) {
  std::fill(emb, emb + a.embed, 0.0);
  const std::size_t n = set.size() / static_cast<std::size_t>(a.elem_dim);
  if (pre) pre->assign(n * static_cast<std::size_t>(a.hidden), 0.0);
  if (n == 0) return;
  const Layout L(a);
  const double* w1 = p + L.enc_w1;
  const double* b1 = p + L.enc_b1;
  const double* w2 = p + L.enc_w2;
  const double* b2 = p + L.enc_b2;

  std::array<double, kMaxWidth> h{};
  std::array<double, kMaxWidth> e{};
  for (std::size_t j : canonical_order(set, a.elem_dim)) {
    const double* x = set.data() + j * static_cast<std::size_t>(a.elem_dim);
    for (int r = 0; r < a.hidden; ++r) {
      double z = b1[r];
      for (int c = 0; c < a.elem_dim; ++c) z += w1[r * a.elem_dim + c] * x[c];
      if (pre) (*pre)[j * static_cast<std::size_t>(a.hidden) + static_cast<std::size_t>(r)] = z;
      h[static_cast<std::size_t>(r)] = z > 0.0 ? z : 0.0;
    }
    for (int r = 0; r < a.embed; ++r) {
      double z = b2[r];
      for (int c = 0; c < a.hidden; ++c) z += w2[r * a.hidden + c] * h[static_cast<std::size_t>(c)];
      e[static_cast<std::size_t>(r)] = z;
    }
    for (int r = 0; r < a.embed; ++r) emb[r] += e[static_cast<std::size_t>(r)];
  }
}

void check_input(const Architecture& a, const SetInput& in) {
  if (static_cast<int>(in.self.size()) != a.self_dim)
    throw ContractViolation("network self input has " + std::to_string(in.self.size()) +
                            " values, expected " + std::to_string(a.self_dim));
  const auto ed = static_cast<std::size_t>(a.elem_dim);
  if (in.set_a.size() % ed != 0 || in.set_b.size() % ed != 0)
    throw ContractViolation("set element size does not match elem_dim " + std::to_string(a.elem_dim));
}

void forward_raw(const Architecture& a, std::span<const double> params, const SetInput& in,
                 Cache& c, bool keep) {
  check_input(a, in);
  const Layout L(a);
  const double* p = params.data();
  for (int k = 0; k < a.self_dim; ++k) c.in[static_cast<std::size_t>(k)] = in.self[static_cast<std::size_t>(k)];
  encode(a, p, in.set_a, c.in.data() + a.self_dim, keep ? &c.pre_a : nullptr);
  encode(a, p + L.enc_size, in.set_b, c.in.data() + a.self_dim + a.embed, keep ? &c.pre_b : nullptr);

  const double* w1 = p + L.out_w1;
  const double* b1 = p + L.out_b1;
  const double* w2 = p + L.out_w2;
  const double* b2 = p + L.out_b2;
  std::array<double, kMaxWidth> h{};
  for (int r = 0; r < a.hidden; ++r) {
    double z = b1[r];
    for (int k = 0; k < L.in_dim; ++k) z += w1[r * L.in_dim + k] * c.in[static_cast<std::size_t>(k)];
    c.pre_hidden[static_cast<std::size_t>(r)] = z;
    h[static_cast<std::size_t>(r)] = z > 0.0 ? z : 0.0;
  }
  for (int o = 0; o < 2 * a.out_dim; ++o) {
    double z = b2[o];
    for (int k = 0; k < a.hidden; ++k) z += w2[o * a.hidden + k] * h[static_cast<std::size_t>(k)];
    c.raw[static_cast<std::size_t>(o)] = z;
  }
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Accumulates d(loss)/d(params) * scale for one sample into grad; returns
// the sample loss.
double backward_one(const Architecture& a, std::span<const double> params, const TrainingSample& s,
                    double scale, std::span<double> grad) {
  Cache c;
  forward_raw(a, params, s.input, c, true);
  const Layout L(a);
  const double* p = params.data();
  const int m = a.out_dim;

  double loss = 0.0;
  std::array<double, kMaxWidth> draw{};
  for (int k = 0; k < m; ++k) {
    const double mu = c.raw[static_cast<std::size_t>(k)];
    const double rho = c.raw[static_cast<std::size_t>(m + k)];
    const double sd = softplus(rho) + kStdFloor;
    const double r = s.target[static_cast<std::size_t>(k)] - mu;
    loss += r * r / (sd * sd) + std::log(sd);
    draw[static_cast<std::size_t>(k)] = -2.0 * r / (sd * sd) * scale;
    const double dsd = -2.0 * r * r / (sd * sd * sd) + 1.0 / sd;
    draw[static_cast<std::size_t>(m + k)] = dsd * sigmoid(rho) * scale;
  }

  // outer layer 2
  std::array<double, kMaxWidth> h{};
  for (int r = 0; r < a.hidden; ++r) {
    const double z = c.pre_hidden[static_cast<std::size_t>(r)];
    h[static_cast<std::size_t>(r)] = z > 0.0 ? z : 0.0;
  }
  std::array<double, kMaxWidth> dh{};
  for (int o = 0; o < 2 * m; ++o) {
    const double d = draw[static_cast<std::size_t>(o)];
    grad[L.out_b2 + static_cast<std::size_t>(o)] += d;
    for (int k = 0; k < a.hidden; ++k) {
      grad[L.out_w2 + static_cast<std::size_t>(o * a.hidden + k)] += d * h[static_cast<std::size_t>(k)];
      dh[static_cast<std::size_t>(k)] += p[L.out_w2 + static_cast<std::size_t>(o * a.hidden + k)] * d;
    }
  }
  // outer layer 1
  Buf din{};
  for (int r = 0; r < a.hidden; ++r) {
    if (c.pre_hidden[static_cast<std::size_t>(r)] <= 0.0) continue;
    const double d = dh[static_cast<std::size_t>(r)];
    grad[L.out_b1 + static_cast<std::size_t>(r)] += d;
    for (int k = 0; k < L.in_dim; ++k) {
      grad[L.out_w1 + static_cast<std::size_t>(r * L.in_dim + k)] += d * c.in[static_cast<std::size_t>(k)];
      din[static_cast<std::size_t>(k)] += p[L.out_w1 + static_cast<std::size_t>(r * L.in_dim + k)] * d;
    }
  }

  // encoders: every element receives the same upstream gradient
  auto encoder_backward = [&](std::size_t base, std::span<const double> set, const std::vector<double>& pre,
                              const double* demb) {
    const std::size_t n = set.size() / static_cast<std::size_t>(a.elem_dim);
    const double* w2 = p + base + L.enc_w2;
    for (std::size_t j = 0; j < n; ++j) {
      const double* x = set.data() + j * static_cast<std::size_t>(a.elem_dim);
      const double* z = pre.data() + j * static_cast<std::size_t>(a.hidden);
      for (int r = 0; r < a.embed; ++r) {
        grad[base + L.enc_b2 + static_cast<std::size_t>(r)] += demb[r];
        for (int k = 0; k < a.hidden; ++k) {
          const double hk = z[k] > 0.0 ? z[k] : 0.0;
          grad[base + L.enc_w2 + static_cast<std::size_t>(r * a.hidden + k)] += demb[r] * hk;
        }
      }
      for (int k = 0; k < a.hidden; ++k) {
        if (z[k] <= 0.0) continue;
        double d = 0.0;
        for (int r = 0; r < a.embed; ++r) d += w2[r * a.hidden + k] * demb[r];
        grad[base + L.enc_b1 + static_cast<std::size_t>(k)] += d;
        for (int col = 0; col < a.elem_dim; ++col)
          grad[base + L.enc_w1 + static_cast<std::size_t>(k * a.elem_dim + col)] += d * x[col];
      }
    }
  };
  encoder_backward(0, s.input.set_a, c.pre_a, din.data() + a.self_dim);
  encoder_backward(L.enc_size, s.input.set_b, c.pre_b, din.data() + a.self_dim + a.embed);
  return loss;
}

}  // namespace

std::size_t Architecture::encoder_parameter_count() const {
  return static_cast<std::size_t>(hidden * elem_dim + hidden + embed * hidden + embed);
}

std::size_t Architecture::outer_parameter_count() const {
  const int in = self_dim + 2 * embed;
  return static_cast<std::size_t>(hidden * in + hidden + 2 * out_dim * hidden + 2 * out_dim);
}

std::size_t Architecture::parameter_count() const {
  return 2 * encoder_parameter_count() + outer_parameter_count();
}

void Architecture::validate() const {
  NTE_REQUIRE(elem_dim > 0 && self_dim >= 0 && out_dim > 0, "architecture dimensions must be positive");
  NTE_REQUIRE(hidden > 0 && hidden <= kMaxWidth, "hidden width out of range");
  NTE_REQUIRE(embed > 0 && embed <= kMaxWidth, "embedding width out of range");
  NTE_REQUIRE(self_dim + 2 * embed <= 3 * kMaxWidth, "outer input too wide");
  NTE_REQUIRE(2 * out_dim <= kMaxWidth, "output too wide");
}

Architecture policy_architecture(const GameSpec& spec) {
  return {spec.state_dim(), spec.state_dim(), spec.action_dim(), 16, 16};
}

Architecture value_architecture(const GameSpec& spec) {
  return {spec.state_dim(), 1, 1, 16, 16};
}

SetInput policy_input(const Observation& z, int state_dim) {
  SetInput in;
  const auto d = static_cast<std::size_t>(state_dim);
  in.self.assign(z.goal_relative.begin(), z.goal_relative.begin() + static_cast<std::ptrdiff_t>(d));
  for (const StateVec& v : z.neighbors_a) in.set_a.insert(in.set_a.end(), v.begin(), v.begin() + static_cast<std::ptrdiff_t>(d));
  for (const StateVec& v : z.neighbors_b) in.set_b.insert(in.set_b.end(), v.begin(), v.begin() + static_cast<std::ptrdiff_t>(d));
  return in;
}

SetInput value_input(const ValueObservation& y, int state_dim) {
  SetInput in;
  const auto d = static_cast<std::ptrdiff_t>(state_dim);
  in.self = {static_cast<double>(y.reached_count)};
  for (const StateVec& v : y.team_a) in.set_a.insert(in.set_a.end(), v.begin(), v.begin() + d);
  for (const StateVec& v : y.team_b) in.set_b.insert(in.set_b.end(), v.begin(), v.begin() + d);
  return in;
}

Network::Network(Architecture arch) : arch_(arch) {
  arch_.validate();
  params_.assign(arch_.parameter_count(), 0.0);
}

Network Network::initialized(Architecture arch, std::uint64_t seed) {
  Network net(arch);
  Rng rng(derive_seed(seed, "network_init"));
  const Layout L(arch);
  auto fill = [&](std::size_t off, int rows, int cols) {
    const double lim = std::sqrt(6.0 / (rows + cols));
    for (int k = 0; k < rows * cols; ++k) net.params_[off + static_cast<std::size_t>(k)] = rng.uniform(-lim, lim);
  };
  for (std::size_t base : {std::size_t{0}, L.enc_size}) {
    fill(base + L.enc_w1, arch.hidden, arch.elem_dim);
    fill(base + L.enc_w2, arch.embed, arch.hidden);
  }
  fill(L.out_w1, arch.hidden, L.in_dim);
  fill(L.out_w2, 2 * arch.out_dim, arch.hidden);
  return net;
}

GaussianOutput Network::forward(const SetInput& in) const {
  Cache c;
  forward_raw(arch_, params_, in, c, false);
  GaussianOutput out;
  const auto m = static_cast<std::size_t>(arch_.out_dim);
  out.mean.assign(c.raw.begin(), c.raw.begin() + static_cast<std::ptrdiff_t>(m));
  out.std.resize(m);
  for (std::size_t k = 0; k < m; ++k) out.std[k] = softplus(c.raw[m + k]) + kStdFloor;
  return out;
}

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

std::vector<double> sample(const GaussianOutput& out, std::span<const double> eps) {
  NTE_REQUIRE(eps.size() == out.mean.size(), "noise dimension must match the output dimension");
  std::vector<double> a(out.mean.size());
  for (std::size_t k = 0; k < a.size(); ++k) a[k] = out.mean[k] + out.std[k] * eps[k];
  return a;
}

double nll_loss(const GaussianOutput& out, std::span<const double> target) {
  NTE_REQUIRE(target.size() == out.mean.size(), "target dimension must match the output dimension");
  double loss = 0.0;
  for (std::size_t k = 0; k < target.size(); ++k) {
    const double r = target[k] - out.mean[k];
    loss += r * r / (out.std[k] * out.std[k]) + std::log(out.std[k]);
  }
  return loss;
}

double gaussian_nll(const GaussianOutput& out, std::span<const double> target) {
  NTE_REQUIRE(target.size() == out.mean.size(), "target dimension must match the output dimension");
  double nll = 0.0;
  for (std::size_t k = 0; k < target.size(); ++k) {
    const double r = target[k] - out.mean[k];
    const double var = out.std[k] * out.std[k];
    nll += 0.5 * r * r / var + 0.5 * std::log(2.0 * std::numbers::pi * var);
  }
  return nll;
}

double loss_and_gradient(const Network& net, std::span<const TrainingSample> batch, std::span<double> grad) {
  NTE_REQUIRE(!batch.empty(), "gradient of an empty batch");
  NTE_REQUIRE(grad.size() == net.params().size(), "gradient buffer has the wrong size");
  std::fill(grad.begin(), grad.end(), 0.0);
  const double scale = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  for (const TrainingSample& s : batch) {
    NTE_REQUIRE(static_cast<int>(s.target.size()) == net.arch().out_dim, "target dimension mismatch");
    loss += backward_one(net.arch(), net.params(), s, scale, grad);
  }
  return loss * scale;
}

double mean_loss(const Network& net, std::span<const TrainingSample> data) {
  NTE_REQUIRE(!data.empty(), "loss of an empty dataset");
  double total = 0.0;
  for (const TrainingSample& s : data) total += nll_loss(net.forward(s.input), s.target);
  return total / static_cast<double>(data.size());
}

TrainResult train(Network init, std::span<const TrainingSample> data, const TrainOptions& opt) {
  TrainResult result{std::move(init), {}};
  if (opt.epochs <= 0) return result;
  NTE_REQUIRE(!data.empty(), "cannot train on an empty dataset");
  NTE_REQUIRE(opt.batch_size > 0, "batch size must be positive");

  Network& net = result.network;
  const std::size_t np = net.params().size();
  std::vector<double> grad(np), velocity(np, 0.0);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(opt.seed, "train_shuffle"));
  const auto bs = static_cast<std::size_t>(opt.batch_size);

  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng.engine());
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t stop = std::min(order.size(), start + bs);
      std::fill(grad.begin(), grad.end(), 0.0);
      const double scale = 1.0 / static_cast<double>(stop - start);
      for (std::size_t k = start; k < stop; ++k) {
        const TrainingSample& s = data[order[k]];
        NTE_REQUIRE(static_cast<int>(s.target.size()) == net.arch().out_dim, "target dimension mismatch");
        epoch_loss += backward_one(net.arch(), net.params(), s, scale, grad);
      }
      auto p = net.params();
      for (std::size_t k = 0; k < np; ++k) {
        velocity[k] = opt.momentum * velocity[k] - opt.learning_rate * grad[k];
        p[k] += velocity[k];
      }
    }
    result.loss_trace.push_back(epoch_loss / static_cast<double>(data.size()));
  }
  return result;
}

}  // namespace nte::nn
