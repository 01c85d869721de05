#include "ntr/neural_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "ntr/sampling.hpp"

namespace ntr {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace {

constexpr double kSigmoidPrimeSup = 0.25;              // sup sigma'(z) at z = 0
constexpr double kSigmoidSecondSup = 0.0962250448649;  // sup |sigma''| = 1/(6 sqrt 3), rounded up

double act_value(Activation a, double sharpness, double t) {
  const double z = sharpness * t;
  if (a == Activation::step) return z >= 0.0 ? 1.0 : 0.0;
  return sigmoid(z);
}

struct ForwardPass {
  std::vector<Vector> pre;   // a^r per layer
  std::vector<Vector> post;  // z^r per layer (post[0] = mapped input)
  double out = 0.0;
};

Vector mapped_input(const FeedForwardNet& net, const Vector& x) {
  if (!net.input_map()) return x;
  const auto& m = *net.input_map();
  Vector z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = (x[i] - m.center[i]) / m.radius;
  return z;
}

ForwardPass run_forward(const FeedForwardNet& net, const Vector& x) {
  if (x.size() != net.input_dim()) throw std::invalid_argument("forward: dimension mismatch");
  ForwardPass fp;
  const std::size_t layers = net.num_layers();
  fp.pre.resize(layers);
  fp.post.resize(layers + 1);
  fp.post[0] = mapped_input(net, x);
  for (std::size_t r = 0; r < layers; ++r) {
    Vector a = net.weight(r).apply(fp.post[r]);
    if (net.has_bias()) a += net.bias(r);
    fp.pre[r] = a;
    const bool hidden = r + 1 < layers;
    Vector z(a.size());
    for (std::size_t j = 0; j < a.size(); ++j)
      z[j] = hidden ? act_value(net.activation(), net.sharpness(), a[j]) : a[j];
    fp.post[r + 1] = std::move(z);
  }
  fp.out = fp.post[layers][0];
  return fp;
}

void require_smooth(const FeedForwardNet& net, const char* who) {
  if (net.activation() == Activation::step)
    throw std::invalid_argument(std::string(who) + ": step activation has no derivatives");
}

}  // namespace

FeedForwardNet::FeedForwardNet(std::vector<std::size_t> layer_sizes, bool with_bias,
                               Activation act, double sharpness)
    : layer_sizes_(std::move(layer_sizes)), has_bias_(with_bias), act_(act), sharpness_(sharpness) {
  if (layer_sizes_.size() < 2) throw std::invalid_argument("FeedForwardNet: need >= 2 layers");
  if (layer_sizes_.back() != 1) throw std::invalid_argument("FeedForwardNet: output layer must be scalar");
  for (std::size_t s : layer_sizes_)
    if (s == 0) throw std::invalid_argument("FeedForwardNet: zero-width layer");
  for (std::size_t r = 0; r + 1 < layer_sizes_.size(); ++r) {
    weights_.emplace_back(layer_sizes_[r + 1], layer_sizes_[r]);
    biases_.emplace_back(layer_sizes_[r + 1], 0.0);
  }
}

void FeedForwardNet::seed_weights(std::uint64_t seed) {
  Rng rng(seed);
  for (std::size_t r = 0; r < weights_.size(); ++r) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer_sizes_[r]));
    for (std::size_t i = 0; i < weights_[r].rows(); ++i)
      for (std::size_t j = 0; j < weights_[r].cols(); ++j)
        weights_[r](i, j) = rng.uniform(-bound, bound);
    if (has_bias_)
      for (double& b : biases_[r]) b = rng.uniform(-bound, bound);
  }
}

double FeedForwardNet::operator()(const Vector& x) const { return forward(*this, x); }

double forward(const FeedForwardNet& net, const Vector& x) { return run_forward(net, x).out; }

WeightGradients weight_gradients(const FeedForwardNet& net,
                                 const std::vector<std::pair<Vector, double>>& batch,
                                 LossKind loss, std::vector<std::size_t>* consumed_ids,
                                 const std::vector<std::size_t>* batch_ids) {
  require_smooth(net, "weight_gradients");
  if (batch.empty()) throw std::invalid_argument("weight_gradients: empty batch");
  (void)loss;  // mean squared error is the only descriptor

  const std::size_t layers = net.num_layers();
  WeightGradients g;
  for (std::size_t r = 0; r < layers; ++r) {
    g.weights.emplace_back(net.weight(r).rows(), net.weight(r).cols());
    g.biases.emplace_back(net.weight(r).rows(), 0.0);
  }

  const double inv_b = 1.0 / static_cast<double>(batch.size());
  const double lambda = net.sharpness();
  for (std::size_t s = 0; s < batch.size(); ++s) {
    if (consumed_ids) consumed_ids->push_back(batch_ids ? (*batch_ids)[s] : s);
    const ForwardPass fp = run_forward(net, batch[s].first);
    Vector delta(1, 2.0 * (fp.out - batch[s].second) * inv_b);  // d loss / d a^L
    for (std::size_t r = layers; r-- > 0;) {
      for (std::size_t i = 0; i < net.weight(r).rows(); ++i) {
        for (std::size_t j = 0; j < net.weight(r).cols(); ++j)
          g.weights[r](i, j) += delta[i] * fp.post[r][j];
        g.biases[r][i] += delta[i];
      }
      if (r == 0) break;
      Vector next(net.weight(r).cols(), 0.0);
      for (std::size_t j = 0; j < next.size(); ++j) {
        double s2 = 0.0;
        for (std::size_t i = 0; i < net.weight(r).rows(); ++i) s2 += net.weight(r)(i, j) * delta[i];
        const double sig = sigmoid(lambda * fp.pre[r - 1][j]);
        next[j] = s2 * lambda * sig * (1.0 - sig);
      }
      delta = std::move(next);
    }
  }
  return g;
}

double batch_loss(const FeedForwardNet& net, const std::vector<std::pair<Vector, double>>& batch,
                  LossKind) {
  if (batch.empty()) return 0.0;
  double s = 0.0;
  for (const auto& [x, t] : batch) {
    const double r = forward(net, x) - t;
    s += r * r;
  }
  return s / static_cast<double>(batch.size());
}

Vector input_gradient(const FeedForwardNet& net, const Vector& x) {
  require_smooth(net, "input_gradient");
  const ForwardPass fp = run_forward(net, x);
  const std::size_t layers = net.num_layers();
  const double lambda = net.sharpness();

  Vector u(1, 1.0);  // d out / d a^L
  for (std::size_t r = layers; r-- > 0;) {
    Vector prev(net.weight(r).cols(), 0.0);
    for (std::size_t j = 0; j < prev.size(); ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < net.weight(r).rows(); ++i) s += net.weight(r)(i, j) * u[i];
      prev[j] = s;
    }
    if (r == 0) {
      u = std::move(prev);
      break;
    }
    for (std::size_t j = 0; j < prev.size(); ++j) {
      const double sig = sigmoid(lambda * fp.pre[r - 1][j]);
      prev[j] *= lambda * sig * (1.0 - sig);
    }
    u = std::move(prev);
  }
  if (net.input_map()) {
    const double inv = 1.0 / net.input_map()->radius;
    for (double& v : u) v *= inv;
  }
  return u;
}

InputHessianResult input_hessian(const FeedForwardNet& net, const Vector& x) {
  require_smooth(net, "input_hessian");
  const ForwardPass fp = run_forward(net, x);
  const std::size_t n = net.input_dim();
  const std::size_t layers = net.num_layers();
  const double lambda = net.sharpness();

  // Per-neuron gradient vectors / Hessians with respect to the mapped input,
  // propagated forward; in parallel, certified entrywise bounds from weights.
  std::vector<Vector> grads(n);
  std::vector<Matrix> hessians(n, Matrix(n, n));
  Vector gbound(n, 1.0);
  Vector hbound(n, 0.0);
  for (std::size_t q = 0; q < n; ++q) {
    grads[q] = Vector(n, 0.0);
    grads[q][q] = 1.0;
  }

  for (std::size_t r = 0; r < layers; ++r) {
    const Matrix& w = net.weight(r);
    const bool hidden = r + 1 < layers;
    std::vector<Vector> ngrads(w.rows());
    std::vector<Matrix> nhess(w.rows());
    Vector ngb(w.rows(), 0.0), nhb(w.rows(), 0.0);
    for (std::size_t j = 0; j < w.rows(); ++j) {
      Vector ga(n, 0.0);
      Matrix ha(n, n);
      double gab = 0.0, hab = 0.0;
      for (std::size_t q = 0; q < w.cols(); ++q) {
        const double wjq = w(j, q);
        if (wjq == 0.0) continue;
        for (std::size_t i = 0; i < n; ++i) ga[i] += wjq * grads[q][i];
        for (std::size_t a = 0; a < n; ++a)
          for (std::size_t b = 0; b < n; ++b) ha(a, b) += wjq * hessians[q](a, b);
        gab += std::abs(wjq) * gbound[q];
        hab += std::abs(wjq) * hbound[q];
      }
      if (hidden) {
        const double sig = sigmoid(lambda * fp.pre[r][j]);
        const double d1 = lambda * sig * (1.0 - sig);
        const double d2 = lambda * lambda * sig * (1.0 - sig) * (1.0 - 2.0 * sig);
        Matrix h(n, n);
        for (std::size_t a = 0; a < n; ++a)
          for (std::size_t b = 0; b < n; ++b) h(a, b) = d2 * ga[a] * ga[b] + d1 * ha(a, b);
        Vector gz(n);
        for (std::size_t i = 0; i < n; ++i) gz[i] = d1 * ga[i];
        ngrads[j] = std::move(gz);
        nhess[j] = std::move(h);
        ngb[j] = lambda * kSigmoidPrimeSup * gab;
        nhb[j] = lambda * lambda * kSigmoidSecondSup * gab * gab +
                 lambda * kSigmoidPrimeSup * hab;
      } else {
        ngrads[j] = std::move(ga);
        nhess[j] = std::move(ha);
        ngb[j] = gab;
        nhb[j] = hab;
      }
    }
    grads = std::move(ngrads);
    hessians = std::move(nhess);
    gbound = std::move(ngb);
    hbound = std::move(nhb);
  }

  InputHessianResult res;
  res.hessian = hessians[0];
  res.kappa_hm = hbound[0];
  if (net.input_map()) {
    const double inv2 = 1.0 / (net.input_map()->radius * net.input_map()->radius);
    res.hessian *= inv2;
    res.kappa_hm *= inv2;
  }
  // Exact symmetry by construction of the update; enforce bitwise anyway.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) res.hessian(j, i) = res.hessian(i, j);
  return res;
}

namespace {

void require_one_hidden(const FeedForwardNet& net, const char* who) {
  if (net.num_layers() != 2)
    throw std::invalid_argument(std::string(who) + ": needs exactly one hidden layer");
  require_smooth(net, who);
}

}  // namespace

Vector input_gradient_closed_form(const FeedForwardNet& net, const Vector& x) {
  require_one_hidden(net, "input_gradient_closed_form");
  const std::size_t n = net.input_dim();
  const std::size_t h = net.layer_sizes()[1];
  const double lambda = net.sharpness();
  const Vector z = mapped_input(net, x);

  Vector g(n, 0.0);
  for (std::size_t j = 0; j < h; ++j) {
    double a = net.has_bias() ? net.bias(0)[j] : 0.0;
    for (std::size_t i = 0; i < n; ++i) a += net.weight(0)(j, i) * z[i];
    const double sig = sigmoid(lambda * a);
    const double w2 = net.weight(1)(0, j);
    // sigma' written as sigma - sigma^2
    for (std::size_t r = 0; r < n; ++r)
      g[r] += w2 * net.weight(0)(j, r) * lambda * (sig - sig * sig);
  }
  if (net.input_map()) {
    const double inv = 1.0 / net.input_map()->radius;
    for (double& v : g) v *= inv;
  }
  return g;
}

Matrix input_hessian_closed_form(const FeedForwardNet& net, const Vector& x) {
  require_one_hidden(net, "input_hessian_closed_form");
  const std::size_t n = net.input_dim();
  const std::size_t h = net.layer_sizes()[1];
  const double lambda = net.sharpness();
  const Vector z = mapped_input(net, x);

  Matrix hess(n, n);
  for (std::size_t j = 0; j < h; ++j) {
    double a = net.has_bias() ? net.bias(0)[j] : 0.0;
    for (std::size_t i = 0; i < n; ++i) a += net.weight(0)(j, i) * z[i];
    const double sig = sigmoid(lambda * a);
    const double w2 = net.weight(1)(0, j);
    // sigma(1-sigma) term minus twice the sigma^2(1-sigma) correction
    const double factor =
        lambda * lambda * (sig * (1.0 - sig) - 2.0 * (sig * sig * (1.0 - sig)));
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t s = 0; s < n; ++s)
        hess(r, s) += w2 * net.weight(0)(j, r) * net.weight(0)(j, s) * factor;
  }
  if (net.input_map()) {
    const double inv2 = 1.0 / (net.input_map()->radius * net.input_map()->radius);
    hess *= inv2;
  }
  return hess;
}

TrainResult train_regression(const std::vector<std::pair<Vector, double>>& points,
                             const TrainConfig& cfg) {
  if (points.size() < 2) throw std::invalid_argument("train_regression: need >= 2 points");
  if (cfg.split_fraction <= 0.0 || cfg.split_fraction > 1.0)
    throw std::invalid_argument("train_regression: split_fraction must be in (0, 1]");
  if (cfg.learning_rate <= 0.0 || cfg.epochs == 0)
    throw std::invalid_argument("train_regression: bad optimizer settings");

  const std::size_t n = points.front().first.size();
  std::vector<std::size_t> sizes;
  sizes.push_back(n);
  for (std::size_t hsz : cfg.hidden_sizes) sizes.push_back(hsz);
  sizes.push_back(1);

  TrainResult res;
  res.net = FeedForwardNet(std::move(sizes), cfg.with_bias);
  if (cfg.input_map) res.net.set_input_map(*cfg.input_map);
  res.net.seed_weights(cfg.seed);

  Rng rng(cfg.seed + 0x6b79e5u);
  const auto perm = rng.permutation(points.size());
  std::size_t n_train = static_cast<std::size_t>(
      std::ceil(cfg.split_fraction * static_cast<double>(points.size())));
  n_train = std::min(std::max<std::size_t>(n_train, 1), points.size());

  std::vector<std::pair<Vector, double>> train, test;
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (k < n_train) {
      res.train_indices.push_back(perm[k]);
      train.push_back(points[perm[k]]);
    } else {
      res.test_indices.push_back(perm[k]);
      test.push_back(points[perm[k]]);
    }
  }

  const std::size_t layers = res.net.num_layers();
  std::vector<Matrix> vel_w;
  std::vector<Vector> vel_b;
  for (std::size_t r = 0; r < layers; ++r) {
    vel_w.emplace_back(res.net.weight(r).rows(), res.net.weight(r).cols());
    vel_b.emplace_back(res.net.weight(r).rows(), 0.0);
  }

  double best_test = std::numeric_limits<double>::infinity();
  std::size_t stagnant = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const WeightGradients g =
        weight_gradients(res.net, train, LossKind::mean_squared, &res.gradient_ids,
                         &res.train_indices);
    for (std::size_t r = 0; r < layers; ++r) {
      for (std::size_t i = 0; i < g.weights[r].rows(); ++i) {
        for (std::size_t j = 0; j < g.weights[r].cols(); ++j) {
          vel_w[r](i, j) = cfg.momentum * vel_w[r](i, j) - cfg.learning_rate * g.weights[r](i, j);
          res.net.weight(r)(i, j) += vel_w[r](i, j);
          if (!std::isfinite(res.net.weight(r)(i, j)))
            throw TrainingFailureError("train_regression: weights diverged");
        }
        if (res.net.has_bias()) {
          vel_b[r][i] = cfg.momentum * vel_b[r][i] - cfg.learning_rate * g.biases[r][i];
          res.net.bias(r)[i] += vel_b[r][i];
        }
      }
    }
    if (cfg.patience > 0 && !test.empty() && (epoch % 10 == 9)) {
      const double tl = batch_loss(res.net, test);
      if (tl < best_test - cfg.min_delta) {
        best_test = tl;
        stagnant = 0;
      } else if (++stagnant >= cfg.patience) {
        break;
      }
    }
  }

  res.train_loss = batch_loss(res.net, train);
  res.test_loss = test.empty() ? res.train_loss : batch_loss(res.net, test);
  return res;
}

FeedForwardNet build_hypercube_approximator(const std::vector<double>& f_values,
                                            const std::vector<HyperCube>& cubes,
                                            Activation activation, double sharpness) {
  if (cubes.empty()) throw std::invalid_argument("build_hypercube_approximator: zero cubes");
  if (f_values.size() != cubes.size())
    throw std::invalid_argument("build_hypercube_approximator: value/cube count mismatch");
  const std::size_t n = cubes.front().lo.size();
  for (const HyperCube& c : cubes)
    if (c.lo.size() != n || c.hi.size() != n)
      throw std::invalid_argument("build_hypercube_approximator: cube dimension mismatch");

  const std::size_t v = cubes.size();
  const double lambda = activation == Activation::step ? 1.0 : sharpness;
  FeedForwardNet net({n, 2 * n * v, v, 1}, /*with_bias=*/true, activation, lambda);

  for (std::size_t i = 0; i < v; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t lo_neuron = i * 2 * n + 2 * k;
      const std::size_t hi_neuron = lo_neuron + 1;
      net.weight(0)(lo_neuron, k) = 1.0;
      net.bias(0)[lo_neuron] = -cubes[i].lo[k];
      net.weight(0)(hi_neuron, k) = 1.0;
      net.bias(0)[hi_neuron] = -cubes[i].hi[k];
      net.weight(1)(i, lo_neuron) = 1.0;
      net.weight(1)(i, hi_neuron) = -1.0;
    }
    net.bias(1)[i] = -static_cast<double>(n);
    net.weight(2)(0, i) = f_values[i];
  }
  net.bias(2)[0] = 0.0;
  return net;
}

ModelAccuracy model_accuracy(const ScalarField& model, const ScalarField& f, const Vector& center,
                             double radius, double q, std::size_t n_samples, std::uint64_t seed) {
  if (n_samples == 0) throw std::invalid_argument("model_accuracy: need >= 1 sample");
  if (q <= 0.0) throw std::invalid_argument("model_accuracy: q must be > 0");
  Rng rng(seed + 0x5eedull);
  const auto xs = random_ball_points(center, radius, n_samples, rng);
  double acc = 0.0;
  for (const Vector& x : xs) acc += std::pow(std::abs(f(x) - model(x)), q);
  ModelAccuracy ma;
  ma.q = q;
  ma.n_samples = n_samples;
  ma.value = std::pow(acc / static_cast<double>(n_samples), 1.0 / q);
  return ma;
}

bool validity_check(const ScalarField& model, const ScalarField& f, const Vector& center,
                    double radius, double kappa, std::size_t n_samples, std::uint64_t seed) {
  if (kappa <= 0.0) throw std::invalid_argument("validity_check: kappa must be > 0");
  Rng rng(seed + 0xba11ull);
  auto xs = random_ball_points(center, radius, n_samples, rng);
  xs.push_back(center);
  double maxerr = 0.0;
  for (const Vector& x : xs) maxerr = std::max(maxerr, std::abs(f(x) - model(x)));
  return maxerr <= kappa * radius * radius;
}

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void save_net(std::ostream& out, const FeedForwardNet& net) {
  out << "layers";
  for (std::size_t s : net.layer_sizes()) out << ' ' << s;
  out << " bias=" << (net.has_bias() ? 1 : 0)
      << " act=" << (net.activation() == Activation::step ? "step" : "logistic")
      << " sharpness=" << fmt17(net.sharpness()) << "\n";
  if (net.input_map()) {
    out << "map";
    for (double c : net.input_map()->center) out << ' ' << fmt17(c);
    out << ' ' << fmt17(net.input_map()->radius) << "\n";
  }
  for (std::size_t r = 0; r < net.num_layers(); ++r) {
    for (std::size_t i = 0; i < net.weight(r).rows(); ++i) {
      for (std::size_t j = 0; j < net.weight(r).cols(); ++j)
        out << (j ? " " : "") << fmt17(net.weight(r)(i, j));
      out << "\n";
    }
    if (net.has_bias()) {
      for (std::size_t i = 0; i < net.bias(r).size(); ++i)
        out << (i ? " " : "") << fmt17(net.bias(r)[i]);
      out << "\n";
    }
  }
}

FeedForwardNet load_net(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("load_net: empty stream");
  std::istringstream hs(line);
  std::string tag;
  hs >> tag;
  if (tag != "layers") throw std::invalid_argument("load_net: bad header");
  std::vector<std::size_t> sizes;
  std::string tok;
  bool bias = false;
  Activation act = Activation::logistic;
  double sharpness = 1.0;
  while (hs >> tok) {
    if (tok.rfind("bias=", 0) == 0)
      bias = tok.substr(5) == "1";
    else if (tok.rfind("act=", 0) == 0)
      act = tok.substr(4) == "step" ? Activation::step : Activation::logistic;
    else if (tok.rfind("sharpness=", 0) == 0)
      sharpness = std::stod(tok.substr(10));
    else
      sizes.push_back(std::stoul(tok));
  }
  FeedForwardNet net(sizes, bias, act, sharpness);

  auto peek_map = [&]() {
    const auto pos = in.tellg();
    std::string l2;
    if (std::getline(in, l2) && l2.rfind("map", 0) == 0) {
      std::istringstream ms(l2.substr(3));
      std::vector<double> vals;
      double v;
      while (ms >> v) vals.push_back(v);
      if (vals.size() != sizes.front() + 1) throw std::invalid_argument("load_net: bad map line");
      AffineInputMap m;
      m.center.assign(vals.begin(), vals.end() - 1);
      m.radius = vals.back();
      net.set_input_map(std::move(m));
    } else {
      in.clear();
      in.seekg(pos);
    }
  };
  peek_map();

  for (std::size_t r = 0; r < net.num_layers(); ++r) {
    for (std::size_t i = 0; i < net.weight(r).rows(); ++i)
      for (std::size_t j = 0; j < net.weight(r).cols(); ++j)
        if (!(in >> net.weight(r)(i, j))) throw std::invalid_argument("load_net: truncated weights");
    if (bias)
      for (std::size_t i = 0; i < net.bias(r).size(); ++i)
        if (!(in >> net.bias(r)[i])) throw std::invalid_argument("load_net: truncated biases");
  }
  return net;
}

}  // namespace ntr
