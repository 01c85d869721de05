#include <doctest.h>

#include <cmath>
#include <sstream>

#include "ntr/neural_model.hpp"
#include "ntr/sampling.hpp"

using namespace ntr;

namespace {

FeedForwardNet random_net(std::vector<std::size_t> sizes, std::uint64_t seed, bool bias = false) {
  FeedForwardNet net(std::move(sizes), bias);
  net.seed_weights(seed);
  return net;
}

double fd_gradient(const FeedForwardNet& net, const Vector& x, std::size_t i, double h = 1e-5) {
  Vector xp = x, xm = x;
  xp[i] += h;
  xm[i] -= h;
  return (forward(net, xp) - forward(net, xm)) / (2.0 * h);
}

}  // namespace

TEST_CASE("forward evaluation") {
  SUBCASE("all-zero weights give zero output") {
    FeedForwardNet net({2, 3, 1});
    CHECK(forward(net, {0.3, -0.7}) == 0.0);
  }
  SUBCASE("1-1-1 net with unit weights at zero input") {
    FeedForwardNet net({1, 1, 1});
    net.weight(0)(0, 0) = 1.0;
    net.weight(1)(0, 0) = 1.0;
    CHECK(forward(net, {0.0}) == doctest::Approx(0.5));  // identity(sigma(0) * 1)
  }
  SUBCASE("2-2-1 net against a hand-evaluated composition") {
    FeedForwardNet net({2, 2, 1});
    net.weight(0)(0, 0) = 0.5;
    net.weight(0)(0, 1) = -0.25;
    net.weight(0)(1, 0) = 0.1;
    net.weight(0)(1, 1) = 0.3;
    net.weight(1)(0, 0) = 0.7;
    net.weight(1)(0, 1) = -0.4;
    const Vector x{1.0, 2.0};
    // Hand composition with an independent local sigmoid.
    auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
    const double expected = 0.7 * sig(0.5 - 0.5) - 0.4 * sig(0.1 + 0.6);
    CHECK(forward(net, x) == doctest::Approx(expected).epsilon(1e-15));
  }
  SUBCASE("dimension mismatch") {
    FeedForwardNet net({2, 2, 1});
    CHECK_THROWS_AS(forward(net, {1.0}), std::invalid_argument);
  }
}

TEST_CASE("sigmoid saturates to its limits") {
  CHECK(sigmoid(-40.0) < 1e-15);
  CHECK(1.0 - sigmoid(40.0) < 1e-15);
  CHECK(sigmoid(0.0) == doctest::Approx(0.5));
}

TEST_CASE("weight gradients") {
  SUBCASE("zero residual gives zero gradient") {
    FeedForwardNet net = random_net({2, 3, 1}, 5);
    const Vector x{0.4, -0.2};
    const double t = forward(net, x);
    const auto g = weight_gradients(net, {{x, t}});
    for (const Matrix& gw : g.weights)
      for (std::size_t i = 0; i < gw.rows(); ++i)
        for (std::size_t j = 0; j < gw.cols(); ++j) CHECK(std::abs(gw(i, j)) < 1e-14);
  }
  SUBCASE("1-1-1 chain rule by hand") {
    FeedForwardNet net({1, 1, 1});
    const double w1 = 0.8, w2 = -1.1;
    net.weight(0)(0, 0) = w1;
    net.weight(1)(0, 0) = w2;
    const double x = 0.6, t = 0.25;
    auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
    const double s = sig(w1 * x);
    const double r = w2 * s - t;
    const auto g = weight_gradients(net, {{Vector{x}, t}});
    CHECK(g.weights[1](0, 0) == doctest::Approx(2.0 * r * s).epsilon(1e-13));
    CHECK(g.weights[0](0, 0) == doctest::Approx(2.0 * r * w2 * s * (1.0 - s) * x).epsilon(1e-13));
  }
  SUBCASE("random net against central differences") {
    FeedForwardNet net = random_net({2, 3, 1}, 9);
    std::vector<std::pair<Vector, double>> batch{{{0.1, 0.9}, 0.3}, {{-0.5, 0.2}, -0.1}};
    const auto g = weight_gradients(net, batch);
    const double h = 1e-5;
    for (std::size_t r = 0; r < net.num_layers(); ++r)
      for (std::size_t i = 0; i < net.weight(r).rows(); ++i)
        for (std::size_t j = 0; j < net.weight(r).cols(); ++j) {
          FeedForwardNet np = net, nm = net;
          np.weight(r)(i, j) += h;
          nm.weight(r)(i, j) -= h;
          const double fd = (batch_loss(np, batch) - batch_loss(nm, batch)) / (2.0 * h);
          CHECK(std::abs(g.weights[r](i, j) - fd) <= 1e-5 * (1.0 + std::abs(fd)));
        }
  }
}

TEST_CASE("input gradient") {
  SUBCASE("zero first layer means a constant net") {
    FeedForwardNet net({2, 2, 1});
    net.weight(1)(0, 0) = 1.3;
    net.weight(1)(0, 1) = -0.2;
    const Vector g = input_gradient(net, {0.7, 0.1});
    CHECK(norm2(g) == 0.0);
  }
  SUBCASE("closed form for one hidden layer") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull}) {
      FeedForwardNet net = random_net({3, 5, 1}, seed);
      Rng rng(seed + 100);
      const Vector x{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
      const Vector generic = input_gradient(net, x);
      const Vector closed = input_gradient_closed_form(net, x);
      for (std::size_t i = 0; i < 3; ++i)
        CHECK(std::abs(generic[i] - closed[i]) <= 1e-12);
    }
  }
  SUBCASE("matches central differences on random nets") {
    for (std::uint64_t seed : {11ull, 12ull, 13ull}) {
      FeedForwardNet net = random_net({2, 4, 3, 1}, seed, seed % 2 == 0);
      Rng rng(seed);
      const Vector x{rng.uniform(-1, 1), rng.uniform(-1, 1)};
      const Vector g = input_gradient(net, x);
      for (std::size_t i = 0; i < 2; ++i)
        CHECK(std::abs(g[i] - fd_gradient(net, x, i)) <= 1e-5 * (1.0 + std::abs(g[i])));
    }
  }
}

TEST_CASE("input hessian") {
  SUBCASE("constant net has a zero hessian") {
    FeedForwardNet net({2, 2, 1});
    net.weight(1)(0, 0) = 2.0;
    const auto hr = input_hessian(net, {0.2, 0.4});
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 2; ++j) CHECK(hr.hessian(i, j) == 0.0);
  }
  SUBCASE("closed form for one hidden layer") {
    for (std::uint64_t seed : {21ull, 22ull, 23ull, 24ull}) {
      FeedForwardNet net = random_net({2, 6, 1}, seed);
      Rng rng(seed);
      const Vector x{rng.uniform(-1, 1), rng.uniform(-1, 1)};
      const Matrix generic = input_hessian(net, x).hessian;
      const Matrix closed = input_hessian_closed_form(net, x);
      for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j)
          CHECK(std::abs(generic(i, j) - closed(i, j)) <= 1e-12);
    }
  }
  SUBCASE("matches differentiated gradients and stays symmetric") {
    for (std::uint64_t seed : {31ull, 32ull, 33ull}) {
      FeedForwardNet net = random_net({2, 3, 1}, seed);
      Rng rng(seed);
      const Vector x{rng.uniform(-1, 1), rng.uniform(-1, 1)};
      const auto hr = input_hessian(net, x);
      const double h = 1e-5;
      for (std::size_t i = 0; i < 2; ++i) {
        Vector xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        const Vector gp = input_gradient(net, xp);
        const Vector gm = input_gradient(net, xm);
        for (std::size_t j = 0; j < 2; ++j) {
          const double fd = (gp[j] - gm[j]) / (2.0 * h);
          CHECK(std::abs(hr.hessian(i, j) - fd) <= 1e-4 * (1.0 + std::abs(fd)));
        }
      }
      for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) CHECK(hr.hessian(i, j) == hr.hessian(j, i));
    }
  }
  SUBCASE("certified bound dominates every entry") {
    Rng rng(77);
    for (int rep = 0; rep < 100; ++rep) {
      const std::size_t n = 1 + rng.index(4);
      const std::size_t h = 1 + rng.index(6);
      FeedForwardNet net = random_net({n, h, 1}, 1000 + rep, rep % 2 == 0);
      Vector x(n);
      for (double& v : x) v = rng.uniform(-2.0, 2.0);
      const auto hr = input_hessian(net, x);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) CHECK(std::abs(hr.hessian(i, j)) <= hr.kappa_hm);
    }
  }
}

TEST_CASE("training") {
  SUBCASE("constant targets are fit on both splits") {
    std::vector<std::pair<Vector, double>> pts;
    Rng rng(41);
    for (int i = 0; i < 24; ++i) pts.push_back({{rng.uniform(-1, 1)}, 0.8});
    TrainConfig cfg;
    cfg.epochs = 3000;
    cfg.learning_rate = 0.2;
    cfg.seed = 3;
    cfg.hidden_sizes = {4};
    cfg.with_bias = true;
    const auto res = train_regression(pts, cfg);
    CHECK(res.train_loss < 1e-6);
    CHECK(res.test_loss < 1e-6);
    for (const auto& [x, t] : pts) CHECK(std::abs(forward(res.net, x) - t) < 1e-3);
  }
  SUBCASE("determinism: identical seeds give identical weights") {
    std::vector<std::pair<Vector, double>> pts;
    Rng rng(43);
    for (int i = 0; i < 16; ++i) {
      const double x = rng.uniform(0, 1);
      pts.push_back({{x}, std::sin(2.0 * x)});
    }
    TrainConfig cfg;
    cfg.epochs = 200;
    cfg.seed = 7;
    cfg.hidden_sizes = {5};
    cfg.with_bias = true;
    const auto a = train_regression(pts, cfg);
    const auto b = train_regression(pts, cfg);
    for (std::size_t r = 0; r < a.net.num_layers(); ++r)
      for (std::size_t i = 0; i < a.net.weight(r).rows(); ++i)
        for (std::size_t j = 0; j < a.net.weight(r).cols(); ++j)
          CHECK(a.net.weight(r)(i, j) == b.net.weight(r)(i, j));
  }
  SUBCASE("sine fixture reaches the frozen test threshold") {
    std::vector<std::pair<Vector, double>> pts;
    for (int i = 0; i < 64; ++i) {
      const double x = (i + 0.5) / 64.0;
      pts.push_back({{x}, std::sin(2.0 * 3.14159265358979323846 * x)});
    }
    TrainConfig cfg;
    cfg.epochs = 5000;
    cfg.learning_rate = 0.5;
    cfg.momentum = 0.9;
    cfg.seed = 1;
    cfg.hidden_sizes = {16};
    cfg.with_bias = true;
    const auto res = train_regression(pts, cfg);
    CHECK(res.test_loss < 1e-2);

    // Weak capacity monotonicity: 16 hidden neurons do no worse than 2.
    TrainConfig small = cfg;
    small.hidden_sizes = {2};
    const auto res2 = train_regression(pts, small);
    CHECK(res.test_loss <= res2.test_loss + 1e-12);
  }
  SUBCASE("six-point overfit regime without holdout") {
    const double e = std::exp(1.0);
    (void)e;
    std::vector<std::pair<Vector, double>> pts = {
        {{0.0, 0.0}, 16.0},          {{1.0, 0.0}, std::exp(1.0)},
        {{0.0, 1.0}, 16.0 + std::exp(1.0)},
        {{2.0, 0.0}, std::exp(2.0) - 1.0},
        {{1.0, 1.0}, 1.0 + std::exp(2.0)},
        {{0.0, 2.0}, 17.0 + std::exp(2.0)}};
    // Standardize targets to a sane scale for the sigmoid net.
    TrainConfig cfg;
    cfg.epochs = 20000;
    cfg.learning_rate = 0.05;
    cfg.momentum = 0.9;
    cfg.seed = 5;
    cfg.split_fraction = 1.0;  // no holdout
    cfg.hidden_sizes = {12};
    cfg.with_bias = true;
    cfg.input_map = AffineInputMap{{1.0, 1.0}, 1.5};
    // Scale values down so the identity output layer stays in range.
    double vmax = 0.0;
    for (auto& [x, t] : pts) vmax = std::max(vmax, std::abs(t));
    for (auto& [x, t] : pts) t /= vmax;
    const auto res = train_regression(pts, cfg);
    CHECK(res.train_loss < 1e-4);
    CHECK(res.test_loss == doctest::Approx(res.train_loss));
  }
  SUBCASE("too few points rejected") {
    CHECK_THROWS_AS(train_regression({{Vector{0.0}, 1.0}}, TrainConfig{}), std::invalid_argument);
  }
}

TEST_CASE("hypercube approximator") {
  SUBCASE("single unit cube indicator") {
    const std::vector<HyperCube> cubes{{{0.0}, {1.0}}};
    const auto net = build_hypercube_approximator({5.0}, cubes, Activation::step);
    CHECK(forward(net, {0.5}) == 5.0);
    CHECK(forward(net, {1.5}) == 0.0);
    CHECK(forward(net, {-0.5}) == 0.0);
  }
  SUBCASE("piecewise-constant error halves with the edge length") {
    auto sup_error = [](double edge) {
      const std::size_t v = static_cast<std::size_t>(std::lround(1.0 / edge));
      std::vector<HyperCube> cubes;
      std::vector<double> vals;
      for (std::size_t i = 0; i < v; ++i) {
        cubes.push_back({{i * edge}, {(i + 1) * edge}});
        vals.push_back((i + 0.5) * edge);  // f(x) = x at the cube center
      }
      const auto net = build_hypercube_approximator(vals, cubes, Activation::step);
      double sup = 0.0;
      for (int k = 0; k < 1024; ++k) {
        const double x = (k + 0.5) / 1024.0;
        sup = std::max(sup, std::abs(forward(net, {x}) - x));
      }
      return sup;
    };
    const double ratio = sup_error(1.0 / 8.0) / sup_error(1.0 / 4.0);
    CHECK(ratio >= 0.4);
    CHECK(ratio <= 0.6);
  }
  SUBCASE("sigmoid variant approximates the step variant") {
    const std::vector<HyperCube> cubes{{{0.0, 0.0}, {1.0, 1.0}}};
    const auto step_net = build_hypercube_approximator({2.0}, cubes, Activation::step);
    const auto sig_net = build_hypercube_approximator({2.0}, cubes, Activation::logistic, 50.0);
    CHECK(std::abs(forward(sig_net, {0.5, 0.5}) - forward(step_net, {0.5, 0.5})) < 1e-3);
    CHECK(std::abs(forward(sig_net, {3.0, 3.0}) - 0.0) < 1e-3);
  }
  SUBCASE("zero cubes rejected") {
    CHECK_THROWS_AS(build_hypercube_approximator({}, {}, Activation::step),
                    std::invalid_argument);
  }
}

TEST_CASE("model accuracy and validity") {
  const Vector center{0.0, 0.0};
  SUBCASE("identical model scores zero") {
    auto f = [](const Vector& x) { return x[0] - x[1]; };
    const auto acc = model_accuracy(f, f, center, 1.0, 2.0, 256, 1);
    CHECK(acc.value == 0.0);
  }
  SUBCASE("constant offset integrates exactly") {
    auto zero = [](const Vector&) { return 0.0; };
    auto one = [](const Vector&) { return 1.0; };
    const auto acc = model_accuracy(zero, one, center, 1.0, 2.0, 512, 7);
    CHECK(acc.value == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("estimates agree across seeds to a few percent") {
    auto f = [](const Vector& x) { return std::sin(x[0]) + x[1] * x[1]; };
    auto m = [](const Vector& x) { return x[0]; };
    const double a = model_accuracy(m, f, center, 1.0, 2.0, 4096, 11).value;
    const double b = model_accuracy(m, f, center, 1.0, 2.0, 4096, 12).value;
    const double c = model_accuracy(m, f, center, 1.0, 2.0, 4096, 13).value;
    CHECK(std::abs(a - b) <= 0.05 * a);
    CHECK(std::abs(a - c) <= 0.05 * a);
  }
  SUBCASE("validity thresholds") {
    auto f = [](const Vector&) { return 1.0; };
    auto zero = [](const Vector&) { return 0.0; };
    CHECK(validity_check(f, f, center, 1.0, 0.1, 128));
    CHECK_FALSE(validity_check(zero, f, center, 1.0, 0.5, 128));
    CHECK(validity_check(zero, f, center, 1.0, 2.0, 128));  // kappa >= max error / r^2
  }
}

TEST_CASE("net serialization round-trips bit-exactly") {
  for (const bool bias : {false, true}) {
    FeedForwardNet net = random_net({3, 5, 2, 1}, 99, bias);
    net.set_input_map(AffineInputMap{{0.1, -0.2, 0.3}, 2.5});
    std::ostringstream out;
    save_net(out, net);
    std::istringstream in(out.str());
    const FeedForwardNet back = load_net(in);
    REQUIRE(back.layer_sizes() == net.layer_sizes());
    REQUIRE(back.has_bias() == net.has_bias());
    REQUIRE(back.input_map().has_value());
    CHECK(back.input_map()->radius == net.input_map()->radius);
    for (std::size_t r = 0; r < net.num_layers(); ++r) {
      for (std::size_t i = 0; i < net.weight(r).rows(); ++i)
        for (std::size_t j = 0; j < net.weight(r).cols(); ++j)
          CHECK(back.weight(r)(i, j) == net.weight(r)(i, j));
      if (bias)
        for (std::size_t i = 0; i < net.bias(r).size(); ++i)
          CHECK(back.bias(r)[i] == net.bias(r)[i]);
    }
    Rng rng(5);
    const Vector x{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    CHECK(forward(back, x) == forward(net, x));
  }
}
