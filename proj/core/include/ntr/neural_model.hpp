#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "ntr/linalg.hpp"

namespace ntr {

class TrainingFailureError : public std::runtime_error {
public:
  explicit TrainingFailureError(const std::string& what) : std::runtime_error(what) {}
};

double sigmoid(double z);

enum class Activation {
  logistic,  // 1 / (1 + e^-z)
  step,      // 1 for z >= 0, else 0 (forward evaluation only)
};

/// Optional affine standardization z = (x - center) / radius applied before
/// the first layer; derivatives are composed through it by the chain rule.
struct AffineInputMap {
  Vector center;
  double radius = 1.0;
};

/// Fully-connected feed-forward net: sizes (n, m_1, ..., m_L, 1), hidden
/// activations sigmoid (or step), identity output. Biases are off by default.
class FeedForwardNet {
public:
  FeedForwardNet() = default;
  FeedForwardNet(std::vector<std::size_t> layer_sizes, bool with_bias = false,
                 Activation act = Activation::logistic, double sharpness = 1.0);

  const std::vector<std::size_t>& layer_sizes() const { return layer_sizes_; }
  std::size_t input_dim() const { return layer_sizes_.front(); }
  std::size_t num_layers() const { return weights_.size(); }

  Matrix& weight(std::size_t layer) { return weights_[layer]; }
  const Matrix& weight(std::size_t layer) const { return weights_[layer]; }
  Vector& bias(std::size_t layer) { return biases_[layer]; }
  const Vector& bias(std::size_t layer) const { return biases_[layer]; }
  bool has_bias() const { return has_bias_; }
  Activation activation() const { return act_; }
  double sharpness() const { return sharpness_; }

  const std::optional<AffineInputMap>& input_map() const { return input_map_; }
  void set_input_map(AffineInputMap map) { input_map_ = std::move(map); }

  void seed_weights(std::uint64_t seed);  // uniform in +-1/sqrt(fan_in)

  double operator()(const Vector& x) const;

private:
  std::vector<std::size_t> layer_sizes_;
  std::vector<Matrix> weights_;
  std::vector<Vector> biases_;
  bool has_bias_ = false;
  Activation act_ = Activation::logistic;
  double sharpness_ = 1.0;
  std::optional<AffineInputMap> input_map_;

  friend double forward(const FeedForwardNet&, const Vector&);
};

double forward(const FeedForwardNet& net, const Vector& x);

struct WeightGradients {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
};

enum class LossKind { mean_squared };

/// Exact gradient of the batch loss with respect to every weight (and bias),
/// by reverse accumulation. Optionally records the sample ids it consumed
/// (holdout-discipline instrumentation).
WeightGradients weight_gradients(const FeedForwardNet& net,
                                 const std::vector<std::pair<Vector, double>>& batch,
                                 LossKind loss = LossKind::mean_squared,
                                 std::vector<std::size_t>* consumed_ids = nullptr,
                                 const std::vector<std::size_t>* batch_ids = nullptr);

double batch_loss(const FeedForwardNet& net, const std::vector<std::pair<Vector, double>>& batch,
                  LossKind loss = LossKind::mean_squared);

Vector input_gradient(const FeedForwardNet& net, const Vector& x);

struct InputHessianResult {
  Matrix hessian;
  double kappa_hm = 0.0;  // certified entrywise bound from weight magnitudes
};

InputHessianResult input_hessian(const FeedForwardNet& net, const Vector& x);

/// One-hidden-layer closed forms (sigma - sigma^2 factorization); throw for
/// other architectures. Used to cross-check the generic accumulation path.
Vector input_gradient_closed_form(const FeedForwardNet& net, const Vector& x);
Matrix input_hessian_closed_form(const FeedForwardNet& net, const Vector& x);

struct TrainConfig {
  std::size_t epochs = 2000;
  double learning_rate = 0.05;
  std::uint64_t seed = 0;
  double split_fraction = 0.8;  // in (0, 1]; 1.0 trains on everything
  double momentum = 0.0;        // optional, 0.9 when enabled
  std::vector<std::size_t> hidden_sizes = {8};
  bool with_bias = false;
  std::optional<AffineInputMap> input_map;  // standardization, off by default
  // Early stopping on held-out loss stagnation (0 = disabled).
  std::size_t patience = 0;
  double min_delta = 1e-8;
};

struct TrainResult {
  FeedForwardNet net;
  double train_loss = 0.0;
  double test_loss = 0.0;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
  std::vector<std::size_t> gradient_ids;  // original indices seen by the gradient path
};

/// Deterministic holdout split + full-batch gradient descent on the training
/// mean squared error. Reports final MSE on both splits.
TrainResult train_regression(const std::vector<std::pair<Vector, double>>& points,
                             const TrainConfig& cfg);

struct HyperCube {
  Vector lo;
  Vector hi;
};

/// Explicit two-hidden-layer indicator network: per cube, 2n first-stage
/// neurons encode s(x_k - a_k) - s(x_k - b_k); a second stage tests the count
/// against n; the output combines f(c_i) per cube. With step activation the
/// net reproduces the piecewise-constant approximator exactly inside cubes.
FeedForwardNet build_hypercube_approximator(const std::vector<double>& f_values,
                                            const std::vector<HyperCube>& cubes,
                                            Activation activation, double sharpness = 50.0);

struct ModelAccuracy {
  double q = 2.0;
  double value = 0.0;
  std::size_t n_samples = 0;
};

using ScalarField = std::function<double(const Vector&)>;

/// Monte-Carlo estimate of [ integral |f - m|^q dmu ]^(1/q), mu uniform on the ball.
ModelAccuracy model_accuracy(const ScalarField& model, const ScalarField& f, const Vector& center,
                             double radius, double q, std::size_t n_samples, std::uint64_t seed);

/// Sampled validity test: max |f - m| over the ball <= kappa * radius^2.
bool validity_check(const ScalarField& model, const ScalarField& f, const Vector& center,
                    double radius, double kappa, std::size_t n_samples, std::uint64_t seed = 0);

/// Plain-text net (de)serialization; bit-exact round trip for finite doubles.
void save_net(std::ostream& out, const FeedForwardNet& net);
FeedForwardNet load_net(std::istream& in);

}  // namespace ntr
