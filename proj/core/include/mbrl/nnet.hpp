#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>
#include <vector>

#include "mbrl/rng.hpp"

namespace mbrl {

enum class Activation { kTanh, kSwish };
enum class HeadMode { kTwoHeads, kMeanOnly };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

constexpr double kLogSigmaMin = -10.0;
constexpr double kLogSigmaMax = 2.0;

struct NetConfig {
  int input_dim = 0;
  int output_dim = 0;            // per head
  std::vector<int> hidden;       // trunk widths
  int head_hidden = -1;          // -1: last trunk width
  Activation activation = Activation::kTanh;
  HeadMode heads = HeadMode::kTwoHeads;
  double dropout = 0.0;          // applied to trunk hidden outputs, train mode

  int head_hidden_resolved() const {
    return head_hidden > 0 ? head_hidden : hidden.back();
  }
};

// Named view into the flat parameter vector: a rows x cols column-major
// matrix starting at offset (cols == 1 for biases).
struct ParamBlock {
  std::string name;
  Eigen::Index offset = 0;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  Eigen::Index size() const { return rows * cols; }
};

// Intermediate values of one batched forward pass, kept so backward can run
// without recomputation and with the same dropout masks.
struct ForwardCache {
  Eigen::MatrixXd X;
  std::vector<Eigen::MatrixXd> Z;     // pre-activations per trunk layer
  std::vector<Eigen::MatrixXd> A;     // activations
  std::vector<Eigen::MatrixXd> H;     // after dropout (== A when off)
  std::vector<Eigen::MatrixXd> mask;  // inverted dropout masks (train only)
  Eigen::MatrixXd G_mu, T_mu;         // head hidden pre-act / tanh
  Eigen::MatrixXd G_ls, T_ls;
  Eigen::MatrixXd mu;
  Eigen::MatrixXd ls_pre;             // before clamping
  Eigen::MatrixXd ls;                 // clamped
  bool train = false;
};

// Dense net: trunk of hidden layers (tanh or swish) followed by two head
// subnets (mean, log-sigma), each Linear -> Tanh -> Linear. log-sigma is
// clamped to [-10, 2] with zero gradient outside the bounds. Rows are
// samples everywhere; the heavy lifting is Eigen matrix products.
//
// A net is mutated only by its owner; eval-mode forward is const and safe
// to call concurrently.
class DenseNet {
 public:
  explicit DenseNet(NetConfig cfg);

  const NetConfig& config() const { return cfg_; }
  Eigen::Index param_count() const { return params_.size(); }
  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }
  const std::vector<ParamBlock>& layout() const { return layout_; }

  // Mutable matrix view of one named block (tests use this for parameter
  // surgery; biases come back as n x 1).
  Eigen::Map<Eigen::MatrixXd> block(const std::string& name);
  Eigen::Map<const Eigen::MatrixXd> block(const std::string& name) const;

  // Glorot-uniform weights, zero biases.
  void init_glorot(Rng& rng);

  // Batched forward. X: B x input_dim. train mode applies dropout using rng
  // (required when dropout > 0 and train is true).
  ForwardCache forward(const Eigen::MatrixXd& X, bool train = false,
                       Rng* rng = nullptr) const;

  // Eval-mode convenience without retaining the cache.
  void predict(const Eigen::MatrixXd& X, Eigen::MatrixXd& mu,
               Eigen::MatrixXd& log_sigma) const;
  void predict1(const Eigen::VectorXd& x, Eigen::VectorXd& mu,
                Eigen::VectorXd& log_sigma) const;

  // Pushes upstream gradients d_mu = dL/dmu and d_ls = dL/d(clamped ls)
  // back through the cached pass. Accumulates nothing: param_grad is
  // resized and overwritten. input_grad (B x input_dim), if given, receives
  // dL/dX. In kMeanOnly mode d_ls is ignored.
  void backward(const ForwardCache& cache, const Eigen::MatrixXd& d_mu,
                const Eigen::MatrixXd& d_ls, Eigen::VectorXd& param_grad,
                Eigen::MatrixXd* input_grad = nullptr) const;

 private:
  NetConfig cfg_;
  std::vector<ParamBlock> layout_;
  Eigen::VectorXd params_;

  Eigen::Map<const Eigen::MatrixXd> view(const ParamBlock& b) const;
  const ParamBlock& find(const std::string& name) const;
};

// Per-dimension Gaussian log-densities and the summed negative
// log-likelihood of one sample.
struct NllResult {
  double loss = 0.0;          // -sum_j logpdf_j
  Eigen::VectorXd logpdf;     // per dimension
};
NllResult gaussian_nll(const Eigen::VectorXd& mu,
                       const Eigen::VectorXd& log_sigma,
                       const Eigen::VectorXd& target);

// Batch-mean NLL (mean over rows of the per-sample dim-sum). Optional
// gradients w.r.t. mu and clamped log_sigma, already scaled by 1/B.
double gaussian_nll_batch(const Eigen::MatrixXd& mu, const Eigen::MatrixXd& ls,
                          const Eigen::MatrixXd& target,
                          Eigen::MatrixXd* d_mu = nullptr,
                          Eigen::MatrixXd* d_ls = nullptr);

double gaussian_logpdf(double x, double mu, double sigma);
double gaussian_cdf(double x, double mu, double sigma);

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long long step = 0;
  Eigen::VectorXd m;
  Eigen::VectorXd v;

  AdamState(Eigen::Index n, double learning_rate);
  void update(Eigen::VectorXd& params, const Eigen::VectorXd& grad);
};

struct TrainConfig {
  double lr = 1e-3;
  int batch_size = 64;
  int epochs = 150;
  int patience = 20;
  std::uint64_t seed = 0;
  double weight_decay = 0.0;  // L2 on weight matrices only
};

struct TrainResult {
  std::vector<double> train_loss;  // per epoch, mean batch NLL
  std::vector<double> val_loss;    // per epoch, full-val NLL
  double initial_val = 0.0;
  double best_val = 0.0;
  int best_epoch = -1;             // -1: initial parameters were best
};

// Non-finite values where finite ones are required (losses, model samples,
// evaluation returns). The CLI maps this family to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TrainDivergence : public NumericalError {
 public:
  TrainDivergence(int epoch, const std::string& what)
      : NumericalError(what), epoch(epoch) {}
  int epoch;
};

// Minibatch NLL training with per-epoch shuffling and early stopping on
// validation NLL; restores the best-validation parameters (which may be the
// initial ones). Inputs/targets are expected already standardized.
TrainResult train(DenseNet& net, const Eigen::MatrixXd& x_train,
                  const Eigen::MatrixXd& y_train, const Eigen::MatrixXd& x_val,
                  const Eigen::MatrixXd& y_val, const TrainConfig& cfg);

// Net checkpoint: magic, JSON header (architecture + free-form extra),
// flat little-endian f64 parameters.
void save_net(const DenseNet& net, const std::string& path,
              const std::string& extra_json = "{}");
DenseNet load_net(const std::string& path, std::string* extra_json = nullptr);

}  // namespace mbrl
