#pragma once

#include <Eigen/Core>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "mbrl/dataset.hpp"
#include "mbrl/nnet.hpp"
#include "mbrl/rng.hpp"

namespace mbrl {

enum class ModelKind { kDmdn, kDarmdn, kEnsemble };

std::string to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);

// Gaussian mixture over the d_s+1 output channels, raw space. Rows index
// mixture components (single models: one row; 3-member ensembles: three).
struct PredictiveDistribution {
  Eigen::VectorXd weights;  // sums to 1
  Eigen::MatrixXd mu;       // D_mix x (d_s+1)
  Eigen::MatrixXd sigma;    // D_mix x (d_s+1), positive
};

struct MemberMoments {
  Eigen::VectorXd mu;     // length d_s+1, raw
  Eigen::VectorXd sigma;  // length d_s+1, raw, positive
};

// Per-dimension predictive laws for a batch of transitions, raw space.
// Canonical output order: state dims in index order, reward last. Entry j
// of mu/sigma is B x D (D mixture components, uniform weights for
// ensembles). For autoregressive models the law of dim j conditions on the
// GROUND-TRUTH values of dims 0..j-1 (teacher forcing).
struct BatchLaws {
  Eigen::VectorXd weights;            // D, sums to 1
  std::vector<Eigen::MatrixXd> mu;    // per output dim: B x D
  std::vector<Eigen::MatrixXd> sigma; // per output dim: B x D
  int dims() const { return static_cast<int>(mu.size()); }
};

// Per-member raw moments for a batch (member l: B x (d_s+1) matrices).
struct BatchMoments {
  std::vector<Eigen::MatrixXd> mu;
  std::vector<Eigen::MatrixXd> sigma;
  int members() const { return static_cast<int>(mu.size()); }
};

double mixture_logpdf(const Eigen::VectorXd& w, const Eigen::VectorXd& mu,
                      const Eigen::VectorXd& sigma, double x);
double mixture_cdf(const Eigen::VectorXd& w, const Eigen::VectorXd& mu,
                   const Eigen::VectorXd& sigma, double x);

// Common interface of DMDN, DARMDN and ensembles (and of the analytic test
// oracles): per-dimension laws for density metrics, per-member moments for
// uncertainty heuristics, and seeded sampling for rollouts. Trained models
// are immutable; all methods are const and concurrently callable.
class DynamicsModel {
 public:
  virtual ~DynamicsModel() = default;

  virtual ModelKind kind() const = 0;
  virtual int state_dim() const = 0;
  virtual int action_dim() const = 0;
  virtual int member_count() const = 0;

  virtual BatchLaws dim_laws_batch(const Eigen::MatrixXd& s,
                                   const Eigen::MatrixXd& a,
                                   const Eigen::MatrixXd& s_next,
                                   const Eigen::VectorXd& r) const = 0;

  virtual BatchMoments moments_batch(const Eigen::MatrixXd& s,
                                     const Eigen::MatrixXd& a) const = 0;

  // Draws (s_next, r) rows for each (s, a) row. The draw order is fixed:
  // ensembles first draw one member index per row, then sample member
  // groups in member order.
  virtual void sample_batch(const Eigen::MatrixXd& s, const Eigen::MatrixXd& a,
                            Rng& rng, Eigen::MatrixXd& s_next,
                            Eigen::VectorXd& r) const = 0;

  // Single-point conveniences built on the batch calls.
  std::vector<MemberMoments> moments(const Eigen::VectorXd& s,
                                     const Eigen::VectorXd& a) const;
  std::pair<Eigen::VectorXd, double> sample(const Eigen::VectorXd& s,
                                            const Eigen::VectorXd& a,
                                            Rng& rng) const;
  // Total log-density of one transition (sum of per-dim conditional laws)
  // plus the per-dimension values, raw space.
  std::pair<double, Eigen::VectorXd> log_density(const Eigen::VectorXd& s,
                                                 const Eigen::VectorXd& a,
                                                 const Eigen::VectorXd& s_next,
                                                 double r) const;
};

class DmdnModel final : public DynamicsModel {
 public:
  DmdnModel(DenseNet net, DatasetStats stats);

  ModelKind kind() const override { return ModelKind::kDmdn; }
  int state_dim() const override { return stats_.state_dim; }
  int action_dim() const override { return stats_.action_dim; }
  int member_count() const override { return 1; }

  BatchLaws dim_laws_batch(const Eigen::MatrixXd& s, const Eigen::MatrixXd& a,
                           const Eigen::MatrixXd& s_next,
                           const Eigen::VectorXd& r) const override;
  BatchMoments moments_batch(const Eigen::MatrixXd& s,
                             const Eigen::MatrixXd& a) const override;
  void sample_batch(const Eigen::MatrixXd& s, const Eigen::MatrixXd& a,
                    Rng& rng, Eigen::MatrixXd& s_next,
                    Eigen::VectorXd& r) const override;

  PredictiveDistribution predict(const Eigen::VectorXd& s,
                                 const Eigen::VectorXd& a) const;

  const DenseNet& net() const { return net_; }
  DenseNet& net() { return net_; }
  const DatasetStats& stats() const { return stats_; }

 private:
  DenseNet net_;
  DatasetStats stats_;
};

// One conditional net per output dim; net j sees (s, a, y_0 .. y_{j-1}) in
// standardized coordinates.
class DarmdnModel final : public DynamicsModel {
 public:
  DarmdnModel(std::vector<DenseNet> nets, DatasetStats stats);

  ModelKind kind() const override { return ModelKind::kDarmdn; }
  int state_dim() const override { return stats_.state_dim; }
  int action_dim() const override { return stats_.action_dim; }
  int member_count() const override { return 1; }

  BatchLaws dim_laws_batch(const Eigen::MatrixXd& s, const Eigen::MatrixXd& a,
                           const Eigen::MatrixXd& s_next,
                           const Eigen::VectorXd& r) const override;
  // Moments chain the conditional MEANS through the conditioning inputs
  // (deterministic mean propagation).
  BatchMoments moments_batch(const Eigen::MatrixXd& s,
                             const Eigen::MatrixXd& a) const override;
  void sample_batch(const Eigen::MatrixXd& s, const Eigen::MatrixXd& a,
                    Rng& rng, Eigen::MatrixXd& s_next,
                    Eigen::VectorXd& r) const override;

  const std::vector<DenseNet>& nets() const { return nets_; }
  std::vector<DenseNet>& nets() { return nets_; }
  const DatasetStats& stats() const { return stats_; }

 private:
  std::vector<DenseNet> nets_;
  DatasetStats stats_;
};

class EnsembleModel final : public DynamicsModel {
 public:
  explicit EnsembleModel(std::vector<DmdnModel> members);

  ModelKind kind() const override { return ModelKind::kEnsemble; }
  int state_dim() const override { return members_.front().state_dim(); }
  int action_dim() const override { return members_.front().action_dim(); }
  int member_count() const override { return static_cast<int>(members_.size()); }

  BatchLaws dim_laws_batch(const Eigen::MatrixXd& s, const Eigen::MatrixXd& a,
                           const Eigen::MatrixXd& s_next,
                           const Eigen::VectorXd& r) const override;
  BatchMoments moments_batch(const Eigen::MatrixXd& s,
                             const Eigen::MatrixXd& a) const override;
  void sample_batch(const Eigen::MatrixXd& s, const Eigen::MatrixXd& a,
                    Rng& rng, Eigen::MatrixXd& s_next,
                    Eigen::VectorXd& r) const override;

  const std::vector<DmdnModel>& members() const { return members_; }

 private:
  std::vector<DmdnModel> members_;
};

struct ModelConfig {
  ModelKind kind = ModelKind::kDmdn;
  int n_hidden_units = 100;  // per hidden layer (per conditional net for darmdn)
  int n_hidden_layers = 2;
  Activation activation = Activation::kTanh;
  double dropout = 0.0;
  double lr = 1e-3;
  int batch_size = 64;
  int epochs = 150;
  int patience = 20;
  double weight_decay = 0.0;
  int d_mix = 1;             // mixture components; only 1 has a training path
  int ensemble_members = 3;
};

struct TrainedModel {
  std::unique_ptr<DynamicsModel> model;
  std::vector<TrainResult> history;  // one per trained net
};

// Standardization stats come from the training split and are stored in the
// model. Ensembles train members with distinct derived seeds (distinct init
// and shuffle orders). Throws TrainDivergence on non-finite losses.
TrainedModel train_model(const TransitionDataset& train_set,
                         const TransitionDataset& val_set,
                         const ModelConfig& cfg, std::uint64_t seed);

// Checkpoint bundle: directory with manifest.json (kind, output order,
// stats, seeds, architecture) and one net file per DenseNet.
void save_model(const DynamicsModel& model, const std::string& dir);
std::unique_ptr<DynamicsModel> load_model(const std::string& dir);

// Standardized model input [std(s), std(a)] for a batch.
Eigen::MatrixXd model_input(const Eigen::MatrixXd& s, const Eigen::MatrixXd& a,
                            const DatasetStats& stats);
// Standardized targets [std(delta), std(r)] for a batch.
Eigen::MatrixXd model_targets(const Eigen::MatrixXd& s,
                              const Eigen::MatrixXd& s_next,
                              const Eigen::VectorXd& r,
                              const DatasetStats& stats);

}  // namespace mbrl
