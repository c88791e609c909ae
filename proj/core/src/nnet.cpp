#include "mbrl/nnet.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "mbrl/io.hpp"

namespace mbrl {

using nlohmann::json;

namespace {
constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * log(2*pi)
constexpr char kNetMagic[9] = "MBRLNN1\n";

void apply_activation(Activation act, const Eigen::MatrixXd& z,
                      Eigen::MatrixXd& a) {
  if (act == Activation::kTanh) {
    a = z.array().tanh();
  } else {
    const Eigen::ArrayXXd s = 1.0 / (1.0 + (-z.array()).exp());
    a = z.array() * s;
  }
}

// Derivative of the activation given cached pre-activation z and output a.
Eigen::MatrixXd activation_prime(Activation act, const Eigen::MatrixXd& z,
                                 const Eigen::MatrixXd& a) {
  if (act == Activation::kTanh) return (1.0 - a.array().square()).matrix();
  const Eigen::ArrayXXd s = 1.0 / (1.0 + (-z.array()).exp());
  return (s + z.array() * s * (1.0 - s)).matrix();
}

bool is_weight_block(const std::string& name) {
  const auto dot = name.rfind('.');
  const std::string leaf = dot == std::string::npos ? name : name.substr(dot + 1);
  return leaf == "W" || leaf == "V1" || leaf == "V2";
}
}  // namespace

std::string to_string(Activation a) {
  return a == Activation::kTanh ? "tanh" : "swish";
}

Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return Activation::kTanh;
  if (s == "swish") return Activation::kSwish;
  throw std::invalid_argument("unknown activation: " + s);
}

DenseNet::DenseNet(NetConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.input_dim <= 0 || cfg_.output_dim <= 0 || cfg_.hidden.empty())
    throw std::invalid_argument("DenseNet: bad dimensions");
  for (int w : cfg_.hidden)
    if (w <= 0) throw std::invalid_argument("DenseNet: widths must be positive");
  if (!(cfg_.dropout >= 0.0 && cfg_.dropout < 1.0))
    throw std::invalid_argument("DenseNet: dropout must be in [0, 1)");

  Eigen::Index offset = 0;
  auto add = [&](const std::string& name, Eigen::Index rows, Eigen::Index cols) {
    layout_.push_back({name, offset, rows, cols});
    offset += rows * cols;
  };

  int prev = cfg_.input_dim;
  for (std::size_t i = 0; i < cfg_.hidden.size(); ++i) {
    const int w = cfg_.hidden[i];
    add("trunk" + std::to_string(i) + ".W", w, prev);
    add("trunk" + std::to_string(i) + ".b", w, 1);
    prev = w;
  }
  const int wh = cfg_.head_hidden_resolved();
  const auto add_head = [&](const std::string& h) {
    add(h + ".V1", wh, prev);
    add(h + ".c1", wh, 1);
    add(h + ".V2", cfg_.output_dim, wh);
    add(h + ".c2", cfg_.output_dim, 1);
  };
  add_head("mu");
  if (cfg_.heads == HeadMode::kTwoHeads) add_head("ls");

  params_ = Eigen::VectorXd::Zero(offset);
}

const ParamBlock& DenseNet::find(const std::string& name) const {
  for (const auto& b : layout_)
    if (b.name == name) return b;
  throw std::invalid_argument("no parameter block named " + name);
}

Eigen::Map<Eigen::MatrixXd> DenseNet::block(const std::string& name) {
  const ParamBlock& b = find(name);
  return {params_.data() + b.offset, b.rows, b.cols};
}

Eigen::Map<const Eigen::MatrixXd> DenseNet::block(const std::string& name) const {
  const ParamBlock& b = find(name);
  return {params_.data() + b.offset, b.rows, b.cols};
}

Eigen::Map<const Eigen::MatrixXd> DenseNet::view(const ParamBlock& b) const {
  return {params_.data() + b.offset, b.rows, b.cols};
}

void DenseNet::init_glorot(Rng& rng) {
  for (const auto& b : layout_) {
    if (is_weight_block(b.name)) {
      const double bound = std::sqrt(6.0 / static_cast<double>(b.rows + b.cols));
      for (Eigen::Index k = 0; k < b.size(); ++k)
        params_(b.offset + k) = rng.uniform(-bound, bound);
    } else {
      params_.segment(b.offset, b.size()).setZero();
    }
  }
}

ForwardCache DenseNet::forward(const Eigen::MatrixXd& X, bool train,
                               Rng* rng) const {
  if (X.cols() != cfg_.input_dim)
    throw std::invalid_argument("forward: input dim mismatch");
  if (!params_.allFinite())
    throw std::runtime_error("forward: non-finite parameters");

  const bool use_dropout = train && cfg_.dropout > 0.0;
  if (use_dropout && rng == nullptr)
    throw std::invalid_argument("forward: dropout in train mode needs an rng");

  ForwardCache c;
  c.X = X;
  c.train = train;
  const std::size_t L = cfg_.hidden.size();
  c.Z.resize(L);
  c.A.resize(L);
  c.H.resize(L);
  if (use_dropout) c.mask.resize(L);

  const Eigen::MatrixXd* h_prev = &c.X;
  for (std::size_t i = 0; i < L; ++i) {
    const auto W = view(find("trunk" + std::to_string(i) + ".W"));
    const auto b = view(find("trunk" + std::to_string(i) + ".b"));
    c.Z[i].noalias() = (*h_prev) * W.transpose();
    c.Z[i].rowwise() += b.col(0).transpose();
    apply_activation(cfg_.activation, c.Z[i], c.A[i]);
    if (use_dropout) {
      Eigen::MatrixXd& m = c.mask[i];
      m.resize(c.A[i].rows(), c.A[i].cols());
      const double keep = 1.0 - cfg_.dropout;
      for (Eigen::Index k = 0; k < m.size(); ++k)
        m.data()[k] = rng->uniform() < keep ? 1.0 / keep : 0.0;
      c.H[i] = c.A[i].cwiseProduct(m);
    } else {
      c.H[i] = c.A[i];
    }
    h_prev = &c.H[i];
  }

  const auto run_head = [&](const std::string& h, Eigen::MatrixXd& G,
                            Eigen::MatrixXd& T, Eigen::MatrixXd& O) {
    const auto V1 = view(find(h + ".V1"));
    const auto c1 = view(find(h + ".c1"));
    const auto V2 = view(find(h + ".V2"));
    const auto c2 = view(find(h + ".c2"));
    G.noalias() = (*h_prev) * V1.transpose();
    G.rowwise() += c1.col(0).transpose();
    T = G.array().tanh();
    O.noalias() = T * V2.transpose();
    O.rowwise() += c2.col(0).transpose();
  };

  run_head("mu", c.G_mu, c.T_mu, c.mu);
  if (cfg_.heads == HeadMode::kTwoHeads) {
    run_head("ls", c.G_ls, c.T_ls, c.ls_pre);
    c.ls = c.ls_pre.array().min(kLogSigmaMax).max(kLogSigmaMin);
  }
  if (!c.mu.allFinite() || (cfg_.heads == HeadMode::kTwoHeads && !c.ls.allFinite()))
    throw std::runtime_error("forward: non-finite outputs");
  return c;
}

void DenseNet::predict(const Eigen::MatrixXd& X, Eigen::MatrixXd& mu,
                       Eigen::MatrixXd& log_sigma) const {
  ForwardCache c = forward(X, false, nullptr);
  mu = std::move(c.mu);
  log_sigma = std::move(c.ls);
}

void DenseNet::predict1(const Eigen::VectorXd& x, Eigen::VectorXd& mu,
                        Eigen::VectorXd& log_sigma) const {
  Eigen::MatrixXd M, S;
  predict(x.transpose(), M, S);
  mu = M.row(0).transpose();
  log_sigma = cfg_.heads == HeadMode::kTwoHeads ? S.row(0).transpose()
                                                : Eigen::VectorXd();
}

void DenseNet::backward(const ForwardCache& c, const Eigen::MatrixXd& d_mu,
                        const Eigen::MatrixXd& d_ls,
                        Eigen::VectorXd& param_grad,
                        Eigen::MatrixXd* input_grad) const {
  param_grad.setZero(params_.size());
  const std::size_t L = cfg_.hidden.size();
  const Eigen::MatrixXd& h_last = L > 0 ? c.H[L - 1] : c.X;

  auto grad_of = [&](const std::string& name) {
    const ParamBlock& b = find(name);
    return Eigen::Map<Eigen::MatrixXd>(param_grad.data() + b.offset, b.rows,
                                       b.cols);
  };

  Eigen::MatrixXd d_hlast = Eigen::MatrixXd::Zero(h_last.rows(), h_last.cols());

  const auto back_head = [&](const std::string& h, const Eigen::MatrixXd& T,
                             const Eigen::MatrixXd& dO) {
    const auto V1 = view(find(h + ".V1"));
    const auto V2 = view(find(h + ".V2"));
    grad_of(h + ".V2").noalias() = dO.transpose() * T;
    grad_of(h + ".c2").col(0) = dO.colwise().sum().transpose();
    Eigen::MatrixXd dT = dO * V2;
    Eigen::MatrixXd dG = dT.cwiseProduct((1.0 - T.array().square()).matrix());
    grad_of(h + ".V1").noalias() = dG.transpose() * h_last;
    grad_of(h + ".c1").col(0) = dG.colwise().sum().transpose();
    d_hlast.noalias() += dG * V1;
  };

  back_head("mu", c.T_mu, d_mu);
  if (cfg_.heads == HeadMode::kTwoHeads) {
    // Clamp: unit gradient strictly inside [min, max], zero otherwise.
    Eigen::MatrixXd gate =
        ((c.ls_pre.array() > kLogSigmaMin) && (c.ls_pre.array() < kLogSigmaMax))
            .cast<double>();
    back_head("ls", c.T_ls, d_ls.cwiseProduct(gate));
  }

  Eigen::MatrixXd dH = std::move(d_hlast);
  for (std::size_t ii = L; ii-- > 0;) {
    const Eigen::MatrixXd& h_prev = ii == 0 ? c.X : c.H[ii - 1];
    const auto W = view(find("trunk" + std::to_string(ii) + ".W"));
    Eigen::MatrixXd dA =
        (!c.mask.empty()) ? dH.cwiseProduct(c.mask[ii]) : std::move(dH);
    Eigen::MatrixXd dZ =
        dA.cwiseProduct(activation_prime(cfg_.activation, c.Z[ii], c.A[ii]));
    grad_of("trunk" + std::to_string(ii) + ".W").noalias() =
        dZ.transpose() * h_prev;
    grad_of("trunk" + std::to_string(ii) + ".b").col(0) =
        dZ.colwise().sum().transpose();
    dH.noalias() = dZ * W;
  }
  if (input_grad != nullptr) *input_grad = std::move(dH);
  if (!param_grad.allFinite())
    throw std::runtime_error("backward: non-finite gradient");
}

NllResult gaussian_nll(const Eigen::VectorXd& mu,
                       const Eigen::VectorXd& log_sigma,
                       const Eigen::VectorXd& target) {
  if (mu.size() != log_sigma.size() || mu.size() != target.size())
    throw std::invalid_argument("gaussian_nll: length mismatch");
  NllResult r;
  const Eigen::ArrayXd res = target.array() - mu.array();
  r.logpdf = (-log_sigma.array() - kHalfLog2Pi -
              0.5 * res.square() * (-2.0 * log_sigma.array()).exp())
                 .matrix();
  r.loss = -r.logpdf.sum();
  return r;
}

double gaussian_nll_batch(const Eigen::MatrixXd& mu, const Eigen::MatrixXd& ls,
                          const Eigen::MatrixXd& target, Eigen::MatrixXd* d_mu,
                          Eigen::MatrixXd* d_ls) {
  const double inv_b = 1.0 / static_cast<double>(mu.rows());
  const Eigen::ArrayXXd res = target.array() - mu.array();
  const Eigen::ArrayXXd inv_var = (-2.0 * ls.array()).exp();
  const Eigen::ArrayXXd lp =
      -ls.array() - kHalfLog2Pi - 0.5 * res.square() * inv_var;
  if (d_mu != nullptr) *d_mu = (-res * inv_var * inv_b).matrix();
  if (d_ls != nullptr) *d_ls = ((1.0 - res.square() * inv_var) * inv_b).matrix();
  return -lp.sum() * inv_b;
}

double gaussian_logpdf(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  return -std::log(sigma) - kHalfLog2Pi - 0.5 * z * z;
}

double gaussian_cdf(double x, double mu, double sigma) {
  return 0.5 * std::erfc(-(x - mu) / (sigma * std::sqrt(2.0)));
}

AdamState::AdamState(Eigen::Index n, double learning_rate)
    : lr(learning_rate), m(Eigen::VectorXd::Zero(n)), v(Eigen::VectorXd::Zero(n)) {}

void AdamState::update(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
  if (params.size() != m.size() || grad.size() != m.size())
    throw std::invalid_argument("adam: length mismatch");
  ++step;
  m = beta1 * m + (1.0 - beta1) * grad;
  v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  params.array() -=
      lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
}

namespace {
double eval_nll(const DenseNet& net, const Eigen::MatrixXd& x,
                const Eigen::MatrixXd& y) {
  Eigen::MatrixXd mu, ls;
  net.predict(x, mu, ls);
  return gaussian_nll_batch(mu, ls, y);
}
}  // namespace

TrainResult train(DenseNet& net, const Eigen::MatrixXd& x_train,
                  const Eigen::MatrixXd& y_train, const Eigen::MatrixXd& x_val,
                  const Eigen::MatrixXd& y_val, const TrainConfig& cfg) {
  if (cfg.batch_size <= 0) throw std::invalid_argument("train: bad batch size");
  if (x_train.rows() == 0 || x_val.rows() == 0)
    throw std::invalid_argument("train: empty split");

  TrainResult res;
  res.initial_val = eval_nll(net, x_val, y_val);
  res.best_val = res.initial_val;
  Eigen::VectorXd best_params = net.params();

  AdamState opt(net.param_count(), cfg.lr);
  Rng rng(derive_seed(cfg.seed, "nnet.train"));

  const auto n = static_cast<std::size_t>(x_train.rows());
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});

  Eigen::VectorXd grad;
  Eigen::MatrixXd d_mu, d_ls;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(perm);
    double epoch_loss = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const auto bsz = std::min<std::size_t>(cfg.batch_size, n - start);
      Eigen::MatrixXd xb(bsz, x_train.cols()), yb(bsz, y_train.cols());
      for (std::size_t k = 0; k < bsz; ++k) {
        xb.row(k) = x_train.row(perm[start + k]);
        yb.row(k) = y_train.row(perm[start + k]);
      }
      const ForwardCache cache = net.forward(xb, true, &rng);
      const double loss = gaussian_nll_batch(cache.mu, cache.ls, yb, &d_mu, &d_ls);
      if (!std::isfinite(loss))
        throw TrainDivergence(epoch, "training loss diverged at epoch " +
                                         std::to_string(epoch));
      net.backward(cache, d_mu, d_ls, grad);
      if (cfg.weight_decay > 0.0) {
        for (const auto& b : net.layout())
          if (is_weight_block(b.name))
            grad.segment(b.offset, b.size()) +=
                cfg.weight_decay * net.params().segment(b.offset, b.size());
      }
      opt.update(net.params(), grad);
      epoch_loss += loss;
      ++batches;
    }
    res.train_loss.push_back(epoch_loss / std::max(batches, 1));

    const double val = eval_nll(net, x_val, y_val);
    if (!std::isfinite(val))
      throw TrainDivergence(epoch, "validation loss diverged at epoch " +
                                       std::to_string(epoch));
    res.val_loss.push_back(val);
    if (val < res.best_val) {
      res.best_val = val;
      res.best_epoch = epoch;
      best_params = net.params();
    } else if (epoch - res.best_epoch >= cfg.patience) {
      break;
    }
  }
  net.params() = best_params;
  return res;
}

void save_net(const DenseNet& net, const std::string& path,
              const std::string& extra_json) {
  const NetConfig& cfg = net.config();
  json header;
  header["format_version"] = 1;
  header["input_dim"] = cfg.input_dim;
  header["output_dim"] = cfg.output_dim;
  header["hidden"] = cfg.hidden;
  header["head_hidden"] = cfg.head_hidden;
  header["activation"] = to_string(cfg.activation);
  header["heads"] = cfg.heads == HeadMode::kTwoHeads ? "two" : "mean_only";
  header["dropout"] = cfg.dropout;
  header["extra"] = extra_json.empty() ? json::object() : json::parse(extra_json);

  auto os = io::open_out(path);
  io::write_magic(os, kNetMagic);
  io::write_blob(os, header.dump());
  io::write_u64(os, static_cast<std::uint64_t>(net.param_count()));
  io::write_f64_array(os, net.params().data(),
                      static_cast<std::size_t>(net.param_count()));
}

DenseNet load_net(const std::string& path, std::string* extra_json) {
  auto is = io::open_in(path);
  io::expect_magic(is, kNetMagic, "net checkpoint");
  const json header = json::parse(io::read_blob(is));
  if (header.at("format_version").get<int>() != 1)
    throw std::runtime_error("unsupported net checkpoint version");

  NetConfig cfg;
  cfg.input_dim = header.at("input_dim").get<int>();
  cfg.output_dim = header.at("output_dim").get<int>();
  cfg.hidden = header.at("hidden").get<std::vector<int>>();
  cfg.head_hidden = header.at("head_hidden").get<int>();
  cfg.activation = activation_from_string(header.at("activation").get<std::string>());
  cfg.heads = header.at("heads").get<std::string>() == "two"
                  ? HeadMode::kTwoHeads
                  : HeadMode::kMeanOnly;
  cfg.dropout = header.at("dropout").get<double>();

  DenseNet net(cfg);
  const auto n = static_cast<Eigen::Index>(io::read_u64(is));
  if (n != net.param_count())
    throw std::runtime_error("net checkpoint parameter count mismatch");
  io::read_f64_array(is, net.params().data(), static_cast<std::size_t>(n));
  if (extra_json != nullptr) *extra_json = header.at("extra").dump();
  return net;
}

}  // namespace mbrl
