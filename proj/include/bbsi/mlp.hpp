#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bbsi/errors.hpp"
#include "bbsi/random.hpp"
#include "bbsi/training_set.hpp"

namespace bbsi {

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

inline constexpr double kProbClamp = 1e-12;

/// Per-input affine map to zero mean and unit variance.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;

  static Standardizer fit(const Eigen::MatrixXd& rows) {
    require(rows.rows() > 0, "cannot fit a standardizer on no rows");
    Standardizer s;
    s.mean = rows.colwise().mean().transpose();
    s.sd.resize(rows.cols());
    for (Eigen::Index j = 0; j < rows.cols(); ++j) {
      const double var = (rows.col(j).array() - s.mean(j)).square().mean();
      s.sd(j) = std::max(std::sqrt(var), 1e-12);
    }
    return s;
  }

  static Standardizer identity(Eigen::Index d) {
    return {Eigen::VectorXd::Zero(d), Eigen::VectorXd::Ones(d)};
  }

  /// Columns of `points` are inputs.
  [[nodiscard]] Eigen::MatrixXd apply(const Eigen::MatrixXd& points) const {
    return (points.colwise() - mean).array().colwise() / sd.array();
  }
};

/// Fully connected net: rectifier hidden layers, one logistic output.
/// weights[l] is widths[l+1] x widths[l].
template <class T = double>
struct MlpParams {
  std::vector<Mat<T>> weights;
  std::vector<Vec<T>> biases;

  [[nodiscard]] std::size_t layers() const { return weights.size(); }
  [[nodiscard]] std::vector<Eigen::Index> widths() const {
    std::vector<Eigen::Index> w;
    if (weights.empty()) return w;
    w.push_back(weights.front().cols());
    for (const auto& m : weights) w.push_back(m.rows());
    return w;
  }

  static MlpParams zeros(const std::vector<Eigen::Index>& widths) {
    require(widths.size() >= 2 && widths.back() == 1, "network must end in a single output");
    MlpParams p;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
      p.weights.push_back(Mat<T>::Zero(widths[l + 1], widths[l]));
      p.biases.push_back(Vec<T>::Zero(widths[l + 1]));
    }
    return p;
  }

  /// Symmetric uniform init with scale sqrt(6 / (fan_in + fan_out)); zero biases.
  static MlpParams glorot(const std::vector<Eigen::Index>& widths, CounterEngine& rng) {
    auto p = zeros(widths);
    for (auto& w : p.weights) {
      const double r = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
      for (Eigen::Index j = 0; j < w.cols(); ++j)
        for (Eigen::Index i = 0; i < w.rows(); ++i)
          w(i, j) = static_cast<T>((2.0 * rng.uniform() - 1.0) * r);
    }
    return p;
  }

  template <class U>
  [[nodiscard]] MlpParams<U> cast() const {
    MlpParams<U> out;
    for (const auto& w : weights) out.weights.push_back(w.template cast<U>());
    for (const auto& b : biases) out.biases.push_back(b.template cast<U>());
    return out;
  }

  [[nodiscard]] bool all_finite() const {
    for (const auto& w : weights)
      if (!w.allFinite()) return false;
    for (const auto& b : biases)
      if (!b.allFinite()) return false;
    return true;
  }
};

/// Gradients share the parameter layout.
template <class T = double>
using MlpGradients = MlpParams<T>;

/// Output logits for standardized inputs (columns), as a row vector.
template <class T>
Eigen::Matrix<T, 1, Eigen::Dynamic> mlp_logits(const MlpParams<T>& params, const Mat<T>& inputs) {
  Mat<T> a = inputs;
  for (std::size_t l = 0; l < params.layers(); ++l) {
    Mat<T> z = params.weights[l] * a;
    z.colwise() += params.biases[l];
    if (l + 1 < params.layers()) a = z.cwiseMax(T(0));
    else a = std::move(z);
  }
  return a.row(0);
}

inline double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// log(sigmoid(z)) without overflow.
inline double log_sigmoid(double z) noexcept {
  if (z >= 0.0) return -std::log1p(std::exp(-z));
  return z - std::log1p(std::exp(z));
}

/// Probability for a single raw (unstandardized) input.
template <class T>
double forward(const MlpParams<T>& params, const Standardizer& standardizer, const Eigen::VectorXd& z) {
  require(!params.weights.empty() && z.size() == params.weights.front().cols(),
          "input dimension does not match the network");
  require(z.allFinite(), "network input is not finite");
  const Mat<T> x = standardizer.apply(z).template cast<T>();
  return sigmoid(static_cast<double>(mlp_logits(params, x)(0)));
}

namespace detail {

inline double clamped_bce(double logit, int label) noexcept {
  double p = std::clamp(sigmoid(logit), kProbClamp, 1.0 - kProbClamp);
  double q = std::clamp(sigmoid(-logit), kProbClamp, 1.0 - kProbClamp);
  return label == 1 ? -std::log(p) : -std::log(q);
}

// Columns of a training set, standardized, in scalar type T.
template <class T>
Mat<T> standardized_columns(const Standardizer& s, const Eigen::MatrixXd& rows) {
  return s.apply(rows.transpose()).template cast<T>();
}

}  // namespace detail

/// Summed cross-entropy with probabilities clamped to [1e-12, 1 - 1e-12].
template <class T>
double loss(const MlpParams<T>& params, const Standardizer& standardizer, const TrainingSet& ts) {
  require(ts.size() > 0, "loss over an empty training set");
  const auto logits = mlp_logits(params, detail::standardized_columns<T>(standardizer, ts.bases));
  // Extended accumulator: n equal terms sum to the correctly rounded n * term.
  long double total = 0.0L;
  for (std::size_t i = 0; i < ts.size(); ++i)
    total += detail::clamped_bce(static_cast<double>(logits(static_cast<Eigen::Index>(i))), ts.labels[i]);
  return static_cast<double>(total);
}

/// Exact gradients of the summed clamped cross-entropy over a batch of
/// standardized input columns. Returns the batch loss through `batch_loss`.
template <class T>
MlpGradients<T> backward_standardized(const MlpParams<T>& params, const Mat<T>& inputs,
                                      const std::vector<int>& labels, double* batch_loss = nullptr) {
  const std::size_t layers = params.layers();
  require(inputs.cols() > 0 && static_cast<std::size_t>(inputs.cols()) == labels.size(),
          "backward needs a non-empty batch with one label per column");

  std::vector<Mat<T>> acts(layers + 1);
  acts[0] = inputs;
  for (std::size_t l = 0; l < layers; ++l) {
    Mat<T> z = params.weights[l] * acts[l];
    z.colwise() += params.biases[l];
    acts[l + 1] = (l + 1 < layers) ? Mat<T>(z.cwiseMax(T(0))) : z;
  }

  const Eigen::Index m = inputs.cols();
  Mat<T> delta(1, m);
  double total = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double logit = static_cast<double>(acts[layers](0, i));
    const int y = labels[static_cast<std::size_t>(i)];
    const double f = sigmoid(logit);
    total += detail::clamped_bce(logit, y);
    // d/dlogit of the clamped loss; zero where the clamp is active.
    const double g = y == 1 ? f : sigmoid(-logit);
    const bool active = g > kProbClamp && g < 1.0 - kProbClamp;
    delta(0, i) = active ? static_cast<T>(f - static_cast<double>(y)) : T(0);
  }
  if (batch_loss != nullptr) *batch_loss = total;

  MlpGradients<T> grads;
  grads.weights.resize(layers);
  grads.biases.resize(layers);
  for (std::size_t l = layers; l-- > 0;) {
    grads.weights[l].noalias() = delta * acts[l].transpose();
    grads.biases[l] = delta.rowwise().sum();
    if (l == 0) break;
    Mat<T> back = params.weights[l].transpose() * delta;
    delta = (acts[l].array() > T(0)).select(back, T(0));
  }
  return grads;
}

template <class T>
MlpGradients<T> backward(const MlpParams<T>& params, const Standardizer& standardizer,
                         const TrainingSet& batch) {
  require(batch.size() > 0, "backward over an empty batch");
  return backward_standardized(params, detail::standardized_columns<T>(standardizer, batch.bases),
                               batch.labels);
}

/// Bias-corrected Adam.
template <class T = double>
struct AdamState {
  MlpParams<T> m;
  MlpParams<T> v;
  long step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState for_params(const MlpParams<T>& p, double lr = 1e-3) {
    AdamState s;
    s.m = MlpParams<T>::zeros(p.widths());
    s.v = MlpParams<T>::zeros(p.widths());
    s.lr = lr;
    return s;
  }
};

template <class T>
void adam_step(AdamState<T>& state, MlpParams<T>& params, const MlpGradients<T>& grads, double weight_decay = 0.0) {
  require(grads.layers() == params.layers() && state.m.layers() == params.layers(),
          "Adam shapes do not match");
  ++state.step;
  const auto t = static_cast<double>(state.step);
  const T b1 = static_cast<T>(state.beta1);
  const T b2 = static_cast<T>(state.beta2);
  const T step_size = static_cast<T>(state.lr / (1.0 - std::pow(state.beta1, t)));
  const T bc2 = static_cast<T>(1.0 / std::sqrt(1.0 - std::pow(state.beta2, t)));
  const T eps = static_cast<T>(state.eps);

  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = b1 * m + (T(1) - b1) * g;
    v = b2 * v + (T(1) - b2) * g.cwiseProduct(g);
    param.array() -= step_size * m.array() / (v.array().sqrt() * bc2 + eps);
  };
  const T decay = static_cast<T>(1.0 - state.lr * weight_decay);
  for (std::size_t l = 0; l < params.layers(); ++l) {
    if (weight_decay != 0.0) params.weights[l] *= decay;
    update(params.weights[l], state.m.weights[l], state.v.weights[l], grads.weights[l]);
    update(params.biases[l], state.m.biases[l], state.v.biases[l], grads.biases[l]);
  }
}

struct TrainOptions {
  std::vector<Eigen::Index> hidden = {200, 200, 200};
  int epochs = 3000;
  std::size_t batch = 200;
  double lr = 1e-3;
  /// Fraction of rows held out (after one seeded shuffle) for reporting.
  double holdout_fraction = 0.0;
  /// Train in single precision; parameters are stored in double afterwards.
  bool single_precision = false;
  /// Fit a per-input standardizer; otherwise inputs go in unchanged.
  bool standardize = true;
  /// Decoupled weight decay on weight matrices (not biases), per Adam step.
  double weight_decay = 0.0;
  /// With a holdout: keep the parameters of the epoch with the lowest
  /// holdout loss, and stop after `patience` epochs without improvement
  /// (0 = run all epochs).
  bool keep_best = false;
  int patience = 0;
};

struct TrainReport {
  std::vector<double> epoch_loss;  ///< summed minibatch loss per epoch
  int best_epoch = -1;             ///< set when the best holdout epoch was kept
  double holdout_loss = std::numeric_limits<double>::quiet_NaN();
  double holdout_accuracy = std::numeric_limits<double>::quiet_NaN();
  bool single_class = false;
};

/// Learned selection probability: network plus input standardizer.
struct SelectionProbEstimate {
  MlpParams<double> params;
  Standardizer standardizer;
  TrainReport report;

  [[nodiscard]] Eigen::Index dim() const { return params.weights.front().cols(); }

  [[nodiscard]] double predict(const Eigen::VectorXd& z) const { return forward(params, standardizer, z); }

  /// log pi_hat at each column of `points`.
  [[nodiscard]] Eigen::VectorXd log_prob(const Eigen::MatrixXd& points) const {
    require(points.rows() == dim(), "input dimension does not match the network");
    const auto logits = mlp_logits(params, standardizer.apply(points));
    Eigen::VectorXd out(points.cols());
    for (Eigen::Index i = 0; i < points.cols(); ++i) out(i) = log_sigmoid(logits(i));
    return out;
  }

  void save(std::ostream& os) const;
  static SelectionProbEstimate load(std::istream& is);
};

namespace detail {

template <class T>
SelectionProbEstimate train_impl(const TrainingSet& ts, const TrainOptions& opts, RandomSeed seed) {
  require(ts.size() > 0, "cannot train on an empty training set");
  require(opts.batch > 0 && opts.epochs >= 0, "invalid training options");
  CounterEngine rng(seed);

  SelectionProbEstimate est;
  est.report.single_class = ts.count(0) == 0 || ts.count(1) == 0;

  std::vector<std::size_t> order(ts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto shuffle = [&](std::vector<std::size_t>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
  };

  std::vector<std::size_t> train_rows = order;
  std::vector<std::size_t> holdout_rows;
  if (opts.holdout_fraction > 0.0) {
    shuffle(train_rows);
    const auto h = static_cast<std::size_t>(opts.holdout_fraction * static_cast<double>(ts.size()));
    require(h < ts.size(), "holdout leaves no training rows");
    holdout_rows.assign(train_rows.end() - static_cast<std::ptrdiff_t>(h), train_rows.end());
    train_rows.resize(ts.size() - h);
  }

  Eigen::MatrixXd fit_rows(static_cast<Eigen::Index>(train_rows.size()), ts.dim());
  for (std::size_t i = 0; i < train_rows.size(); ++i)
    fit_rows.row(static_cast<Eigen::Index>(i)) = ts.bases.row(static_cast<Eigen::Index>(train_rows[i]));
  est.standardizer = opts.standardize ? Standardizer::fit(fit_rows) : Standardizer::identity(ts.dim());
  const Mat<T> columns = standardized_columns<T>(est.standardizer, ts.bases);

  std::vector<Eigen::Index> widths{ts.dim()};
  widths.insert(widths.end(), opts.hidden.begin(), opts.hidden.end());
  widths.push_back(1);
  auto params = MlpParams<T>::glorot(widths, rng);
  auto adam = AdamState<T>::for_params(params, opts.lr);

  // Holdout columns and a scorer shared by best-epoch tracking and the report.
  Mat<T> held(ts.dim(), static_cast<Eigen::Index>(holdout_rows.size()));
  for (std::size_t i = 0; i < holdout_rows.size(); ++i)
    held.col(static_cast<Eigen::Index>(i)) = columns.col(static_cast<Eigen::Index>(holdout_rows[i]));
  auto score = [&](const MlpParams<T>& p, std::size_t* correct) {
    const auto logits = mlp_logits(p, held);
    double total = 0.0;
    for (std::size_t i = 0; i < holdout_rows.size(); ++i) {
      const double lg = static_cast<double>(logits(static_cast<Eigen::Index>(i)));
      const int y = ts.labels[holdout_rows[i]];
      total += clamped_bce(lg, y);
      if (correct != nullptr && (lg > 0.0 ? 1 : 0) == y) ++*correct;
    }
    return total;
  };
  const bool track = opts.keep_best && !holdout_rows.empty();
  MlpParams<T> best = params;
  double best_loss = track ? score(params, nullptr) : 0.0;
  int since_best = 0;

  Mat<T> batch_inputs(ts.dim(), static_cast<Eigen::Index>(opts.batch));
  std::vector<int> batch_labels;
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    shuffle(train_rows);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < train_rows.size(); start += opts.batch) {
      const std::size_t stop = std::min(train_rows.size(), start + opts.batch);
      const auto m = static_cast<Eigen::Index>(stop - start);
      batch_inputs.resize(ts.dim(), m);
      batch_labels.resize(static_cast<std::size_t>(m));
      for (Eigen::Index i = 0; i < m; ++i) {
        const auto r = train_rows[start + static_cast<std::size_t>(i)];
        batch_inputs.col(i) = columns.col(static_cast<Eigen::Index>(r));
        batch_labels[static_cast<std::size_t>(i)] = ts.labels[r];
      }
      double batch_loss = 0.0;
      const auto grads = backward_standardized(params, batch_inputs, batch_labels, &batch_loss);
      adam_step(adam, params, grads, opts.weight_decay);
      epoch_loss += batch_loss;
    }
    if (!std::isfinite(epoch_loss) || !params.all_finite())
      throw NumericalFailure("training diverged at epoch " + std::to_string(epoch));
    est.report.epoch_loss.push_back(epoch_loss);
    if (track) {
      const double h = score(params, nullptr);
      if (h < best_loss) {
        best_loss = h;
        best = params;
        est.report.best_epoch = epoch;
        since_best = 0;
      } else if (opts.patience > 0 && ++since_best >= opts.patience) {
        break;
      }
    }
  }
  if (track) params = best;

  est.params = params.template cast<double>();
  if (!holdout_rows.empty()) {
    std::size_t correct = 0;
    est.report.holdout_loss = score(params, &correct);
    est.report.holdout_accuracy = static_cast<double>(correct) / static_cast<double>(holdout_rows.size());
  }
  return est;
}

}  // namespace detail

/// Fits the standardizer, initializes from `seed`, reshuffles every epoch
/// and runs one Adam step per minibatch.
inline SelectionProbEstimate train(const TrainingSet& ts, const TrainOptions& opts, RandomSeed seed) {
  return opts.single_precision ? detail::train_impl<float>(ts, opts, seed)
                               : detail::train_impl<double>(ts, opts, seed);
}

// Text format:
//   bbsi-mlp 1
//   <L+1 widths>
//   <d standardizer means>
//   <d standardizer sds>
//   per layer: weight rows (row-major), then the bias row
inline void SelectionProbEstimate::save(std::ostream& os) const {
  const auto w = params.widths();
  os << "bbsi-mlp 1\n";
  for (std::size_t i = 0; i < w.size(); ++i) os << (i ? " " : "") << w[i];
  os << '\n' << std::setprecision(17);
  auto row = [&](const auto& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? " " : "") << v(i);
    os << '\n';
  };
  row(standardizer.mean);
  row(standardizer.sd);
  for (std::size_t l = 0; l < params.layers(); ++l) {
    for (Eigen::Index r = 0; r < params.weights[l].rows(); ++r) row(params.weights[l].row(r));
    row(params.biases[l]);
  }
}

inline SelectionProbEstimate SelectionProbEstimate::load(std::istream& is) {
  std::string magic;
  int version = 0;
  is >> magic >> version;
  require(is && magic == "bbsi-mlp" && version == 1, "not a bbsi-mlp v1 model");
  std::string line;
  std::getline(is, line);
  std::getline(is, line);
  std::vector<Eigen::Index> widths;
  {
    std::istringstream ws(line);
    Eigen::Index v = 0;
    while (ws >> v) widths.push_back(v);
  }
  SelectionProbEstimate est;
  est.params = MlpParams<double>::zeros(widths);
  auto read = [&](auto&& dst) {
    for (Eigen::Index i = 0; i < dst.size(); ++i) {
      std::string tok;
      is >> tok;
      dst(i) = std::stod(tok);
    }
  };
  est.standardizer = Standardizer::identity(widths.front());
  read(est.standardizer.mean);
  read(est.standardizer.sd);
  for (std::size_t l = 0; l < est.params.layers(); ++l) {
    for (Eigen::Index r = 0; r < est.params.weights[l].rows(); ++r) read(est.params.weights[l].row(r));
    read(est.params.biases[l]);
  }
  require(static_cast<bool>(is), "truncated bbsi-mlp model");
  return est;
}

}  // namespace bbsi
