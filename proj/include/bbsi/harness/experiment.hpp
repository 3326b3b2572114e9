#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bbsi/analytic.hpp"
#include "bbsi/diagnostics.hpp"
#include "bbsi/harness/scenarios.hpp"
#include "bbsi/normal.hpp"
#include "bbsi/pipeline.hpp"
#include "bbsi/selectors/bh.hpp"
#include "bbsi/selectors/dtl.hpp"
#include "bbsi/selectors/lasso.hpp"
#include "bbsi/selectors/repeated.hpp"

namespace bbsi::harness {

enum class Experiment { dtl, lasso, bh, repeated, diagnose };

inline const char* to_string(Experiment e) {
  switch (e) {
    case Experiment::dtl: return "dtl";
    case Experiment::lasso: return "lasso";
    case Experiment::bh: return "bh";
    case Experiment::repeated: return "repeated";
    case Experiment::diagnose: return "diagnose";
  }
  return "?";
}

enum class Scale { desk, paper };

struct ExperimentConfig {
  Experiment experiment = Experiment::dtl;
  std::size_t replicates = 100;
  std::size_t boot = 1000;
  int epochs = 500;
  std::size_t batch = 200;
  std::vector<Eigen::Index> hidden = {64, 64, 64};
  double lr = 1e-3;
  bool single_precision = false;
  double weight_decay = 10.0;
  double holdout = 0.0;  ///< holdout fraction; > 0 keeps the best holdout epoch
  int patience = 0;
  std::size_t grid_points = 100;
  double grid_span = 10.0;
  double alpha = 0.1;
  std::uint64_t seed = 1;
  /// Fresh datasets drawn per replicate before giving up on a selection.
  std::size_t max_redraws = 1000;

  DtlScenario dtl;
  LassoScenario lasso;
  BhScenario bh;
  RepeatedScenario repeated;
  std::size_t pivots = 300;  ///< accepted pivots for the diagnostic

  void validate() const {
    require(replicates >= 1, "replicates must be at least 1");
    require(alpha > 0.0 && alpha < 1.0, "alpha must be in (0, 1)");
    require(boot >= 2, "boot must be at least 2");
    require(epochs >= 0 && batch >= 1, "epochs must be >= 0 and batch >= 1");
    require(lr > 0.0, "learning rate must be positive");
    require(weight_decay >= 0.0 && weight_decay * lr < 1.0, "weight decay must be in [0, 1 / lr)");
    require(holdout >= 0.0 && holdout < 1.0 && patience >= 0, "holdout must be in [0, 1) and patience >= 0");
    require(grid_points >= 2 && grid_span > 0.0, "grid needs >= 2 points and a positive span");
    for (auto w : hidden) require(w >= 1, "hidden widths must be positive");
    require(dtl.k >= 2 && dtl.n1 >= 2 && dtl.n2 >= 2, "dtl needs k >= 2, n1 >= 2, n2 >= 2");
    require(lasso.n >= 4 && lasso.p >= 1 && lasso.fraction > 0.0 && lasso.fraction < 1.0,
            "lasso needs n >= 4, p >= 1 and a fraction in (0, 1)");
    require(lasso.rho > -1.0 && lasso.rho < 1.0 && lasso.c0 >= 0.0, "lasso needs |rho| < 1 and c0 >= 0");
    require(bh.k >= 1 && bh.n >= 1 && bh.q > 0.0 && bh.q < 1.0, "bh needs k, n >= 1 and q in (0, 1)");
    require(repeated.init >= 2 && repeated.step >= 1 && repeated.max_stages >= 1,
            "repeated needs init >= 2, step >= 1, max_stages >= 1");
    require(repeated.alpha0 > 0.0 && repeated.alpha0 < 1.0, "alpha0 must be in (0, 1)");
    require(max_redraws >= 1, "max_redraws must be at least 1");
  }

  [[nodiscard]] double scenario_param() const {
    switch (experiment) {
      case Experiment::dtl:
      case Experiment::diagnose: return static_cast<double>(dtl.n1);
      case Experiment::lasso: return lasso.c0;
      case Experiment::bh: return bh.theta0;
      case Experiment::repeated: return repeated.effect;
    }
    return 0.0;
  }

  [[nodiscard]] PipelineOptions pipeline() const {
    PipelineOptions p;
    p.boot = boot;
    p.train.hidden = hidden;
    p.train.epochs = epochs;
    p.train.batch = batch;
    p.train.lr = lr;
    p.train.single_precision = single_precision;
    p.train.weight_decay = weight_decay;
    p.train.holdout_fraction = holdout;
    p.train.keep_best = holdout > 0.0;
    p.train.patience = patience;
    p.law.points = grid_points;
    p.law.span = grid_span;
    p.alpha = alpha;
    return p;
  }
};

inline void apply_scale(ExperimentConfig& cfg, Scale scale) {
  if (scale == Scale::paper) {
    cfg.replicates = 200;
    cfg.boot = 3000;
    cfg.epochs = 3000;
    cfg.hidden = {200, 200, 200};
  } else {
    cfg.replicates = 100;
    cfg.boot = 1000;
    cfg.epochs = 500;
    cfg.hidden = {64, 64, 64};
  }
}

/// One interval for one target in one replicate.
struct IntervalRecord {
  std::size_t replicate = 0;
  std::size_t target = 0;  ///< coordinate / hypothesis index within the replicate
  double lower = 0.0;
  double upper = 0.0;
  double truth = 0.0;
  bool covered = false;
  bool clipped = false;

  [[nodiscard]] double length() const { return upper - lower; }
};

inline IntervalRecord make_record(std::size_t replicate, std::size_t target, double lower, double upper,
                                  double truth, bool clipped) {
  return {replicate, target, lower, upper, truth, lower <= truth && truth <= upper,
          clipped || !std::isfinite(lower) || !std::isfinite(upper)};
}

struct MethodResult {
  std::string method;
  std::vector<IntervalRecord> records;
  std::size_t failures = 0;  ///< replicates where this method raised an error
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<MethodResult> methods;
  std::size_t redraws = 0;  ///< datasets discarded because nothing was selected
  std::size_t unselected_replicates = 0;  ///< replicates that never selected within max_redraws
};

using ProgressFn = std::function<void(const std::string&)>;

namespace detail {

inline constexpr std::uint64_t kPipelineStream = 1ULL << 40;

inline std::pair<double, double> wald(double center, double se, double alpha) {
  const double z = normal::quantile(1.0 - alpha / 2.0);
  return {center - z * se, center + z * se};
}

struct Replicate {
  std::size_t index;
  RandomSeed seed;

  [[nodiscard]] RandomSeed data(std::size_t attempt) const { return seed.split(2 * attempt); }
  [[nodiscard]] RandomSeed omega(std::size_t attempt) const { return seed.split(2 * attempt + 1); }
  [[nodiscard]] RandomSeed pipeline() const { return seed.split(kPipelineStream); }
};

class Recorder {
 public:
  explicit Recorder(std::vector<MethodResult>& methods) : methods_(methods) {}

  MethodResult& operator[](const std::string& name) {
    for (auto& m : methods_)
      if (m.method == name) return m;
    methods_.push_back({name, {}, 0});
    return methods_.back();
  }

 private:
  std::vector<MethodResult>& methods_;
};

template <class F>
void guarded(MethodResult& m, F&& f) {
  try {
    f();
  } catch (const std::exception&) {
    ++m.failures;
  }
}

template <Selector S>
void record_bb(MethodResult& m, const Replicate& rep, const Dataset& data, const S& sel, const OutputOf<S>& obs,
               const std::vector<double>& truths, const PipelineOptions& popts) {
  guarded(m, [&] {
    const auto fit = fit_selection(data, sel, obs, popts, rep.pipeline());
    std::vector<IntervalRecord> rows;
    for (Eigen::Index j = 0; j < obs.theta_hat.size(); ++j) {
      const auto inf = infer_coordinate(fit.log_pi(), fit.moments, obs.theta_hat, obs.basis, j, popts);
      rows.push_back(make_record(rep.index, static_cast<std::size_t>(j), inf.ci.lower, inf.ci.upper,
                                 truths[static_cast<std::size_t>(j)], inf.ci.clipped()));
    }
    m.records.insert(m.records.end(), rows.begin(), rows.end());
  });
}

inline void run_dtl_replicate(const ExperimentConfig& cfg, const Replicate& rep, Recorder& rec) {
  const auto& sc = cfg.dtl;
  const auto draw = simulate_dtl(sc, rep.data(0));
  const Dataset data{draw.data};
  CounterEngine omega(rep.omega(0));
  const DtlSelector plain{false, draw.winner};
  const DtlSelector marg{true, draw.winner};
  const auto obs = plain.run(data, omega, nullptr);
  const auto obs_m = marg.run(data, omega, nullptr);
  const double theta_hat = obs.theta_hat(0);
  const double truth = sc.theta;

  std::vector<double> pooled = draw.data.groups[draw.winner];
  const auto& second = draw.data.groups.back();
  pooled.insert(pooled.end(), second.begin(), second.end());
  const double s_hat = sample_sd(pooled);
  const auto n = static_cast<double>(sc.n1 + sc.n2);

  auto& naive = rec["naive"];
  guarded(naive, [&] {
    const auto [lo, hi] = wald(theta_hat, s_hat / std::sqrt(n), cfg.alpha);
    naive.records.push_back(make_record(rep.index, 0, lo, hi, truth, false));
  });
  auto& split = rec["splitting"];
  guarded(split, [&] {
    const auto [lo, hi] = wald(mean(second), s_hat / std::sqrt(static_cast<double>(sc.n2)), cfg.alpha);
    split.records.push_back(make_record(rep.index, 0, lo, hi, truth, false));
  });

  // Both learned variants share the pipeline seed, hence the same resamples.
  const auto popts = cfg.pipeline();
  record_bb(rec["bb"], rep, data, plain, obs, {truth}, popts);
  record_bb(rec["bb_marginalized"], rep, data, marg, obs_m, {truth}, popts);

  const auto inst = DtlInstance::from(obs.aux, theta_hat, s_hat * s_hat);
  auto& tn = rec["analytic_tn"];
  guarded(tn, [&] {
    const auto ci = tn_ci(inst, cfg.alpha);
    tn.records.push_back(make_record(rep.index, 0, ci.lower, ci.upper, truth, false));
  });
  auto& mg = rec["analytic_marginal"];
  guarded(mg, [&] {
    const auto ci = marginal_ci(inst, cfg.alpha);
    mg.records.push_back(make_record(rep.index, 0, ci.lower, ci.upper, truth, false));
  });
}

/// OLS on the listed rows and columns with the classical covariance.
inline void ols_wald(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const std::vector<std::size_t>& rows,
                     const std::vector<std::size_t>& cols, const std::vector<double>& truths, double alpha,
                     std::size_t replicate, MethodResult& m) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto p = static_cast<Eigen::Index>(cols.size());
  require(n > p + 1, "too few rows for OLS inference");
  Eigen::MatrixXd xm(n, p);
  Eigen::VectorXd ym(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)]);
    ym(i) = y(r);
    for (Eigen::Index j = 0; j < p; ++j) xm(i, j) = x(r, static_cast<Eigen::Index>(cols[static_cast<std::size_t>(j)]));
  }
  const Eigen::MatrixXd gram = xm.transpose() * xm;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  require(ldlt.info() == Eigen::Success, "singular design in OLS inference");
  const Eigen::VectorXd beta = ldlt.solve(xm.transpose() * ym);
  const double s2 = (ym - xm * beta).squaredNorm() / static_cast<double>(n - p);
  const Eigen::MatrixXd cov = s2 * ldlt.solve(Eigen::MatrixXd::Identity(p, p));
  for (Eigen::Index j = 0; j < p; ++j) {
    const auto [lo, hi] = wald(beta(j), std::sqrt(cov(j, j)), alpha);
    m.records.push_back(make_record(replicate, static_cast<std::size_t>(j), lo, hi,
                                    truths[static_cast<std::size_t>(j)], false));
  }
}

inline bool run_lasso_replicate(const ExperimentConfig& cfg, const Replicate& rep, Recorder& rec,
                                std::size_t& redraws) {
  const auto& sc = cfg.lasso;
  const CarveSelector sel{sc.fraction, sc.lambda()};
  const Eigen::MatrixXd sigma_x = sc.covariance();
  for (std::size_t attempt = 0; attempt < cfg.max_redraws; ++attempt) {
    const auto draw = simulate_lasso(sc, rep.data(attempt));
    const Dataset data{draw.data};
    CounterEngine omega(rep.omega(attempt));
    const auto obs = sel.run(data, omega, nullptr);
    if (!obs.selected()) {
      ++redraws;
      continue;
    }
    const auto& support = std::get<Support>(*obs.model).indices;
    const Eigen::VectorXd target = projection_target(sigma_x, draw.beta, support);
    const std::vector<double> truths(target.data(), target.data() + target.size());

    std::vector<std::size_t> all(sc.n);
    for (std::size_t i = 0; i < sc.n; ++i) all[i] = i;
    std::vector<std::size_t> holdout;
    std::set_difference(all.begin(), all.end(), obs.aux.subset.begin(), obs.aux.subset.end(),
                        std::back_inserter(holdout));

    auto& naive = rec["naive"];
    guarded(naive, [&] { ols_wald(draw.data.x, draw.data.y, all, support, truths, cfg.alpha, rep.index, naive); });
    auto& split = rec["splitting"];
    guarded(split, [&] { ols_wald(draw.data.x, draw.data.y, holdout, support, truths, cfg.alpha, rep.index, split); });
    record_bb(rec["bb"], rep, data, sel, obs, truths, cfg.pipeline());
    return true;
  }
  return false;
}

inline bool run_bh_replicate(const ExperimentConfig& cfg, const Replicate& rep, Recorder& rec,
                             std::size_t& redraws) {
  const auto& sc = cfg.bh;
  const BhSelector sel{sc.q, 1.0};
  const auto means = sc.means();
  for (std::size_t attempt = 0; attempt < cfg.max_redraws; ++attempt) {
    const Dataset data{simulate_bh(sc, rep.data(attempt))};
    CounterEngine omega(rep.omega(attempt));
    const auto obs = sel.run(data, omega, nullptr);
    if (!obs.selected()) {
      ++redraws;
      continue;
    }
    const auto& rejected = std::get<RejectionSet>(*obs.model).indices;
    std::vector<double> truths;
    for (auto k : rejected) truths.push_back(means[k]);

    auto& naive = rec["naive"];
    guarded(naive, [&] {
      for (std::size_t j = 0; j < rejected.size(); ++j) {
        const auto [lo, hi] = wald(obs.theta_hat(static_cast<Eigen::Index>(j)),
                                   1.0 / std::sqrt(static_cast<double>(sc.n)), cfg.alpha);
        naive.records.push_back(make_record(rep.index, j, lo, hi, truths[j], false));
      }
    });
    record_bb(rec["bb"], rep, data, sel, obs, truths, cfg.pipeline());
    return true;
  }
  return false;
}

inline bool run_repeated_replicate(const ExperimentConfig& cfg, const Replicate& rep, Recorder& rec,
                                   std::size_t& redraws) {
  const auto& sc = cfg.repeated;
  const RepeatedTestSelector sel{sc.alpha0, sc.max_stages};
  for (std::size_t attempt = 0; attempt < cfg.max_redraws; ++attempt) {
    const auto full = simulate_repeated(sc, rep.data(attempt));
    CounterEngine omega(rep.omega(attempt));
    const auto first = sel.run(Dataset{full}, omega, nullptr);
    if (!first.selected()) {
      ++redraws;
      continue;
    }
    const std::size_t stages = std::get<StoppedAt>(*first.model).stage;
    const Dataset data{truncate_stages(full, stages)};
    const auto obs = sel.run(data, omega, nullptr);
    const double truth = sc.effect;

    auto& naive = rec["naive"];
    guarded(naive, [&] {
      const auto& s = std::get<StagedTwoSample>(data);
      std::vector<double> a;
      std::vector<double> b;
      for (std::size_t t = 0; t < stages; ++t) {
        a.insert(a.end(), s.arm_a[t].begin(), s.arm_a[t].end());
        b.insert(b.end(), s.arm_b[t].begin(), s.arm_b[t].end());
      }
      const auto na = static_cast<double>(a.size());
      const auto nb = static_cast<double>(b.size());
      const double sa = sample_sd(a);
      const double sb = sample_sd(b);
      const double pooled = ((na - 1.0) * sa * sa + (nb - 1.0) * sb * sb) / (na + nb - 2.0);
      const auto [lo, hi] = wald(obs.theta_hat(0), std::sqrt(pooled * (1.0 / na + 1.0 / nb)), cfg.alpha);
      naive.records.push_back(make_record(rep.index, 0, lo, hi, truth, false));
    });
    record_bb(rec["bb"], rep, data, sel, obs, {truth}, cfg.pipeline());
    return true;
  }
  return false;
}

}  // namespace detail

inline std::vector<std::string> method_names(Experiment e) {
  switch (e) {
    case Experiment::dtl:
      return {"naive", "splitting", "bb", "bb_marginalized", "analytic_tn", "analytic_marginal"};
    case Experiment::lasso: return {"naive", "splitting", "bb"};
    case Experiment::bh:
    case Experiment::repeated: return {"naive", "bb"};
    case Experiment::diagnose: return {"bb_marginalized", "unadjusted"};
  }
  return {};
}

/// Simulates `replicates` datasets under the configured scenario and
/// records every method's intervals. Replicate r draws from
/// RandomSeed{seed, 0}.split(r), so results do not depend on run order.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress = {}) {
  cfg.validate();
  require(cfg.experiment != Experiment::diagnose, "use run_diagnostic for the diagnose experiment");
  ExperimentResult out;
  out.config = cfg;
  for (const auto& name : method_names(cfg.experiment)) out.methods.push_back({name, {}, 0});
  detail::Recorder rec(out.methods);
  const RandomSeed base{cfg.seed, 0};

  for (std::size_t r = 0; r < cfg.replicates; ++r) {
    const detail::Replicate rep{r, base.split(r)};
    bool selected = true;
    switch (cfg.experiment) {
      case Experiment::dtl: detail::run_dtl_replicate(cfg, rep, rec); break;
      case Experiment::lasso: selected = detail::run_lasso_replicate(cfg, rep, rec, out.redraws); break;
      case Experiment::bh: selected = detail::run_bh_replicate(cfg, rep, rec, out.redraws); break;
      case Experiment::repeated: selected = detail::run_repeated_replicate(cfg, rep, rec, out.redraws); break;
      case Experiment::diagnose: break;
    }
    if (!selected) ++out.unselected_replicates;
    if (progress) progress("replicate " + std::to_string(r + 1) + "/" + std::to_string(cfg.replicates));
  }
  return out;
}

struct DiagnosticResult {
  ExperimentConfig config;
  PivotSample adjusted;    ///< learned pi_hat
  PivotSample unadjusted;  ///< pi_hat == 1
  double ks_adjusted = 0.0;
  double ks_unadjusted = 0.0;
};

/// Bootstrap pivots for one drop-the-losers instance under the
/// marginalized pipeline, with the learned and with a constant pi_hat. Both
/// runs consume the same bootstrap draws.
inline DiagnosticResult run_diagnostic(const ExperimentConfig& cfg, const ProgressFn& progress = {}) {
  cfg.validate();
  const detail::Replicate rep{0, RandomSeed{cfg.seed, 0}.split(0)};
  const auto draw = simulate_dtl(cfg.dtl, rep.data(0));
  const Dataset data{draw.data};
  CounterEngine omega(rep.omega(0));
  const DtlSelector marg{true, draw.winner};
  const auto obs = marg.run(data, omega, nullptr);
  const auto popts = cfg.pipeline();
  const auto fit = fit_selection(data, marg, obs, popts, rep.pipeline());
  if (progress) progress("selection probability trained");
  const auto dec = decompose(fit.moments, obs.theta_hat, obs.basis);

  PivotOptions po;
  po.target = cfg.pivots;
  po.law = popts.law;
  const RandomSeed pivot_seed = rep.seed.split(detail::kPipelineStream + 1);
  DiagnosticResult out;
  out.config = cfg;
  out.adjusted = pivot_sample(data, marg, obs, fit.log_pi(), dec, po, pivot_seed);
  out.unadjusted = pivot_sample(data, marg, obs, unit_log_pi, dec, po, pivot_seed);
  out.ks_adjusted = ks_uniform(out.adjusted.values);
  out.ks_unadjusted = ks_uniform(out.unadjusted.values);
  return out;
}

}  // namespace bbsi::harness
