// bbsi: run the selective-inference simulation experiments from the command line.
//
//   bbsi dtl --replicates 20 --out dtl.csv
//   bbsi bh --theta0 0.2 --format json
//   bbsi diagnose --pivots 300 --pivots-out diag
//
// Options may also come from a key=value file given with --config; command
// line flags win over file values.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bbsi/harness/experiment.hpp"
#include "bbsi/harness/report.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Flags {
  std::optional<std::size_t> replicates, boot, batch, grid_points, max_redraws, pivots;
  std::optional<int> epochs;
  std::optional<double> alpha, lr, grid_span, weight_decay, holdout;
  std::optional<int> patience;
  std::optional<std::uint64_t> seed;
  std::optional<std::vector<Eigen::Index>> hidden;
  std::string scale = "desk";
  std::string format = "csv";
  std::string out;
  std::string records;
  std::string pivots_out;
  bool single_precision = false;
  bool quiet = false;

  std::optional<std::size_t> k, n1, n2, n, p, sparsity, init, step, max_stages;
  std::optional<double> theta, c0, rho, fraction, theta0, q, alpha0, effect;
};

template <class T>
void set_if(const std::optional<T>& v, T& target) {
  if (v) target = *v;
}

bbsi::harness::ExperimentConfig make_config(bbsi::harness::Experiment e, const Flags& f) {
  using bbsi::harness::Experiment;
  bbsi::harness::ExperimentConfig cfg;
  cfg.experiment = e;
  if (f.scale != "desk" && f.scale != "paper") throw bbsi::InvalidInput("--scale must be desk or paper");
  bbsi::harness::apply_scale(cfg, f.scale == "paper" ? bbsi::harness::Scale::paper : bbsi::harness::Scale::desk);

  set_if(f.replicates, cfg.replicates);
  set_if(f.boot, cfg.boot);
  set_if(f.epochs, cfg.epochs);
  set_if(f.batch, cfg.batch);
  set_if(f.alpha, cfg.alpha);
  set_if(f.lr, cfg.lr);
  set_if(f.grid_points, cfg.grid_points);
  set_if(f.grid_span, cfg.grid_span);
  set_if(f.seed, cfg.seed);
  set_if(f.hidden, cfg.hidden);
  set_if(f.max_redraws, cfg.max_redraws);
  set_if(f.pivots, cfg.pivots);
  set_if(f.weight_decay, cfg.weight_decay);
  set_if(f.holdout, cfg.holdout);
  set_if(f.patience, cfg.patience);
  cfg.single_precision = f.single_precision;

  // --k and --n name the group count and per-group / total sample size of
  // whichever experiment runs.
  if (e == Experiment::bh) {
    set_if(f.k, cfg.bh.k);
    set_if(f.n, cfg.bh.n);
  } else {
    set_if(f.k, cfg.dtl.k);
    set_if(f.n, cfg.lasso.n);
  }
  set_if(f.n1, cfg.dtl.n1);
  cfg.dtl.n2 = f.n2 ? *f.n2 : cfg.dtl.n1 / 4;
  set_if(f.theta, cfg.dtl.theta);
  set_if(f.p, cfg.lasso.p);
  set_if(f.sparsity, cfg.lasso.sparsity);
  set_if(f.c0, cfg.lasso.c0);
  set_if(f.rho, cfg.lasso.rho);
  set_if(f.fraction, cfg.lasso.fraction);
  set_if(f.theta0, cfg.bh.theta0);
  set_if(f.q, cfg.bh.q);
  set_if(f.init, cfg.repeated.init);
  set_if(f.step, cfg.repeated.step);
  set_if(f.max_stages, cfg.repeated.max_stages);
  set_if(f.alpha0, cfg.repeated.alpha0);
  set_if(f.effect, cfg.repeated.effect);
  if (f.format != "csv" && f.format != "json") throw bbsi::InvalidInput("--format must be csv or json");
  cfg.validate();
  return cfg;
}

/// Writes through a string so a failed run never leaves a partial file.
void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os << text;
  if (!os) throw std::runtime_error("failed writing " + path);
}

}  // namespace

int main(int argc, char** argv) {
  using bbsi::harness::Experiment;
  CLI::App app{"Black-box selective inference experiments"};
  app.fallthrough();
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from a key=value file");

  Flags f;
  app.add_option("--replicates", f.replicates, "Simulated datasets per experiment");
  app.add_option("--boot", f.boot, "Bootstrap replicates B for training");
  app.add_option("--epochs", f.epochs, "Training epochs");
  app.add_option("--batch", f.batch, "Minibatch size");
  app.add_option("--alpha", f.alpha, "Miscoverage level (intervals are 1 - alpha)");
  app.add_option("--lr", f.lr, "Adam learning rate");
  app.add_option("--hidden", f.hidden, "Hidden layer widths, e.g. 64,64,64")->delimiter(',');
  app.add_option("--weight-decay", f.weight_decay, "Decoupled weight decay on network weights");
  app.add_option("--holdout", f.holdout, "Training rows held out to pick the best epoch (0 = none)");
  app.add_option("--patience", f.patience, "Stop after this many epochs without holdout improvement (0 = never)");
  app.add_option("--grid-points", f.grid_points, "Grid size of the discrete law");
  app.add_option("--grid-span", f.grid_span, "Grid half-width in estimated standard deviations");
  app.add_option("--seed", f.seed, "Base random seed");
  app.add_option("--scale", f.scale, "Preset sizes: desk or paper")->check(CLI::IsMember({"desk", "paper"}));
  app.add_option("--out", f.out, "Output path (default stdout)");
  app.add_option("--format", f.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--records", f.records, "Also write per-interval records as CSV to this path");
  app.add_option("--max-redraws", f.max_redraws, "Datasets drawn per replicate until something is selected");
  app.add_flag("--single-precision", f.single_precision, "Train networks in float");
  app.add_flag("--quiet", f.quiet, "No progress on stderr");

  app.add_option("--k", f.k, "Number of groups (dtl, bh)");
  app.add_option("--n1", f.n1, "First-stage size per arm (dtl)");
  app.add_option("--n2", f.n2, "Second-stage size (dtl; default n1/4)");
  app.add_option("--theta", f.theta, "Common arm mean (dtl)");
  app.add_option("--n", f.n, "Sample size (lasso rows, bh observations per group)");
  app.add_option("--p", f.p, "Number of features (lasso)");
  app.add_option("--sparsity", f.sparsity, "Nonzero coefficients (lasso)");
  app.add_option("--c0", f.c0, "Signal strength (lasso)");
  app.add_option("--rho", f.rho, "AR correlation of the design (lasso)");
  app.add_option("--fraction", f.fraction, "Selection fraction for carving (lasso)");
  app.add_option("--theta0", f.theta0, "Signal strength (bh)");
  app.add_option("--q", f.q, "Target FDR (bh)");
  app.add_option("--init", f.init, "Initial sample size per arm (repeated)");
  app.add_option("--step", f.step, "Added observations per arm per stage (repeated)");
  app.add_option("--max-stages", f.max_stages, "Stage limit (repeated)");
  app.add_option("--alpha0", f.alpha0, "Per-look test level (repeated)");
  app.add_option("--effect", f.effect, "Mean difference mu1 - mu2 (repeated)");
  app.add_option("--pivots", f.pivots, "Accepted pivots (diagnose)");
  app.add_option("--pivots-out", f.pivots_out, "Prefix for pivot and ECDF CSV files (diagnose)");

  std::vector<std::pair<CLI::App*, Experiment>> subs = {
      {app.add_subcommand("dtl", "Drop-the-losers two-stage trial"), Experiment::dtl},
      {app.add_subcommand("lasso", "Lasso with data carving"), Experiment::lasso},
      {app.add_subcommand("bh", "Inference after Benjamini-Hochberg"), Experiment::bh},
      {app.add_subcommand("repeated", "Repeated significance testing"), Experiment::repeated},
      {app.add_subcommand("diagnose", "Bootstrap pivot check of the learned law (drop-the-losers)"),
       Experiment::diagnose},
  };

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  Experiment experiment = Experiment::dtl;
  for (const auto& [sub, e] : subs)
    if (sub->parsed()) experiment = e;

  bbsi::harness::ExperimentConfig cfg;
  try {
    cfg = make_config(experiment, f);
  } catch (const std::exception& e) {
    std::cerr << "bbsi: configuration error: " << e.what() << '\n';
    return kExitConfig;
  }

  bbsi::harness::ProgressFn progress;
  if (!f.quiet) progress = [](const std::string& msg) { std::cerr << "bbsi: " << msg << '\n'; };

  try {
    std::ostringstream text;
    if (experiment == Experiment::diagnose) {
      const auto d = bbsi::harness::run_diagnostic(cfg, progress);
      bbsi::harness::write_diagnostic(d, f.format == "json", text);
      if (!f.pivots_out.empty()) {
        const std::pair<const char*, const bbsi::PivotSample*> parts[] = {{"adjusted", &d.adjusted},
                                                                         {"unadjusted", &d.unadjusted}};
        for (const auto& [name, sample] : parts) {
          std::ostringstream pv;
          std::ostringstream ec;
          bbsi::write_pivots_csv(*sample, pv);
          bbsi::write_ecdf_csv(*sample, ec);
          write_output(f.pivots_out + "_" + name + "_pivots.csv", pv.str());
          write_output(f.pivots_out + "_" + name + "_ecdf.csv", ec.str());
        }
      }
    } else {
      const auto res = bbsi::harness::run_experiment(cfg, progress);
      const auto rows = bbsi::harness::summarize(res);
      if (f.format == "json") bbsi::harness::write_summary_json(rows, text);
      else bbsi::harness::write_summary_csv(rows, text);
      if (!f.records.empty()) {
        std::ostringstream rec;
        bbsi::harness::write_records_csv(res, rec);
        write_output(f.records, rec.str());
      }
      if (progress && (res.redraws > 0 || res.unselected_replicates > 0)) {
        progress("datasets redrawn after empty selections: " + std::to_string(res.redraws) +
                 ", replicates without a selection: " + std::to_string(res.unselected_replicates));
      }
      for (const auto& m : res.methods)
        if (progress && m.failures > 0)
          progress(m.method + ": " + std::to_string(m.failures) + " replicate(s) failed and were excluded");
    }
    write_output(f.out, text.str());
  } catch (const std::exception& e) {
    std::cerr << "bbsi: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
