#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bbsi/harness/experiment.hpp"

namespace bbsi::harness {

/// One aggregated line of output.
struct SummaryRow {
  std::string experiment;
  std::string method;
  double scenario_param = 0.0;
  std::size_t replicates = 0;  ///< replicates contributing at least one interval
  double coverage = std::numeric_limits<double>::quiet_NaN();
  double coverage_lo = std::numeric_limits<double>::quiet_NaN();
  double coverage_hi = std::numeric_limits<double>::quiet_NaN();
  double mean_length = std::numeric_limits<double>::quiet_NaN();  ///< over finite-length intervals
  double length_lo = std::numeric_limits<double>::quiet_NaN();
  double length_hi = std::numeric_limits<double>::quiet_NaN();
  std::size_t clipped_count = 0;
  std::uint64_t seed = 0;
};

inline const std::vector<std::string>& summary_columns() {
  static const std::vector<std::string> cols = {
      "experiment", "method",    "scenario_param", "replicates",    "coverage", "coverage_lo",
      "coverage_hi", "mean_length", "length_lo",   "length_hi", "clipped_count", "seed"};
  return cols;
}

namespace detail {

struct Cluster {
  double covered = 0.0;
  double count = 0.0;
  double length_sum = 0.0;
  double length_count = 0.0;
};

inline double quantile_sorted(const std::vector<double>& v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(i);
  if (i + 1 >= v.size()) return v.back();
  return v[i] + frac * (v[i + 1] - v[i]);
}

}  // namespace detail

inline constexpr std::size_t kErrorBarResamples = 1000;

/// Coverage and mean length with 95% percentile intervals from resampling
/// replicates (all intervals of a replicate move together).
inline SummaryRow summarize(const MethodResult& m, const ExperimentConfig& cfg) {
  SummaryRow row;
  row.experiment = to_string(cfg.experiment);
  row.method = m.method;
  row.scenario_param = cfg.scenario_param();
  row.seed = cfg.seed;

  std::map<std::size_t, detail::Cluster> by_rep;
  for (const auto& r : m.records) {
    auto& c = by_rep[r.replicate];
    c.covered += r.covered ? 1.0 : 0.0;
    c.count += 1.0;
    if (std::isfinite(r.length())) {
      c.length_sum += r.length();
      c.length_count += 1.0;
    }
    if (r.clipped) ++row.clipped_count;
  }
  row.replicates = by_rep.size();
  if (by_rep.empty()) return row;

  std::vector<detail::Cluster> clusters;
  for (const auto& [k, c] : by_rep) clusters.push_back(c);
  auto stats = [](const std::vector<const detail::Cluster*>& cs) {
    double cov = 0.0, n = 0.0, len = 0.0, ln = 0.0;
    for (const auto* c : cs) {
      cov += c->covered;
      n += c->count;
      len += c->length_sum;
      ln += c->length_count;
    }
    return std::pair{cov / n, ln > 0.0 ? len / ln : std::numeric_limits<double>::quiet_NaN()};
  };
  std::vector<const detail::Cluster*> all;
  for (const auto& c : clusters) all.push_back(&c);
  std::tie(row.coverage, row.mean_length) = stats(all);

  CounterEngine rng(RandomSeed{cfg.seed, 0}.split(0xB0075ULL));
  std::vector<double> covs;
  std::vector<double> lens;
  std::vector<const detail::Cluster*> pick(clusters.size());
  for (std::size_t b = 0; b < kErrorBarResamples; ++b) {
    for (auto& p : pick) p = &clusters[rng.below(clusters.size())];
    const auto [c, l] = stats(pick);
    covs.push_back(c);
    if (std::isfinite(l)) lens.push_back(l);
  }
  std::sort(covs.begin(), covs.end());
  std::sort(lens.begin(), lens.end());
  row.coverage_lo = detail::quantile_sorted(covs, 0.025);
  row.coverage_hi = detail::quantile_sorted(covs, 0.975);
  row.length_lo = detail::quantile_sorted(lens, 0.025);
  row.length_hi = detail::quantile_sorted(lens, 0.975);
  return row;
}

inline std::vector<SummaryRow> summarize(const ExperimentResult& res) {
  std::vector<SummaryRow> rows;
  for (const auto& m : res.methods) rows.push_back(summarize(m, res.config));
  return rows;
}

/// Shortest round-trip decimal; "nan" / "inf" / "-inf" for non-finite values.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

inline void write_summary_csv(const std::vector<SummaryRow>& rows, std::ostream& os) {
  const auto& cols = summary_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
  for (const auto& r : rows) {
    os << r.experiment << ',' << r.method << ',' << format_number(r.scenario_param) << ',' << r.replicates << ','
       << format_number(r.coverage) << ',' << format_number(r.coverage_lo) << ',' << format_number(r.coverage_hi)
       << ',' << format_number(r.mean_length) << ',' << format_number(r.length_lo) << ','
       << format_number(r.length_hi) << ',' << r.clipped_count << ',' << r.seed << '\n';
  }
}

/// JSON array of objects with the CSV's keys; non-finite numbers become null.
inline void write_summary_json(const std::vector<SummaryRow>& rows, std::ostream& os) {
  auto num = [](double v) -> nlohmann::ordered_json {
    if (!std::isfinite(v)) return nullptr;
    return v;
  };
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json o;
    o["experiment"] = r.experiment;
    o["method"] = r.method;
    o["scenario_param"] = num(r.scenario_param);
    o["replicates"] = r.replicates;
    o["coverage"] = num(r.coverage);
    o["coverage_lo"] = num(r.coverage_lo);
    o["coverage_hi"] = num(r.coverage_hi);
    o["mean_length"] = num(r.mean_length);
    o["length_lo"] = num(r.length_lo);
    o["length_hi"] = num(r.length_hi);
    o["clipped_count"] = r.clipped_count;
    o["seed"] = r.seed;
    arr.push_back(std::move(o));
  }
  os << arr.dump(2) << '\n';
}

/// Per-interval records, one line each.
inline void write_records_csv(const ExperimentResult& res, std::ostream& os) {
  os << "experiment,method,replicate,target,lower,upper,truth,covered,length,clipped\n";
  for (const auto& m : res.methods) {
    for (const auto& r : m.records) {
      os << to_string(res.config.experiment) << ',' << m.method << ',' << r.replicate << ',' << r.target << ','
         << format_number(r.lower) << ',' << format_number(r.upper) << ',' << format_number(r.truth) << ','
         << (r.covered ? 1 : 0) << ',' << format_number(r.length()) << ',' << (r.clipped ? 1 : 0) << '\n';
    }
  }
}

struct DiagnosticRow {
  std::string method;
  std::size_t pivots = 0;
  std::size_t attempts = 0;
  double ks = 0.0;
};

inline void write_diagnostic(const DiagnosticResult& d, bool json, std::ostream& os) {
  const double param = d.config.scenario_param();
  const std::vector<DiagnosticRow> rows = {
      {"bb_marginalized", d.adjusted.accepted, d.adjusted.attempts, d.ks_adjusted},
      {"unadjusted", d.unadjusted.accepted, d.unadjusted.attempts, d.ks_unadjusted}};
  if (json) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
      nlohmann::ordered_json o;
      o["experiment"] = "diagnose";
      o["method"] = r.method;
      o["scenario_param"] = param;
      o["pivots"] = r.pivots;
      o["attempts"] = r.attempts;
      o["acceptance_rate"] = static_cast<double>(r.pivots) / static_cast<double>(std::max<std::size_t>(r.attempts, 1));
      o["ks"] = r.ks;
      o["ks_critical_95"] = 1.36 / std::sqrt(static_cast<double>(std::max<std::size_t>(r.pivots, 1)));
      o["seed"] = d.config.seed;
      arr.push_back(std::move(o));
    }
    os << arr.dump(2) << '\n';
    return;
  }
  os << "experiment,method,scenario_param,pivots,attempts,acceptance_rate,ks,ks_critical_95,seed\n";
  for (const auto& r : rows) {
    os << "diagnose," << r.method << ',' << format_number(param) << ',' << r.pivots << ',' << r.attempts << ','
       << format_number(static_cast<double>(r.pivots) / static_cast<double>(std::max<std::size_t>(r.attempts, 1)))
       << ',' << format_number(r.ks) << ','
       << format_number(1.36 / std::sqrt(static_cast<double>(std::max<std::size_t>(r.pivots, 1)))) << ','
       << d.config.seed << '\n';
  }
}

}  // namespace bbsi::harness
