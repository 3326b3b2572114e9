#pragma once

#include <algorithm>
#include <cstddef>
#include <iomanip>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bbsi/dataset.hpp"
#include "bbsi/errors.hpp"
#include "bbsi/selectors/selector.hpp"

namespace bbsi {

/// Basis vectors (one per row) with binary same-model labels.
struct TrainingSet {
  Eigen::MatrixXd bases;  // rows x d
  std::vector<int> labels;

  [[nodiscard]] Eigen::Index dim() const { return bases.cols(); }
  [[nodiscard]] std::size_t size() const { return labels.size(); }
  [[nodiscard]] std::size_t count(int label) const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
  }
};

/// Everything one bootstrap pass produces: the training rows plus the
/// (theta_hat*, basis*) replicates used for moment estimation.
struct BootstrapSample {
  TrainingSet training;
  Eigen::MatrixXd replicates;  // successful replicates x (s + d)
  std::size_t requested = 0;
  std::size_t failed = 0;  ///< replicates skipped because the selector threw
};

/// Seeds used for replicate i: the resample and the selector's own noise
/// come from disjoint sub-streams.
struct ReplicateSeeds {
  RandomSeed data;
  RandomSeed omega;
};

inline ReplicateSeeds replicate_seeds(RandomSeed base, std::size_t i) {
  return {base.split(2 * i), base.split(2 * i + 1)};
}

/// Bootstraps `data` B times, reruns the selector on each replicate and
/// labels it 1 iff the selected model equals the observed one.
///
/// Bases are re-centered by the observed v_hat (basis* + v_hat), so the
/// learned function targets the marginalized selection probability at the
/// original scale. The observed (basis, 1) row is appended last.
template <Selector S>
BootstrapSample build_training_set(const Dataset& data, const S& selector, const OutputOf<S>& observed,
                                   std::size_t replicates, RandomSeed seed) {
  require(observed.model.has_value(), "observed run selected nothing");
  const Eigen::Index d = observed.basis.size();
  const Eigen::Index s = observed.theta_hat.size();
  require(observed.v_hat.size() == d, "observed v_hat dimension differs from the basis");

  struct Row {
    bool ok = false;
    int label = 0;
    Eigen::VectorXd theta;
    Eigen::VectorXd basis;
  };
  std::vector<Row> rows(replicates);

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(replicates); ++i) {
    const auto seeds = replicate_seeds(seed, static_cast<std::size_t>(i));
    auto& row = rows[static_cast<std::size_t>(i)];
    try {
      const Dataset boot = resample(data, seeds.data);
      CounterEngine omega(seeds.omega);
      auto out = selector.run(boot, omega, &*observed.model);
      if (out.basis.size() != d || out.theta_hat.size() != s || !out.basis.allFinite() ||
          !out.theta_hat.allFinite()) {
        continue;
      }
      row.label = (out.model && *out.model == *observed.model) ? 1 : 0;
      row.theta = std::move(out.theta_hat);
      row.basis = out.basis + observed.v_hat;
      row.ok = true;
    } catch (const std::exception&) {
      row.ok = false;
    }
  }

  BootstrapSample result;
  result.requested = replicates;
  std::size_t good = 0;
  for (const auto& r : rows) good += r.ok ? 1 : 0;
  result.failed = replicates - good;

  result.training.bases.resize(static_cast<Eigen::Index>(good + 1), d);
  result.training.labels.reserve(good + 1);
  result.replicates.resize(static_cast<Eigen::Index>(good), s + d);
  Eigen::Index k = 0;
  for (const auto& r : rows) {
    if (!r.ok) continue;
    result.training.bases.row(k) = r.basis.transpose();
    result.training.labels.push_back(r.label);
    result.replicates.row(k).head(s) = r.theta.transpose();
    result.replicates.row(k).tail(d) = r.basis.transpose();
    ++k;
  }
  result.training.bases.row(k) = observed.basis.transpose();
  result.training.labels.push_back(1);
  return result;
}

struct BalanceResult {
  TrainingSet set;
  bool single_class = false;  ///< one label absent; inference degenerates toward unadjusted
};

/// If the minority label makes up less than `trigger` of the rows, append
/// whole passes over the minority rows (in order) until it reaches
/// `min_fraction`.
inline BalanceResult balance(const TrainingSet& ts, double min_fraction = 0.2, double trigger = 0.1) {
  require(ts.size() > 0, "cannot balance an empty training set");
  require(min_fraction > 0.0 && min_fraction <= 0.5, "balance fraction must be in (0, 0.5]");
  BalanceResult out{ts, false};
  const std::size_t ones = ts.count(1);
  const std::size_t zeros = ts.size() - ones;
  if (ones == 0 || zeros == 0) {
    out.single_class = true;
    return out;
  }
  const int minority = ones < zeros ? 1 : 0;
  const std::size_t m = std::min(ones, zeros);
  const auto total = static_cast<double>(ts.size());
  if (static_cast<double>(m) / total >= trigger) return out;

  std::vector<Eigen::Index> minority_rows;
  for (std::size_t i = 0; i < ts.size(); ++i)
    if (ts.labels[i] == minority) minority_rows.push_back(static_cast<Eigen::Index>(i));

  std::size_t passes = 0;
  while (static_cast<double>(m * (passes + 1)) / (total + static_cast<double>(m * passes)) < min_fraction)
    ++passes;

  const auto extra = static_cast<Eigen::Index>(m * passes);
  out.set.bases.conservativeResize(ts.bases.rows() + extra, Eigen::NoChange);
  Eigen::Index r = ts.bases.rows();
  for (std::size_t p = 0; p < passes; ++p) {
    for (auto i : minority_rows) {
      out.set.bases.row(r++) = ts.bases.row(i);
      out.set.labels.push_back(minority);
    }
  }
  return out;
}

/// CSV with header z_1..z_d,label.
inline void write_csv(const TrainingSet& ts, std::ostream& os) {
  for (Eigen::Index j = 0; j < ts.dim(); ++j) os << "z_" << (j + 1) << ',';
  os << "label\n";
  os << std::setprecision(17);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    for (Eigen::Index j = 0; j < ts.dim(); ++j) os << ts.bases(static_cast<Eigen::Index>(i), j) << ',';
    os << ts.labels[i] << '\n';
  }
}

inline TrainingSet read_csv(std::istream& is) {
  std::string line;
  require(static_cast<bool>(std::getline(is, line)), "training set CSV is missing its header");
  const auto columns = static_cast<Eigen::Index>(std::count(line.begin(), line.end(), ',') + 1);
  require(columns >= 2, "training set CSV needs at least one basis column");
  std::vector<double> values;
  TrainingSet ts;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    Eigen::Index c = 0;
    while (std::getline(ss, cell, ',')) {
      if (c + 1 < columns) values.push_back(std::stod(cell));
      else ts.labels.push_back(std::stoi(cell));
      ++c;
    }
    require(c == columns, "training set CSV row has the wrong number of fields");
  }
  ts.bases = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), static_cast<Eigen::Index>(ts.labels.size()), columns - 1);
  return ts;
}

}  // namespace bbsi
