#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "ope/domains.hpp"
#include "ope/magic.hpp"

namespace ope {

enum class Estimator {
  kIs,
  kPdis,
  kWis,
  kCwpdis,
  kDr,
  kWdr,
  kDrV2,
  kWdrV2,
  kAm,
  kMagic,
  kMagicB,
};

inline const char* estimator_name(Estimator e) {
  switch (e) {
    case Estimator::kIs: return "IS";
    case Estimator::kPdis: return "PDIS";
    case Estimator::kWis: return "WIS";
    case Estimator::kCwpdis: return "CWPDIS";
    case Estimator::kDr: return "DR";
    case Estimator::kWdr: return "WDR";
    case Estimator::kDrV2: return "DR-v2";
    case Estimator::kWdrV2: return "WDR-v2";
    case Estimator::kAm: return "AM";
    case Estimator::kMagic: return "MAGIC";
    case Estimator::kMagicB: return "MAGIC-B";
  }
  return "?";
}

inline std::optional<Estimator> parse_estimator(std::string_view name) {
  const auto upper = [](std::string_view s) {
    std::string u(s);
    for (char& c : u) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return u;
  };
  const std::string wanted = upper(name);
  const Estimator all[] = {Estimator::kIs,   Estimator::kPdis,  Estimator::kWis,
                           Estimator::kCwpdis, Estimator::kDr,   Estimator::kWdr,
                           Estimator::kDrV2, Estimator::kWdrV2, Estimator::kAm,
                           Estimator::kMagic, Estimator::kMagicB};
  for (Estimator e : all) {
    if (wanted == upper(estimator_name(e))) return e;
  }
  return std::nullopt;
}

/// Everything except the opt-in v2 variants.
inline std::vector<Estimator> default_estimators() {
  return {Estimator::kIs,  Estimator::kPdis, Estimator::kWis,   Estimator::kCwpdis,
          Estimator::kDr,  Estimator::kWdr,  Estimator::kAm,    Estimator::kMagic,
          Estimator::kMagicB};
}

enum class DataMode { kFull, kHalf };

inline const char* data_mode_name(DataMode m) { return m == DataMode::kFull ? "full" : "half"; }

/// How to choose the partial-return index set for the blend estimators.
struct JSetSpec {
  enum class Kind { kDefault, kBinary, kExplicit };
  Kind kind = Kind::kDefault;
  std::vector<int> explicit_steps;

  JSet resolve(int horizon) const {
    switch (kind) {
      case Kind::kDefault: return JSet::full_range(horizon);
      case Kind::kBinary: return JSet::binary();
      case Kind::kExplicit: {
        JSet j{explicit_steps};
        j.validate();
        return j;
      }
    }
    throw std::logic_error("JSetSpec: unknown kind");
  }

  /// Accepts "default", "binary", or a comma list like "-1,0,3,inf".
  static JSetSpec parse(std::string_view text) {
    JSetSpec spec;
    if (text == "default") return spec;
    if (text == "binary") {
      spec.kind = Kind::kBinary;
      return spec;
    }
    spec.kind = Kind::kExplicit;
    std::string token;
    std::stringstream in{std::string(text)};
    while (std::getline(in, token, ',')) {
      if (token.empty()) continue;
      if (token == "inf") {
        spec.explicit_steps.push_back(kInfStep);
      } else {
        std::size_t used = 0;
        const int v = std::stoi(token, &used);
        detail::require(used == token.size(), "j-set: bad token '" + token + "'");
        spec.explicit_steps.push_back(v);
      }
    }
    detail::require(!spec.explicit_steps.empty(), "j-set: empty list");
    return spec;
  }
};

struct ExperimentConfig {
  std::string domain;
  std::vector<Estimator> estimators = default_estimators();
  std::vector<int> n_grid = {8, 16, 32, 64, 128, 256, 512, 1024, 2048, 4096};
  int trials = 128;
  DataMode data_mode = DataMode::kFull;
  int kappa = 200;
  double delta = 0.1;
  std::uint64_t seed = 0;
  JSetSpec j_set;
  int threads = 0;  ///< 0 = hardware concurrency
  std::optional<double> xi_override;
  /// Keep every per-trial estimate (and blend bounds) in the result;
  /// off by default to keep large sweeps lean.
  bool keep_trial_records = false;

  void validate() const {
    detail::require(!domain.empty(), "experiment: no domain given");
    detail::require(!estimators.empty(), "experiment: no estimators selected");
    detail::require(trials >= 1, "experiment: trials must be >= 1");
    detail::require(!n_grid.empty(), "experiment: empty n grid");
    for (int n : n_grid) {
      detail::require(n >= 1, "experiment: n must be positive");
      if (data_mode == DataMode::kHalf) {
        detail::require(n % 2 == 0, "experiment: half data mode requires even n (got " +
                                        std::to_string(n) + ")");
      }
    }
    detail::require(kappa >= 1, "experiment: kappa must be >= 1");
    detail::require(delta > 0.0 && delta < 1.0, "experiment: delta must be in (0, 1)");
    detail::require(threads >= 0, "experiment: threads must be >= 0");
  }
};

/// One estimator's score in one trial. Failures carry NaN and a reason.
struct TrialOutcome {
  std::vector<double> estimates;             ///< aligned with config.estimators
  std::vector<std::string> failures;         ///< "ESTIMATOR: reason" entries
  /// Column-sum range per blend estimator, for downstream convexity checks
  /// (NaN for non-blend estimators).
  std::vector<double> g_min;
  std::vector<double> g_max;
};

/// Run one trial: sample n trajectories under the behavior policy, fit the
/// model per the data mode, score every selected estimator once. All
/// randomness is derived from (seed, domain name, n, trial_index), so a
/// trial is a pure function of the config regardless of threading or which
/// estimators are selected.
inline TrialOutcome run_trial(const DomainSpec& domain, const ExperimentConfig& config, int n,
                              int trial_index) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  TrialOutcome out;
  out.estimates.assign(config.estimators.size(), nan);
  out.g_min.assign(config.estimators.size(), nan);
  out.g_max.assign(config.estimators.size(), nan);

  const Rng trial_stream =
      Rng(config.seed).child(fnv1a64(domain.name)).child(static_cast<std::uint64_t>(n)).child(
          static_cast<std::uint64_t>(trial_index));
  const Dataset data =
      sample_domain_dataset(domain, domain.behavior, n, trial_stream.child(0));

  // Model fit set and estimation set per data mode. Model-free baselines
  // always see the full dataset; model-based estimators see the estimation
  // set with a model fit on the (possibly distinct) model set.
  Dataset model_set;
  Dataset estimation_set;
  if (config.data_mode == DataMode::kFull) {
    model_set = data;
    estimation_set = data;
  } else {
    model_set.horizon = estimation_set.horizon = data.horizon;
    const int half = n / 2;
    model_set.trajectories.assign(data.trajectories.begin(), data.trajectories.begin() + half);
    estimation_set.trajectories.assign(data.trajectories.begin() + half, data.trajectories.end());
  }

  const double gamma = domain.mdp.gamma;
  const LearnedModel model = fit_mle_model(model_set, domain.num_observed_states,
                                           domain.mdp.num_actions, domain.model_horizon);
  const ValueTables tables = value_tables(model, domain.evaluation, gamma);

  // Shared lazily-built weight matrices.
  std::optional<WeightMatrix> full_weights;
  std::optional<WeightMatrix> est_weights;
  const auto full_rho = [&]() -> const WeightMatrix& {
    if (!full_weights) full_weights = importance_weights(data, domain.evaluation);
    return *full_weights;
  };
  const auto est_rho = [&]() -> const WeightMatrix& {
    if (!est_weights) est_weights = importance_weights(estimation_set, domain.evaluation);
    return *est_weights;
  };

  MagicConfig magic_config;
  magic_config.kappa = config.kappa;
  magic_config.delta = config.delta;
  magic_config.xi_override = config.xi_override;
  magic_config.reward_bound =
      std::max(std::abs(domain.mdp.reward_min), std::abs(domain.mdp.reward_max));

  for (std::size_t k = 0; k < config.estimators.size(); ++k) {
    const Estimator est = config.estimators[k];
    try {
      switch (est) {
        case Estimator::kIs:
          out.estimates[k] = is_estimate(data, full_rho(), gamma, IsVariant::kIs);
          break;
        case Estimator::kPdis:
          out.estimates[k] = is_estimate(data, full_rho(), gamma, IsVariant::kPdis);
          break;
        case Estimator::kWis:
          out.estimates[k] = is_estimate(data, full_rho(), gamma, IsVariant::kWis);
          break;
        case Estimator::kCwpdis:
          out.estimates[k] = is_estimate(data, full_rho(), gamma, IsVariant::kCwpdis);
          break;
        case Estimator::kDr:
          out.estimates[k] = dr_estimate(estimation_set, tables, est_rho(), gamma, DrVariant::kDr);
          break;
        case Estimator::kWdr:
          out.estimates[k] =
              dr_estimate(estimation_set, tables, est_rho(), gamma, DrVariant::kWdr);
          break;
        case Estimator::kDrV2:
          out.estimates[k] =
              dr_estimate(estimation_set, tables, est_rho(), gamma, DrVariant::kDrV2, &model);
          break;
        case Estimator::kWdrV2:
          out.estimates[k] =
              dr_estimate(estimation_set, tables, est_rho(), gamma, DrVariant::kWdrV2, &model);
          break;
        case Estimator::kAm:
          out.estimates[k] = am_estimate(model, tables);
          break;
        case Estimator::kMagic: {
          const MagicResult r = magic_estimate(
              estimation_set, domain.evaluation, model, tables,
              config.j_set.resolve(estimation_set.horizon), magic_config, gamma,
              trial_stream.child(1));
          out.estimates[k] = r.estimate;
          out.g_min[k] = r.g_min;
          out.g_max[k] = r.g_max;
          break;
        }
        case Estimator::kMagicB: {
          const MagicResult r =
              magic_estimate(estimation_set, domain.evaluation, model, tables, JSet::binary(),
                             magic_config, gamma, trial_stream.child(2));
          out.estimates[k] = r.estimate;
          out.g_min[k] = r.g_min;
          out.g_max[k] = r.g_max;
          break;
        }
      }
    } catch (const std::exception& e) {
      out.failures.push_back(std::string(estimator_name(est)) + ": " + e.what());
    }
  }
  return out;
}

/// One aggregated CSV row.
struct ResultRow {
  std::string domain;
  std::string estimator;
  std::string data_mode;
  int n = 0;
  double mse = 0.0;
  double std_err = 0.0;
  int trials = 0;  ///< trials that produced a usable estimate
};

/// One per-trial record, kept when config.keep_trial_records is set.
struct TrialRecord {
  int n = 0;
  int trial = 0;
  Estimator estimator{};
  double value = 0.0;
  double g_min = 0.0;  ///< NaN unless the estimator is a blend
  double g_max = 0.0;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;
  std::vector<std::string> failures;  ///< "domain n trial ESTIMATOR: reason"
  std::vector<TrialRecord> records;
  double true_value = 0.0;
};

/// Full sweep: for every n in the grid run config.trials independent
/// trials, then aggregate each estimator's squared error against the exact
/// policy value. Trials may run on several threads; every trial's
/// randomness is schedule-independent, and aggregation walks trials in
/// index order, so results are identical at any thread count.
inline ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const DomainSpec domain = domain_by_name(config.domain);
  ExperimentResult result;
  result.true_value = true_value(domain, domain.evaluation);

  int thread_count = config.threads;
  if (thread_count == 0) {
    thread_count = static_cast<int>(std::thread::hardware_concurrency());
    if (thread_count <= 0) thread_count = 1;
  }
  thread_count = std::min(thread_count, config.trials);

  for (int n : config.n_grid) {
    std::vector<TrialOutcome> outcomes(config.trials);
    if (thread_count <= 1) {
      for (int trial = 0; trial < config.trials; ++trial) {
        outcomes[trial] = run_trial(domain, config, n, trial);
      }
    } else {
      std::atomic<int> next{0};
      std::atomic<bool> failed{false};
      std::exception_ptr error;
      std::mutex error_mutex;
      std::vector<std::thread> workers;
      workers.reserve(thread_count);
      for (int w = 0; w < thread_count; ++w) {
        workers.emplace_back([&]() {
          for (;;) {
            const int trial = next.fetch_add(1);
            if (trial >= config.trials || failed.load()) return;
            try {
              outcomes[trial] = run_trial(domain, config, n, trial);
            } catch (...) {
              std::lock_guard<std::mutex> lock(error_mutex);
              if (!error) error = std::current_exception();
              failed.store(true);
              return;
            }
          }
        });
      }
      for (auto& t : workers) t.join();
      if (error) std::rethrow_exception(error);
    }

    // Aggregate in trial-index order.
    for (std::size_t k = 0; k < config.estimators.size(); ++k) {
      std::vector<double> squared_errors;
      squared_errors.reserve(config.trials);
      for (int trial = 0; trial < config.trials; ++trial) {
        const double value = outcomes[trial].estimates[k];
        if (std::isfinite(value)) {
          const double err = value - result.true_value;
          squared_errors.push_back(err * err);
        }
        if (config.keep_trial_records) {
          result.records.push_back(TrialRecord{n, trial, config.estimators[k], value,
                                               outcomes[trial].g_min[k],
                                               outcomes[trial].g_max[k]});
        }
      }
      ResultRow row;
      row.domain = domain.name;
      row.estimator = estimator_name(config.estimators[k]);
      row.data_mode = data_mode_name(config.data_mode);
      row.n = n;
      row.trials = static_cast<int>(squared_errors.size());
      if (squared_errors.empty()) {
        row.mse = std::numeric_limits<double>::quiet_NaN();
        row.std_err = std::numeric_limits<double>::quiet_NaN();
      } else {
        double mean = 0.0;
        for (double e : squared_errors) mean += e;
        mean /= static_cast<double>(squared_errors.size());
        row.mse = mean;
        if (squared_errors.size() >= 2) {
          double ss = 0.0;
          for (double e : squared_errors) ss += (e - mean) * (e - mean);
          const double sd = std::sqrt(ss / static_cast<double>(squared_errors.size() - 1));
          row.std_err = sd / std::sqrt(static_cast<double>(squared_errors.size()));
        } else {
          row.std_err = 0.0;
        }
      }
      result.rows.push_back(std::move(row));
    }
    for (int trial = 0; trial < config.trials; ++trial) {
      for (const std::string& f : outcomes[trial].failures) {
        result.failures.push_back(domain.name + " n=" + std::to_string(n) +
                                  " trial=" + std::to_string(trial) + " " + f);
      }
    }
  }

  std::sort(result.rows.begin(), result.rows.end(), [](const ResultRow& a, const ResultRow& b) {
    if (a.domain != b.domain) return a.domain < b.domain;
    if (a.estimator != b.estimator) return a.estimator < b.estimator;
    return a.n < b.n;
  });
  return result;
}

namespace detail {

inline std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// CSV with a fixed header; floats carry 17 significant digits so doubles
/// round-trip exactly.
inline void write_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << "domain,estimator,data_mode,n,mse,std_err,trials\n";
  for (const ResultRow& row : rows) {
    out << row.domain << ',' << row.estimator << ',' << row.data_mode << ',' << row.n << ','
        << detail::format_g17(row.mse) << ',' << detail::format_g17(row.std_err) << ','
        << row.trials << '\n';
  }
}

inline void write_csv_file(const std::filesystem::path& path, const std::vector<ResultRow>& rows) {
  std::ofstream out(path);
  detail::require(out.good(), "write_csv_file: cannot open " + path.string());
  write_csv(out, rows);
  out.flush();
  detail::require(out.good(), "write_csv_file: failed writing " + path.string());
}

}  // namespace ope
