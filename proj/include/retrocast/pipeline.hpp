#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "retrocast/bootstrap.hpp"
#include "retrocast/csv.hpp"
#include "retrocast/deconv.hpp"
#include "retrocast/identify.hpp"
#include "retrocast/model_select.hpp"
#include "retrocast/report.hpp"
#include "retrocast/series.hpp"

namespace retrocast {

struct PipelineConfig {
  std::string data_csv;
  std::string population_csv;  // optional; enables per-100k outputs
  std::string output_dir = "out";
  DateInterval first_wave{make_date(2020, 1, 7), make_date(2020, 5, 15)};
  DateInterval second_wave{make_date(2020, 10, 1), make_date(2020, 12, 15)};
  IdentConfig ident;
  PenaltyKind penalty = PenaltyKind::second_difference;
  int pre_window_L = 21;
  DeconvLoss loss = DeconvLoss::quadratic;
  int sigma2_degree = 20;
  int n_lambda = 40;
  bool share_lambda = false;     // one lambda for all cohorts (log-mean of selections)
  bool reselect_lambda = false;  // re-run Cp inside every bootstrap replicate
  bool smooth_for_ident = true;  // identify on smoothed (default) or raw series
  BootstrapConfig bootstrap;

  PipelineConfig() { bootstrap.percentiles = {2.5, 50.0, 97.5}; }
};

inline void validate_config(const PipelineConfig& cfg) {
  if (cfg.data_csv.empty()) throw Error("config: data_csv is required");
  if (!cfg.first_wave.valid() || !cfg.second_wave.valid()) {
    throw Error("config: wave windows must be nonempty intervals");
  }
  if (!(cfg.first_wave.last < cfg.second_wave.first)) {
    throw Error("config: first wave must precede the second wave without overlap");
  }
  if (cfg.pre_window_L < -1) throw Error("config: pre_window_L must be >= -1");
}

struct PipelineResult {
  ReportTables tables;
  std::vector<StageFailure> failures;
  int n_succeeded = 0;
  int n_attempted = 0;
};

namespace detail {

inline std::filesystem::path out_path(const PipelineConfig& cfg, const std::string& name) {
  return std::filesystem::path(cfg.output_dir) / name;
}

inline CohortDataset load_smoothed(const PipelineConfig& cfg) {
  CohortDataset ds = load_csv(out_path(cfg, "smoothed.csv").string());
  if (!cfg.population_csv.empty()) {
    set_populations(ds, load_population_csv(cfg.population_csv));
  }
  return ds;
}

inline const IdentRecord* find_ident(const std::vector<IdentRecord>& v, const std::string& label) {
  for (const auto& r : v) {
    if (r.age_group == label) return &r;
  }
  return nullptr;
}

inline const LambdaRecord* find_lambda(const std::vector<LambdaRecord>& v,
                                       const std::string& label) {
  for (const auto& r : v) {
    if (r.age_group == label) return &r;
  }
  return nullptr;
}

inline ExpKernel kernel_of(const IdentRecord& r) {
  ExpKernel k;
  k.alpha = r.alpha;
  k.beta = r.beta;
  k.delay_days = r.delay;
  return k;
}

inline int percentile_column(const std::vector<double>& percentiles, double p) {
  for (size_t i = 0; i < percentiles.size(); ++i) {
    if (std::abs(percentiles[i] - p) < 1e-9) return static_cast<int>(i);
  }
  return -1;
}

}  // namespace detail

/// Stage 1: load the raw dataset, apply the centered 7-day moving average on
/// the full available range, write smoothed.csv.
inline CohortDataset run_preprocess(const PipelineConfig& cfg) {
  validate_config(cfg);
  CohortDataset ds = load_csv(cfg.data_csv);
  for (auto& [key, series] : ds.series) series = moving_average_7(series);
  std::filesystem::create_directories(cfg.output_dir);
  save_csv(ds, detail::out_path(cfg, "smoothed.csv").string());
  return ds;
}

/// Stage 2: identify the kernel per cohort on the second-wave window and
/// write ident.json. Input history before the window comes from the full
/// series (cfg.ident.history governs the fallback).
inline std::pair<std::vector<IdentRecord>, std::vector<StageFailure>> run_identify(
    const PipelineConfig& cfg) {
  validate_config(cfg);
  const CohortDataset ds =
      cfg.smooth_for_ident ? detail::load_smoothed(cfg) : load_csv(cfg.data_csv);
  std::vector<IdentRecord> records;
  std::vector<StageFailure> failures;
  for (const std::string& label : cohort_labels()) {
    if (!ds.has(label, Quantity::new_cases) || !ds.has(label, Quantity::hospital_admissions)) {
      failures.push_back({label, "identify", "series missing from dataset"});
      continue;
    }
    try {
      const DailySeries& u = ds.at(label, Quantity::new_cases);
      const DailySeries y = window(ds.at(label, Quantity::hospital_admissions), cfg.second_wave);
      const IdentResult r = identify(u, y, cfg.ident);
      IdentRecord rec;
      rec.age_group = label;
      rec.alpha = r.kernel.alpha;
      rec.beta = r.kernel.beta;
      rec.delay = r.kernel.delay_days;
      rec.gain = r.stats.gain_mu;
      rec.time_constant = r.stats.time_constant_days;
      rec.mean_lag = r.stats.mean_lag_days;
      rec.rss = r.rss;
      records.push_back(std::move(rec));
    } catch (const Error& e) {
      failures.push_back({label, "identify", e.what()});
    }
  }
  write_ident_json(detail::out_path(cfg, "ident.json"), records, failures);
  return {records, failures};
}

/// Stage 3: estimate sigma^2 on the smoothed first-wave admissions and select
/// lambda by Mallows Cp per cohort; write lambda.json and cp_curve_*.csv.
inline std::pair<std::vector<LambdaRecord>, std::vector<StageFailure>> run_select_lambda(
    const PipelineConfig& cfg) {
  validate_config(cfg);
  const CohortDataset ds = detail::load_smoothed(cfg);
  const auto [ident, ident_failures] = read_ident_json(detail::out_path(cfg, "ident.json"));
  (void)ident_failures;
  std::vector<LambdaRecord> records;
  std::vector<StageFailure> failures;
  for (const auto& rec : ident) {
    try {
      const DailySeries y =
          window(ds.at(rec.age_group, Quantity::hospital_admissions), cfg.first_wave);
      DeconvProblem tmpl;
      tmpl.Y = Eigen::Map<const Eigen::VectorXd>(y.values.data(),
                                                 static_cast<Eigen::Index>(y.values.size()));
      tmpl.spec = make_conv_spec(detail::kernel_of(rec), static_cast<int>(y.size()),
                                 cfg.pre_window_L);
      tmpl.penalty = cfg.penalty;
      const std::vector<double> grid = default_lambda_grid(tmpl, cfg.n_lambda);

      LambdaRecord lr;
      lr.age_group = rec.age_group;
      const NoiseEstimate noise = estimate_sigma2(y, cfg.sigma2_degree);
      lr.sigma2 = noise.sigma2;
      if (noise.sigma2 > 0.0) {
        const CpCurve curve = mallows_cp(tmpl, grid, noise.sigma2);
        lr.lambda = curve.selected_lambda;
        lr.n_skipped = curve.n_skipped;
        write_cp_curve_csv(detail::out_path(cfg, "cp_curve_" + rec.age_group + ".csv"),
                           curve.lambdas, curve.cp_values, curve.dofs, curve.rss_values);
      } else {
        // degenerate noise estimate (e.g. all-zero admissions): Cp is
        // undefined, any lambda reconstructs the same series; take the grid
        // midpoint and flag it
        lr.lambda = grid[grid.size() / 2];
        lr.fallback = true;
        write_cp_curve_csv(detail::out_path(cfg, "cp_curve_" + rec.age_group + ".csv"), {}, {},
                           {}, {});
      }
      records.push_back(std::move(lr));
    } catch (const Error& e) {
      failures.push_back({rec.age_group, "select-lambda", e.what()});
    }
  }
  if (cfg.share_lambda && !records.empty()) {
    double log_sum = 0.0;
    int n = 0;
    for (const auto& r : records) {
      if (!r.fallback && r.lambda > 0.0) {
        log_sum += std::log(r.lambda);
        ++n;
      }
    }
    if (n > 0) {
      const double shared = std::exp(log_sum / n);
      for (auto& r : records) r.lambda = shared;
    }
  }
  write_lambda_json(detail::out_path(cfg, "lambda.json"), records, failures);
  return {records, failures};
}

/// Stage 4: reconstruct each cohort's first-wave inputs and write
/// reconstruction.csv (band columns left empty until the bootstrap stage).
inline std::pair<std::vector<ReconRow>, std::vector<StageFailure>> run_deconvolve(
    const PipelineConfig& cfg) {
  validate_config(cfg);
  const CohortDataset ds = detail::load_smoothed(cfg);
  const auto [ident, f1] = read_ident_json(detail::out_path(cfg, "ident.json"));
  const auto [lambdas, f2] = read_lambda_json(detail::out_path(cfg, "lambda.json"));
  (void)f1;
  (void)f2;
  std::vector<ReconRow> rows;
  std::vector<StageFailure> failures;
  for (const auto& rec : ident) {
    const LambdaRecord* lr = detail::find_lambda(lambdas, rec.age_group);
    if (lr == nullptr) continue;  // failed upstream; already recorded there
    try {
      const DailySeries y =
          window(ds.at(rec.age_group, Quantity::hospital_admissions), cfg.first_wave);
      const ExpKernel kernel = detail::kernel_of(rec);
      DeconvSolution sol;
      if (cfg.loss == DeconvLoss::quadratic) {
        sol = reconstruct_cohort(y, kernel, cfg.penalty, lr->lambda, cfg.pre_window_L);
      } else {
        DeconvProblem p;
        p.Y = Eigen::Map<const Eigen::VectorXd>(y.values.data(),
                                                static_cast<Eigen::Index>(y.values.size()));
        p.spec = make_conv_spec(kernel, static_cast<int>(y.size()), cfg.pre_window_L);
        p.penalty = cfg.penalty;
        p.lambda = lr->lambda;
        p.loss = DeconvLoss::l1;
        sol = solve(p);
        sol.start_date = y.start + (-(cfg.pre_window_L + 1) - kernel.delay_days);
      }
      const DailySeries* official = ds.has(rec.age_group, Quantity::new_cases)
                                        ? &ds.at(rec.age_group, Quantity::new_cases)
                                        : nullptr;
      for (Eigen::Index i = 0; i < sol.C.size(); ++i) {
        ReconRow row;
        row.date = *sol.start_date + static_cast<int>(i);
        row.age_group = rec.age_group;
        row.reconstructed = sol.C(i);
        if (official != nullptr && official->covers(row.date)) {
          row.official = official->at(row.date);
        }
        rows.push_back(std::move(row));
      }
    } catch (const Error& e) {
      failures.push_back({rec.age_group, "deconvolve", e.what()});
    }
  }
  write_reconstruction_csv(detail::out_path(cfg, "reconstruction.csv"), rows);
  return {rows, failures};
}

/// Stage 5: wild bootstrap of the identification and double wild bootstrap of
/// the reconstruction; writes bands_*.csv, kernel_bands_*.csv, bootstrap.json
/// and fills the band columns of reconstruction.csv.
inline std::pair<std::vector<BootstrapRecord>, std::vector<StageFailure>> run_bootstrap(
    const PipelineConfig& cfg) {
  validate_config(cfg);
  const CohortDataset ds = detail::load_smoothed(cfg);
  const auto [ident, f1] = read_ident_json(detail::out_path(cfg, "ident.json"));
  const auto [lambdas, f2] = read_lambda_json(detail::out_path(cfg, "lambda.json"));
  (void)f1;
  (void)f2;
  std::vector<ReconRow> rows = read_reconstruction_csv(detail::out_path(cfg, "reconstruction.csv"));
  std::vector<BootstrapRecord> records;
  std::vector<StageFailure> failures;

  const int col_lo = detail::percentile_column(cfg.bootstrap.percentiles, 2.5);
  const int col_hi = detail::percentile_column(cfg.bootstrap.percentiles, 97.5);

  for (const auto& rec : ident) {
    const LambdaRecord* lr = detail::find_lambda(lambdas, rec.age_group);
    if (lr == nullptr) continue;
    try {
      const DailySeries& u = ds.at(rec.age_group, Quantity::new_cases);
      const DailySeries y2 =
          window(ds.at(rec.age_group, Quantity::hospital_admissions), cfg.second_wave);
      const DailySeries y1 =
          window(ds.at(rec.age_group, Quantity::hospital_admissions), cfg.first_wave);

      // deterministic per-cohort substream family; without the label mix every
      // cohort would share the same normal draws replicate-for-replicate
      BootstrapConfig bcfg = cfg.bootstrap;
      bcfg.seed = cfg.bootstrap.seed ^ fnv1a64(rec.age_group);

      const IdentResult base = identify(u, y2, cfg.ident);
      const BootstrapSummary si = bootstrap_identify(u, y2, base, bcfg, cfg.ident);

      DeconvTemplate tmpl;
      tmpl.kernel = base.kernel;
      tmpl.penalty = cfg.penalty;
      tmpl.lambda = lr->lambda;
      tmpl.L = cfg.pre_window_L;
      if (cfg.reselect_lambda && lr->sigma2 > 0.0) {
        DeconvProblem grid_tmpl;
        grid_tmpl.Y = Eigen::Map<const Eigen::VectorXd>(
            y1.values.data(), static_cast<Eigen::Index>(y1.values.size()));
        grid_tmpl.spec =
            make_conv_spec(base.kernel, static_cast<int>(y1.size()), cfg.pre_window_L);
        grid_tmpl.penalty = cfg.penalty;
        tmpl.reselect_lambda = true;
        tmpl.sigma2 = lr->sigma2;
        tmpl.lambda_grid = default_lambda_grid(grid_tmpl, cfg.n_lambda);
      }
      const BootstrapSummary sd = bootstrap_deconvolve(y1, si, tmpl, bcfg);

      BandTable band;
      band.age_group = rec.age_group;
      band.quantity = "reconstructed_cases";
      band.start = *sd.pointwise_start;
      band.percentiles = bcfg.percentiles;
      band.values = sd.pointwise_percentiles;
      write_band_csv(detail::out_path(cfg, "bands_" + rec.age_group + ".csv"), band);
      write_kernel_band_csv(detail::out_path(cfg, "kernel_bands_" + rec.age_group + ".csv"),
                            bcfg.percentiles, si.pointwise_percentiles);

      BootstrapRecord br;
      br.age_group = rec.age_group;
      br.ident_requested = si.n_requested;
      br.ident_failed = si.n_failed;
      br.deconv_requested = sd.n_requested;
      br.deconv_failed = sd.n_failed;
      for (int s = 0; s < si.n_scalars; ++s) {
        auto& dest = br.ident_scalars[si.scalar_names[static_cast<size_t>(s)]];
        for (size_t k = 0; k < bcfg.percentiles.size(); ++k) {
          dest[detail::percentile_label(bcfg.percentiles[k])] =
              si.scalar_percentiles(s, static_cast<int>(k));
        }
      }
      for (size_t k = 0; k < bcfg.percentiles.size(); ++k) {
        br.total_band[detail::percentile_label(bcfg.percentiles[k])] =
            sd.scalar_percentiles(0, static_cast<int>(k));
      }
      records.push_back(std::move(br));

      if (col_lo >= 0 || col_hi >= 0) {
        std::map<int, std::pair<double, double>> by_date;  // serial -> (lo, hi)
        for (Eigen::Index i = 0; i < sd.pointwise_percentiles.rows(); ++i) {
          const Date d = *sd.pointwise_start + static_cast<int>(i);
          const double lo = col_lo >= 0 ? sd.pointwise_percentiles(i, col_lo)
                                        : std::numeric_limits<double>::quiet_NaN();
          const double hi = col_hi >= 0 ? sd.pointwise_percentiles(i, col_hi)
                                        : std::numeric_limits<double>::quiet_NaN();
          by_date[d.serial] = {lo, hi};
        }
        for (auto& row : rows) {
          if (row.age_group != rec.age_group) continue;
          const auto it = by_date.find(row.date.serial);
          if (it != by_date.end()) {
            row.lo = it->second.first;
            row.hi = it->second.second;
          }
        }
      }
    } catch (const Error& e) {
      failures.push_back({rec.age_group, "bootstrap", e.what()});
    }
  }
  write_bootstrap_json(detail::out_path(cfg, "bootstrap.json"), records, failures);
  write_reconstruction_csv(detail::out_path(cfg, "reconstruction.csv"), rows);
  return {records, failures};
}

/// Stage 6: assemble the report tables from the stage artifacts and write
/// table1.csv, table2.csv, daily_factor.csv, summary.json (and per-100k output
/// when populations are available).
inline PipelineResult run_report(const PipelineConfig& cfg) {
  validate_config(cfg);
  const CohortDataset ds = detail::load_smoothed(cfg);
  const auto [ident, f1] = read_ident_json(detail::out_path(cfg, "ident.json"));
  const auto [lambdas, f2] = read_lambda_json(detail::out_path(cfg, "lambda.json"));
  const std::vector<ReconRow> rows =
      read_reconstruction_csv(detail::out_path(cfg, "reconstruction.csv"));
  std::vector<BootstrapRecord> boot;
  std::vector<StageFailure> f3;
  if (std::filesystem::exists(detail::out_path(cfg, "bootstrap.json"))) {
    std::tie(boot, f3) = read_bootstrap_json(detail::out_path(cfg, "bootstrap.json"));
  }

  PipelineResult result;
  result.failures = f1;
  result.failures.insert(result.failures.end(), f2.begin(), f2.end());
  result.failures.insert(result.failures.end(), f3.begin(), f3.end());

  const auto band_of = [](const std::map<std::string, double>& m) {
    ScalarBand b;
    if (const auto it = m.find("2.5"); it != m.end()) b.lo = it->second;
    if (const auto it = m.find("97.5"); it != m.end()) b.hi = it->second;
    return b;
  };
  const auto boot_of = [&](const std::string& label) -> const BootstrapRecord* {
    for (const auto& b : boot) {
      if (b.age_group == label) return &b;
    }
    return nullptr;
  };

  // group reconstruction rows per cohort, canonical order
  std::map<std::string, std::vector<const ReconRow*>> by_label;
  for (const auto& r : rows) by_label[r.age_group].push_back(&r);

  ReportTables& t = result.tables;
  double official_sum = 0.0;
  double recon_sum = 0.0;
  double band_lo_sum = 0.0;
  double band_hi_sum = 0.0;
  bool all_official = true;
  bool all_bands = true;

  nlohmann::json cohorts_json = nlohmann::json::array();
  for (const auto& rec : ident) {
    const auto rows_it = by_label.find(rec.age_group);
    if (rows_it == by_label.end()) continue;  // cohort failed before reconstruction
    const BootstrapRecord* br = boot_of(rec.age_group);

    KernelRow kr;
    kr.age_group = rec.age_group;
    kr.gain_pct = rec.gain * 100.0;
    kr.delay_days = rec.delay;
    kr.time_constant_days = rec.time_constant;
    if (br != nullptr) {
      const auto g = br->ident_scalars.find("gain");
      if (g != br->ident_scalars.end()) {
        const ScalarBand b = band_of(g->second);
        kr.gain_pct_band = {b.lo * 100.0, b.hi * 100.0};
      }
      const auto tc = br->ident_scalars.find("time_constant");
      if (tc != br->ident_scalars.end()) kr.time_constant_band = band_of(tc->second);
    }
    t.kernel_table.push_back(kr);

    TotalsRow tr;
    tr.age_group = rec.age_group;
    double recon_total = 0.0;
    for (const ReconRow* r : rows_it->second) recon_total += r->reconstructed;
    tr.reconstructed_total = recon_total;
    recon_sum += recon_total;
    if (ds.has(rec.age_group, Quantity::new_cases)) {
      const DailySeries off = window(ds.at(rec.age_group, Quantity::new_cases), cfg.first_wave);
      double s = 0.0;
      for (double v : off.values) s += v;
      tr.official_total = s;
      official_sum += s;
    } else {
      tr.official_total = std::numeric_limits<double>::quiet_NaN();
      all_official = false;
    }
    if (br != nullptr) {
      tr.total_band = band_of(br->total_band);
    }
    if (std::isfinite(tr.total_band.lo) && std::isfinite(tr.total_band.hi)) {
      band_lo_sum += tr.total_band.lo;
      band_hi_sum += tr.total_band.hi;
    } else {
      all_bands = false;
    }
    t.totals_table.push_back(tr);

    const LambdaRecord* lrp = detail::find_lambda(lambdas, rec.age_group);
    nlohmann::json cj = {{"age_group", rec.age_group}, {"alpha", rec.alpha},
                         {"beta", rec.beta},           {"delay", rec.delay},
                         {"gain", rec.gain},           {"time_constant", rec.time_constant},
                         {"mean_lag", rec.mean_lag},   {"reconstructed_total", recon_total}};
    if (lrp != nullptr) {
      cj["lambda"] = lrp->lambda;
      cj["sigma2"] = lrp->sigma2;
    }
    if (std::isfinite(tr.official_total)) {
      cj["official_total"] = tr.official_total;
      if (tr.official_total > 0.0) {
        cj["underestimation_factor"] = recon_total / tr.official_total;
      }
    }
    if (br != nullptr) {
      nlohmann::json band = nlohmann::json::object();
      for (const auto& [p, v] : br->total_band) band[p] = v;
      cj["total_band"] = std::move(band);
    }
    cohorts_json.push_back(std::move(cj));
  }

  t.all_ages.age_group = "all_ages";
  t.all_ages.reconstructed_total = recon_sum;
  t.all_ages.official_total =
      all_official && !t.totals_table.empty() ? official_sum
                                              : std::numeric_limits<double>::quiet_NaN();
  if (all_bands && !t.totals_table.empty()) {
    t.all_ages.total_band = {band_lo_sum, band_hi_sum};
  }

  // daily factor on the first-wave grid: datewise all-ages sums
  {
    const int n = cfg.first_wave.length();
    DailySeries recon_all;
    recon_all.start = cfg.first_wave.first;
    recon_all.values.assign(static_cast<size_t>(n), 0.0);
    for (const auto& r : rows) {
      const int i = r.date - cfg.first_wave.first;
      if (i >= 0 && i < n && std::isfinite(r.reconstructed)) {
        recon_all.values[static_cast<size_t>(i)] += r.reconstructed;
      }
    }
    DailySeries official_all = recon_all;
    official_all.values.assign(static_cast<size_t>(n), 0.0);
    for (const auto& rec : ident) {
      if (by_label.find(rec.age_group) == by_label.end()) continue;
      if (!ds.has(rec.age_group, Quantity::new_cases)) continue;
      const DailySeries off = window(ds.at(rec.age_group, Quantity::new_cases), cfg.first_wave);
      for (size_t i = 0; i < off.values.size(); ++i) official_all.values[i] += off.values[i];
    }
    t.daily_factor = underestimation_series(recon_all, official_all);
  }

  nlohmann::json summary;
  summary["seed"] = cfg.bootstrap.seed;
  summary["penalty"] = to_string(cfg.penalty);
  summary["pre_window_L"] = cfg.pre_window_L;
  summary["first_wave"] = {{"start", to_string(cfg.first_wave.first)},
                           {"end", to_string(cfg.first_wave.last)}};
  summary["second_wave"] = {{"start", to_string(cfg.second_wave.first)},
                            {"end", to_string(cfg.second_wave.last)}};
  summary["cohorts"] = std::move(cohorts_json);
  nlohmann::json all_ages = {{"reconstructed_total", recon_sum}};
  if (std::isfinite(t.all_ages.official_total)) {
    all_ages["official_total"] = t.all_ages.official_total;
    if (t.all_ages.official_total > 0.0) {
      all_ages["underestimation_factor"] = recon_sum / t.all_ages.official_total;
    }
  }
  if (std::isfinite(t.all_ages.total_band.lo)) {
    all_ages["total_band"] = {{"2.5", t.all_ages.total_band.lo},
                              {"97.5", t.all_ages.total_band.hi}};
  }
  summary["all_ages"] = std::move(all_ages);
  nlohmann::json failures_json = nlohmann::json::array();
  for (const auto& f : result.failures) {
    failures_json.push_back({{"age_group", f.age_group}, {"stage", f.stage}, {"error", f.error}});
  }
  summary["failures"] = std::move(failures_json);
  t.summary = std::move(summary);

  emit_tables(t, cfg.output_dir);

  // optional per-100k artifact
  if (!cfg.population_csv.empty()) {
    auto out = detail::open_out(detail::out_path(cfg, "reconstruction_per100k.csv"));
    out << "date,age_group,reconstructed_per_100k\n";
    for (const auto& rec : ident) {
      const auto rows_it = by_label.find(rec.age_group);
      if (rows_it == by_label.end()) continue;
      const AgeCohort& cohort = ds.cohort(rec.age_group);
      if (cohort.population <= 0) continue;
      DailySeries s;
      s.start = rows_it->second.front()->date;
      for (const ReconRow* r : rows_it->second) s.values.push_back(r->reconstructed);
      const DailySeries scaled = per_100k(s, cohort);
      for (size_t i = 0; i < scaled.values.size(); ++i) {
        out << to_string(scaled.start + static_cast<int>(i)) << ',' << rec.age_group << ','
            << format_double(scaled.values[i]) << '\n';
      }
    }
  }

  result.n_succeeded = static_cast<int>(t.totals_table.size());
  std::set<std::string> seen;
  for (const auto& r : t.totals_table) seen.insert(r.age_group);
  for (const auto& f : result.failures) seen.insert(f.age_group);
  result.n_attempted = static_cast<int>(seen.size());
  return result;
}

/// Full pipeline, preprocess through report, sharing one config.
inline PipelineResult run_pipeline(const PipelineConfig& cfg) {
  run_preprocess(cfg);
  run_identify(cfg);
  run_select_lambda(cfg);
  run_deconvolve(cfg);
  run_bootstrap(cfg);
  return run_report(cfg);
}

/// CLI exit code policy: 0 all cohorts succeeded, 2 partial failures, 1 when
/// nothing succeeded.
inline int exit_code(const PipelineResult& r) {
  if (r.n_succeeded == 0) return 1;
  return r.failures.empty() ? 0 : 2;
}

}  // namespace retrocast
