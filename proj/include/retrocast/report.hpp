#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "retrocast/bootstrap.hpp"
#include "retrocast/csv.hpp"
#include "retrocast/dates.hpp"
#include "retrocast/errors.hpp"
#include "retrocast/series.hpp"

namespace retrocast {

/// series.values * 100000 / cohort.population
inline DailySeries per_100k(const DailySeries& s, const AgeCohort& cohort) {
  if (cohort.population <= 0) throw Error("per_100k: population must be positive");
  DailySeries out = s;
  for (double& v : out.values) v = v * 100000.0 / static_cast<double>(cohort.population);
  return out;
}

/// Daily ratio series with NaN standing for NA (emitted as an empty CSV field).
struct FactorSeries {
  Date start{};
  std::vector<double> values;  // NaN = undefined (official count was zero)
};

/// Elementwise reconstructed/official on a shared date grid.
inline FactorSeries underestimation_series(const DailySeries& reconstructed,
                                           const DailySeries& official) {
  if (reconstructed.start != official.start || reconstructed.size() != official.size()) {
    throw MisalignedDates("underestimation_series: date grids differ");
  }
  FactorSeries f;
  f.start = reconstructed.start;
  f.values.resize(reconstructed.values.size());
  for (size_t i = 0; i < f.values.size(); ++i) {
    const double o = official.values[i];
    f.values[i] = o > 0.0 ? reconstructed.values[i] / o
                          : std::numeric_limits<double>::quiet_NaN();
  }
  return f;
}

// ---------------------------------------------------------------------------
// report tables
// ---------------------------------------------------------------------------

struct ScalarBand {
  double lo = std::numeric_limits<double>::quiet_NaN();
  double hi = std::numeric_limits<double>::quiet_NaN();
};

struct KernelRow {
  std::string age_group;
  double gain_pct = 0.0;  // percent
  ScalarBand gain_pct_band;
  int delay_days = 0;
  double time_constant_days = 0.0;
  ScalarBand time_constant_band;
};

struct TotalsRow {
  std::string age_group;
  double official_total = 0.0;       // raw counts; emitted in thousands
  double reconstructed_total = 0.0;  // raw counts
  ScalarBand total_band;
};

struct BandTable {
  std::string age_group;
  std::string quantity;  // e.g. "reconstructed_cases"
  Date start{};
  std::vector<double> percentiles;  // column order
  Eigen::MatrixXd values;           // time x percentiles
};

struct ReportTables {
  std::vector<KernelRow> kernel_table;
  std::vector<TotalsRow> totals_table;  // ten cohorts
  TotalsRow all_ages;
  FactorSeries daily_factor;
  std::vector<BandTable> bands;  // may be empty when bootstrap was skipped
  nlohmann::json summary;
};

// ---------------------------------------------------------------------------
// artifact records shared between pipeline stages
// ---------------------------------------------------------------------------

struct IdentRecord {
  std::string age_group;
  double alpha = 0.0;
  double beta = 0.0;
  int delay = 0;
  double gain = 0.0;
  double time_constant = 0.0;
  double mean_lag = 0.0;
  double rss = 0.0;
};

struct LambdaRecord {
  std::string age_group;
  double lambda = 0.0;
  double sigma2 = 0.0;
  int n_skipped = 0;
  bool fallback = false;  // sigma2 was degenerate; lambda set without Cp
};

struct BootstrapRecord {
  std::string age_group;
  // scalar name -> percentile label -> value (labels are format_double(p))
  std::map<std::string, std::map<std::string, double>> ident_scalars;
  std::map<std::string, double> total_band;
  int ident_requested = 0;
  int ident_failed = 0;
  int deconv_requested = 0;
  int deconv_failed = 0;
};

struct StageFailure {
  std::string age_group;
  std::string stage;
  std::string error;
};

struct ReconRow {
  Date date{};
  std::string age_group;
  double reconstructed = 0.0;
  double lo = std::numeric_limits<double>::quiet_NaN();
  double hi = std::numeric_limits<double>::quiet_NaN();
  double official = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline std::string percentile_label(double p) { return format_double(p); }

inline std::string csv_number(double v) {
  return std::isfinite(v) ? format_double(v) : std::string();
}

inline std::string fixed3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path.string());
  return out;
}

inline std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open for reading: " + path.string());
  return in;
}

inline void dump_json(const nlohmann::json& j, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

inline nlohmann::json load_json(const std::filesystem::path& path) {
  auto in = open_in(path);
  return nlohmann::json::parse(in);
}

inline nlohmann::json failures_json(const std::vector<StageFailure>& failures) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& f : failures) {
    arr.push_back({{"age_group", f.age_group}, {"stage", f.stage}, {"error", f.error}});
  }
  return arr;
}

inline std::vector<StageFailure> failures_from_json(const nlohmann::json& arr) {
  std::vector<StageFailure> out;
  for (const auto& f : arr) {
    out.push_back({f.at("age_group").get<std::string>(), f.value("stage", std::string()),
                   f.at("error").get<std::string>()});
  }
  return out;
}

}  // namespace detail

// ---------- ident.json ----------

inline void write_ident_json(const std::filesystem::path& path,
                             const std::vector<IdentRecord>& records,
                             const std::vector<StageFailure>& failures) {
  nlohmann::json j;
  j["cohorts"] = nlohmann::json::array();
  for (const auto& r : records) {
    j["cohorts"].push_back({{"age_group", r.age_group},
                            {"alpha", r.alpha},
                            {"beta", r.beta},
                            {"delay", r.delay},
                            {"gain", r.gain},
                            {"time_constant", r.time_constant},
                            {"mean_lag", r.mean_lag},
                            {"rss", r.rss}});
  }
  j["failures"] = detail::failures_json(failures);
  detail::dump_json(j, path);
}

inline std::pair<std::vector<IdentRecord>, std::vector<StageFailure>> read_ident_json(
    const std::filesystem::path& path) {
  const nlohmann::json j = detail::load_json(path);
  std::vector<IdentRecord> records;
  for (const auto& c : j.at("cohorts")) {
    IdentRecord r;
    r.age_group = c.at("age_group").get<std::string>();
    r.alpha = c.at("alpha").get<double>();
    r.beta = c.at("beta").get<double>();
    r.delay = c.at("delay").get<int>();
    r.gain = c.at("gain").get<double>();
    r.time_constant = c.at("time_constant").get<double>();
    r.mean_lag = c.at("mean_lag").get<double>();
    r.rss = c.at("rss").get<double>();
    records.push_back(std::move(r));
  }
  return {records, detail::failures_from_json(j.value("failures", nlohmann::json::array()))};
}

// ---------- lambda.json ----------

inline void write_lambda_json(const std::filesystem::path& path,
                              const std::vector<LambdaRecord>& records,
                              const std::vector<StageFailure>& failures) {
  nlohmann::json j;
  j["cohorts"] = nlohmann::json::array();
  for (const auto& r : records) {
    j["cohorts"].push_back({{"age_group", r.age_group},
                            {"lambda", r.lambda},
                            {"sigma2", r.sigma2},
                            {"n_skipped", r.n_skipped},
                            {"fallback", r.fallback}});
  }
  j["failures"] = detail::failures_json(failures);
  detail::dump_json(j, path);
}

inline std::pair<std::vector<LambdaRecord>, std::vector<StageFailure>> read_lambda_json(
    const std::filesystem::path& path) {
  const nlohmann::json j = detail::load_json(path);
  std::vector<LambdaRecord> records;
  for (const auto& c : j.at("cohorts")) {
    LambdaRecord r;
    r.age_group = c.at("age_group").get<std::string>();
    r.lambda = c.at("lambda").get<double>();
    r.sigma2 = c.at("sigma2").get<double>();
    r.n_skipped = c.value("n_skipped", 0);
    r.fallback = c.value("fallback", false);
    records.push_back(std::move(r));
  }
  return {records, detail::failures_from_json(j.value("failures", nlohmann::json::array()))};
}

// ---------- bootstrap.json ----------

inline void write_bootstrap_json(const std::filesystem::path& path,
                                 const std::vector<BootstrapRecord>& records,
                                 const std::vector<StageFailure>& failures) {
  nlohmann::json j;
  j["cohorts"] = nlohmann::json::array();
  for (const auto& r : records) {
    nlohmann::json scalars = nlohmann::json::object();
    for (const auto& [name, band] : r.ident_scalars) {
      nlohmann::json b = nlohmann::json::object();
      for (const auto& [p, v] : band) b[p] = v;
      scalars[name] = std::move(b);
    }
    nlohmann::json total = nlohmann::json::object();
    for (const auto& [p, v] : r.total_band) total[p] = v;
    j["cohorts"].push_back({{"age_group", r.age_group},
                            {"ident_scalars", std::move(scalars)},
                            {"total", std::move(total)},
                            {"ident_requested", r.ident_requested},
                            {"ident_failed", r.ident_failed},
                            {"deconv_requested", r.deconv_requested},
                            {"deconv_failed", r.deconv_failed}});
  }
  j["failures"] = detail::failures_json(failures);
  detail::dump_json(j, path);
}

inline std::pair<std::vector<BootstrapRecord>, std::vector<StageFailure>> read_bootstrap_json(
    const std::filesystem::path& path) {
  const nlohmann::json j = detail::load_json(path);
  std::vector<BootstrapRecord> records;
  for (const auto& c : j.at("cohorts")) {
    BootstrapRecord r;
    r.age_group = c.at("age_group").get<std::string>();
    for (const auto& [name, band] : c.at("ident_scalars").items()) {
      for (const auto& [p, v] : band.items()) {
        if (v.is_number()) r.ident_scalars[name][p] = v.get<double>();
      }
    }
    for (const auto& [p, v] : c.at("total").items()) {
      if (v.is_number()) r.total_band[p] = v.get<double>();
    }
    r.ident_requested = c.value("ident_requested", 0);
    r.ident_failed = c.value("ident_failed", 0);
    r.deconv_requested = c.value("deconv_requested", 0);
    r.deconv_failed = c.value("deconv_failed", 0);
    records.push_back(std::move(r));
  }
  return {records, detail::failures_from_json(j.value("failures", nlohmann::json::array()))};
}

// ---------- cp_curve_<label>.csv ----------

inline void write_cp_curve_csv(const std::filesystem::path& path, const std::vector<double>& lambdas,
                               const std::vector<double>& cps, const std::vector<double>& dofs,
                               const std::vector<double>& rss) {
  auto out = detail::open_out(path);
  out << "lambda,cp,dof,rss\n";
  for (size_t i = 0; i < lambdas.size(); ++i) {
    out << format_double(lambdas[i]) << ',' << format_double(cps[i]) << ','
        << format_double(dofs[i]) << ',' << format_double(rss[i]) << '\n';
  }
}

// ---------- band CSVs ----------

inline void write_band_csv(const std::filesystem::path& path, const BandTable& band) {
  auto out = detail::open_out(path);
  out << "date,quantity";
  for (double p : band.percentiles) out << ",p" << detail::percentile_label(p);
  out << '\n';
  for (Eigen::Index i = 0; i < band.values.rows(); ++i) {
    out << to_string(band.start + static_cast<int>(i)) << ',' << band.quantity;
    for (Eigen::Index k = 0; k < band.values.cols(); ++k) {
      out << ',' << detail::csv_number(band.values(i, k));
    }
    out << '\n';
  }
}

inline void write_kernel_band_csv(const std::filesystem::path& path,
                                  const std::vector<double>& percentiles,
                                  const Eigen::MatrixXd& values) {
  auto out = detail::open_out(path);
  out << "lag";
  for (double p : percentiles) out << ",p" << detail::percentile_label(p);
  out << '\n';
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    out << i;
    for (Eigen::Index k = 0; k < values.cols(); ++k) {
      out << ',' << detail::csv_number(values(i, k));
    }
    out << '\n';
  }
}

// ---------- reconstruction.csv ----------

inline void write_reconstruction_csv(const std::filesystem::path& path,
                                     const std::vector<ReconRow>& rows) {
  auto out = detail::open_out(path);
  out << "date,age_group,reconstructed_cases,lower_95,upper_95,official_cases\n";
  for (const auto& r : rows) {
    out << to_string(r.date) << ',' << r.age_group << ',' << detail::csv_number(r.reconstructed)
        << ',' << detail::csv_number(r.lo) << ',' << detail::csv_number(r.hi) << ','
        << detail::csv_number(r.official) << '\n';
  }
}

inline std::vector<ReconRow> read_reconstruction_csv(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw Error("empty reconstruction csv: " + path.string());
  std::vector<ReconRow> rows;
  const auto field_or_nan = [](const std::string& s) {
    return s.empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(s);
  };
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    size_t pos = 0;
    while (true) {
      const size_t c = line.find(',', pos);
      f.push_back(line.substr(pos, c == std::string::npos ? c : c - pos));
      if (c == std::string::npos) break;
      pos = c + 1;
    }
    if (f.size() != 6) throw Error("bad reconstruction row: " + line);
    ReconRow r;
    r.date = parse_date(f[0]);
    r.age_group = f[1];
    r.reconstructed = field_or_nan(f[2]);
    r.lo = field_or_nan(f[3]);
    r.hi = field_or_nan(f[4]);
    r.official = field_or_nan(f[5]);
    rows.push_back(std::move(r));
  }
  return rows;
}

// ---------- report tables ----------

/// Writes table1.csv, table2.csv, daily_factor.csv, summary.json and any
/// per-cohort band CSVs carried in `tables`. Totals are emitted in thousands
/// (rounded to integers) and the underestimation factor is recomputed from the
/// emitted, rounded columns so the printed table is internally consistent.
inline void emit_tables(const ReportTables& tables, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  {
    auto out = detail::open_out(dir / "table1.csv");
    out << "age_group,gain_pct,gain_pct_p2.5,gain_pct_p97.5,delay_days,"
           "time_constant_days,time_constant_p2.5,time_constant_p97.5\n";
    for (const auto& r : tables.kernel_table) {
      out << r.age_group << ',' << detail::csv_number(r.gain_pct) << ','
          << detail::csv_number(r.gain_pct_band.lo) << ','
          << detail::csv_number(r.gain_pct_band.hi) << ',' << r.delay_days << ','
          << detail::csv_number(r.time_constant_days) << ','
          << detail::csv_number(r.time_constant_band.lo) << ','
          << detail::csv_number(r.time_constant_band.hi) << '\n';
    }
  }

  {
    auto out = detail::open_out(dir / "table2.csv");
    out << "age_group,official_thousands,reconstructed_thousands,"
           "reconstructed_p2.5_thousands,reconstructed_p97.5_thousands,"
           "underestimation_factor\n";
    const auto row = [&](const TotalsRow& r) {
      const bool have_official = std::isfinite(r.official_total);
      const bool have_recon = std::isfinite(r.reconstructed_total);
      const long long official = have_official ? std::llround(r.official_total / 1000.0) : 0;
      const long long recon = have_recon ? std::llround(r.reconstructed_total / 1000.0) : 0;
      out << r.age_group << ',';
      if (have_official) out << official;
      out << ',';
      if (have_recon) out << recon;
      out << ',';
      if (std::isfinite(r.total_band.lo)) out << std::llround(r.total_band.lo / 1000.0);
      out << ',';
      if (std::isfinite(r.total_band.hi)) out << std::llround(r.total_band.hi / 1000.0);
      out << ',';
      if (have_official && have_recon && official > 0) {
        out << detail::fixed3(static_cast<double>(recon) / static_cast<double>(official));
      }
      out << '\n';
    };
    for (const auto& r : tables.totals_table) row(r);
    row(tables.all_ages);
  }

  {
    auto out = detail::open_out(dir / "daily_factor.csv");
    out << "date,factor\n";
    for (size_t i = 0; i < tables.daily_factor.values.size(); ++i) {
      out << to_string(tables.daily_factor.start + static_cast<int>(i)) << ','
          << detail::csv_number(tables.daily_factor.values[i]) << '\n';
    }
  }

  for (const auto& band : tables.bands) {
    write_band_csv(dir / ("bands_" + band.age_group + ".csv"), band);
  }

  detail::dump_json(tables.summary, dir / "summary.json");
}

}  // namespace retrocast
