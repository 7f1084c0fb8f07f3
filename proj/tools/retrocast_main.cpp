#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <retrocast/retrocast.hpp>

namespace {

int stage_exit(std::size_t n_ok, const std::vector<retrocast::StageFailure>& failures) {
  if (n_ok == 0 && !failures.empty()) return 1;
  return failures.empty() ? 0 : 2;
}

void print_failures(const std::vector<retrocast::StageFailure>& failures) {
  for (const auto& f : failures) {
    std::cerr << "  [" << f.stage << "] " << f.age_group << ": " << f.error << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reconstruction of under-reported daily case series from hospital admissions"};
  app.require_subcommand(1);
  app.fallthrough();  // accept the shared flags after the subcommand too
  app.set_config("--config", "", "TOML config file; command-line flags override it");

  retrocast::PipelineConfig cfg;
  std::string penalty = "second_difference";
  std::string loss = "quadratic";
  std::string fw_start = "2020-01-07";
  std::string fw_end = "2020-05-15";
  std::string sw_start = "2020-10-01";
  std::string sw_end = "2020-12-15";
  bool raw_ident = false;
  std::uint64_t seed = 0;

  app.add_option("--data", cfg.data_csv, "input CSV: date,age_group,quantity,value");
  app.add_option("--population", cfg.population_csv, "population CSV: age_group,population");
  app.add_option("--out", cfg.output_dir, "output directory")->capture_default_str();
  app.add_option("--penalty", penalty, "ridge | first_difference | second_difference")
      ->capture_default_str();
  app.add_option("--pre-window", cfg.pre_window_L, "pre-window unknowns L")
      ->capture_default_str();
  app.add_option("--loss", loss, "quadratic | l1")->capture_default_str();
  app.add_option("--first-wave-start", fw_start)->capture_default_str();
  app.add_option("--first-wave-end", fw_end)->capture_default_str();
  app.add_option("--second-wave-start", sw_start)->capture_default_str();
  app.add_option("--second-wave-end", sw_end)->capture_default_str();
  app.add_option("--sigma2-degree", cfg.sigma2_degree, "polynomial degree for the noise fit")
      ->capture_default_str();
  app.add_option("--n-lambda", cfg.n_lambda, "lambda grid size")->capture_default_str();
  app.add_option("--delay-min", cfg.ident.delay_min, "smallest delay searched")
      ->capture_default_str();
  app.add_option("--delay-max", cfg.ident.delay_max, "largest delay searched")
      ->capture_default_str();
  app.add_flag("--share-lambda", cfg.share_lambda, "use one lambda for all cohorts");
  app.add_flag("--reselect-lambda", cfg.reselect_lambda,
               "re-run Cp selection inside every bootstrap replicate");
  app.add_flag("--raw-ident", raw_ident, "identify on raw instead of smoothed series");
  app.add_option("--replicates-ident", cfg.bootstrap.n_replicates_ident,
                 "identification bootstrap replicates")
      ->capture_default_str();
  app.add_option("--replicates-deconv", cfg.bootstrap.n_replicates_deconv,
                 "reconstruction bootstrap replicates")
      ->capture_default_str();
  app.add_option("--kernel-band-horizon", cfg.bootstrap.kernel_band_horizon,
                 "days of pointwise kernel bands")
      ->capture_default_str();

  auto* sub_pre = app.add_subcommand("preprocess", "validate and smooth the raw series");
  auto* sub_id = app.add_subcommand("identify", "fit the kernel per cohort (second wave)");
  auto* sub_sel = app.add_subcommand("select-lambda", "choose lambda by Mallows Cp");
  auto* sub_dec = app.add_subcommand("deconvolve", "reconstruct first-wave inputs");
  auto* sub_boot = app.add_subcommand("bootstrap", "wild/double-wild bootstrap bands");
  auto* sub_rep = app.add_subcommand("report", "emit tables and summaries");
  auto* sub_all = app.add_subcommand("run-all", "full pipeline end to end");
  sub_boot->add_option("--seed", seed, "bootstrap seed")->required();
  sub_all->add_option("--seed", seed, "bootstrap seed")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    cfg.penalty = retrocast::penalty_from_string(penalty);
    if (loss == "quadratic") {
      cfg.loss = retrocast::DeconvLoss::quadratic;
    } else if (loss == "l1") {
      cfg.loss = retrocast::DeconvLoss::l1;
    } else {
      throw retrocast::Error("unknown loss: " + loss);
    }
    cfg.first_wave = {retrocast::parse_date(fw_start), retrocast::parse_date(fw_end)};
    cfg.second_wave = {retrocast::parse_date(sw_start), retrocast::parse_date(sw_end)};
    cfg.smooth_for_ident = !raw_ident;
    cfg.bootstrap.seed = seed;

    if (sub_pre->parsed()) {
      const retrocast::CohortDataset ds = retrocast::run_preprocess(cfg);
      std::cout << "smoothed " << ds.series.size() << " series across " << ds.cohorts.size()
                << " cohorts\n";
      return 0;
    }
    if (sub_id->parsed()) {
      const auto [records, failures] = retrocast::run_identify(cfg);
      std::cout << "identified " << records.size() << " cohorts, " << failures.size()
                << " failures\n";
      print_failures(failures);
      return stage_exit(records.size(), failures);
    }
    if (sub_sel->parsed()) {
      const auto [records, failures] = retrocast::run_select_lambda(cfg);
      std::cout << "selected lambda for " << records.size() << " cohorts, " << failures.size()
                << " failures\n";
      print_failures(failures);
      return stage_exit(records.size(), failures);
    }
    if (sub_dec->parsed()) {
      const auto [rows, failures] = retrocast::run_deconvolve(cfg);
      std::cout << "reconstructed " << rows.size() << " rows, " << failures.size()
                << " failures\n";
      print_failures(failures);
      return stage_exit(rows.size(), failures);
    }
    if (sub_boot->parsed()) {
      const auto [records, failures] = retrocast::run_bootstrap(cfg);
      std::cout << "bootstrapped " << records.size() << " cohorts, " << failures.size()
                << " failures\n";
      print_failures(failures);
      return stage_exit(records.size(), failures);
    }
    if (sub_rep->parsed()) {
      const retrocast::PipelineResult r = retrocast::run_report(cfg);
      std::cout << "report written for " << r.n_succeeded << "/" << r.n_attempted
                << " cohorts\n";
      print_failures(r.failures);
      return retrocast::exit_code(r);
    }
    const retrocast::PipelineResult r = retrocast::run_pipeline(cfg);
    std::cout << "pipeline finished: " << r.n_succeeded << "/" << r.n_attempted
              << " cohorts\n";
    print_failures(r.failures);
    return retrocast::exit_code(r);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
