#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "rydmix/errors.hpp"
#include "rydmix/scenarios.hpp"

namespace {

enum ExitCode : int { kOk = 0, kConfigFailure = 2, kNumericalFailure = 3 };

struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  bool reproducible = false;
  std::string fc_convention;
  std::vector<std::string> overrides;
  std::optional<unsigned> threads;
};

rydmix::ScenarioConfig resolve_config(const GlobalOptions& g) {
  rydmix::ScenarioConfig cfg = g.config_path.empty() ? rydmix::ScenarioConfig{}
                                                     : rydmix::parse_config(g.config_path);
  for (const auto& o : g.overrides) rydmix::apply_override(cfg, o);
  if (g.seed) cfg.seed = *g.seed;
  if (!g.fc_convention.empty()) cfg.fc_convention = rydmix::parse_cutoff_convention(g.fc_convention);
  if (g.threads) cfg.threads = *g.threads;
  cfg.validate();
  return cfg;
}

void print_warnings(const rydmix::ScenarioConfig& cfg) {
  for (const auto& w : rydmix::scenario_warnings(cfg)) std::cerr << "warning: " << w << '\n';
}

using rydmix::format_number;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rydberg-atom mixer simulator: regenerates spectra, IF traces, sweeps as CSV"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--config", g.config_path, "flat section.key = value config file")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "base RNG seed");
  app.add_option("--out", g.out_dir, "output directory")->capture_default_str();
  app.add_flag("--reproducible", g.reproducible, "omit timestamps from output metadata");
  app.add_option("--fc-convention", g.fc_convention, "lock-in cutoff convention")
      ->check(CLI::IsMember({"inv-tau", "inv-2pi-tau"}));
  app.add_option("--set", g.overrides, "override a config key, section.key=value")
      ->allow_extra_args(false);
  app.add_option("--threads", g.threads, "worker threads (0 = hardware concurrency)");

  auto* spectrum = app.add_subcommand("spectrum", "EIT/AT probe spectra");
  auto* if_trace = app.add_subcommand("if-trace", "envelope and photodiode IF traces");
  auto* sweep = app.add_subcommand("sweep-weakfield", "lock-in response vs signal power");
  auto* isolation = app.add_subcommand("isolation", "neighbouring-signal isolation sweep");
  auto* linkbudget = app.add_subcommand("linkbudget", "generator power to field at the cell");

  auto* calibrate = app.add_subcommand("calibrate", "fit the cell factor");
  std::string cal_input;
  std::size_t cal_points = 20;
  double cal_noise = 0.05;
  calibrate->add_option("--input", cal_input, "CSV of p_rf_dbm,delta_f_hz or e_ff_vpm,e_cell_vpm")
      ->check(CLI::ExistingFile);
  calibrate->add_option("--points", cal_points, "synthetic points when no input is given")
      ->capture_default_str();
  calibrate->add_option("--rel-noise", cal_noise, "synthetic multiplicative noise")
      ->capture_default_str();

  auto* cal_noise_cmd =
      app.add_subcommand("calibrate-noise", "fit the photodiode noise density to a knee field");
  double knee_target = rydmix::kTargetKneeField;
  std::size_t cal_seeds = 5;
  cal_noise_cmd->add_option("--target", knee_target, "knee field at the cell, V/m")
      ->capture_default_str();
  cal_noise_cmd->add_option("--seeds", cal_seeds, "number of calibration seeds")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigFailure;
  }

  try {
    const rydmix::ScenarioConfig cfg = resolve_config(g);
    print_warnings(cfg);
    rydmix::RunOptions opts;
    opts.out_dir = g.out_dir;
    opts.reproducible = g.reproducible;

    if (spectrum->parsed()) {
      for (const auto& c : rydmix::run_spectrum(cfg, opts)) {
        std::cout << "E=" << format_number(c.e_field) << " V/m  peaks=" << c.peaks_hz.size()
                  << "  separation_hz=" << format_number(c.peak_separation_hz) << '\n';
      }
    } else if (if_trace->parsed()) {
      for (const auto& r : rydmix::run_if_trace(cfg, opts)) {
        std::cout << "E_sig=" << format_number(r.e_sig)
                  << " V/m  envelope_pp=" << format_number(r.envelope_peak_to_peak)
                  << "  fft_peak_hz=" << format_number(r.fft_peak_hz) << '\n';
      }
    } else if (sweep->parsed()) {
      const auto res = rydmix::run_weak_field_sweep(cfg, opts);
      std::cout << "points=" << res.rows.size() << "  floor_v=" << format_number(res.floor_mean)
                << "  threshold_v=" << format_number(res.threshold) << "  knee_e_cell_vpm="
                << (res.knee_e_cell ? format_number(*res.knee_e_cell) : std::string("none"))
                << '\n';
    } else if (isolation->parsed()) {
      const auto res = rydmix::run_isolation_sweep(cfg, opts);
      std::cout << "reference_r_v=" << format_number(res.reference_r)
                << "  floor_db=" << format_number(res.floor_db) << '\n';
      for (const auto& c : res.curves) {
        std::cout << "detuning_hz=" << format_number(c.detuning_hz) << "  crossing_db="
                  << (c.crossing_db ? format_number(*c.crossing_db) : std::string("none"))
                  << (c.crossing_at_start ? " (at start)" : "") << '\n';
      }
    } else if (linkbudget->parsed()) {
      const auto rows = rydmix::run_linkbudget(cfg, opts);
      std::cout << "rows=" << rows.size() << "  far_field_distance_m="
                << format_number(rydmix::far_field_distance(cfg.link)) << '\n';
    } else if (calibrate->parsed()) {
      std::vector<rydmix::CalibrationPoint> points;
      if (!cal_input.empty()) {
        std::ifstream in(cal_input);
        points = rydmix::read_calibration_csv(in, cfg.link, cfg.transition());
      } else {
        points = rydmix::synthetic_calibration_points(cfg, cal_points, cal_noise, cfg.seed);
      }
      const auto rep = rydmix::run_calibrate(cfg, opts, points);
      std::cout << "c_f=" << format_number(rep.cell_factor.value)
                << "  fit_uncertainty=" << format_number(rep.cell_factor.fit_uncertainty)
                << "  n_points=" << rep.n_points << "  free_slope="
                << format_number(rep.free_fit.slope) << '\n';
    } else if (cal_noise_cmd->parsed()) {
      std::vector<std::uint64_t> seeds(cal_seeds);
      for (std::size_t i = 0; i < cal_seeds; ++i) seeds[i] = rydmix::derive_seed(cfg.seed, i);
      const auto cal = rydmix::calibrate_noise_density(
          cfg, knee_target, seeds, [](double density, std::optional<double> knee) {
            std::cerr << "density " << format_number(density) << " V/rtHz -> knee "
                      << (knee ? format_number(*knee) + " V/m" : std::string("out of range"))
                      << '\n';
          });
      std::cout << "noise_density_v_rthz=" << format_number(cal.noise_density)
                << "  knee_vpm=" << format_number(cal.knee)
                << "  iterations=" << cal.iterations << '\n';
    }
  } catch (const rydmix::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigFailure;
  } catch (const rydmix::UnitError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumericalFailure;
  }
  return kOk;
}
