#include "rydmix/scenarios.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <numeric>
#include <random>

namespace rydmix {

namespace {

constexpr double kNoiseFloorSigmas = 3.0;
constexpr double kRolloffFraction = 0.5;  // of E_AT
constexpr double kIsolationThresholdDb = -3.0;
constexpr std::uint64_t kFloorStream = 0x6e6f697365666c72ULL;
constexpr std::size_t kTracePoints = 1000;

std::ofstream open_output(const RunOptions& opts, const std::string& name) {
  std::filesystem::create_directories(opts.out_dir);
  const auto path = opts.out_dir / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write output file '" + path.string() + "'");
  return out;
}

double to_db(double ratio) { return 20.0 * std::log10(ratio); }

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

FieldScene scene_with(const ScenarioConfig& cfg, std::vector<BasebandTone> tones) {
  return {cfg.e_lo_vpm, std::move(tones), EnvelopeForm::exact};
}

BasebandTone sig_tone(const ScenarioConfig& cfg, double amplitude, double extra_if_hz = 0.0) {
  // Move the tone further from the LO by extra_if_hz, raising its beat frequency.
  const double side = cfg.f_sig_hz > cfg.f_lo_hz ? 1.0 : -1.0;
  const double f_tone = cfg.f_sig_hz + side * extra_if_hz;
  return {amplitude, cfg.f_lo_hz - f_tone, wrap_phase(cfg.phase_lo_rad - cfg.phase_sig_rad)};
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

double stddev_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0;
  for (const double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / double(v.size() - 1));
}

bool noise_active(const ScenarioConfig& cfg) { return cfg.noise_enabled && cfg.noise_density > 0; }

void write_lockin_trace(std::ostream& out, const LockInTrace& trace, const Metadata& meta) {
  write_metadata(out, meta);
  write_header(out, {"time_s", "r_volts", "theta_rad"});
  for (Eigen::Index i = 0; i < trace.r.size(); ++i) {
    write_row(out, {trace.r.time_at(i), trace.r.samples[i], trace.theta[i]});
  }
}

}  // namespace

Metadata base_metadata(const ScenarioConfig& cfg, const RunOptions& opts,
                       std::string_view scenario) {
  const LockInConfig lc = cfg.lockin_config();
  Metadata meta{
      {"scenario", std::string(scenario)},
      {"config_hash", config_hash(cfg)},
      {"seed", std::to_string(cfg.seed)},
      {"fc_convention", to_string(cfg.fc_convention)},
      {"poles", std::to_string(pole_count(cfg.slope_db_oct))},
      {"f_ref_hz", format_number(lc.f_ref)},
      {"tau_s", format_number(lc.time_constant)},
      {"cutoff_hz", format_number(cutoff_frequency(lc))},
  };
  for (const auto& w : scenario_warnings(cfg)) meta.emplace_back("warning", w);
  if (!opts.reproducible) meta.emplace_back("generated", utc_timestamp());
  return meta;
}

std::vector<std::string> scenario_warnings(const ScenarioConfig& cfg) {
  std::vector<std::string> warnings;
  if (auto w = cfg.tone_pair(0.0).detuning_warning()) warnings.push_back(*w);
  if (!in_far_field(cfg.link)) {
    warnings.push_back("horn distance " + format_number(cfg.link.distance_r) +
                       " m is inside the far-field distance " +
                       format_number(far_field_distance(cfg.link)) + " m");
  }
  return warnings;
}

// --- spectrum -------------------------------------------------------------------------------

std::vector<double> find_peaks(const Eigen::ArrayXd& x, const Eigen::ArrayXd& y) {
  std::vector<double> peaks;
  for (Eigen::Index i = 1; i + 1 < y.size(); ++i) {
    if (y[i] > y[i - 1] && y[i] >= y[i + 1]) {
      // Vertex of the parabola through the three samples (uniform grid).
      const double denom = y[i - 1] - 2.0 * y[i] + y[i + 1];
      const double shift = denom != 0 ? 0.5 * (y[i - 1] - y[i + 1]) / denom : 0.0;
      peaks.push_back(x[i] + shift * (x[i + 1] - x[i]));
    }
  }
  return peaks;
}

std::vector<SpectrumCurve> run_spectrum(const ScenarioConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  const auto model = cfg.eit_model();
  const double e_at = model.e_at();
  const Eigen::ArrayXd grid =
      Eigen::ArrayXd::LinSpaced(cfg.spectrum.points, -cfg.spectrum.span_hz / 2, cfg.spectrum.span_hz / 2);

  std::vector<SpectrumCurve> curves;
  for (const double multiple : cfg.spectrum.e_list_eat) {
    SpectrumCurve c;
    c.e_field = multiple * e_at;
    c.detuning_hz = grid;
    c.transmission = eit_spectrum(model, grid, c.e_field);
    c.peaks_hz = find_peaks(grid, c.transmission);
    if (c.peaks_hz.size() >= 2) c.peak_separation_hz = c.peaks_hz.back() - c.peaks_hz.front();
    curves.push_back(std::move(c));
  }

  if (opts.write_files) {
    const Metadata meta = base_metadata(cfg, opts, "spectrum");
    for (std::size_t k = 0; k < curves.size(); ++k) {
      auto out = open_output(opts, "spectrum_" + std::to_string(k) + ".csv");
      write_metadata(out, meta);
      write_metadata(out, {{"e_field_vpm", format_number(curves[k].e_field)},
                           {"e_over_e_at", format_number(cfg.spectrum.e_list_eat[k])}});
      write_header(out, {"coupling_detuning_hz", "transmission"});
      for (Eigen::Index i = 0; i < grid.size(); ++i) {
        write_row(out, {curves[k].detuning_hz[i], curves[k].transmission[i]});
      }
    }
    auto out = open_output(opts, "spectrum_peaks.csv");
    write_metadata(out, meta);
    write_header(out, {"e_field_vpm", "e_over_e_at", "n_peaks", "peak_separation_hz"});
    for (std::size_t k = 0; k < curves.size(); ++k) {
      write_row(out, {curves[k].e_field, cfg.spectrum.e_list_eat[k],
                      double(curves[k].peaks_hz.size()), curves[k].peak_separation_hz});
    }
  }
  return curves;
}

// --- IF traces ------------------------------------------------------------------------------

std::vector<IfTraceResult> run_if_trace(const ScenarioConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  const auto model = cfg.eit_model();
  PhotodiodeModel pd = cfg.photodiode();
  if (!cfg.iftrace.noise) pd.noise_density = 0.0;

  std::vector<IfTraceResult> results;
  for (std::size_t k = 0; k < cfg.iftrace.e_sig_vpm.size(); ++k) {
    IfTraceResult r;
    r.e_sig = cfg.iftrace.e_sig_vpm[k];
    r.envelope = synthesize_envelope_trace(cfg.tone_pair(r.e_sig), cfg.sample_rate_hz,
                                           cfg.iftrace.duration_s, cfg.iftrace.form);
    pd.rng_seed = derive_seed(cfg.seed, k);
    r.photodiode = photodiode_trace(model, pd, r.envelope);
    r.envelope_peak_to_peak = r.envelope.samples.maxCoeff() - r.envelope.samples.minCoeff();
    r.photodiode_if_amplitude = tone_amplitude(r.photodiode, cfg.if_frequency());
    r.fft_peak_hz = dominant_frequency(r.photodiode);
    results.push_back(std::move(r));
  }

  if (opts.write_files) {
    const Metadata meta = base_metadata(cfg, opts, "if-trace");
    for (std::size_t k = 0; k < results.size(); ++k) {
      const Metadata extra{{"e_sig_vpm", format_number(results[k].e_sig)},
                           {"e_lo_vpm", format_number(cfg.e_lo_vpm)}};
      Metadata all = meta;
      all.insert(all.end(), extra.begin(), extra.end());
      auto env = open_output(opts, "if_envelope_" + std::to_string(k) + ".csv");
      write_time_series(env, results[k].envelope, "value", all);
      auto pdf = open_output(opts, "if_photodiode_" + std::to_string(k) + ".csv");
      write_time_series(pdf, results[k].photodiode, "volts", all);
    }
    auto out = open_output(opts, "if_summary.csv");
    write_metadata(out, meta);
    write_header(out, {"e_sig_vpm", "envelope_pp_vpm", "photodiode_if_v", "fft_peak_hz"});
    for (const auto& r : results) {
      write_row(out, {r.e_sig, r.envelope_peak_to_peak, r.photodiode_if_amplitude, r.fft_peak_hz});
    }
  }
  return results;
}

// --- weak-field sweep -----------------------------------------------------------------------

std::string regime_flag_string(unsigned flags) {
  if (flags == kRegimeSignal) return "signal";
  std::string s;
  const auto add = [&s](const char* name) {
    if (!s.empty()) s += '|';
    s += name;
  };
  if (flags & kRegimeNoiseFloor) add("noise_floor");
  if (flags & kRegimeAtRolloff) add("at_rolloff");
  if (flags & kRegimeStrongSignal) add("strong_signal");
  return s;
}

double WeakFieldRow::sqrt_p_rf() const { return std::sqrt(p_rf_watts); }

SweepResult run_weak_field_sweep(const ScenarioConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  const DetectionChain chain = cfg.detection_chain();
  const double duration = cfg.measurement_duration();
  const double e_at = chain.eit.e_at();
  const bool noisy = noise_active(cfg);
  const std::size_t averages = noisy ? std::size_t(cfg.sweep.averages) : 1;

  SweepResult result;
  const std::vector<double> values = cfg.sweep.values();
  result.rows.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto& row = result.rows[i];
    row.sweep_value = values[i];
    if (cfg.sweep.domain == "power_dbm") {
      PowerChain<double> pc{values[i], cfg.chain_losses_db};
      row.p_rf_watts = dbm_to_watts(chain_output_dbm(pc));
      row.e_cell = e_cell(row.p_rf_watts, cfg.link, cfg.cell());
    } else {
      row.e_cell = values[i];
      row.p_rf_watts = power_for_e_cell(row.e_cell, cfg.link, cfg.cell());
    }
  }

  // Sweep jobs (point x average) and zero-signal floor jobs share one pool.
  const std::size_t n_sweep = values.size() * averages;
  const std::size_t n_floor = noisy ? std::size_t(cfg.sweep.floor_runs) : 0;
  std::vector<double> sweep_r(n_sweep);
  std::vector<double> floor_r(n_floor);
  parallel_for(n_sweep + n_floor, cfg.threads, [&](std::size_t job) {
    if (job < n_sweep) {
      const std::size_t point = job / averages;
      const std::size_t avg = job % averages;
      const auto scene = scene_with(cfg, {sig_tone(cfg, result.rows[point].e_cell)});
      sweep_r[job] = measure(chain, scene, duration, derive_seed(derive_seed(cfg.seed, point), avg)).r;
    } else {
      const std::size_t k = job - n_sweep;
      floor_r[k] = measure(chain, scene_with(cfg, {}), duration,
                           derive_seed(cfg.seed ^ kFloorStream, k)).r;
    }
  });
  for (std::size_t i = 0; i < values.size(); ++i) {
    double sum = 0;
    for (std::size_t a = 0; a < averages; ++a) sum += sweep_r[i * averages + a];
    result.rows[i].lockin_r = sum / double(averages);
  }

  result.floor_mean = mean_of(floor_r);
  result.floor_std = stddev_of(floor_r);
  result.threshold =
      result.floor_mean + kNoiseFloorSigmas * result.floor_std / std::sqrt(double(averages));

  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return result.rows[a].e_cell < result.rows[b].e_cell;
  });

  for (auto& row : result.rows) {
    if (row.e_cell > kRolloffFraction * e_at) row.flags |= kRegimeAtRolloff;
    if (row.e_cell >= cfg.e_lo_vpm) row.flags |= kRegimeStrongSignal;
  }

  std::optional<std::size_t> last_below;  // position in `order`
  if (result.threshold > 0) {
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      const auto& row = result.rows[order[pos]];
      if (row.flags & kRegimeAtRolloff) break;
      if (row.lockin_r < result.threshold) last_below = pos;
    }
  }
  if (last_below) {
    for (std::size_t pos = 0; pos <= *last_below; ++pos) {
      result.rows[order[pos]].flags |= kRegimeNoiseFloor;
    }
    if (*last_below + 1 < order.size()) {
      const auto& lo = result.rows[order[*last_below]];
      const auto& hi = result.rows[order[*last_below + 1]];
      const double lr0 = std::log(std::max(lo.lockin_r, 1e-300));
      const double lr1 = std::log(hi.lockin_r);
      const double frac = lr1 > lr0 ? (std::log(result.threshold) - lr0) / (lr1 - lr0) : 0.0;
      result.knee_e_cell = std::exp(std::log(lo.e_cell) +
                                    std::clamp(frac, 0.0, 1.0) *
                                        (std::log(hi.e_cell) - std::log(lo.e_cell)));
    }
  }

  result.metadata = base_metadata(cfg, opts, "sweep-weakfield");
  result.metadata.emplace_back("e_lo_vpm", format_number(cfg.e_lo_vpm));
  result.metadata.emplace_back("e_at_vpm", format_number(e_at));
  result.metadata.emplace_back("noise_density_v_rthz",
                               format_number(noisy ? cfg.noise_density : 0.0));
  result.metadata.emplace_back("averages", std::to_string(averages));
  result.metadata.emplace_back("floor_mean_v", format_number(result.floor_mean));
  result.metadata.emplace_back("floor_std_v", format_number(result.floor_std));
  result.metadata.emplace_back("floor_threshold_v", format_number(result.threshold));
  if (result.knee_e_cell) {
    const double knee = *result.knee_e_cell;
    // Calibration budget and floor-estimate scatter are reported separately.
    const double floor_rel = result.floor_mean > 0
                                 ? result.floor_std / result.floor_mean /
                                       std::sqrt(double(std::max<std::size_t>(n_floor, 1)))
                                 : 0.0;
    result.metadata.emplace_back("knee_e_cell_vpm", format_number(knee));
    result.metadata.emplace_back("knee_calibration_unc_vpm", format_number(0.05 * knee));
    result.metadata.emplace_back("knee_floor_unc_vpm", format_number(floor_rel * knee));
  } else {
    result.metadata.emplace_back("knee_e_cell_vpm", "none");
  }

  if (opts.write_files) {
    auto out = open_output(opts, "weakfield.csv");
    write_metadata(out, result.metadata);
    write_header(out, {"sqrt_p_rf_sqrtw", "e_cell_vpm", "lockin_r_v", "regime_flag"});
    for (const auto& row : result.rows) {
      write_row(out, {format_number(row.sqrt_p_rf()), format_number(row.e_cell),
                      format_number(row.lockin_r), regime_flag_string(row.flags)});
    }
  }
  return result;
}

NoiseCalibration calibrate_noise_density(ScenarioConfig cfg, double target_knee,
                                         std::span<const std::uint64_t> seeds,
                                         const CalibrationProgress& progress) {
  if (seeds.empty()) throw ConfigError("calibrate_noise_density: need at least one seed");
  if (!(target_knee > 0)) throw DomainError("calibrate_noise_density: target must be positive");
  cfg.noise_enabled = true;
  if (!(cfg.noise_density > 0)) cfg.noise_density = kDefaultNoiseDensity;

  RunOptions quiet;
  quiet.write_files = false;
  quiet.reproducible = true;

  // Typical knee over the seeds; nullopt with the direction when it leaves the sweep range.
  const auto evaluate = [&](double density, int& out_of_range) -> std::optional<double> {
    cfg.noise_density = density;
    std::vector<double> knees;
    for (const auto s : seeds) {
      cfg.seed = s;
      const auto sweep = run_weak_field_sweep(cfg, quiet);
      if (!sweep.knee_e_cell) {
        const bool any_floor = std::any_of(sweep.rows.begin(), sweep.rows.end(), [](const auto& r) {
          return (r.flags & kRegimeNoiseFloor) != 0;
        });
        out_of_range = any_floor ? 1 : -1;
        return std::nullopt;
      }
      knees.push_back(*sweep.knee_e_cell);
    }
    // Geometric mean: each seed's knee jumps between sweep points as the density moves, and
    // a median would inherit whole jumps.
    double log_sum = 0;
    for (const double k : knees) log_sum += std::log(k);
    return std::exp(log_sum / double(knees.size()));
  };

  // With fixed seeds the knee is monotone in the density but jumps between sweep points, so
  // bracket first and then bisect in log density, keeping the closest evaluation.
  constexpr int kMaxIterations = 40;
  constexpr double kKneeTolerance = 0.02;
  double density = cfg.noise_density;
  double lo = 0.0, hi = 0.0;  // densities with knee below / above the target
  NoiseCalibration best;
  double best_err = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= kMaxIterations; ++it) {
    int out_of_range = 0;
    const auto knee = evaluate(density, out_of_range);
    if (progress) progress(density, knee);
    if (!knee) {
      if (out_of_range > 0) {
        hi = hi > 0 ? std::min(hi, density) : density;
      } else {
        lo = std::max(lo, density);
      }
    } else {
      const double err = std::abs(*knee / target_knee - 1.0);
      if (err < best_err) {
        best_err = err;
        best = {density, *knee, it};
      }
      if (err < kKneeTolerance) return best;
      if (*knee < target_knee) {
        lo = std::max(lo, density);
      } else {
        hi = hi > 0 ? std::min(hi, density) : density;
      }
    }
    if (lo > 0 && hi > 0) {
      if (hi / lo < 1.0 + 1e-3) break;
      density = std::sqrt(lo * hi);
    } else if (knee) {
      density *= target_knee / *knee;
    } else {
      density *= out_of_range > 0 ? 0.1 : 10.0;
    }
    best.iterations = it;
  }
  if (best_err < 0.05) return best;
  throw NumericalError("noise calibration did not converge (closest knee " +
                       format_number(best.knee) +
                       " V/m); check that the sweep range brackets the target");
}

// --- isolation ------------------------------------------------------------------------------

IsolationResult run_isolation_sweep(const ScenarioConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  DetectionChain clean = cfg.detection_chain();
  clean.photodiode.noise_density = 0.0;
  const DetectionChain noisy_chain = cfg.detection_chain();
  const double duration = cfg.measurement_duration();
  const double e_o = cfg.isolation.e_o_vpm;
  const auto& spec = cfg.isolation;

  const std::size_t n_ratio = std::size_t(spec.ratio_points);
  std::vector<double> ratios(n_ratio);
  for (std::size_t i = 0; i < n_ratio; ++i) {
    ratios[i] = spec.ratio_start_db +
                (spec.ratio_stop_db - spec.ratio_start_db) * double(i) / double(n_ratio - 1);
  }

  IsolationResult result;
  const std::size_t stride =
      std::max<std::size_t>(1, std::size_t(duration * cfg.sample_rate_hz) / kTracePoints);
  const Demodulation reference =
      measure_traced(clean, scene_with(cfg, {sig_tone(cfg, e_o)}), duration, 0, stride);
  result.reference_r = reference.output.r;
  if (!(result.reference_r > 0)) throw NumericalError("isolation: in-tune response is zero");

  const std::size_t n_det = spec.detunings_hz.size();
  const std::size_t n_curve_jobs = n_det * n_ratio * 2;
  const std::size_t n_floor = noise_active(cfg) ? std::size_t(spec.floor_runs) : 0;
  std::vector<double> leak(n_det * n_ratio);
  std::vector<double> comb(n_det * n_ratio);
  std::vector<double> floor_r(n_floor);
  parallel_for(n_curve_jobs + n_floor, cfg.threads, [&](std::size_t job) {
    if (job < n_curve_jobs) {
      const std::size_t idx = job / 2;
      const std::size_t d = idx / n_ratio;
      const std::size_t i = idx % n_ratio;
      const double e_delta = e_o * std::pow(10.0, ratios[i] / 20.0);
      const BasebandTone interferer = sig_tone(cfg, e_delta, spec.detunings_hz[d]);
      if (job % 2 == 0) {
        leak[idx] = measure(clean, scene_with(cfg, {interferer}), duration, 0).r;
      } else {
        comb[idx] =
            measure(clean, scene_with(cfg, {sig_tone(cfg, e_o), interferer}), duration, 0).r;
      }
    } else {
      const std::size_t k = job - n_curve_jobs;
      floor_r[k] = measure(noisy_chain, scene_with(cfg, {}), duration,
                           derive_seed(cfg.seed ^ kFloorStream, k)).r;
    }
  });

  result.floor_r = mean_of(floor_r);
  result.floor_db = result.floor_r > 0 ? to_db(result.floor_r / result.reference_r)
                                       : -std::numeric_limits<double>::infinity();

  for (std::size_t d = 0; d < n_det; ++d) {
    IsolationCurve curve;
    curve.detuning_hz = spec.detunings_hz[d];
    for (std::size_t i = 0; i < n_ratio; ++i) {
      const std::size_t idx = d * n_ratio + i;
      IsolationRow row;
      row.ratio_db = ratios[i];
      row.e_delta = e_o * std::pow(10.0, ratios[i] / 20.0);
      row.leakage_r = leak[idx];
      row.leakage_db = to_db(std::max(leak[idx], 1e-300) / result.reference_r);
      row.combined_db = to_db(comb[idx] / result.reference_r);
      row.normalized_db = to_db(std::max({leak[idx], result.floor_r, 1e-300}) / result.reference_r);
      curve.rows.push_back(row);
    }
    for (std::size_t i = 0; i < n_ratio; ++i) {
      if (curve.rows[i].normalized_db >= kIsolationThresholdDb) {
        if (i == 0) {
          curve.crossing_db = curve.rows[0].ratio_db;
          curve.crossing_at_start = true;
        } else {
          const auto& a = curve.rows[i - 1];
          const auto& b = curve.rows[i];
          const double frac = (kIsolationThresholdDb - a.normalized_db) /
                              (b.normalized_db - a.normalized_db);
          curve.crossing_db = a.ratio_db + frac * (b.ratio_db - a.ratio_db);
        }
        break;
      }
    }
    result.curves.push_back(std::move(curve));
  }

  const double p_e_o = power_for_e_cell(e_o, cfg.link, cfg.cell());
  result.metadata = base_metadata(cfg, opts, "isolation");
  result.metadata.emplace_back("e_o_vpm", format_number(e_o));
  result.metadata.emplace_back("e_lo_vpm", format_number(cfg.e_lo_vpm));
  result.metadata.emplace_back("setpoint_dbm", format_number(spec.setpoint_dbm));
  result.metadata.emplace_back("implied_chain_loss_db",
                               format_number(spec.setpoint_dbm - watts_to_dbm(p_e_o)));
  result.metadata.emplace_back("reference_r_v", format_number(result.reference_r));
  result.metadata.emplace_back("floor_r_v", format_number(result.floor_r));
  result.metadata.emplace_back("floor_db", format_number(result.floor_db));

  if (opts.write_files) {
    for (std::size_t d = 0; d < result.curves.size(); ++d) {
      const auto& curve = result.curves[d];
      auto out = open_output(opts, "isolation_" + std::to_string(d) + ".csv");
      write_metadata(out, result.metadata);
      write_metadata(out, {{"detuning_hz", format_number(curve.detuning_hz)},
                           {"rejection_db", format_number(rejection_db(clean.lockin, curve.detuning_hz))}});
      write_header(out, {"ratio_db", "e_delta_vpm", "leakage_r_v", "leakage_db", "combined_db",
                         "normalized_db"});
      for (const auto& row : curve.rows) {
        write_row(out, {row.ratio_db, row.e_delta, row.leakage_r, row.leakage_db, row.combined_db,
                        row.normalized_db});
      }
    }
    auto out = open_output(opts, "isolation_summary.csv");
    write_metadata(out, result.metadata);
    write_header(out, {"detuning_hz", "crossing_db", "status"});
    for (const auto& curve : result.curves) {
      const std::string status = !curve.crossing_db     ? "not_reached"
                                 : curve.crossing_at_start ? "at_start"
                                                           : "crossed";
      write_row(out, {format_number(curve.detuning_hz),
                      curve.crossing_db ? format_number(*curve.crossing_db) : std::string("none"),
                      status});
    }
    if (reference.trace) {
      auto tr = open_output(opts, "isolation_reference_lockin.csv");
      write_lockin_trace(tr, *reference.trace, result.metadata);
    }
  }
  return result;
}

// --- link budget / calibration --------------------------------------------------------------

std::vector<LinkBudgetRow> run_linkbudget(const ScenarioConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  std::vector<LinkBudgetRow> rows;
  const auto& spec = cfg.linkbudget;
  for (int i = 0; i < spec.points; ++i) {
    const double gen = spec.start_dbm + (spec.stop_dbm - spec.start_dbm) * double(i) /
                                            double(spec.points - 1);
    LinkBudgetRow row;
    row.p_dbm = chain_output_dbm(PowerChain<double>{gen, cfg.chain_losses_db});
    row.p_watts = dbm_to_watts(row.p_dbm);
    row.e_ff = e_far_field(row.p_watts, cfg.link);
    row.e_cell = e_cell(row.p_watts, cfg.link, cfg.cell());
    rows.push_back(row);
  }
  if (opts.write_files) {
    auto out = open_output(opts, "linkbudget.csv");
    write_metadata(out, base_metadata(cfg, opts, "linkbudget"));
    write_metadata(out, {{"far_field_distance_m", format_number(far_field_distance(cfg.link))}});
    write_header(out, {"p_dbm", "p_watts", "e_ff_vpm", "e_cell_vpm"});
    for (const auto& r : rows) write_row(out, {r.p_dbm, r.p_watts, r.e_ff, r.e_cell});
  }
  return rows;
}

std::vector<CalibrationPoint> synthetic_calibration_points(const ScenarioConfig& cfg,
                                                           std::size_t n, double rel_noise,
                                                           std::uint64_t seed) {
  const auto transition = cfg.transition();
  const double e_at = min_detectable_at_field(transition);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<CalibrationPoint> points;
  points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double frac = n > 1 ? double(i) / double(n - 1) : 0.0;
    const double target = e_at * std::pow(10.0, frac);  // E_AT .. 10 E_AT
    const double p_rf = power_for_e_cell(target, cfg.link, cfg.cell());
    const double e_true = e_cell(p_rf, cfg.link, cfg.cell());
    const double e_meas = e_true * (1.0 + rel_noise * normal(rng));
    points.push_back(
        make_calibration_point(p_rf, at_splitting(e_meas, transition), cfg.link, transition));
  }
  return points;
}

CalibrationReport run_calibrate(const ScenarioConfig& cfg, const RunOptions& opts,
                                std::span<const CalibrationPoint> points) {
  cfg.validate();
  CalibrationReport rep;
  rep.cell_factor = fit_cell_factor(points);
  rep.free_fit = fit_log_log(points);
  rep.n_points = points.size();
  const double components[] = {gain_field_uncertainty(cfg.link),
                               rep.cell_factor.fit_uncertainty / rep.cell_factor.value, 0.05};
  rep.field_rel_uncertainty = combine_uncertainty(components);

  if (opts.write_files) {
    auto out = open_output(opts, "calibration.csv");
    write_metadata(out, base_metadata(cfg, opts, "calibrate"));
    write_metadata(out, {{"free_slope", format_number(rep.free_fit.slope)},
                         {"free_intercept_log10", format_number(rep.free_fit.intercept)},
                         {"free_r_squared", format_number(rep.free_fit.r_squared)},
                         {"field_rel_uncertainty", format_number(rep.field_rel_uncertainty)}});
    write_header(out, {"c_f", "fit_uncertainty", "n_points"});
    write_row(out, {rep.cell_factor.value, rep.cell_factor.fit_uncertainty, double(rep.n_points)});
  }
  return rep;
}

}  // namespace rydmix
