#include "rydmix/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "rydmix/csv.hpp"

namespace rydmix {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(std::string_view key, std::string_view text) {
  double value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) {
    throw ConfigError("key '" + std::string(key) + "': '" + std::string(text) +
                          "' is not a finite number",
                      std::string(key));
  }
  return value;
}

template <typename Int>
Int parse_int(std::string_view key, std::string_view text) {
  Int value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ConfigError("key '" + std::string(key) + "': '" + std::string(text) +
                          "' is not an integer",
                      std::string(key));
  }
  return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "on" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "off" || text == "0" || text == "no") return false;
  throw ConfigError("key '" + std::string(key) + "': '" + std::string(text) +
                        "' is not a boolean (true/false)",
                    std::string(key));
}

std::vector<double> parse_list(std::string_view key, std::string_view text) {
  std::vector<double> out;
  if (trim(text).empty()) return out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = text.find(',', pos);
    out.push_back(parse_double(key, trim(text.substr(pos, comma - pos))));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::string format_list(const std::vector<double>& values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) s += ',';
    s += format_number(values[i]);
  }
  return s;
}

struct Entry {
  std::string_view key;
  std::function<void(ScenarioConfig&, std::string_view key, std::string_view)> set;
  std::function<std::string(const ScenarioConfig&)> get;
};

template <typename Member>
Entry number_entry(std::string_view key, Member member) {
  return {key,
          [member](ScenarioConfig& c, std::string_view k, std::string_view v) {
            std::invoke(member, c) = parse_double(k, v);
          },
          [member](const ScenarioConfig& c) { return format_number(std::invoke(member, c)); }};
}

template <typename Int, typename Member>
Entry int_entry(std::string_view key, Member member) {
  return {key,
          [member](ScenarioConfig& c, std::string_view k, std::string_view v) {
            std::invoke(member, c) = parse_int<Int>(k, v);
          },
          [member](const ScenarioConfig& c) { return std::to_string(std::invoke(member, c)); }};
}

template <typename Member>
Entry bool_entry(std::string_view key, Member member) {
  return {key,
          [member](ScenarioConfig& c, std::string_view k, std::string_view v) {
            std::invoke(member, c) = parse_bool(k, v);
          },
          [member](const ScenarioConfig& c) {
            return std::string(std::invoke(member, c) ? "true" : "false");
          }};
}

template <typename Member>
Entry list_entry(std::string_view key, Member member) {
  return {key,
          [member](ScenarioConfig& c, std::string_view k, std::string_view v) {
            std::invoke(member, c) = parse_list(k, v);
          },
          [member](const ScenarioConfig& c) { return format_list(std::invoke(member, c)); }};
}

const std::vector<Entry>& registry() {
  using C = ScenarioConfig;
  static const std::vector<Entry> entries = [] {
    std::vector<Entry> e;
    e.push_back(number_entry("transition.probe_wavelength_m", &C::probe_wavelength_m));
    e.push_back(number_entry("transition.coupling_wavelength_m", &C::coupling_wavelength_m));
    e.push_back(number_entry("transition.dipole_radial", &C::dipole_radial));
    e.push_back(number_entry("transition.dipole_angular", &C::dipole_angular));
    e.push_back(number_entry("transition.rf_resonance_hz", &C::rf_resonance_hz));
    e.push_back(number_entry("transition.eit_linewidth_hz", &C::eit_linewidth_hz));

    e.push_back(number_entry("tones.f_lo_hz", &C::f_lo_hz));
    e.push_back(number_entry("tones.f_sig_hz", &C::f_sig_hz));
    e.push_back(number_entry("tones.e_lo_vpm", &C::e_lo_vpm));
    e.push_back(number_entry("tones.phase_lo_rad", &C::phase_lo_rad));
    e.push_back(number_entry("tones.phase_sig_rad", &C::phase_sig_rad));

    e.push_back(number_entry("link.gain_db", [](auto& c) -> auto& { return c.link.gain_db; }));
    e.push_back(number_entry("link.gain_uncertainty_db",
                             [](auto& c) -> auto& { return c.link.gain_uncertainty_db; }));
    e.push_back(number_entry("link.distance_m", [](auto& c) -> auto& { return c.link.distance_r; }));
    e.push_back(number_entry("link.aperture_diagonal_m",
                             [](auto& c) -> auto& { return c.link.aperture_diagonal_a; }));
    e.push_back(
        number_entry("link.rf_wavelength_m", [](auto& c) -> auto& { return c.link.rf_wavelength; }));
    e.push_back(number_entry("link.cell_factor", &C::cell_factor));
    e.push_back(list_entry("chain.losses_db", &C::chain_losses_db));

    e.push_back(number_entry("eit.contrast", &C::contrast));
    e.push_back(number_entry("eit.background", &C::background));
    e.push_back(number_entry("photodiode.gain_v", &C::pd_gain_v));
    e.push_back(number_entry("photodiode.dark_v", &C::pd_dark_v));
    e.push_back(number_entry("noise.density_v_rthz", &C::noise_density));
    e.push_back(bool_entry("noise.enabled", &C::noise_enabled));

    e.push_back(number_entry("lockin.tau_s", &C::tau_s));
    e.push_back(int_entry<int>("lockin.slope_db_oct", &C::slope_db_oct));
    e.push_back(number_entry("lockin.sample_rate_hz", &C::sample_rate_hz));
    e.push_back(number_entry("lockin.settle_factor", &C::settle_factor));
    e.push_back(number_entry("lockin.duration_tau", &C::duration_tau));
    e.push_back({"lockin.fc_convention",
                 [](C& c, std::string_view, std::string_view v) {
                   c.fc_convention = parse_cutoff_convention(v);
                 },
                 [](const C& c) { return to_string(c.fc_convention); }});

    e.push_back({"sweep.domain",
                 [](C& c, std::string_view k, std::string_view v) {
                   if (v != "power_dbm" && v != "e_sig_vpm") {
                     throw ConfigError("key 'sweep.domain': expected power_dbm or e_sig_vpm",
                                       std::string(k));
                   }
                   c.sweep.domain = std::string(v);
                 },
                 [](const C& c) { return c.sweep.domain; }});
    e.push_back(number_entry("sweep.start", [](auto& c) -> auto& { return c.sweep.start; }));
    e.push_back(number_entry("sweep.stop", [](auto& c) -> auto& { return c.sweep.stop; }));
    e.push_back(int_entry<int>("sweep.points", [](auto& c) -> auto& { return c.sweep.points; }));
    e.push_back({"sweep.spacing",
                 [](C& c, std::string_view k, std::string_view v) {
                   if (v != "linear" && v != "log") {
                     throw ConfigError("key 'sweep.spacing': expected linear or log",
                                       std::string(k));
                   }
                   c.sweep.log_spacing = v == "log";
                 },
                 [](const C& c) { return std::string(c.sweep.log_spacing ? "log" : "linear"); }});
    e.push_back(
        int_entry<int>("sweep.averages", [](auto& c) -> auto& { return c.sweep.averages; }));
    e.push_back(
        int_entry<int>("sweep.floor_runs", [](auto& c) -> auto& { return c.sweep.floor_runs; }));

    e.push_back(
        number_entry("isolation.e_o_vpm", [](auto& c) -> auto& { return c.isolation.e_o_vpm; }));
    e.push_back(number_entry("isolation.setpoint_dbm",
                             [](auto& c) -> auto& { return c.isolation.setpoint_dbm; }));
    e.push_back(list_entry("isolation.detunings_hz",
                           [](auto& c) -> auto& { return c.isolation.detunings_hz; }));
    e.push_back(number_entry("isolation.ratio_start_db",
                             [](auto& c) -> auto& { return c.isolation.ratio_start_db; }));
    e.push_back(number_entry("isolation.ratio_stop_db",
                             [](auto& c) -> auto& { return c.isolation.ratio_stop_db; }));
    e.push_back(int_entry<int>("isolation.ratio_points",
                               [](auto& c) -> auto& { return c.isolation.ratio_points; }));
    e.push_back(int_entry<int>("isolation.floor_runs",
                               [](auto& c) -> auto& { return c.isolation.floor_runs; }));

    e.push_back(list_entry("spectrum.e_list_eat",
                           [](auto& c) -> auto& { return c.spectrum.e_list_eat; }));
    e.push_back(
        number_entry("spectrum.span_hz", [](auto& c) -> auto& { return c.spectrum.span_hz; }));
    e.push_back(
        int_entry<int>("spectrum.points", [](auto& c) -> auto& { return c.spectrum.points; }));

    e.push_back(
        list_entry("iftrace.e_sig_vpm", [](auto& c) -> auto& { return c.iftrace.e_sig_vpm; }));
    e.push_back(
        number_entry("iftrace.duration_s", [](auto& c) -> auto& { return c.iftrace.duration_s; }));
    e.push_back({"iftrace.form",
                 [](C& c, std::string_view k, std::string_view v) {
                   if (v == "exact") {
                     c.iftrace.form = EnvelopeForm::exact;
                   } else if (v == "weak") {
                     c.iftrace.form = EnvelopeForm::weak;
                   } else {
                     throw ConfigError("key 'iftrace.form': expected exact or weak",
                                       std::string(k));
                   }
                 },
                 [](const C& c) {
                   return std::string(c.iftrace.form == EnvelopeForm::exact ? "exact" : "weak");
                 }});
    e.push_back(bool_entry("iftrace.noise", [](auto& c) -> auto& { return c.iftrace.noise; }));

    e.push_back(number_entry("linkbudget.start_dbm",
                             [](auto& c) -> auto& { return c.linkbudget.start_dbm; }));
    e.push_back(number_entry("linkbudget.stop_dbm",
                             [](auto& c) -> auto& { return c.linkbudget.stop_dbm; }));
    e.push_back(
        int_entry<int>("linkbudget.points", [](auto& c) -> auto& { return c.linkbudget.points; }));

    e.push_back(int_entry<std::uint64_t>("run.seed", &C::seed));
    e.push_back(int_entry<unsigned>("run.threads", &C::threads));
    return e;
  }();
  return entries;
}

const Entry* find_entry(std::string_view key) {
  for (const auto& e : registry()) {
    if (e.key == key) return &e;
  }
  return nullptr;
}

void require(bool ok, const char* key, const std::string& message) {
  if (!ok) throw ConfigError("key '" + std::string(key) + "': " + message, key);
}

}  // namespace

std::vector<double> SweepSpec::values() const {
  std::vector<double> v(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    const double frac = points == 1 ? 0.0 : double(i) / double(points - 1);
    v[std::size_t(i)] = log_spacing ? start * std::pow(stop / start, frac)
                                    : start + (stop - start) * frac;
  }
  return v;
}

RydbergTransition<double> ScenarioConfig::transition() const {
  return {probe_wavelength_m, coupling_wavelength_m, dipole_radial,
          dipole_angular,     rf_resonance_hz,       eit_linewidth_hz};
}

TonePair<double> ScenarioConfig::tone_pair(double e_sig) const {
  return {ToneField<double>(e_lo_vpm, f_lo_hz, phase_lo_rad),
          ToneField<double>(e_sig, f_sig_hz, phase_sig_rad)};
}

EitModel<double> ScenarioConfig::eit_model() const {
  return EitModel<double>(transition(), contrast, background);
}

PhotodiodeModel ScenarioConfig::photodiode() const {
  PhotodiodeModel pd;
  pd.responsivity_gain = pd_gain_v;
  pd.dark_voltage = pd_dark_v;
  pd.noise_density = noise_enabled ? noise_density : 0.0;
  pd.rng_seed = seed;
  return pd;
}

LockInConfig ScenarioConfig::lockin_config() const {
  LockInConfig lc;
  lc.f_ref = if_frequency();
  lc.time_constant = tau_s;
  lc.slope_db_per_octave = slope_db_oct;
  lc.sample_rate = sample_rate_hz;
  lc.settle_factor = settle_factor;
  lc.convention = fc_convention;
  return lc;
}

DetectionChain ScenarioConfig::detection_chain() const {
  return {eit_model(), photodiode(), lockin_config()};
}

void ScenarioConfig::validate() const {
  require(probe_wavelength_m > 0, "transition.probe_wavelength_m", "must be positive");
  require(coupling_wavelength_m > 0, "transition.coupling_wavelength_m", "must be positive");
  require(dipole_radial * dipole_angular > 0, "transition.dipole_radial",
          "dipole_radial * dipole_angular must be positive");
  require(rf_resonance_hz > 0, "transition.rf_resonance_hz", "must be positive");
  require(eit_linewidth_hz > 0, "transition.eit_linewidth_hz", "must be positive");

  require(f_lo_hz > 0, "tones.f_lo_hz", "must be positive");
  require(f_sig_hz > 0, "tones.f_sig_hz", "must be positive");
  require(f_lo_hz != f_sig_hz, "tones.f_sig_hz", "must differ from tones.f_lo_hz");
  require(e_lo_vpm > 0, "tones.e_lo_vpm", "must be positive");

  require(link.distance_r > 0, "link.distance_m", "must be positive");
  require(link.rf_wavelength > 0, "link.rf_wavelength_m", "must be positive");
  require(link.aperture_diagonal_a > 0, "link.aperture_diagonal_m", "must be positive");
  require(link.gain_uncertainty_db >= 0, "link.gain_uncertainty_db", "must be non-negative");
  require(cell_factor > 0, "link.cell_factor", "must be positive");
  for (const double l : chain_losses_db) require(l >= 0, "chain.losses_db", "losses must be >= 0");

  require(contrast > 0 && contrast <= 1, "eit.contrast", "must be in (0, 1]");
  require(background >= 0 && background < 1, "eit.background", "must be in [0, 1)");
  require(background + contrast <= 1, "eit.background", "background + contrast must not exceed 1");
  require(pd_gain_v > 0, "photodiode.gain_v", "must be positive");
  require(noise_density >= 0, "noise.density_v_rthz", "must be non-negative");

  require(tau_s > 0, "lockin.tau_s", "must be positive");
  require(duration_tau > 0, "lockin.duration_tau", "must be positive");
  lockin_config().validate();

  require(sweep.points >= 2, "sweep.points", "must be >= 2");
  require(sweep.averages >= 1, "sweep.averages", "must be >= 1");
  require(sweep.floor_runs >= 2, "sweep.floor_runs", "must be >= 2");
  if (sweep.domain == "e_sig_vpm") {
    require(sweep.start > 0 && sweep.stop > 0, "sweep.start", "field sweep bounds must be > 0");
  }
  if (sweep.log_spacing) {
    require(sweep.start * sweep.stop > 0, "sweep.spacing",
            "log spacing needs start and stop of the same sign");
  }

  require(isolation.e_o_vpm > 0, "isolation.e_o_vpm", "must be positive");
  require(!isolation.detunings_hz.empty(), "isolation.detunings_hz", "must not be empty");
  for (const double d : isolation.detunings_hz) {
    require(d > 0, "isolation.detunings_hz", "detunings must be positive");
  }
  require(isolation.ratio_points >= 2, "isolation.ratio_points", "must be >= 2");
  require(isolation.ratio_stop_db > isolation.ratio_start_db, "isolation.ratio_stop_db",
          "must exceed isolation.ratio_start_db");
  require(isolation.floor_runs >= 2, "isolation.floor_runs", "must be >= 2");

  require(!spectrum.e_list_eat.empty(), "spectrum.e_list_eat", "must not be empty");
  for (const double e : spectrum.e_list_eat) {
    require(e >= 0, "spectrum.e_list_eat", "fields must be non-negative");
  }
  require(spectrum.span_hz > 0, "spectrum.span_hz", "must be positive");
  require(spectrum.points >= 3, "spectrum.points", "must be >= 3");

  for (const double e : iftrace.e_sig_vpm) {
    require(e >= 0, "iftrace.e_sig_vpm", "fields must be non-negative");
  }
  require(iftrace.duration_s > 0, "iftrace.duration_s", "must be positive");
  require(linkbudget.points >= 2, "linkbudget.points", "must be >= 2");
}

void set_config_value(ScenarioConfig& cfg, std::string_view key, std::string_view value) {
  const Entry* entry = find_entry(key);
  if (entry == nullptr) throw ConfigError("unknown key '" + std::string(key) + "'", std::string(key));
  entry->set(cfg, key, value);
}

void apply_config_text(ScenarioConfig& cfg, std::string_view text, std::string_view source) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    const auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const std::string where = std::string(source) + ":" + std::to_string(line_no);
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(where + ": expected 'section.key = value', got '" + std::string(line) + "'");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    try {
      set_config_value(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what(), e.key());
    }
  }
}

ScenarioConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  ScenarioConfig cfg;
  apply_config_text(cfg, buf.str(), path.string());
  return cfg;
}

void apply_override(ScenarioConfig& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("override '" + std::string(assignment) + "' is not of the form key=value");
  }
  set_config_value(cfg, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

std::vector<std::pair<std::string, std::string>> config_entries(const ScenarioConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  out.reserve(registry().size());
  for (const auto& e : registry()) out.emplace_back(std::string(e.key), e.get(cfg));
  return out;
}

std::string config_hash(const ScenarioConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [key, value] : config_entries(cfg)) {
    for (const char ch : key + "=" + value + "\n") {
      h ^= static_cast<unsigned char>(ch);
      h *= 0x100000001b3ULL;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace rydmix
