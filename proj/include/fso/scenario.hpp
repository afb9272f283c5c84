#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fso/channels.hpp"
#include "fso/metrics.hpp"

namespace fso {

enum class LinkKind { dl, rise };
enum class FogMode { none, random, deterministic };

struct ScenarioConfig {
  LinkKind link = LinkKind::dl;
  int elements = 1;

  std::string model = "f";  // f | gg | malaga
  double alpha = 4.85;
  double beta = 6.55;
  double omega = 0.4, b0 = 0.3, rho = 0.596, phase_rad = 0.0;  // Malaga only

  double aperture_radius_m = 0.1;
  double beam_width_ratio = 15.0;  // w_z / a_r
  std::optional<double> sigma_s_m;         // direct link jitter
  std::optional<double> sigma_theta_mrad;  // RIS links
  std::optional<double> sigma_beta_mrad;
  std::optional<double> rho_sq;

  FogMode fog = FogMode::random;
  int fog_k = 2;
  double fog_beta = 13.12;
  double visibility_km = 2.0;
  double wavelength_nm = 1550.0;

  double distance_km = 1.0;
  std::optional<double> d1_km, d2_km;  // default d/2 each

  int t = 1;
  ModulationParams modulation = ModulationParams::preset("DBPSK");
  std::string modulation_name = "DBPSK";
  double gamma_th_dB = 5.0;
  double sigma_nu_sq = 1e-14;

  double start_dBm = 0.0, stop_dBm = 40.0, step_dB = 5.0;
  std::vector<std::string> metrics = {"outage", "ber"};
  double moment_order = 1.0;

  std::int64_t mc_samples = 0;
  std::uint64_t seed = 1;
  NumericsConfig numerics;

  std::vector<double> powers() const;
  double link_d1() const { return d1_km.value_or(distance_km / 2.0); }
  double link_d2() const { return d2_km.value_or(distance_km / 2.0); }
};

// Metric names accepted in `metrics`.
const std::vector<std::string>& known_metrics();
const std::vector<std::string>& preset_names();

// Throws ConfigError with one entry per offending field path.
ScenarioConfig parse_config_text(const std::string& json_text);
ScenarioConfig parse_config_file(const std::string& path);
ScenarioConfig preset_config(const std::string& name);
void validate(const ScenarioConfig& cfg);

HopModel hop_model(const ScenarioConfig& cfg, double hop_km);
HopChain build_chain(const ScenarioConfig& cfg);

struct SweepRow {
  double P_T_dBm = 0.0;
  double gamma0_dB = 0.0;
  std::string metric;
  std::optional<double> analytic_value, analytic_err;
  std::optional<double> mc_value, mc_stderr;
  std::string method;
};

struct SweepOptions {
  bool analytic = true;
  bool monte_carlo = true;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  std::vector<std::string> warnings;
  bool non_converged = false;  // an analytic point failed and had no MC value to fall back on
};

SweepReport run_sweep(const ScenarioConfig& cfg, const SweepOptions& opts = {});

inline constexpr const char* kCsvHeader = "P_T_dBm,gamma0_dB,metric,analytic_value,analytic_err,mc_value,mc_stderr,method";

// Shortest decimal text that reads back to the same double.
std::string format_number(double v);
void write_csv(std::ostream& os, const std::vector<SweepRow>& rows);
// One "# metric" block per metric with P_T_dBm and the value (analytic, else MC).
void write_plotdata(std::ostream& os, const std::vector<SweepRow>& rows);

}  // namespace fso
