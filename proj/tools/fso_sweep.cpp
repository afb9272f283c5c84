// Sweep driver: scenario JSON (or a fig preset) in, CSV or plot data out.
// Exit codes: 0 ok, 2 config error, 3 analytic non-convergence, 4 I/O error.
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "fso/errors.hpp"
#include "fso/scenario.hpp"

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Outage, BER, capacity and SNR sweeps for direct and RIS-assisted FSO links"};
  std::string config_path, preset, out_path, format = "csv", metrics;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> mc_samples;
  bool exact_only = false, mc_only = false, list_presets = false;
  app.add_option("--config", config_path, "scenario JSON file");
  app.add_option("--preset", preset, "built-in scenario (fig2 .. fig7)");
  app.add_option("--metric", metrics, "comma separated metrics, overrides the config list");
  app.add_option("--out", out_path, "output file (default stdout)");
  app.add_option("--format", format, "csv or plotdata")->check(CLI::IsMember({"csv", "plotdata"}));
  app.add_option("--seed", seed, "Monte-Carlo seed");
  app.add_option("--mc-samples", mc_samples, "Monte-Carlo samples per point (0 disables)");
  auto* eo = app.add_flag("--exact-only", exact_only, "skip Monte-Carlo");
  app.add_flag("--mc-only", mc_only, "skip analytic evaluation")->excludes(eo);
  app.add_flag("--list-presets", list_presets, "print preset names and exit");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (list_presets) {
    for (const auto& p : fso::preset_names()) std::cout << p << '\n';
    return 0;
  }

  fso::ScenarioConfig cfg;
  try {
    if (!config_path.empty() && !preset.empty()) throw fso::ConfigError({"--config and --preset are exclusive"});
    if (config_path.empty() && preset.empty()) throw fso::ConfigError({"one of --config or --preset is required"});
    cfg = config_path.empty() ? fso::preset_config(preset) : fso::parse_config_file(config_path);
    if (!metrics.empty()) cfg.metrics = split_list(metrics);
    if (seed) cfg.seed = *seed;
    if (mc_samples) cfg.mc_samples = *mc_samples;
    fso::validate(cfg);
  } catch (const fso::ConfigError& e) {
    for (const auto& issue : e.issues()) std::cerr << "config error: " << issue << '\n';
    return 2;
  }

  fso::SweepOptions opts;
  opts.analytic = !mc_only;
  opts.monte_carlo = !exact_only;
  fso::SweepReport rep;
  try {
    rep = fso::run_sweep(cfg, opts);
  } catch (const fso::ConfigError& e) {
    for (const auto& issue : e.issues()) std::cerr << "config error: " << issue << '\n';
    return 2;
  }
  for (const auto& w : rep.warnings) std::cerr << "warning: " << w << '\n';

  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) {
      std::cerr << "error: cannot write '" << out_path << "'\n";
      return 4;
    }
  }
  std::ostream& os = out_path.empty() ? std::cout : file;
  if (format == "csv") fso::write_csv(os, rep.rows);
  else fso::write_plotdata(os, rep.rows);
  os.flush();
  if (!os) {
    std::cerr << "error: write failed\n";
    return 4;
  }
  return rep.non_converged ? 3 : 0;
}
