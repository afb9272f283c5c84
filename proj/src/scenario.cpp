#include "fso/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fso/errors.hpp"
#include "fso/montecarlo.hpp"

namespace fso {

using nlohmann::json;

namespace {

// Reads typed fields from one JSON object and records problems under their path.
class Fields {
 public:
  Fields(const json& j, std::string path, std::vector<std::string>* issues)
      : j_(j), path_(std::move(path)), issues_(issues) {}

  bool is_object() const { return j_.is_object(); }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void fail(const std::string& key, const std::string& msg) const { issues_->push_back(at(key) + ": " + msg); }

  const json* find(const std::string& key) const {
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void number(const std::string& key, double* out) const {
    if (const json* v = find(key)) {
      if (v->is_number()) *out = v->get<double>();
      else fail(key, "expected a number");
    }
  }

  void number(const std::string& key, std::optional<double>* out) const {
    if (find(key)) {
      double d = 0.0;
      number(key, &d);
      *out = d;
    }
  }

  template <class Int>
  void integer(const std::string& key, Int* out, const char* why = "expected an integer") const {
    if (const json* v = find(key)) {
      if (v->is_number_integer()) *out = v->get<Int>();
      else if (v->is_number_float() && std::floor(v->get<double>()) == v->get<double>())
        *out = static_cast<Int>(v->get<double>());
      else fail(key, why);
    }
  }

  void text(const std::string& key, std::string* out) const {
    if (const json* v = find(key)) {
      if (v->is_string()) *out = v->get<std::string>();
      else fail(key, "expected a string");
    }
  }

  void flag(const std::string& key, bool* out) const {
    if (const json* v = find(key)) {
      if (v->is_boolean()) *out = v->get<bool>();
      else fail(key, "expected true or false");
    }
  }

  void only(std::initializer_list<const char*> allowed) const {
    if (!j_.is_object()) {
      issues_->push_back((path_.empty() ? std::string("config") : path_) + ": expected an object");
      return;
    }
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!ok.count(it.key())) fail(it.key(), "unknown key");
  }

  Fields child(const std::string& key) const { return Fields(*find(key), at(key), issues_); }

 private:
  const json& j_;
  std::string path_;
  std::vector<std::string>* issues_;
};

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

void apply(const json& j, ScenarioConfig* c, std::vector<std::string>* issues) {
  const Fields f(j, "", issues);
  f.only({"preset", "link", "elements", "model", "turbulence", "pointing", "fog", "distance_km", "d1_km", "d2_km",
          "detection", "modulation", "gamma_th_dB", "sigma_nu_sq_A2_per_GHz", "power", "metrics", "moment_order", "mc",
          "numerics"});
  if (!f.is_object()) return;

  std::string s;
  if (f.find("link")) {
    f.text("link", &s);
    if (lower(s) == "dl") c->link = LinkKind::dl;
    else if (lower(s) == "rise") c->link = LinkKind::rise;
    else if (!s.empty()) f.fail("link", "expected \"dl\" or \"rise\"");
  }
  f.integer("elements", &c->elements);
  if (f.find("model")) {
    f.text("model", &s);
    c->model = lower(s);
  }
  if (f.find("turbulence")) {
    const Fields t = f.child("turbulence");
    t.only({"alpha", "beta", "omega", "b0", "rho", "phase_rad"});
    if (t.is_object()) {
      t.number("alpha", &c->alpha);
      t.number("beta", &c->beta);
      t.number("omega", &c->omega);
      t.number("b0", &c->b0);
      t.number("rho", &c->rho);
      t.number("phase_rad", &c->phase_rad);
    }
  }
  if (f.find("pointing")) {
    const Fields p = f.child("pointing");
    p.only({"aperture_radius_m", "beam_width_ratio", "sigma_s_m", "sigma_theta_mrad", "sigma_beta_mrad", "rho_sq"});
    if (p.is_object()) {
      p.number("aperture_radius_m", &c->aperture_radius_m);
      p.number("beam_width_ratio", &c->beam_width_ratio);
      p.number("sigma_s_m", &c->sigma_s_m);
      p.number("sigma_theta_mrad", &c->sigma_theta_mrad);
      p.number("sigma_beta_mrad", &c->sigma_beta_mrad);
      p.number("rho_sq", &c->rho_sq);
    }
  }
  if (f.find("fog")) {
    const Fields g = f.child("fog");
    g.only({"mode", "k", "beta_fog", "visibility_km", "wavelength_nm"});
    if (g.is_object()) {
      if (g.find("mode")) {
        g.text("mode", &s);
        if (lower(s) == "none") c->fog = FogMode::none;
        else if (lower(s) == "random") c->fog = FogMode::random;
        else if (lower(s) == "deterministic") c->fog = FogMode::deterministic;
        else g.fail("mode", "expected \"none\", \"random\" or \"deterministic\"");
      }
      g.integer("k", &c->fog_k, "fog shape k must be a positive integer");
      g.number("beta_fog", &c->fog_beta);
      g.number("visibility_km", &c->visibility_km);
      g.number("wavelength_nm", &c->wavelength_nm);
    }
  }
  f.number("distance_km", &c->distance_km);
  f.number("d1_km", &c->d1_km);
  f.number("d2_km", &c->d2_km);
  if (f.find("detection")) {
    f.text("detection", &s);
    if (lower(s) == "hd") c->t = 1;
    else if (lower(s) == "imdd") c->t = 2;
    else if (!s.empty()) f.fail("detection", "expected \"hd\" or \"imdd\"");
  }
  if (f.find("modulation")) {
    f.text("modulation", &s);
    try {
      c->modulation = ModulationParams::preset(s);
      c->modulation_name = s;
    } catch (const ConfigError&) {
      f.fail("modulation", "unknown preset '" + s + "' (expected CBFSK, CBPSK, NBFSK or DBPSK)");
    }
  }
  f.number("gamma_th_dB", &c->gamma_th_dB);
  f.number("sigma_nu_sq_A2_per_GHz", &c->sigma_nu_sq);
  if (f.find("power")) {
    const Fields p = f.child("power");
    p.only({"start_dBm", "stop_dBm", "step_dB"});
    if (p.is_object()) {
      p.number("start_dBm", &c->start_dBm);
      p.number("stop_dBm", &c->stop_dBm);
      p.number("step_dB", &c->step_dB);
    }
  }
  if (const json* m = f.find("metrics")) {
    if (!m->is_array()) {
      f.fail("metrics", "expected a list of metric names");
    } else {
      c->metrics.clear();
      for (const auto& e : *m) {
        if (e.is_string()) c->metrics.push_back(lower(e.get<std::string>()));
        else f.fail("metrics", "expected metric names as strings");
      }
    }
  }
  f.number("moment_order", &c->moment_order);
  if (f.find("mc")) {
    const Fields m = f.child("mc");
    m.only({"samples", "seed"});
    if (m.is_object()) {
      m.integer("samples", &c->mc_samples);
      m.integer("seed", &c->seed);
    }
  }
  if (f.find("numerics")) {
    const Fields n = f.child("numerics");
    n.only({"tol", "epsilon", "max_refinements", "resolve_pole_ties", "randomized_multi"});
    if (n.is_object()) {
      n.number("tol", &c->numerics.tol);
      n.number("epsilon", &c->numerics.epsilon);
      n.integer("max_refinements", &c->numerics.max_refinements);
      n.flag("resolve_pole_ties", &c->numerics.resolve_pole_ties);
      n.flag("randomized_multi", &c->numerics.randomized_multi);
    }
  }
}

void check_physics(const ScenarioConfig& c, std::vector<std::string>* issues) {
  auto bad = [&](const std::string& path, const std::string& msg) { issues->push_back(path + ": " + msg); };
  auto positive = [&](const std::string& path, double v) {
    if (!(v > 0.0) || !std::isfinite(v)) bad(path, "must be positive");
  };
  if (c.elements < 1) bad("elements", "must be at least 1");
  if (c.link == LinkKind::dl && c.elements != 1) bad("elements", "a direct link has exactly one element");
  if (c.model != "f" && c.model != "gg" && c.model != "malaga") bad("model", "expected \"f\", \"gg\" or \"malaga\"");
  positive("turbulence.alpha", c.alpha);
  positive("turbulence.beta", c.beta);
  if (c.model == "f" && !(c.beta > 1.0)) bad("turbulence.beta", "F model needs beta > 1 for a unit mean");
  if (c.model == "malaga") {
    if (std::floor(c.beta) != c.beta || c.beta < 1) bad("turbulence.beta", "Malaga beta must be a positive integer");
    positive("turbulence.omega", c.omega);
    if (!(c.b0 > 0.0)) bad("turbulence.b0", "must be positive");
    if (c.rho < 0.0 || c.rho > 1.0) bad("turbulence.rho", "must lie in [0, 1]");
  }
  positive("pointing.aperture_radius_m", c.aperture_radius_m);
  positive("pointing.beam_width_ratio", c.beam_width_ratio);
  if (c.rho_sq) positive("pointing.rho_sq", *c.rho_sq);
  if (c.link == LinkKind::dl) {
    if (!c.sigma_s_m) bad("pointing.sigma_s_m", "required for a direct link");
    else positive("pointing.sigma_s_m", *c.sigma_s_m);
  } else {
    if (!c.sigma_theta_mrad) bad("pointing.sigma_theta_mrad", "required for a RIS link");
    else positive("pointing.sigma_theta_mrad", *c.sigma_theta_mrad);
    if (!c.sigma_beta_mrad) bad("pointing.sigma_beta_mrad", "required for a RIS link");
    else positive("pointing.sigma_beta_mrad", *c.sigma_beta_mrad);
  }
  if (c.fog == FogMode::random) {
    if (c.fog_k < 1) bad("fog.k", "fog shape k must be a positive integer");
    positive("fog.beta_fog", c.fog_beta);
  }
  if (c.fog == FogMode::deterministic) {
    positive("fog.visibility_km", c.visibility_km);
    positive("fog.wavelength_nm", c.wavelength_nm);
  }
  positive("distance_km", c.distance_km);
  if (c.d1_km) positive("d1_km", *c.d1_km);
  if (c.d2_km) positive("d2_km", *c.d2_km);
  positive("sigma_nu_sq_A2_per_GHz", c.sigma_nu_sq);
  if (!std::isfinite(c.gamma_th_dB)) bad("gamma_th_dB", "must be finite");
  if (!(c.step_dB > 0.0)) bad("power.step_dB", "must be positive");
  if (c.stop_dBm < c.start_dBm) bad("power.stop_dBm", "must not be below start_dBm");
  if (c.metrics.empty()) bad("metrics", "at least one metric is required");
  const auto& known = known_metrics();
  for (const auto& m : c.metrics)
    if (std::find(known.begin(), known.end(), m) == known.end()) bad("metrics", "unknown metric '" + m + "'");
  if (!(c.moment_order >= 0.0)) bad("moment_order", "must be non-negative");
  if (c.mc_samples < 0) bad("mc.samples", "must be non-negative");
  try {
    c.numerics.validate();
  } catch (const DomainError& e) {
    bad("numerics", e.what());
  }
  if (!issues->empty()) return;
  try {
    build_chain(c);
  } catch (const DomainError& e) {
    bad("config", e.what());
  }
}

McMetricRequest mc_request(const ScenarioConfig& c, const std::string& metric) {
  McMetricRequest r;
  r.gamma_th = std::pow(10.0, c.gamma_th_dB / 10.0);
  r.p = c.modulation.p;
  r.q = c.modulation.q;
  if (metric == "outage" || metric == "outage_asymptotic") r.kind = MetricKind::outage;
  else if (metric == "ber" || metric == "ber_asymptotic") r.kind = MetricKind::ber;
  else if (metric == "capacity") r.kind = MetricKind::capacity;
  else {
    r.kind = MetricKind::moment;
    r.r = metric == "snr" ? 1.0 : c.moment_order;
  }
  return r;
}

MetricResult analytic(const LinkAnalyzer& la, const ScenarioConfig& c, const std::string& metric,
                      const DetectionConfig& det) {
  const double gth = std::pow(10.0, c.gamma_th_dB / 10.0);
  if (metric == "outage") return la.outage_exact(det, gth);
  if (metric == "outage_asymptotic") return la.outage_asymptotic(det, gth);
  if (metric == "ber") return la.ber_exact(det, c.modulation);
  if (metric == "ber_asymptotic") return la.ber_asymptotic(det, c.modulation);
  if (metric == "capacity") return la.capacity(det);
  if (metric == "snr") return la.snr_moment(det, 1.0);
  return la.snr_moment(det, c.moment_order);
}

}  // namespace

// ---------------------------------------------------------------------------

const std::vector<std::string>& known_metrics() {
  static const std::vector<std::string> names = {"outage", "outage_asymptotic", "ber", "ber_asymptotic",
                                                 "capacity", "snr", "moment"};
  return names;
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"fig2", "fig3", "fig4", "fig5", "fig6", "fig7"};
  return names;
}

std::vector<double> ScenarioConfig::powers() const {
  std::vector<double> out;
  const int n = static_cast<int>(std::floor((stop_dBm - start_dBm) / step_dB + 1e-9));
  for (int i = 0; i <= n; ++i) out.push_back(start_dBm + i * step_dB);
  return out;
}

ScenarioConfig preset_config(const std::string& name) {
  ScenarioConfig c;
  c.rho_sq = 2.25;
  c.mc_samples = 100000;
  c.numerics.resolve_pole_ties = true;
  const std::string n = lower(name);
  if (n == "fig2" || n == "fig3") {
    c.link = LinkKind::dl;
    c.sigma_s_m = 0.3;
    c.metrics = n == "fig2" ? std::vector<std::string>{"snr", "capacity"} : std::vector<std::string>{"outage", "ber"};
    return c;
  }
  c.link = LinkKind::rise;
  c.sigma_theta_mrad = 1.0;
  c.sigma_beta_mrad = 0.5;
  if (n == "fig4") {
    c.elements = 100;
    c.metrics = {"snr", "capacity"};
    c.start_dBm = 10.0;
    c.stop_dBm = 20.0;
    c.step_dB = 10.0;
    return c;
  }
  if (n == "fig5") {
    c.elements = 20;
    c.t = 2;
    c.metrics = {"outage", "ber"};
    return c;
  }
  if (n == "fig6" || n == "fig7") {
    c.elements = 2;
    c.fog = FogMode::deterministic;
    c.distance_km = 2.0;
    if (n == "fig6") {
      c.metrics = {"snr", "capacity"};
    } else {
      c.t = 2;
      c.metrics = {"outage", "ber"};
    }
    return c;
  }
  throw ConfigError({"preset: unknown preset '" + name + "' (expected fig2 .. fig7)"});
}

void validate(const ScenarioConfig& cfg) {
  std::vector<std::string> issues;
  check_physics(cfg, &issues);
  if (!issues.empty()) throw ConfigError(issues);
}

ScenarioConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("config: not valid JSON (") + e.what() + ")"});
  }
  std::vector<std::string> issues;
  ScenarioConfig c;
  if (j.is_object() && j.contains("preset")) {
    if (!j["preset"].is_string()) {
      issues.push_back("preset: expected a string");
    } else {
      try {
        c = preset_config(j["preset"].get<std::string>());
      } catch (const ConfigError& e) {
        issues.insert(issues.end(), e.issues().begin(), e.issues().end());
      }
    }
  }
  apply(j, &c, &issues);
  check_physics(c, &issues);
  if (!issues.empty()) throw ConfigError(issues);
  return c;
}

ScenarioConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"config: cannot read '" + path + "'"});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

HopModel hop_model(const ScenarioConfig& c, double hop_km) {
  HopModel h;
  if (c.model == "gg") {
    h.turbulence = GammaGamma{c.alpha, c.beta};
  } else if (c.model == "malaga") {
    h.turbulence = Malaga{c.alpha, static_cast<int>(c.beta), c.omega, c.b0, c.rho, c.phase_rad};
  } else {
    h.turbulence = FisherSnedecor{c.alpha, c.beta};
  }
  PointingGeometry g;
  g.aperture_radius = c.aperture_radius_m;
  g.beam_width = c.beam_width_ratio * c.aperture_radius_m;
  if (c.link == LinkKind::dl) {
    g.jitter = DirectJitter{c.sigma_s_m.value_or(0.0)};
  } else {
    g.jitter = RisJitter{1e-3 * c.sigma_theta_mrad.value_or(0.0), 1e-3 * c.sigma_beta_mrad.value_or(0.0),
                         c.link_d1() + c.link_d2(), c.link_d2()};
  }
  g.rho_sq_override = c.rho_sq;
  h.pointing = derive_pointing(g);
  switch (c.fog) {
    case FogMode::none: h.fog = NoFog{}; break;
    case FogMode::random: h.fog = RandomFog{c.fog_k, c.fog_beta, hop_km}; break;
    case FogMode::deterministic:
      h.fog = DeterministicFog{beer_lambert_tau(c.visibility_km, c.wavelength_nm), hop_km};
      break;
  }
  return h;
}

HopChain build_chain(const ScenarioConfig& c) {
  HopChain ch;
  ch.elements = c.elements;
  if (c.link == LinkKind::dl) {
    ch.hops = {unify(hop_model(c, c.distance_km))};
  } else {
    ch.hops = {unify(hop_model(c, c.link_d1())), unify(hop_model(c, c.link_d2()))};
  }
  return ch;
}

SweepReport run_sweep(const ScenarioConfig& cfg, const SweepOptions& opts) {
  validate(cfg);
  SweepReport rep;
  const HopChain chain = build_chain(cfg);
  const std::vector<double> powers = cfg.powers();
  std::vector<DetectionConfig> dets;
  for (double p : powers) {
    DetectionConfig d;
    d.t = cfg.t;
    d.P_T_dBm = p;
    d.sigma_nu_sq = cfg.sigma_nu_sq;
    dets.push_back(d);
  }

  NumericsConfig num = cfg.numerics;
  num.seed = cfg.seed;
  const bool supported = cfg.elements <= 2 || num.randomized_multi;
  std::optional<LinkAnalyzer> la;
  if (opts.analytic && supported) la.emplace(chain, num);
  if (opts.analytic && !supported)
    rep.warnings.push_back("analytic column left blank: N >= 3 needs numerics.randomized_multi");
  const bool mc = opts.monte_carlo && cfg.mc_samples > 0;

  // rows[point][metric]
  std::vector<std::vector<SweepRow>> grid(powers.size(), std::vector<SweepRow>(cfg.metrics.size()));
  for (std::size_t m = 0; m < cfg.metrics.size(); ++m) {
    const std::string& metric = cfg.metrics[m];
    std::vector<McEstimate> est;
    if (mc) {
      const auto& known = known_metrics();
      const auto id = static_cast<std::uint64_t>(std::find(known.begin(), known.end(), metric) - known.begin());
      est = estimate_metric_sweep(mc_request(cfg, metric), chain, dets, cfg.mc_samples, {cfg.seed, id});
      if (!est.empty() && !est.front().warning.empty()) rep.warnings.push_back(metric + ": " + est.front().warning);
    }
    for (std::size_t k = 0; k < powers.size(); ++k) {
      SweepRow& row = grid[k][m];
      row.P_T_dBm = powers[k];
      row.gamma0_dB = dets[k].gamma0_dB();
      row.metric = metric;
      if (mc) {
        row.mc_value = est[k].mean;
        row.mc_stderr = est[k].std_error;
      }
      if (la) {
        try {
          const MetricResult r = analytic(*la, cfg, metric, dets[k]);
          row.analytic_value = r.value;
          row.analytic_err = r.error_estimate;
          row.method = to_string(r.method);
          if (!r.warning.empty())
            rep.warnings.push_back(metric + " at " + format_number(powers[k]) + " dBm: " + r.warning);
        } catch (const DegeneratePoleError& e) {
          rep.warnings.push_back(metric + " at " + format_number(powers[k]) + " dBm: " + e.what());
        } catch (const std::runtime_error& e) {  // non-convergence, unsupported contour
          rep.warnings.push_back(metric + " at " + format_number(powers[k]) + " dBm: " + e.what());
          if (!mc) rep.non_converged = true;
        }
      }
      if (row.method.empty() && row.mc_value) row.method = to_string(Method::monte_carlo);
    }
  }
  for (auto& point : grid)
    for (auto& r : point) rep.rows.push_back(std::move(r));
  return rep;
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
  os << kCsvHeader << '\n';
  for (const auto& r : rows) {
    os << format_number(r.P_T_dBm) << ',' << format_number(r.gamma0_dB) << ',' << r.metric << ','
       << opt(r.analytic_value) << ',' << opt(r.analytic_err) << ',' << opt(r.mc_value) << ',' << opt(r.mc_stderr)
       << ',' << r.method << '\n';
  }
}

void write_plotdata(std::ostream& os, const std::vector<SweepRow>& rows) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const SweepRow*>> by;
  for (const auto& r : rows) {
    if (!by.count(r.metric)) order.push_back(r.metric);
    by[r.metric].push_back(&r);
  }
  bool first = true;
  for (const auto& m : order) {
    if (!first) os << "\n\n";
    first = false;
    os << "# " << m << "\n# P_T_dBm value\n";
    for (const SweepRow* r : by[m]) {
      const std::optional<double> v = r->analytic_value ? r->analytic_value : r->mc_value;
      os << format_number(r->P_T_dBm) << ' ' << (v ? format_number(*v) : std::string("nan")) << '\n';
    }
  }
}

}  // namespace fso
