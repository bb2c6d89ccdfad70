#include "stwobs/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace stwobs::sim {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

int edit_distance(const std::string& a, const std::string& b) {
  std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
  for (size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<int>(j);
  for (size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (size_t j = 1; j <= b.size(); ++j) {
      const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double parse_double(const std::string& v, int line, const std::string& key) {
  const std::string t = trim(v);
  if (t.empty()) throw config_error("empty value for key '" + key + "'", line, key);
  char* end = nullptr;
  const double d = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size())
    throw config_error("cannot parse number '" + t + "' for key '" + key + "'", line, key);
  return d;
}

long long parse_int(const std::string& v, int line, const std::string& key) {
  const double d = parse_double(v, line, key);
  const long long i = static_cast<long long>(d);
  if (static_cast<double>(i) != d)
    throw config_error("key '" + key + "' expects an integer", line, key);
  return i;
}

std::vector<std::pair<double, double>> parse_pairs(const std::string& v, int line,
                                                   const std::string& key) {
  std::vector<std::pair<double, double>> out;
  size_t i = 0;
  const std::string s = v;
  auto skip_ws = [&] { while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i; };
  skip_ws();
  while (i < s.size()) {
    if (s[i] != '(')
      throw config_error("expected '(' in pair list for key '" + key + "'", line, key);
    const size_t close = s.find(')', i);
    if (close == std::string::npos)
      throw config_error("unterminated pair in key '" + key + "'", line, key);
    const std::string body = s.substr(i + 1, close - i - 1);
    const size_t comma = body.find(',');
    if (comma == std::string::npos)
      throw config_error("pair in key '" + key + "' needs two comma-separated values", line, key);
    out.emplace_back(parse_double(body.substr(0, comma), line, key),
                     parse_double(body.substr(comma + 1), line, key));
    i = close + 1;
    skip_ws();
    if (i < s.size() && s[i] == ',') { ++i; skip_ws(); }
  }
  if (out.empty())
    throw config_error("key '" + key + "' expects at least one (t, value) pair", line, key);
  return out;
}

std::vector<double> parse_tuple(const std::string& v, int line, const std::string& key,
                                size_t arity) {
  const std::string t = trim(v);
  if (t.size() < 2 || t.front() != '(' || t.back() != ')')
    throw config_error("key '" + key + "' expects a parenthesized tuple", line, key);
  std::vector<double> out;
  std::stringstream ss(t.substr(1, t.size() - 2));
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(item, line, key));
  if (out.size() != arity) {
    std::ostringstream os;
    os << "key '" << key << "' expects " << arity << " values, got " << out.size();
    throw config_error(os.str(), line, key);
  }
  return out;
}

using Setter = std::function<void(const std::string& value, int line)>;
using KeyMap = std::map<std::string, Setter>;

}  // namespace

ScenarioConfig::ScenarioConfig() {
  current_schedule.points = {{0.0, 100.0}, {30.0, 250.0}, {70.0, 450.0}, {110.0, 180.0}};
}

void ScenarioConfig::validate() const {
  auto fail = [](const std::string& msg, const std::string& key) {
    throw config_error(msg, 0, key);
  };
  if (!(duration > 0.0)) fail("duration must be positive", "duration");
  if (!(dt > 0.0) || dt > 1e-3) fail("dt must satisfy 0 < dt <= 1e-3", "dt");
  if (duration < dt) fail("duration must be at least one step (duration >= dt)", "duration");
  if (decimation < 1) fail("decimation must be >= 1", "decimation");
  if (noise_amplitude < 0.0) fail("noise_amplitude must be nonnegative", "noise_amplitude");

  try {
    phys.validate();
  } catch (const std::invalid_argument& e) {
    throw config_error(e.what(), 0, "plant");
  }
  try {
    current_schedule.validate("current_schedule");
    current_schedule.validate_range("current_schedule", 0.0, 500.0);
    if (input_schedule) input_schedule->validate("input_schedule");
  } catch (const std::invalid_argument& e) {
    throw config_error(e.what(), 0, "current_schedule");
  }
  if (x0) {
    try {
      pemfc::PlantState::from_vec(*x0).validate();
    } catch (const std::invalid_argument& e) {
      throw config_error(e.what(), 0, "x0");
    }
  }
  if (!(x1_target > 0.0)) fail("x1_target must be positive", "x1_target");
  if (fault_time < 0.0) fail("fault_time must be nonnegative", "fault_time");
  if (!std::isfinite(fault_magnitude)) fail("fault_magnitude must be finite", "fault_magnitude");

  if (!(eps_riccati > 0.0)) fail("eps_riccati must be positive", "eps_riccati");
  if (!(eps_gain > 0.0)) fail("eps_gain must be positive", "eps_gain");
  if (H && !(*H > 0.0)) fail("H must be positive", "H");
  if (!(box.p_min > 0.0) || !(box.p_max > box.p_min))
    fail("pressure box must satisfy 0 < box_p_min < box_p_max", "box_p_min");
  if (!(box.x2_min > 0.0) || !(box.x2_max > box.x2_min))
    fail("x2 box must satisfy 0 < box_x2_min < box_x2_max", "box_x2_min");
  if (!(box.w_min > 0.0) || !(box.w_max > box.w_min))
    fail("speed box must satisfy 0 < box_w_min < box_w_max", "box_w_min");
  if (!(box.u_max > box.u_min)) fail("input box must satisfy box_u_min < box_u_max", "box_u_min");
  if (grid_pts < 2) fail("grid_pts must be >= 2", "grid_pts");
  if (!(phi2_inv_bound > 0.0)) fail("phi2_inv_bound must be positive", "phi2_inv_bound");

  if (L0_y1 && !(*L0_y1 > 0.0)) fail("L0_y1 must be positive", "L0_y1");
  if (L0_y2 && !(*L0_y2 > 0.0)) fail("L0_y2 must be positive", "L0_y2");
  if (k_rate && !(*k_rate > 0.0)) fail("k_rate must be positive", "k_rate");
  if (!(L_max > 0.0)) fail("L_max must be positive", "L_max");
  const double l01 = L0_y1.value_or(phys.L_init);
  const double l02 = L0_y2.value_or(phys.L_init);
  if (L_max < l01 || L_max < l02) fail("L_max must be at least the initial gains", "L_max");
  if (dead_zone < 0.0) fail("dead_zone must be nonnegative", "dead_zone");
  if (!(diff_L0 > 0.0)) fail("diff_L0 must be positive", "diff_L0");
  if (warmup < 0.0) fail("warmup must be nonnegative", "warmup");
  if (zhat2_0[1] == 0.0)
    fail("zhat2_0: the compressor-speed estimate must be nonzero (the torque term divides by it)",
         "zhat2_0");
  if (theta0 && *theta0 < 0.0) fail("theta0 must be nonnegative", "theta0");
}

bool ScenarioConfig::operator==(const ScenarioConfig& o) const {
  auto veq = [](const auto& a, const auto& b) { return (a.array() == b.array()).all(); };
  auto oveq = [&](const std::optional<Eigen::Vector4d>& a,
                  const std::optional<Eigen::Vector4d>& b) {
    if (a.has_value() != b.has_value()) return false;
    return !a || veq(*a, *b);
  };
  auto seq = [](const pemfc::Schedule& a, const pemfc::Schedule& b) {
    return a.points == b.points;
  };
  auto oseq = [&](const std::optional<pemfc::Schedule>& a,
                  const std::optional<pemfc::Schedule>& b) {
    if (a.has_value() != b.has_value()) return false;
    return !a || seq(*a, *b);
  };
  const auto& p = phys;
  const auto& q = o.phys;
  const bool phys_eq =
      p.n_cells == q.n_cells && p.R == q.R && p.R_a == q.R_a && p.p_atm == q.p_atm &&
      p.T_atm == q.T_atm && p.T_fc == q.T_fc && p.F == q.F && p.M_a == q.M_a &&
      p.M_O2 == q.M_O2 && p.M_N2 == q.M_N2 && p.M_v == q.M_v && p.C_D == q.C_D &&
      p.A_T == q.A_T && p.gamma == q.gamma && p.J_cp == q.J_cp &&
      p.motor_friction == q.motor_friction && p.k_t == q.k_t && p.C_p == q.C_p &&
      p.eta_cp == q.eta_cp && p.eta_cm == q.eta_cm && p.V_ca == q.V_ca &&
      p.V_sm == q.V_sm && p.V_cpr_tr == q.V_cpr_tr && p.k_ca_in == q.k_ca_in &&
      p.k_ca_out == q.k_ca_out && p.rho_a == q.rho_a && p.x_O2 == q.x_O2 &&
      p.mu_f == q.mu_f && p.L_init == q.L_init && p.k_gain == q.k_gain &&
      p.P_sat == q.P_sat && p.omega_atm == q.omega_atm && p.eta_vc == q.eta_vc &&
      p.kappa == q.kappa;
  return phys_eq && duration == o.duration && dt == o.dt && decimation == o.decimation &&
         seed == o.seed && noise_amplitude == o.noise_amplitude && oveq(x0, o.x0) &&
         seq(current_schedule, o.current_schedule) &&
         oseq(input_schedule, o.input_schedule) && x1_target == o.x1_target &&
         fault_mode == o.fault_mode && fault_time == o.fault_time &&
         fault_magnitude == o.fault_magnitude && eps_riccati == o.eps_riccati &&
         eps_gain == o.eps_gain && H == o.H && box.p_min == o.box.p_min &&
         box.p_max == o.box.p_max && box.x2_min == o.box.x2_min &&
         box.x2_max == o.box.x2_max && box.w_min == o.box.w_min &&
         box.w_max == o.box.w_max && box.u_min == o.box.u_min &&
         box.u_max == o.box.u_max && grid_pts == o.grid_pts &&
         phi2_inv_bound == o.phi2_inv_bound && L0_y1 == o.L0_y1 && L0_y2 == o.L0_y2 &&
         k_rate == o.k_rate && L_max == o.L_max && dead_zone == o.dead_zone &&
         diff_L0 == o.diff_L0 && warmup == o.warmup && veq(zhat2_0, o.zhat2_0) &&
         theta0 == o.theta0;
}

ScenarioConfig parse_config(const std::string& text, const std::string& source_name) {
  ScenarioConfig cfg;

  std::map<std::string, KeyMap> sections;
  auto dbl = [](double& target) {
    return [&target](const std::string& v, int line) {
      target = parse_double(v, line, "");
    };
  };
  // [sim]
  KeyMap& sim = sections["sim"];
  sim["duration"] = dbl(cfg.duration);
  sim["dt"] = dbl(cfg.dt);
  sim["decimation"] = [&cfg](const std::string& v, int line) {
    cfg.decimation = static_cast<int>(parse_int(v, line, "decimation"));
  };
  sim["seed"] = [&cfg](const std::string& v, int line) {
    cfg.seed = static_cast<unsigned long long>(parse_int(v, line, "seed"));
  };
  sim["noise_amplitude"] = dbl(cfg.noise_amplitude);

  // [plant]
  KeyMap& plant = sections["plant"];
  auto& ph = cfg.phys;
  plant["n_cells"] = dbl(ph.n_cells);
  plant["R"] = dbl(ph.R);
  plant["R_a"] = dbl(ph.R_a);
  plant["p_atm"] = dbl(ph.p_atm);
  plant["T_atm"] = dbl(ph.T_atm);
  plant["T_fc"] = dbl(ph.T_fc);
  plant["F"] = dbl(ph.F);
  plant["M_a"] = dbl(ph.M_a);
  plant["M_O2"] = dbl(ph.M_O2);
  plant["M_N2"] = dbl(ph.M_N2);
  plant["M_v"] = dbl(ph.M_v);
  plant["C_D"] = dbl(ph.C_D);
  plant["A_T"] = dbl(ph.A_T);
  plant["gamma"] = dbl(ph.gamma);
  plant["J_cp"] = dbl(ph.J_cp);
  plant["motor_friction"] = dbl(ph.motor_friction);
  plant["k_t"] = dbl(ph.k_t);
  plant["C_p"] = dbl(ph.C_p);
  plant["eta_cp"] = dbl(ph.eta_cp);
  plant["eta_cm"] = dbl(ph.eta_cm);
  plant["V_ca"] = dbl(ph.V_ca);
  plant["V_sm"] = dbl(ph.V_sm);
  plant["V_cpr_tr"] = dbl(ph.V_cpr_tr);
  plant["k_ca_in"] = dbl(ph.k_ca_in);
  plant["k_ca_out"] = dbl(ph.k_ca_out);
  plant["rho_a"] = dbl(ph.rho_a);
  plant["x_O2"] = dbl(ph.x_O2);
  plant["mu_f"] = dbl(ph.mu_f);
  plant["L_init"] = dbl(ph.L_init);
  plant["k_gain"] = dbl(ph.k_gain);
  plant["P_sat"] = dbl(ph.P_sat);
  plant["omega_atm"] = dbl(ph.omega_atm);
  plant["eta_vc"] = dbl(ph.eta_vc);
  plant["kappa"] = dbl(ph.kappa);
  plant["x0"] = [&cfg](const std::string& v, int line) {
    const auto t = parse_tuple(v, line, "x0", 4);
    cfg.x0 = Eigen::Vector4d(t[0], t[1], t[2], t[3]);
  };
  plant["current_schedule"] = [&cfg](const std::string& v, int line) {
    cfg.current_schedule.points = parse_pairs(v, line, "current_schedule");
  };
  plant["input_schedule"] = [&cfg](const std::string& v, int line) {
    pemfc::Schedule s;
    s.points = parse_pairs(v, line, "input_schedule");
    cfg.input_schedule = s;
  };
  plant["x1_target"] = dbl(cfg.x1_target);
  plant["fault"] = [&cfg](const std::string& v, int line) {
    const std::string t = trim(v);
    if (t == "step") cfg.fault_mode = FaultMode::step;
    else if (t == "none") cfg.fault_mode = FaultMode::none;
    else throw config_error("key 'fault' expects 'step' or 'none', got '" + t + "'", line, "fault");
  };
  plant["fault_time"] = dbl(cfg.fault_time);
  plant["fault_magnitude"] = dbl(cfg.fault_magnitude);

  // [design]
  KeyMap& design = sections["design"];
  design["eps_riccati"] = dbl(cfg.eps_riccati);
  design["eps_gain"] = dbl(cfg.eps_gain);
  design["H"] = [&cfg](const std::string& v, int line) {
    cfg.H = parse_double(v, line, "H");
  };
  design["box_p_min"] = dbl(cfg.box.p_min);
  design["box_p_max"] = dbl(cfg.box.p_max);
  design["box_x2_min"] = dbl(cfg.box.x2_min);
  design["box_x2_max"] = dbl(cfg.box.x2_max);
  design["box_w_min"] = dbl(cfg.box.w_min);
  design["box_w_max"] = dbl(cfg.box.w_max);
  design["box_u_min"] = dbl(cfg.box.u_min);
  design["box_u_max"] = dbl(cfg.box.u_max);
  design["grid_pts"] = [&cfg](const std::string& v, int line) {
    cfg.grid_pts = static_cast<int>(parse_int(v, line, "grid_pts"));
  };
  design["phi2_inv_bound"] = dbl(cfg.phi2_inv_bound);

  // [observer]
  KeyMap& obs = sections["observer"];
  auto opt_dbl = [](std::optional<double>& target) {
    return [&target](const std::string& v, int line) {
      target = parse_double(v, line, "");
    };
  };
  obs["L0_y1"] = opt_dbl(cfg.L0_y1);
  obs["L0_y2"] = opt_dbl(cfg.L0_y2);
  obs["k_rate"] = opt_dbl(cfg.k_rate);
  obs["L_max"] = dbl(cfg.L_max);
  obs["dead_zone"] = dbl(cfg.dead_zone);
  obs["diff_L0"] = dbl(cfg.diff_L0);
  obs["warmup"] = dbl(cfg.warmup);
  obs["zhat2_0"] = [&cfg](const std::string& v, int line) {
    const auto t = parse_tuple(v, line, "zhat2_0", 2);
    cfg.zhat2_0 = Eigen::Vector2d(t[0], t[1]);
  };
  obs["theta0"] = opt_dbl(cfg.theta0);

  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw config_error(source_name + ": unterminated section header", line_no);
      section = trim(line.substr(1, line.size() - 2));
      if (!sections.count(section)) {
        std::string best;
        int best_d = 3;
        for (const auto& [name, _] : sections) {
          const int d = edit_distance(section, name);
          if (d < best_d) { best_d = d; best = name; }
        }
        std::string msg = source_name + ": unknown section '" + section + "'";
        if (!best.empty()) msg += "; did you mean '" + best + "'?";
        throw config_error(msg, line_no, section);
      }
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error(source_name + ": expected 'key = value'", line_no);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty())
      throw config_error(source_name + ": key '" + key + "' outside any section", line_no, key);
    KeyMap& km = sections[section];
    auto it = km.find(key);
    if (it == km.end()) {
      std::string best;
      int best_d = 3;
      for (const auto& s : sections)
        for (const auto& [name, _] : s.second) {
          const int d = edit_distance(key, name);
          if (d < best_d) { best_d = d; best = name; }
        }
      std::string msg = source_name + ": unknown key '" + key + "' in section [" + section + "]";
      if (!best.empty()) msg += "; did you mean '" + best + "'?";
      throw config_error(msg, line_no, key);
    }
    try {
      it->second(value, line_no);
    } catch (const config_error&) {
      throw;
    } catch (const std::exception& e) {
      throw config_error(source_name + ": " + e.what(), line_no, key);
    }
  }

  cfg.validate();
  return cfg;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

std::string serialize_config(const ScenarioConfig& cfg) {
  std::ostringstream os;
  auto kv = [&](const std::string& k, double v) { os << k << " = " << fmt(v) << "\n"; };
  auto sched = [&](const std::string& k, const pemfc::Schedule& s) {
    os << k << " =";
    for (const auto& [t, v] : s.points) os << " (" << fmt(t) << ", " << fmt(v) << ")";
    os << "\n";
  };

  os << "[sim]\n";
  kv("duration", cfg.duration);
  kv("dt", cfg.dt);
  os << "decimation = " << cfg.decimation << "\n";
  os << "seed = " << cfg.seed << "\n";
  kv("noise_amplitude", cfg.noise_amplitude);

  os << "\n[plant]\n";
  const auto& p = cfg.phys;
  kv("n_cells", p.n_cells);
  kv("R", p.R);
  kv("R_a", p.R_a);
  kv("p_atm", p.p_atm);
  kv("T_atm", p.T_atm);
  kv("T_fc", p.T_fc);
  kv("F", p.F);
  kv("M_a", p.M_a);
  kv("M_O2", p.M_O2);
  kv("M_N2", p.M_N2);
  kv("M_v", p.M_v);
  kv("C_D", p.C_D);
  kv("A_T", p.A_T);
  kv("gamma", p.gamma);
  kv("J_cp", p.J_cp);
  kv("motor_friction", p.motor_friction);
  kv("k_t", p.k_t);
  kv("C_p", p.C_p);
  kv("eta_cp", p.eta_cp);
  kv("eta_cm", p.eta_cm);
  kv("V_ca", p.V_ca);
  kv("V_sm", p.V_sm);
  kv("V_cpr_tr", p.V_cpr_tr);
  kv("k_ca_in", p.k_ca_in);
  kv("k_ca_out", p.k_ca_out);
  kv("rho_a", p.rho_a);
  kv("x_O2", p.x_O2);
  kv("mu_f", p.mu_f);
  kv("L_init", p.L_init);
  kv("k_gain", p.k_gain);
  kv("P_sat", p.P_sat);
  kv("omega_atm", p.omega_atm);
  kv("eta_vc", p.eta_vc);
  kv("kappa", p.kappa);
  if (cfg.x0) {
    os << "x0 = (" << fmt((*cfg.x0)[0]) << ", " << fmt((*cfg.x0)[1]) << ", "
       << fmt((*cfg.x0)[2]) << ", " << fmt((*cfg.x0)[3]) << ")\n";
  }
  sched("current_schedule", cfg.current_schedule);
  if (cfg.input_schedule) sched("input_schedule", *cfg.input_schedule);
  kv("x1_target", cfg.x1_target);
  os << "fault = " << (cfg.fault_mode == FaultMode::step ? "step" : "none") << "\n";
  kv("fault_time", cfg.fault_time);
  kv("fault_magnitude", cfg.fault_magnitude);

  os << "\n[design]\n";
  kv("eps_riccati", cfg.eps_riccati);
  kv("eps_gain", cfg.eps_gain);
  if (cfg.H) kv("H", *cfg.H);
  kv("box_p_min", cfg.box.p_min);
  kv("box_p_max", cfg.box.p_max);
  kv("box_x2_min", cfg.box.x2_min);
  kv("box_x2_max", cfg.box.x2_max);
  kv("box_w_min", cfg.box.w_min);
  kv("box_w_max", cfg.box.w_max);
  kv("box_u_min", cfg.box.u_min);
  kv("box_u_max", cfg.box.u_max);
  os << "grid_pts = " << cfg.grid_pts << "\n";
  kv("phi2_inv_bound", cfg.phi2_inv_bound);

  os << "\n[observer]\n";
  if (cfg.L0_y1) kv("L0_y1", *cfg.L0_y1);
  if (cfg.L0_y2) kv("L0_y2", *cfg.L0_y2);
  if (cfg.k_rate) kv("k_rate", *cfg.k_rate);
  kv("L_max", cfg.L_max);
  kv("dead_zone", cfg.dead_zone);
  kv("diff_L0", cfg.diff_L0);
  kv("warmup", cfg.warmup);
  os << "zhat2_0 = (" << fmt(cfg.zhat2_0[0]) << ", " << fmt(cfg.zhat2_0[1]) << ")\n";
  if (cfg.theta0) kv("theta0", *cfg.theta0);
  return os.str();
}

}  // namespace stwobs::sim
