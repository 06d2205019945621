#include "coopnav/world.hpp"

#include <charconv>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace coopnav {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& field, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing junk");
    return d;
  } catch (const std::exception&) {
    throw ScenarioError("parse error: field '" + field + "': bad number '" + value + "'");
  }
}

long long parse_int(const std::string& field, const std::string& value) {
  long long out = 0;
  const auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || p != value.data() + value.size()) {
    throw ScenarioError("parse error: field '" + field + "': bad integer '" + value + "'");
  }
  return out;
}

bool parse_bool(const std::string& field, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ScenarioError("parse error: field '" + field + "': bad bool '" + value + "'");
}

std::vector<double> parse_fields(const std::string& field, const std::string& value,
                                 std::size_t expected) {
  std::istringstream in(value);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) out.push_back(parse_double(field, tok));
  if (out.size() != expected) {
    throw ScenarioError("parse error: field '" + field + "': expected " +
                        std::to_string(expected) + " values, got " +
                        std::to_string(out.size()));
  }
  return out;
}

std::string fmt_double(double d) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", d);
  return buf;
}

void require(bool cond, const std::string& message) {
  if (!cond) throw ScenarioError("invalid scenario: " + message);
}

}  // namespace

Scenario load_scenario(const std::string& text) {
  Scenario s;
  bool saw_version = false;

  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ScenarioError("parse error: line " + std::to_string(lineno) +
                          ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (key == "version") {
      s.version = static_cast<int>(parse_int(key, value));
      saw_version = true;
    } else if (key == "vehicle") {
      const auto f = parse_fields(key, value, 5);
      VehicleSpec spec;
      spec.source = VehicleState::make(f[0], f[1], f[2]);
      spec.destination = {f[3], f[4]};
      s.vehicles.push_back(spec);
    } else if (key == "landmark") {
      const auto f = parse_fields(key, value, 3);
      Landmark lm;
      lm.id = static_cast<int>(f[0]);
      lm.x = f[1];
      lm.y = f[2];
      s.landmarks.push_back(lm);
    } else if (key == "v_mps") {
      s.v_mps = parse_double(key, value);
    } else if (key == "ts_s") {
      s.ts_s = parse_double(key, value);
    } else if (key == "rs_m") {
      s.rs_m = parse_double(key, value);
    } else if (key == "eta") {
      s.eta = parse_double(key, value);
    } else if (key == "kappa") {
      s.kappa = parse_double(key, value);
    } else if (key == "rho_m") {
      s.rho_m = parse_double(key, value);
    } else if (key == "w_connectivity") {
      s.w_connectivity = parse_double(key, value);
    } else if (key == "sigma_c_m") {
      s.sigma_c_m = parse_double(key, value);
    } else if (key == "gamma_rad2") {
      s.gamma_rad2 = parse_double(key, value);
    } else if (key == "q_diag") {
      s.q_diag = parse_double(key, value);
    } else if (key == "tau_h_s") {
      s.tau_h_s = parse_double(key, value);
    } else if (key == "n_e_steps") {
      s.n_e_steps = static_cast<int>(parse_int(key, value));
    } else if (key == "omega_min_rads") {
      s.omega_min_rads = parse_double(key, value);
    } else if (key == "omega_max_rads") {
      s.omega_max_rads = parse_double(key, value);
    } else if (key == "goal_radius_m") {
      s.goal_radius_m = parse_double(key, value);
    } else if (key == "arena_min_x_m") {
      s.arena_min_x_m = parse_double(key, value);
    } else if (key == "arena_max_x_m") {
      s.arena_max_x_m = parse_double(key, value);
    } else if (key == "arena_min_y_m") {
      s.arena_min_y_m = parse_double(key, value);
    } else if (key == "arena_max_y_m") {
      s.arena_max_y_m = parse_double(key, value);
    } else if (key == "seed") {
      s.seed = static_cast<std::uint64_t>(parse_int(key, value));
    } else if (key == "init_est_std_m") {
      s.init_est_std_m = parse_double(key, value);
    } else if (key == "init_est_heading_std_rad") {
      s.init_est_heading_std_rad = parse_double(key, value);
    } else if (key == "meas_noise_scale") {
      s.meas_noise_scale = parse_double(key, value);
    } else if (key == "process_noise_scale") {
      s.process_noise_scale = parse_double(key, value);
    } else if (key == "control_hold_steps") {
      s.control_hold_steps = static_cast<int>(parse_int(key, value));
    } else if (key == "replan_every_steps") {
      s.replan_every_steps = static_cast<int>(parse_int(key, value));
    } else if (key == "cost_stride_steps") {
      s.cost_stride_steps = static_cast<int>(parse_int(key, value));
    } else if (key == "w_predictive") {
      s.w_predictive = parse_bool(key, value);
    } else if (key == "max_hops") {
      s.max_hops = static_cast<int>(parse_int(key, value));
    } else {
      throw ScenarioError("parse error: unknown field '" + key + "'");
    }
  }

  if (!saw_version) throw ScenarioError("parse error: missing required field 'version'");
  validate_scenario(s);
  return s;
}

void validate_scenario(const Scenario& s) {
  require(s.version == 1, "version: unsupported value " + std::to_string(s.version));
  require(!s.vehicles.empty(), "vehicle: at least one vehicle required");
  require(s.ts_s > 0.0, "ts_s must be > 0");
  require(s.rho_m >= 0.0, "rho_m must be >= 0");
  require(s.rs_m > s.rho_m, "rs_m must exceed rho_m");
  require(s.eta >= 2.0, "eta must be >= 2");
  require(s.w_connectivity >= 0.0, "w_connectivity must be >= 0");
  require(s.sigma_c_m > 0.0, "sigma_c_m must be > 0");
  require(s.gamma_rad2 > 0.0, "gamma_rad2 must be > 0");
  require(s.q_diag >= 0.0, "q_diag must be >= 0");
  require(s.tau_h_s >= s.ts_s, "tau_h_s must be >= ts_s");
  require(s.n_e_steps >= 1, "n_e_steps must be >= 1");
  require(s.omega_min_rads < s.omega_max_rads, "omega_min_rads must be < omega_max_rads");
  require(s.goal_radius_m > 0.0, "goal_radius_m must be > 0");
  require(s.arena_min_x_m < s.arena_max_x_m, "arena_max_x_m must exceed arena_min_x_m");
  require(s.arena_min_y_m < s.arena_max_y_m, "arena_max_y_m must exceed arena_min_y_m");
  require(s.init_est_std_m >= 0.0, "init_est_std_m must be >= 0");
  require(s.init_est_heading_std_rad >= 0.0, "init_est_heading_std_rad must be >= 0");
  require(s.meas_noise_scale >= 0.0, "meas_noise_scale must be >= 0");
  require(s.process_noise_scale >= 0.0, "process_noise_scale must be >= 0");
  require(s.control_hold_steps >= 1, "control_hold_steps must be >= 1");
  require(s.replan_every_steps >= 1, "replan_every_steps must be >= 1");
  require(s.cost_stride_steps >= 1, "cost_stride_steps must be >= 1");
  require(s.max_hops >= 0, "max_hops must be >= 0");

  const auto inside = [&](double x, double y) {
    return x >= s.arena_min_x_m && x <= s.arena_max_x_m && y >= s.arena_min_y_m &&
           y <= s.arena_max_y_m;
  };
  for (std::size_t i = 0; i < s.vehicles.size(); ++i) {
    const auto& v = s.vehicles[i];
    const std::string tag = "vehicle[" + std::to_string(i) + "]";
    require(std::isfinite(v.source.x) && std::isfinite(v.source.y) &&
                std::isfinite(v.source.psi),
            tag + ".source must be finite");
    require(v.destination.allFinite(), tag + ".destination must be finite");
    require(inside(v.source.x, v.source.y), tag + ".source outside arena bounds");
    require(inside(v.destination.x(), v.destination.y()),
            tag + ".destination outside arena bounds");
  }
  std::set<int> ids;
  for (std::size_t j = 0; j < s.landmarks.size(); ++j) {
    const auto& lm = s.landmarks[j];
    const std::string tag = "landmark[" + std::to_string(j) + "]";
    require(std::isfinite(lm.x) && std::isfinite(lm.y), tag + " position must be finite");
    require(ids.insert(lm.id).second, tag + ".id duplicates another landmark id");
  }
}

std::string serialize_scenario(const Scenario& s) {
  std::ostringstream out;
  out << "version = " << s.version << "\n";
  out << "v_mps = " << fmt_double(s.v_mps) << "\n";
  out << "ts_s = " << fmt_double(s.ts_s) << "\n";
  out << "rs_m = " << fmt_double(s.rs_m) << "\n";
  out << "eta = " << fmt_double(s.eta) << "\n";
  out << "kappa = " << fmt_double(s.kappa) << "\n";
  out << "rho_m = " << fmt_double(s.rho_m) << "\n";
  out << "w_connectivity = " << fmt_double(s.w_connectivity) << "\n";
  out << "sigma_c_m = " << fmt_double(s.sigma_c_m) << "\n";
  out << "gamma_rad2 = " << fmt_double(s.gamma_rad2) << "\n";
  out << "q_diag = " << fmt_double(s.q_diag) << "\n";
  out << "tau_h_s = " << fmt_double(s.tau_h_s) << "\n";
  out << "n_e_steps = " << s.n_e_steps << "\n";
  out << "omega_min_rads = " << fmt_double(s.omega_min_rads) << "\n";
  out << "omega_max_rads = " << fmt_double(s.omega_max_rads) << "\n";
  out << "goal_radius_m = " << fmt_double(s.goal_radius_m) << "\n";
  out << "arena_min_x_m = " << fmt_double(s.arena_min_x_m) << "\n";
  out << "arena_max_x_m = " << fmt_double(s.arena_max_x_m) << "\n";
  out << "arena_min_y_m = " << fmt_double(s.arena_min_y_m) << "\n";
  out << "arena_max_y_m = " << fmt_double(s.arena_max_y_m) << "\n";
  out << "seed = " << s.seed << "\n";
  out << "init_est_std_m = " << fmt_double(s.init_est_std_m) << "\n";
  out << "init_est_heading_std_rad = " << fmt_double(s.init_est_heading_std_rad) << "\n";
  out << "meas_noise_scale = " << fmt_double(s.meas_noise_scale) << "\n";
  out << "process_noise_scale = " << fmt_double(s.process_noise_scale) << "\n";
  out << "control_hold_steps = " << s.control_hold_steps << "\n";
  out << "replan_every_steps = " << s.replan_every_steps << "\n";
  out << "cost_stride_steps = " << s.cost_stride_steps << "\n";
  out << "w_predictive = " << (s.w_predictive ? "true" : "false") << "\n";
  out << "max_hops = " << s.max_hops << "\n";
  for (const auto& v : s.vehicles) {
    out << "vehicle = " << fmt_double(v.source.x) << " " << fmt_double(v.source.y) << " "
        << fmt_double(v.source.psi) << " " << fmt_double(v.destination.x()) << " "
        << fmt_double(v.destination.y()) << "\n";
  }
  for (const auto& lm : s.landmarks) {
    out << "landmark = " << lm.id << " " << fmt_double(lm.x) << " " << fmt_double(lm.y)
        << "\n";
  }
  return out.str();
}

bool operator==(const Scenario& a, const Scenario& b) {
  auto veh_eq = [](const VehicleSpec& p, const VehicleSpec& q) {
    return p.source.x == q.source.x && p.source.y == q.source.y &&
           p.source.psi == q.source.psi && p.destination == q.destination;
  };
  auto lm_eq = [](const Landmark& p, const Landmark& q) {
    return p.id == q.id && p.x == q.x && p.y == q.y;
  };
  if (a.vehicles.size() != b.vehicles.size() || a.landmarks.size() != b.landmarks.size())
    return false;
  for (std::size_t i = 0; i < a.vehicles.size(); ++i)
    if (!veh_eq(a.vehicles[i], b.vehicles[i])) return false;
  for (std::size_t j = 0; j < a.landmarks.size(); ++j)
    if (!lm_eq(a.landmarks[j], b.landmarks[j])) return false;
  return a.version == b.version && a.v_mps == b.v_mps && a.ts_s == b.ts_s &&
         a.rs_m == b.rs_m && a.eta == b.eta && a.kappa == b.kappa && a.rho_m == b.rho_m &&
         a.w_connectivity == b.w_connectivity && a.sigma_c_m == b.sigma_c_m &&
         a.gamma_rad2 == b.gamma_rad2 && a.q_diag == b.q_diag && a.tau_h_s == b.tau_h_s &&
         a.n_e_steps == b.n_e_steps && a.omega_min_rads == b.omega_min_rads &&
         a.omega_max_rads == b.omega_max_rads && a.goal_radius_m == b.goal_radius_m &&
         a.arena_min_x_m == b.arena_min_x_m && a.arena_max_x_m == b.arena_max_x_m &&
         a.arena_min_y_m == b.arena_min_y_m && a.arena_max_y_m == b.arena_max_y_m &&
         a.seed == b.seed && a.init_est_std_m == b.init_est_std_m &&
         a.init_est_heading_std_rad == b.init_est_heading_std_rad && a.meas_noise_scale == b.meas_noise_scale &&
         a.process_noise_scale == b.process_noise_scale &&
         a.control_hold_steps == b.control_hold_steps &&
         a.replan_every_steps == b.replan_every_steps &&
         a.cost_stride_steps == b.cost_stride_steps && a.w_predictive == b.w_predictive &&
         a.max_hops == b.max_hops;
}

}  // namespace coopnav
