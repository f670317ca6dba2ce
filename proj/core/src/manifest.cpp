#include "shesim/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "shesim/hash.hpp"

namespace shesim {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char delim) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, delim)) out.push_back(trim(item));
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double d;
  try {
    d = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("manifest: bad numeric value for '" + key + "': " + v);
  }
  if (pos != v.size())
    throw std::invalid_argument("manifest: trailing characters in value for '" + key + "': " + v);
  return d;
}

int to_int(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (d != std::floor(d))
    throw std::invalid_argument("manifest: expected integer for '" + key + "': " + v);
  return static_cast<int>(d);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("manifest: expected boolean for '" + key + "': " + v);
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& tok : split(v, ',')) if (!tok.empty()) out.push_back(to_double(key, tok));
  return out;
}

std::vector<int> to_ints(const std::string& key, const std::string& v) {
  std::vector<int> out;
  for (const auto& tok : split(v, ',')) if (!tok.empty()) out.push_back(to_int(key, tok));
  return out;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
  return s;
}

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::string scheme_name(SimConfig::Scheme s) {
  switch (s) {
    case SimConfig::Scheme::expEuler: return "expEuler";
    case SimConfig::Scheme::picard: return "picard";
    case SimConfig::Scheme::ouExact: return "ouExact";
  }
  return "expEuler";
}

SimConfig::Scheme scheme_of(const std::string& v) {
  if (v == "expEuler") return SimConfig::Scheme::expEuler;
  if (v == "picard") return SimConfig::Scheme::picard;
  if (v == "ouExact") return SimConfig::Scheme::ouExact;
  throw std::invalid_argument("manifest: unknown scheme '" + v + "'");
}

std::string fn_kind_name(const ScalarFn& f) {
  switch (f.kind()) {
    case ScalarFn::Kind::zero: return "zero";
    case ScalarFn::Kind::linear: return "linear";
    case ScalarFn::Kind::scaled_sine: return "sine";
    case ScalarFn::Kind::table: return "table";
  }
  return "zero";
}

void serialize_fn(std::ostream& os, const std::string& section, const ScalarFn& f) {
  os << "[" << section << "]\n";
  os << "kind = " << fn_kind_name(f) << "\n";
  switch (f.kind()) {
    case ScalarFn::Kind::zero: break;
    case ScalarFn::Kind::linear:
    case ScalarFn::Kind::scaled_sine:
      os << "a = " << fmt(f.slope()) << "\n";
      os << "b = " << fmt(f.offset()) << "\n";
      break;
    case ScalarFn::Kind::table:
      os << "x = " << join(f.table_x()) << "\n";
      os << "y = " << join(f.table_y()) << "\n";
      break;
  }
  os << "\n";
}

struct FnBuilder {
  std::string kind = "zero";
  double a = 0.0, b = 0.0;
  std::vector<double> xs, ys;

  void set(const std::string& key, const std::string& value) {
    if (key == "kind") kind = value;
    else if (key == "a") a = to_double(key, value);
    else if (key == "b") b = to_double(key, value);
    else if (key == "x") xs = to_doubles(key, value);
    else if (key == "y") ys = to_doubles(key, value);
    else throw std::invalid_argument("manifest: unknown key '" + key + "' in scalar-fn section");
  }
  ScalarFn build() const {
    if (kind == "zero") return ScalarFn::zero();
    if (kind == "linear") return ScalarFn::linear(a, b);
    if (kind == "sine") return ScalarFn::sine_offset(a, b);
    if (kind == "table") return ScalarFn::table(xs, ys);
    throw std::invalid_argument("manifest: unknown scalar-fn kind '" + kind + "'");
  }
};

std::string initial_kind_name(InitialSpec::Kind k) {
  switch (k) {
    case InitialSpec::Kind::zero: return "zero";
    case InitialSpec::Kind::mode1: return "mode1";
    case InitialSpec::Kind::decay: return "decay";
  }
  return "zero";
}

} // namespace

SpectralField InitialSpec::build(const EigenSystem& basis) const {
  SpectralField x(basis);
  switch (kind) {
    case Kind::zero: break;
    case Kind::mode1: x[0] = amplitude; break;
    case Kind::decay:
      for (int k = 0; k < basis.mode_count(); ++k)
        x[k] = amplitude * std::pow(basis.mode_norm_sq(k), -exponent / 2.0);
      break;
  }
  return x;
}

std::vector<std::string> ExperimentManifest::validate() const {
  std::vector<std::string> bad;
  if (schema_version != 1)
    bad.push_back("unsupported schema version " + std::to_string(schema_version));
  if (name.empty() || name.find('/') != std::string::npos || name.find('\\') != std::string::npos)
    bad.push_back("experiment name must be nonempty and free of path separators");
  for (auto& v : sim.validate()) bad.push_back("sim: " + v);
  if (noise.dim != sim.dim) bad.push_back("noise: dimension differs from sim dimension");
  if (noise.epsilon < 0.0 || noise.epsilon > 1.0) bad.push_back("noise: epsilon outside [0,1]");
  if (noise.law == NoiseSpec::Law::parametric && 2.0 * noise.r <= sim.dim)
    bad.push_back("noise: parametric trace diverges (need 2r > d)");
  if (plan.target_epsilon >= 0.0) {
    NoiseSpec probe = noise;
    probe.epsilon = plan.target_epsilon;
    const CqReport rep = check_cq_condition(probe);
    if (rep.converged != CqReport::Converged::yes)
      bad.push_back("noise: eigenfunction summability condition not convergent at epsilon = " +
                    fmt(plan.target_epsilon) +
                    " (tail bound " + fmt(rep.tail_bound) + " vs partial sum " +
                    fmt(rep.partial_sum) + ")");
  }
  if (sim.scheme == SimConfig::Scheme::ouExact &&
      !(drift.is_zero() && diffusion.is_constant() && std::abs(diffusion(0.0) - 1.0) < 1e-15))
    bad.push_back("scheme ouExact requires zero drift and unit constant diffusion");
  if (sim.scheme == SimConfig::Scheme::picard && plan.picard_iterations < 1)
    bad.push_back("scheme picard requires analysis.picard_iterations >= 1");
  if (plan.hoelder_temporal) {
    if (plan.hoelder_lag_steps.size() < 5)
      bad.push_back("analysis: temporal-Hoelder regression needs at least 5 lags");
    for (const int l : plan.hoelder_lag_steps)
      if (l < 4 || l > sim.steps / 8)
        bad.push_back("analysis: lag " + std::to_string(l) +
                      " steps outside [4 dt, T/8] = [4, " + std::to_string(sim.steps / 8) + "] steps");
    if (plan.hoelder_anchor_count < 1) bad.push_back("analysis: need at least one anchor");
  }
  if (!plan.sweep_resolutions.empty()) {
    if (plan.sweep_resolutions.size() < 3)
      bad.push_back("analysis: spatial sweep needs at least 3 resolutions");
    for (std::size_t i = 1; i < plan.sweep_resolutions.size(); ++i)
      if (plan.sweep_resolutions[i] <= plan.sweep_resolutions[i - 1])
        bad.push_back("analysis: sweep resolutions must increase");
    if (plan.sweep_thetas.empty()) bad.push_back("analysis: sweep needs a theta grid");
  }
  for (const int m : plan.convergence_steps)
    if (m < 2) bad.push_back("analysis: convergence step counts must be >= 2");
  for (const int m : plan.factorization_steps)
    if (m < 2) bad.push_back("analysis: factorization step counts must be >= 2");
  return bad;
}

std::vector<double> ExperimentManifest::hoelder_anchors() const {
  std::vector<double> anchors;
  if (plan.hoelder_lag_steps.empty()) return anchors;
  const double dt = sim.dt();
  const int max_lag = *std::max_element(plan.hoelder_lag_steps.begin(), plan.hoelder_lag_steps.end());
  const double lo = sim.horizon / 2.0;
  const double hi = sim.horizon - max_lag * dt;
  const int n = plan.hoelder_anchor_count;
  for (int i = 0; i < n; ++i) {
    const double t = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
    const int snap = static_cast<int>(std::llround(t / dt));
    anchors.push_back(snap * dt);
  }
  std::sort(anchors.begin(), anchors.end());
  anchors.erase(std::unique(anchors.begin(), anchors.end()), anchors.end());
  return anchors;
}

std::vector<std::pair<double, double>> ExperimentManifest::continuity_pairs() const {
  std::vector<std::pair<double, double>> pairs;
  const double dt = sim.dt();
  const int anchor_step = sim.steps / 4;
  for (int g = 2; g <= sim.steps / 2; g *= 2)
    pairs.emplace_back(anchor_step * dt, (anchor_step + g) * dt);
  return pairs;
}

std::vector<double> ExperimentManifest::required_snapshot_times() const {
  std::set<double> times{0.0, sim.horizon};
  const double dt = sim.dt();
  if (plan.hoelder_temporal) {
    for (const double a : hoelder_anchors()) {
      times.insert(a);
      for (const int l : plan.hoelder_lag_steps) times.insert(a + l * dt);
    }
  }
  if (plan.lp_continuity) {
    for (const auto& [t1, t2] : continuity_pairs()) {
      times.insert(t1);
      times.insert(t2);
    }
  }
  if (plan.moment_bound) {
    for (int m = 0; m <= sim.steps; m += std::max(1, plan.moment_time_stride))
      times.insert(m * dt);
    times.insert(sim.horizon);
  }
  return {times.begin(), times.end()};
}

std::string serialize_manifest_text(const ExperimentManifest& m) {
  std::ostringstream os;
  os << "# shesim experiment manifest\n";
  os << "schema = " << m.schema_version << "\n";
  os << "name = " << m.name << "\n\n";

  os << "[sim]\n";
  os << "T = " << fmt(m.sim.horizon) << "\n";
  os << "steps = " << m.sim.steps << "\n";
  os << "modes = " << m.sim.modes_per_axis << "\n";
  os << "dim = " << m.sim.dim << "\n";
  os << "q = " << fmt(m.sim.q) << "\n";
  os << "p = " << fmt(m.sim.p) << "\n";
  os << "theta = " << fmt(m.sim.theta) << "\n";
  os << "alpha = " << fmt(m.sim.alpha) << "\n";
  os << "scheme = " << scheme_name(m.sim.scheme) << "\n";
  os << "paths = " << m.sim.ensemble_size << "\n";
  os << "seed = " << m.sim.master_seed << "\n\n";

  os << "[noise]\n";
  os << "law = " << (m.noise.law == NoiseSpec::Law::parametric ? "parametric" : "list") << "\n";
  if (m.noise.law == NoiseSpec::Law::parametric) {
    os << "c = " << fmt(m.noise.c) << "\n";
    os << "r = " << fmt(m.noise.r) << "\n";
  } else {
    os << "values = " << join(m.noise.eigenvalue_list) << "\n";
    if (m.noise.truncated_view) os << "truncated_view = true\n";
  }
  os << "epsilon = " << fmt(m.noise.epsilon) << "\n";
  os << "modes = " << m.noise.modes_per_axis << "\n\n";

  serialize_fn(os, "drift", m.drift);
  serialize_fn(os, "diffusion", m.diffusion);

  os << "[initial]\n";
  os << "kind = " << initial_kind_name(m.initial.kind) << "\n";
  if (m.initial.kind != InitialSpec::Kind::zero) {
    os << "amplitude = " << fmt(m.initial.amplitude) << "\n";
    if (m.initial.kind == InitialSpec::Kind::decay)
      os << "exponent = " << fmt(m.initial.exponent) << "\n";
  }
  os << "\n";

  os << "[analysis]\n";
  if (m.plan.per_mode_variance) os << "per_mode_variance = true\n";
  if (!m.plan.convergence_steps.empty())
    os << "convergence_steps = " << join(m.plan.convergence_steps) << "\n";
  if (m.plan.hoelder_temporal) {
    os << "hoelder = true\n";
    os << "hoelder_thetas = " << join(m.plan.hoelder_thetas) << "\n";
    os << "hoelder_c0 = " << (m.plan.hoelder_c0 ? "true" : "false") << "\n";
    os << "hoelder_lags = " << join(m.plan.hoelder_lag_steps) << "\n";
    os << "hoelder_anchors = " << m.plan.hoelder_anchor_count << "\n";
    os << "hoelder_p = " << fmt(m.plan.hoelder_moment_p) << "\n";
  }
  if (!m.plan.sweep_resolutions.empty()) {
    os << "sweep_resolutions = " << join(m.plan.sweep_resolutions) << "\n";
    os << "sweep_thetas = " << join(m.plan.sweep_thetas) << "\n";
  }
  if (m.plan.moment_bound) os << "moment_bound = true\n";
  if (m.plan.lp_continuity) os << "lp_continuity = true\n";
  if (m.plan.picard_iterations > 0) os << "picard_iterations = " << m.plan.picard_iterations << "\n";
  if (m.plan.burkholder_integrands > 0)
    os << "burkholder_integrands = " << m.plan.burkholder_integrands << "\n";
  if (!m.plan.factorization_steps.empty())
    os << "factorization_steps = " << join(m.plan.factorization_steps) << "\n";
  if (m.plan.target_epsilon >= 0.0) os << "target_epsilon = " << fmt(m.plan.target_epsilon) << "\n";
  if (m.plan.moment_time_stride != 16) os << "moment_stride = " << m.plan.moment_time_stride << "\n";
  if (m.plan.dump_noise) os << "dump_noise = true\n";
  os << "\n";

  if (!m.output_dir.empty()) {
    os << "[output]\n";
    os << "dir = " << m.output_dir << "\n";
  }
  return os.str();
}

ExperimentManifest parse_manifest_text(const std::string& text) {
  ExperimentManifest m;
  m.plan.hoelder_c0 = true;
  FnBuilder drift_b, diff_b;
  std::string section;
  std::istringstream is(text);
  std::string line;
  bool noise_parametric = true;
  std::vector<double> noise_values;
  bool noise_truncated = false;
  double noise_c = 1.0, noise_r = 1.0, noise_eps = 0.0;
  int noise_modes = -1;
  std::string initial_kind = "zero";

  while (std::getline(is, line)) {
    const auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("manifest: malformed section header: " + line);
      section = line.substr(1, line.size() - 2);
      static const std::set<std::string> known{"sim", "noise", "drift", "diffusion",
                                               "initial", "analysis", "output"};
      if (!known.count(section))
        throw std::invalid_argument("manifest: unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("manifest: expected 'key = value', got: " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (section.empty()) {
      if (key == "schema") m.schema_version = to_int(key, value);
      else if (key == "name") m.name = value;
      else throw std::invalid_argument("manifest: unknown top-level key '" + key + "'");
    } else if (section == "sim") {
      if (key == "T") m.sim.horizon = to_double(key, value);
      else if (key == "steps") m.sim.steps = to_int(key, value);
      else if (key == "modes") m.sim.modes_per_axis = to_int(key, value);
      else if (key == "dim") m.sim.dim = to_int(key, value);
      else if (key == "q") m.sim.q = to_double(key, value);
      else if (key == "p") m.sim.p = to_double(key, value);
      else if (key == "theta") m.sim.theta = to_double(key, value);
      else if (key == "alpha") m.sim.alpha = to_double(key, value);
      else if (key == "scheme") m.sim.scheme = scheme_of(value);
      else if (key == "paths") m.sim.ensemble_size = to_int(key, value);
      else if (key == "seed") m.sim.master_seed = static_cast<std::uint64_t>(std::stoull(value));
      else throw std::invalid_argument("manifest: unknown key '" + key + "' in [sim]");
    } else if (section == "noise") {
      if (key == "law") noise_parametric = (value == "parametric");
      else if (key == "c") noise_c = to_double(key, value);
      else if (key == "r") noise_r = to_double(key, value);
      else if (key == "values") noise_values = to_doubles(key, value);
      else if (key == "truncated_view") noise_truncated = to_bool(key, value);
      else if (key == "epsilon") noise_eps = to_double(key, value);
      else if (key == "modes") noise_modes = to_int(key, value);
      else throw std::invalid_argument("manifest: unknown key '" + key + "' in [noise]");
    } else if (section == "drift") {
      drift_b.set(key, value);
    } else if (section == "diffusion") {
      diff_b.set(key, value);
    } else if (section == "initial") {
      if (key == "kind") initial_kind = value;
      else if (key == "amplitude") m.initial.amplitude = to_double(key, value);
      else if (key == "exponent") m.initial.exponent = to_double(key, value);
      else throw std::invalid_argument("manifest: unknown key '" + key + "' in [initial]");
    } else if (section == "analysis") {
      if (key == "per_mode_variance") m.plan.per_mode_variance = to_bool(key, value);
      else if (key == "convergence_steps") m.plan.convergence_steps = to_ints(key, value);
      else if (key == "hoelder") m.plan.hoelder_temporal = to_bool(key, value);
      else if (key == "hoelder_thetas") m.plan.hoelder_thetas = to_doubles(key, value);
      else if (key == "hoelder_c0") m.plan.hoelder_c0 = to_bool(key, value);
      else if (key == "hoelder_lags") m.plan.hoelder_lag_steps = to_ints(key, value);
      else if (key == "hoelder_anchors") m.plan.hoelder_anchor_count = to_int(key, value);
      else if (key == "hoelder_p") m.plan.hoelder_moment_p = to_double(key, value);
      else if (key == "sweep_resolutions") m.plan.sweep_resolutions = to_ints(key, value);
      else if (key == "sweep_thetas") m.plan.sweep_thetas = to_doubles(key, value);
      else if (key == "moment_bound") m.plan.moment_bound = to_bool(key, value);
      else if (key == "lp_continuity") m.plan.lp_continuity = to_bool(key, value);
      else if (key == "picard_iterations") m.plan.picard_iterations = to_int(key, value);
      else if (key == "burkholder_integrands") m.plan.burkholder_integrands = to_int(key, value);
      else if (key == "factorization_steps") m.plan.factorization_steps = to_ints(key, value);
      else if (key == "target_epsilon") m.plan.target_epsilon = to_double(key, value);
      else if (key == "moment_stride") m.plan.moment_time_stride = to_int(key, value);
      else if (key == "dump_noise") m.plan.dump_noise = to_bool(key, value);
      else throw std::invalid_argument("manifest: unknown key '" + key + "' in [analysis]");
    } else if (section == "output") {
      if (key == "dir") m.output_dir = value;
      else throw std::invalid_argument("manifest: unknown key '" + key + "' in [output]");
    }
  }

  if (noise_modes < 0) noise_modes = m.sim.modes_per_axis;
  if (noise_parametric) {
    m.noise = NoiseSpec::parametric_law(m.sim.dim, noise_modes, noise_c, noise_r, noise_eps);
  } else {
    m.noise = NoiseSpec::from_list(m.sim.dim, noise_modes, noise_values, noise_eps);
    m.noise.truncated_view = noise_truncated;
  }
  m.drift = drift_b.build();
  m.diffusion = diff_b.build();
  if (initial_kind == "zero") m.initial.kind = InitialSpec::Kind::zero;
  else if (initial_kind == "mode1") m.initial.kind = InitialSpec::Kind::mode1;
  else if (initial_kind == "decay") m.initial.kind = InitialSpec::Kind::decay;
  else throw std::invalid_argument("manifest: unknown initial kind '" + initial_kind + "'");
  return m;
}

namespace {

ordered_json fn_to_json(const ScalarFn& f) {
  ordered_json j;
  j["kind"] = fn_kind_name(f);
  switch (f.kind()) {
    case ScalarFn::Kind::zero: break;
    case ScalarFn::Kind::linear:
    case ScalarFn::Kind::scaled_sine:
      j["a"] = f.slope();
      j["b"] = f.offset();
      break;
    case ScalarFn::Kind::table:
      j["x"] = f.table_x();
      j["y"] = f.table_y();
      break;
  }
  return j;
}

ScalarFn fn_from_json(const ordered_json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "zero") return ScalarFn::zero();
  if (kind == "linear") return ScalarFn::linear(j.value("a", 0.0), j.value("b", 0.0));
  if (kind == "sine") return ScalarFn::sine_offset(j.value("a", 0.0), j.value("b", 0.0));
  if (kind == "table")
    return ScalarFn::table(j.at("x").get<std::vector<double>>(),
                           j.at("y").get<std::vector<double>>());
  throw std::invalid_argument("manifest json: unknown scalar-fn kind '" + kind + "'");
}

} // namespace

std::string serialize_manifest_json(const ExperimentManifest& m) {
  ordered_json j;
  j["schema"] = m.schema_version;
  j["name"] = m.name;
  ordered_json sim;
  sim["T"] = m.sim.horizon;
  sim["steps"] = m.sim.steps;
  sim["modes"] = m.sim.modes_per_axis;
  sim["dim"] = m.sim.dim;
  sim["q"] = m.sim.q;
  sim["p"] = m.sim.p;
  sim["theta"] = m.sim.theta;
  sim["alpha"] = m.sim.alpha;
  sim["scheme"] = scheme_name(m.sim.scheme);
  sim["paths"] = m.sim.ensemble_size;
  sim["seed"] = m.sim.master_seed;
  j["sim"] = sim;
  ordered_json noise;
  noise["law"] = m.noise.law == NoiseSpec::Law::parametric ? "parametric" : "list";
  if (m.noise.law == NoiseSpec::Law::parametric) {
    noise["c"] = m.noise.c;
    noise["r"] = m.noise.r;
  } else {
    noise["values"] = m.noise.eigenvalue_list;
    if (m.noise.truncated_view) noise["truncated_view"] = true;
  }
  noise["epsilon"] = m.noise.epsilon;
  noise["modes"] = m.noise.modes_per_axis;
  j["noise"] = noise;
  j["drift"] = fn_to_json(m.drift);
  j["diffusion"] = fn_to_json(m.diffusion);
  ordered_json init;
  init["kind"] = initial_kind_name(m.initial.kind);
  init["amplitude"] = m.initial.amplitude;
  init["exponent"] = m.initial.exponent;
  j["initial"] = init;
  ordered_json plan;
  plan["per_mode_variance"] = m.plan.per_mode_variance;
  plan["convergence_steps"] = m.plan.convergence_steps;
  plan["hoelder"] = m.plan.hoelder_temporal;
  plan["hoelder_thetas"] = m.plan.hoelder_thetas;
  plan["hoelder_c0"] = m.plan.hoelder_c0;
  plan["hoelder_lags"] = m.plan.hoelder_lag_steps;
  plan["hoelder_anchors"] = m.plan.hoelder_anchor_count;
  plan["hoelder_p"] = m.plan.hoelder_moment_p;
  plan["sweep_resolutions"] = m.plan.sweep_resolutions;
  plan["sweep_thetas"] = m.plan.sweep_thetas;
  plan["moment_bound"] = m.plan.moment_bound;
  plan["lp_continuity"] = m.plan.lp_continuity;
  plan["picard_iterations"] = m.plan.picard_iterations;
  plan["burkholder_integrands"] = m.plan.burkholder_integrands;
  plan["factorization_steps"] = m.plan.factorization_steps;
  plan["target_epsilon"] = m.plan.target_epsilon;
  plan["moment_stride"] = m.plan.moment_time_stride;
  plan["dump_noise"] = m.plan.dump_noise;
  j["analysis"] = plan;
  if (!m.output_dir.empty()) j["output"] = ordered_json{{"dir", m.output_dir}};
  return j.dump(2) + "\n";
}

ExperimentManifest parse_manifest_json(const std::string& text) {
  const ordered_json j = ordered_json::parse(text);
  static const std::set<std::string> known{"schema", "name",    "sim",      "noise",
                                           "drift",  "diffusion", "initial", "analysis",
                                           "output"};
  for (const auto& [key, _] : j.items())
    if (!known.count(key))
      throw std::invalid_argument("manifest json: unknown top-level key '" + key + "'");
  ExperimentManifest m;
  m.schema_version = j.at("schema").get<int>();
  m.name = j.at("name").get<std::string>();
  const auto& sim = j.at("sim");
  m.sim.horizon = sim.at("T").get<double>();
  m.sim.steps = sim.at("steps").get<int>();
  m.sim.modes_per_axis = sim.at("modes").get<int>();
  m.sim.dim = sim.value("dim", 1);
  m.sim.q = sim.value("q", 2.0);
  m.sim.p = sim.value("p", 4.0);
  m.sim.theta = sim.value("theta", 0.0);
  m.sim.alpha = sim.value("alpha", 0.3);
  m.sim.scheme = scheme_of(sim.value("scheme", std::string("expEuler")));
  m.sim.ensemble_size = sim.at("paths").get<int>();
  m.sim.master_seed = sim.at("seed").get<std::uint64_t>();
  const auto& noise = j.at("noise");
  const int nmodes = noise.value("modes", m.sim.modes_per_axis);
  const double eps = noise.value("epsilon", 0.0);
  if (noise.at("law").get<std::string>() == "parametric") {
    m.noise = NoiseSpec::parametric_law(m.sim.dim, nmodes, noise.value("c", 1.0),
                                        noise.at("r").get<double>(), eps);
  } else {
    m.noise = NoiseSpec::from_list(m.sim.dim, nmodes,
                                   noise.at("values").get<std::vector<double>>(), eps);
    m.noise.truncated_view = noise.value("truncated_view", false);
  }
  m.drift = fn_from_json(j.at("drift"));
  m.diffusion = fn_from_json(j.at("diffusion"));
  if (j.contains("initial")) {
    const auto& init = j.at("initial");
    const std::string kind = init.value("kind", std::string("zero"));
    if (kind == "zero") m.initial.kind = InitialSpec::Kind::zero;
    else if (kind == "mode1") m.initial.kind = InitialSpec::Kind::mode1;
    else if (kind == "decay") m.initial.kind = InitialSpec::Kind::decay;
    else throw std::invalid_argument("manifest json: unknown initial kind '" + kind + "'");
    m.initial.amplitude = init.value("amplitude", 1.0);
    m.initial.exponent = init.value("exponent", 3.0);
  }
  if (j.contains("analysis")) {
    const auto& plan = j.at("analysis");
    m.plan.per_mode_variance = plan.value("per_mode_variance", false);
    m.plan.convergence_steps = plan.value("convergence_steps", std::vector<int>{});
    m.plan.hoelder_temporal = plan.value("hoelder", false);
    m.plan.hoelder_thetas = plan.value("hoelder_thetas", std::vector<double>{});
    m.plan.hoelder_c0 = plan.value("hoelder_c0", true);
    m.plan.hoelder_lag_steps = plan.value("hoelder_lags", std::vector<int>{});
    m.plan.hoelder_anchor_count = plan.value("hoelder_anchors", 4);
    m.plan.hoelder_moment_p = plan.value("hoelder_p", 2.0);
    m.plan.sweep_resolutions = plan.value("sweep_resolutions", std::vector<int>{});
    m.plan.sweep_thetas = plan.value("sweep_thetas", std::vector<double>{});
    m.plan.moment_bound = plan.value("moment_bound", false);
    m.plan.lp_continuity = plan.value("lp_continuity", false);
    m.plan.picard_iterations = plan.value("picard_iterations", 0);
    m.plan.burkholder_integrands = plan.value("burkholder_integrands", 0);
    m.plan.factorization_steps = plan.value("factorization_steps", std::vector<int>{});
    m.plan.target_epsilon = plan.value("target_epsilon", -1.0);
    m.plan.moment_time_stride = plan.value("moment_stride", 16);
    m.plan.dump_noise = plan.value("dump_noise", false);
  }
  if (j.contains("output")) m.output_dir = j.at("output").value("dir", std::string());
  return m;
}

ExperimentManifest load_manifest(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) throw std::runtime_error("cannot open manifest: " + file.string());
  std::stringstream ss;
  ss << is.rdbuf();
  if (file.extension() == ".json") return parse_manifest_json(ss.str());
  return parse_manifest_text(ss.str());
}

std::string manifest_hash(const ExperimentManifest& m) {
  // the destination directory is not part of the experiment's identity
  ExperimentManifest canon = m;
  canon.output_dir.clear();
  return hash_hex(serialize_manifest_text(canon));
}

std::vector<std::string> preset_names() {
  return {"smoke", "ou-oracle", "she-eps1", "she-eps0", "burkholder", "factorization"};
}

ExperimentManifest preset(const std::string& name) {
  ExperimentManifest m;
  m.name = name;
  if (name == "smoke") {
    m.sim.horizon = 0.5;
    m.sim.steps = 256;
    m.sim.modes_per_axis = 16;
    m.sim.q = 2.0;
    m.sim.p = 4.0;
    m.sim.alpha = 0.3;
    m.sim.scheme = SimConfig::Scheme::expEuler;
    m.sim.ensemble_size = 100;
    m.sim.master_seed = 20240501;
    m.noise = NoiseSpec::parametric_law(1, 16, 1.0, 2.0, 0.0);
    m.drift = ScalarFn::sine_offset(0.5, 0.0);
    m.diffusion = ScalarFn::sine_offset(0.2, 1.0);
    m.initial.kind = InitialSpec::Kind::decay;
    m.initial.amplitude = 1.0;
    m.initial.exponent = 2.0;
    m.plan.moment_bound = true;
    m.plan.lp_continuity = true;
    return m;
  }
  if (name == "ou-oracle") {
    m.sim.horizon = 1.0;
    m.sim.steps = 1024;
    m.sim.modes_per_axis = 64;
    m.sim.q = 2.0;
    m.sim.p = 4.0;
    m.sim.alpha = 0.3;
    m.sim.scheme = SimConfig::Scheme::ouExact;
    m.sim.ensemble_size = 10000;
    m.sim.master_seed = 94607;
    m.noise = NoiseSpec::parametric_law(1, 64, 1.0, 2.0, 0.0); // lambda_n^Q = n^-4
    m.drift = ScalarFn::zero();
    m.diffusion = ScalarFn::constant(1.0);
    m.initial.kind = InitialSpec::Kind::zero;
    m.plan.per_mode_variance = true;
    m.plan.convergence_steps = {256, 512, 1024};
    return m;
  }
  if (name == "she-eps1") {
    m.sim.horizon = 0.5;
    m.sim.steps = 512;
    m.sim.modes_per_axis = 64;
    m.sim.q = 2.0;
    m.sim.p = 4.0;
    m.sim.alpha = 0.3;
    m.sim.scheme = SimConfig::Scheme::picard;
    m.sim.ensemble_size = 64;
    m.sim.master_seed = 73311;
    m.noise = NoiseSpec::parametric_law(1, 64, 1.0, 3.0, 1.0); // lambda_n^Q = n^-6
    m.drift = ScalarFn::sine_offset(1.0, 0.0);                 // sin(x)
    // bounded-Lipschitz x/(1+x^2) table on [-8, 8]
    {
      std::vector<double> xs, ys;
      for (int i = 0; i <= 128; ++i) {
        const double x = -8.0 + 16.0 * i / 128.0;
        xs.push_back(x);
        ys.push_back(x / (1.0 + x * x));
      }
      m.diffusion = ScalarFn::table(std::move(xs), std::move(ys));
    }
    m.initial.kind = InitialSpec::Kind::decay;
    m.initial.amplitude = 0.5;
    m.initial.exponent = 3.0;
    m.plan.picard_iterations = 6;
    m.plan.target_epsilon = 1.0;
    m.plan.moment_bound = true;
    return m;
  }
  if (name == "she-eps0") {
    m.sim.horizon = 0.0625;
    m.sim.steps = 1024;
    m.sim.modes_per_axis = 64;
    m.sim.q = 2.0;
    m.sim.p = 4.0;
    m.sim.alpha = 0.3;
    m.sim.scheme = SimConfig::Scheme::expEuler;
    m.sim.ensemble_size = 2000;
    m.sim.master_seed = 61409;
    // boundary-scaling list: n^{-1.2} (1 + 10 (n/64)^2); the quadratic tail
    // factor keeps the structure functions in the window at N = 64
    {
      std::vector<double> vals(64);
      for (int n = 1; n <= 64; ++n)
        vals[static_cast<std::size_t>(n - 1)] =
            std::pow(n, -1.2) * (1.0 + 10.0 * (n / 64.0) * (n / 64.0));
      m.noise = NoiseSpec::from_list(1, 64, std::move(vals), 0.0);
    }
    m.drift = ScalarFn::sine_offset(0.25, 0.0);
    m.diffusion = ScalarFn::sine_offset(0.1, 1.0);
    m.initial.kind = InitialSpec::Kind::zero;
    m.plan.hoelder_temporal = true;
    m.plan.hoelder_thetas = {0.0, 0.4, 0.8};
    m.plan.hoelder_c0 = true;
    m.plan.hoelder_lag_steps = {4, 8, 16, 32, 64};
    m.plan.hoelder_anchor_count = 4;
    m.plan.hoelder_moment_p = 2.0;
    return m;
  }
  if (name == "burkholder") {
    m.sim.horizon = 1.0;
    m.sim.steps = 128;
    m.sim.modes_per_axis = 8;
    m.sim.q = 2.0;
    m.sim.p = 4.0;
    m.sim.alpha = 0.3;
    m.sim.scheme = SimConfig::Scheme::expEuler;
    m.sim.ensemble_size = 400; // W ensemble for the ratio estimates
    m.sim.master_seed = 300556;
    m.noise = NoiseSpec::from_list(1, 8, std::vector<double>(8, 1.0), 0.0);
    m.drift = ScalarFn::zero();
    m.diffusion = ScalarFn::constant(1.0);
    m.plan.burkholder_integrands = 50;
    return m;
  }
  if (name == "factorization") {
    m.sim.horizon = 0.25;
    m.sim.steps = 4096;
    m.sim.modes_per_axis = 16;
    m.sim.q = 2.0;
    m.sim.p = 4.0;
    m.sim.alpha = 0.4;
    m.sim.scheme = SimConfig::Scheme::expEuler;
    m.sim.ensemble_size = 48;
    m.sim.master_seed = 8181;
    m.noise = NoiseSpec::parametric_law(1, 16, 1.0, 2.0, 0.0);
    m.drift = ScalarFn::zero();
    m.diffusion = ScalarFn::constant(1.0);
    m.plan.factorization_steps = {512, 1024, 2048, 4096};
    return m;
  }
  std::string msg = "unknown preset '" + name + "'; valid names:";
  for (const auto& n : preset_names()) msg += " " + n;
  throw std::invalid_argument(msg);
}

} // namespace shesim
