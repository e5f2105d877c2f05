#include "renewal_ldp/json_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "renewal_ldp/numeric.hpp"

namespace rldp {
namespace {

double number(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
  if (!j.at(key).is_number()) throw ConfigError(where + "." + key + ": expected a number");
  return j.at(key).get<double>();
}

json number_json(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? json("nan") : json(v > 0 ? "inf" : "-inf");
}

double number_from(const json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return kInfinity;
    if (s == "-inf") return -kInfinity;
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw ConfigError(where + ": expected a number");
}

Matrix matrix_from(const json& j, std::size_t n, const std::string& where) {
  if (!j.is_array() || j.size() != n) throw ConfigError(where + ": expected " + std::to_string(n) + " rows");
  Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t x = 0; x < n; ++x) {
    const auto& row = j[x];
    const std::string at = where + "[" + std::to_string(x) + "]";
    if (!row.is_array() || row.size() != n) throw ConfigError(at + ": expected " + std::to_string(n) + " entries");
    for (std::size_t y = 0; y < n; ++y) m(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) = number_from(row[y], at);
  }
  return m;
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index x = 0; x < m.rows(); ++x) {
    json row = json::array();
    for (Eigen::Index y = 0; y < m.cols(); ++y) row.push_back(number_json(m(x, y)));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

WaitLaw wait_law_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  if (!j.contains("family") || !j.at("family").is_string()) throw ConfigError(where + ": missing string key 'family'");
  const auto family = j.at("family").get<std::string>();
  try {
    if (family == "exponential") return WaitLaw(Exponential{number(j, "rate", where)});
    if (family == "gamma") return WaitLaw(GammaLaw{number(j, "shape", where), number(j, "scale", where)});
    if (family == "pareto") return WaitLaw(Pareto{number(j, "index", where), number(j, "scale", where)});
    if (family == "lognormal") return WaitLaw(LogNormal{number(j, "location", where), number(j, "scale", where)});
    if (family == "weibull") return WaitLaw(Weibull{number(j, "shape", where), number(j, "scale", where)});
    if (family == "deterministic") return WaitLaw(Deterministic{number(j, "value", where)});
    if (family == "mixture") {
      if (!j.contains("weights") || !j.contains("components") || !j["weights"].is_array() ||
          !j["components"].is_array()) {
        throw ConfigError(where + ": mixture needs arrays 'weights' and 'components'");
      }
      Mixture m;
      for (std::size_t i = 0; i < j["weights"].size(); ++i) {
        m.weights.push_back(number_from(j["weights"][i], where + ".weights[" + std::to_string(i) + "]"));
      }
      for (std::size_t i = 0; i < j["components"].size(); ++i) {
        m.components.push_back(wait_law_from_json(j["components"][i], where + ".components[" + std::to_string(i) + "]"));
      }
      return WaitLaw(m);
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
  throw ConfigError(where + ": unknown family '" + family + "'");
}

json to_json(const WaitLaw& law) {
  return std::visit(
      [](const auto& l) -> json {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, Exponential>) return {{"family", "exponential"}, {"rate", l.rate}};
        if constexpr (std::is_same_v<T, GammaLaw>) return {{"family", "gamma"}, {"shape", l.shape}, {"scale", l.scale}};
        if constexpr (std::is_same_v<T, Pareto>) return {{"family", "pareto"}, {"index", l.index}, {"scale", l.scale}};
        if constexpr (std::is_same_v<T, LogNormal>) {
          return {{"family", "lognormal"}, {"location", l.location}, {"scale", l.scale}};
        }
        if constexpr (std::is_same_v<T, Weibull>) return {{"family", "weibull"}, {"shape", l.shape}, {"scale", l.scale}};
        if constexpr (std::is_same_v<T, Deterministic>) return {{"family", "deterministic"}, {"value", l.value}};
        if constexpr (std::is_same_v<T, Mixture>) {
          json comps = json::array();
          for (const auto& c : l.components) comps.push_back(to_json(c));
          return {{"family", "mixture"}, {"weights", l.weights}, {"components", comps}};
        }
      },
      law.variant());
}

Model model_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": model must be an object");
  for (const char* key : {"states", "kernel", "waits"}) {
    if (!j.contains(key)) throw ConfigError(where + ": missing key '" + std::string(key) + "'");
  }
  if (!j["states"].is_array()) throw ConfigError(where + ".states: expected an array of labels");
  std::vector<std::string> labels;
  for (const auto& s : j["states"]) {
    if (!s.is_string()) throw ConfigError(where + ".states: labels must be strings");
    labels.push_back(s.get<std::string>());
  }
  Model model;
  try {
    model.states = StateSpace(labels);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ".states: " + e.what());
  }
  const std::size_t n = labels.size();
  model.kernel.p = matrix_from(j["kernel"], n, where + ".kernel");
  const auto& waits = j["waits"];
  if (!waits.is_object()) throw ConfigError(where + ".waits: expected an object keyed by state label");
  for (const auto& label : labels) {
    if (!waits.contains(label)) throw ConfigError(where + ".waits: no law for state '" + label + "'");
    model.waits.push_back(wait_law_from_json(waits[label], where + ".waits." + label));
  }
  for (const auto& [key, value] : waits.items()) {
    if (!model.states.index_of(key)) throw ConfigError(where + ".waits: unknown state '" + key + "'");
  }
  if (j.contains("initial")) {
    const auto& init = j["initial"];
    if (!init.is_array() || init.size() != n) throw ConfigError(where + ".initial: expected " + std::to_string(n) + " entries");
    model.initial = Vector(static_cast<Eigen::Index>(n));
    for (std::size_t x = 0; x < n; ++x) model.initial(static_cast<Eigen::Index>(x)) = number_from(init[x], where + ".initial");
  } else {
    model.initial = Vector::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n));
  }
  const auto report = validate_model(model);
  if (!report.ok) {
    std::string msg = where + ": invalid model";
    for (const auto& v : report.violations) msg += "; " + v;
    throw ConfigError(msg);
  }
  return model;
}

Model load_model(const std::filesystem::path& path) { return model_from_json(read_json_file(path), path.string()); }

json to_json(const Model& model) {
  json waits = json::object();
  for (std::size_t x = 0; x < model.size(); ++x) waits[model.states.label(x)] = to_json(model.waits[x]);
  std::vector<double> init(model.initial.data(), model.initial.data() + model.initial.size());
  return {{"states", model.states.labels()}, {"kernel", matrix_json(model.kernel.p)}, {"waits", waits}, {"initial", init}};
}

json to_json(const CandidatePair& pair, const Model& model) {
  json states = json::object();
  for (std::size_t x = 0; x < pair.size(); ++x) {
    const auto& g = pair.grid->state(x);
    states[model.states.label(x)] = {{"nodes", g.nodes}, {"weights", g.weights}, {"density", pair.density[x]},
                                     {"atom", pair.atoms[x]}};
  }
  return {{"states", model.states.labels()},
          {"grid", {{"nodes_per_state", pair.grid->nodes_per_state()}, {"tail", pair.grid->tail()}}},
          {"measure", states},
          {"flow", matrix_json(pair.flow)}};
}

CandidatePair candidate_from_json(const json& j, const Model& model, const std::string& where) {
  for (const char* key : {"measure", "flow"}) {
    if (!j.contains(key)) throw ConfigError(where + ": missing key '" + std::string(key) + "'");
  }
  int nodes = kDefaultGridNodes;
  double tail = kDefaultGridTail;
  if (j.contains("grid")) {
    nodes = j["grid"].value("nodes_per_state", kDefaultGridNodes);
    tail = j["grid"].value("tail", kDefaultGridTail);
  }
  CandidatePair pair;
  pair.grid = QuadGrid::build(model, nodes, tail);
  const std::size_t n = model.size();
  pair.flow = matrix_from(j["flow"], n, where + ".flow");
  pair.density.resize(n);
  pair.atoms.assign(n, 0.0);
  for (std::size_t x = 0; x < n; ++x) {
    const auto& label = model.states.label(x);
    const std::string at = where + ".measure." + label;
    if (!j["measure"].contains(label)) throw ConfigError(at + ": missing");
    const auto& s = j["measure"][label];
    const auto& g = pair.grid->state(x);
    if (!s.contains("density") || !s["density"].is_array() || s["density"].size() != g.size()) {
      throw ConfigError(at + ".density: expected " + std::to_string(g.size()) + " values");
    }
    for (const auto& v : s["density"]) pair.density[x].push_back(number_from(v, at + ".density"));
    pair.atoms[x] = s.contains("atom") ? number_from(s["atom"], at + ".atom") : 0.0;
    if (s.contains("nodes")) {
      const auto stored = s["nodes"].get<std::vector<double>>();
      bool same = stored.size() == g.size();
      for (std::size_t i = 0; same && i < g.size(); ++i) same = std::abs(stored[i] - g.nodes[i]) <= 1e-12 * g.nodes[i];
      if (!same) throw ConfigError(at + ".nodes: grid differs from the one built for this model");
    }
  }
  try {
    pair.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return pair;
}

CandidatePair load_candidate(const std::filesystem::path& path, const Model& model) {
  return candidate_from_json(read_json_file(path), model, path.string());
}

json to_json(const EmpiricalPair& pair, const Model& model) {
  json atoms = json::array();
  for (const auto& a : pair.atoms) atoms.push_back({{"state", model.states.label(a.state)}, {"tau", a.tau}, {"weight", a.weight}});
  return {{"horizon", pair.horizon}, {"states", model.states.labels()}, {"atoms", atoms},
          {"counts", matrix_json(pair.counts)}, {"flow", matrix_json(pair.flow)}};
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, const Model& model) {
  out << "k,X_k,tau_k+1,S_k+1\n";
  for (std::size_t k = 0; k < traj.waits.size(); ++k) {
    out << k << ',' << model.states.label(traj.states[k]) << ',' << format_double(traj.waits[k]) << ','
        << format_double(traj.switch_times[k]) << '\n';
  }
}

json to_json(const RateReport& report, const Model& model) {
  json terms = json::object();
  for (std::size_t x = 0; x < report.terms.size(); ++x) {
    const auto& t = report.terms[x];
    terms[model.states.label(x)] = {{"kernel", number_json(t.kernel)}, {"wait", number_json(t.wait)},
                                    {"atom", number_json(t.atom)}};
  }
  json trace = json::array();
  for (const auto& e : report.trace) trace.push_back({{"stage", e.stage}, {"iteration", e.iteration}, {"value", number_json(e.value)}});
  json residuals = {{"jump_excess", json::array()}, {"divergence", json::array()}};
  for (double v : report.jump_excess) residuals["jump_excess"].push_back(number_json(v));
  for (double v : report.divergence) residuals["divergence"].push_back(number_json(v));
  json argmin = json::array();
  for (double v : report.argmin) argmin.push_back(number_json(v));
  return {{"value", number_json(report.value)}, {"decomposition", terms}, {"residuals", residuals},
          {"argmin", argmin}, {"trace", trace}, {"note", report.note}};
}

}  // namespace rldp
