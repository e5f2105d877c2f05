#include "renewal_ldp/harness.hpp"

#include <Eigen/Core>
#include <boost/version.hpp>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "renewal_ldp/measures.hpp"
#include "renewal_ldp/numeric.hpp"
#include "renewal_ldp/parallel.hpp"
#include "renewal_ldp/rate.hpp"
#include "renewal_ldp/simulate.hpp"
#include "renewal_ldp/tilt.hpp"

namespace rldp {

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Lln:
      return "lln";
    case ExperimentKind::Decay:
      return "decay";
    case ExperimentKind::Contraction:
      return "contraction";
    case ExperimentKind::Legendre:
      return "legendre";
    case ExperimentKind::Invariants:
      return "invariants";
  }
  return "?";
}

ExperimentKind parse_kind(const std::string& name) {
  for (auto k : {ExperimentKind::Lln, ExperimentKind::Decay, ExperimentKind::Contraction, ExperimentKind::Legendre,
                 ExperimentKind::Invariants}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown experiment kind '" + name + "'");
}

namespace {

std::string fmt(double v) { return format_double(v); }

std::vector<double> doubles(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected an array of numbers");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw ConfigError(where + ": expected an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace

ExperimentConfig config_from_json(const json& j, const std::filesystem::path& base_dir, const std::string& where) {
  static const std::set<std::string> known = {"kind",   "model",      "schedule", "seeds",         "n",
                                              "tolerance", "restarts", "hybrid",   "radius",        "radii",
                                              "target", "crude",      "simplex_step", "oracle",     "theta_grid",
                                              "m_grid", "models",     "candidates", "output",       "workers"};
  if (!j.is_object()) throw ConfigError(where + ": config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
  ExperimentConfig c;
  try {
    if (j.contains("kind")) c.kind = parse_kind(j["kind"].get<std::string>());
    if (!j.contains("model") || !j["model"].is_string()) throw ConfigError(where + ": missing string key 'model'");
    c.model_path = resolve(base_dir, j["model"].get<std::string>());
    c.model = load_model(c.model_path);

    if (j.contains("schedule")) {
      c.schedule = doubles(j["schedule"], where + ".schedule");
    } else {
      c.schedule = c.kind == ExperimentKind::Decay ? std::vector<double>{50, 100, 200} : std::vector<double>{1e2, 1e3, 1e4};
    }
    if (c.schedule.empty()) throw ConfigError(where + ".schedule: must not be empty");
    for (std::size_t i = 0; i < c.schedule.size(); ++i) {
      if (!(c.schedule[i] > 0.0)) throw ConfigError(where + ".schedule: horizons must be > 0");
      if (i > 0 && !(c.schedule[i] > c.schedule[i - 1])) throw ConfigError(where + ".schedule: must be strictly increasing");
    }

    if (j.contains("seeds")) {
      const auto& s = j["seeds"];
      if (s.is_array()) {
        for (const auto& v : s) c.seeds.push_back(v.get<std::uint64_t>());
      } else if (s.is_object()) {
        const auto first = s.value("first", std::uint64_t{1});
        const auto count = s.value("count", std::uint64_t{1});
        for (std::uint64_t k = 0; k < count; ++k) c.seeds.push_back(first + k);
      } else {
        throw ConfigError(where + ".seeds: expected an array or {first, count}");
      }
    } else {
      const std::uint64_t count = c.kind == ExperimentKind::Lln ? 20 : 1;
      for (std::uint64_t k = 1; k <= count; ++k) c.seeds.push_back(k);
    }
    if (c.seeds.empty()) throw ConfigError(where + ".seeds: must not be empty");
    if (std::set<std::uint64_t>(c.seeds.begin(), c.seeds.end()).size() != c.seeds.size()) {
      throw ConfigError(where + ".seeds: seeds must be distinct");
    }

    c.n = j.value("n", c.n);
    c.tolerance = j.value("tolerance", c.tolerance);
    c.restarts = j.value("restarts", c.restarts);
    if (j.contains("hybrid") && !j["hybrid"].is_null()) c.hybrid = j["hybrid"].get<double>();
    if (j.contains("radii")) {
      c.radii = doubles(j["radii"], where + ".radii");
    } else if (j.contains("radius")) {
      c.radii = {j["radius"].get<double>()};
    }
    for (double r : c.radii) {
      if (!(r > 0.0)) throw ConfigError(where + ".radii: radii must be > 0");
    }
    if (j.contains("target")) {
      const auto& t = j["target"];
      if (t.is_string() && t.get<std::string>() == "lln") {
        // default
      } else if (t.is_object() && t.contains("kernel")) {
        Matrix p(static_cast<Eigen::Index>(c.model.size()), static_cast<Eigen::Index>(c.model.size()));
        const auto& rows = t["kernel"];
        if (!rows.is_array() || rows.size() != c.model.size()) throw ConfigError(where + ".target.kernel: wrong shape");
        for (std::size_t x = 0; x < rows.size(); ++x) {
          const auto row = doubles(rows[x], where + ".target.kernel");
          if (row.size() != c.model.size()) throw ConfigError(where + ".target.kernel: wrong shape");
          for (std::size_t y = 0; y < row.size(); ++y) p(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) = row[y];
        }
        c.target_kernel = p;
      } else if (t.is_object() && t.contains("candidate")) {
        c.target_candidate = resolve(base_dir, t["candidate"].get<std::string>());
      } else {
        throw ConfigError(where + ".target: expected \"lln\", {\"kernel\": ...} or {\"candidate\": path}");
      }
    }
    if (j.contains("crude")) {
      c.crude_t = j["crude"].at("t").get<double>();
      c.crude_n = j["crude"].value("n", c.crude_n);
    }
    c.simplex_step = j.value("simplex_step", c.simplex_step);
    if (!(c.simplex_step > 0.0 && c.simplex_step <= 1.0)) throw ConfigError(where + ".simplex_step: must lie in ]0,1]");
    c.oracle = j.value("oracle", c.oracle);
    if (j.contains("theta_grid")) c.theta_grid = doubles(j["theta_grid"], where + ".theta_grid");
    if (j.contains("m_grid")) c.m_grid = doubles(j["m_grid"], where + ".m_grid");
    if (j.contains("models")) {
      for (const auto& m : j["models"]) c.extra_models.push_back(resolve(base_dir, m.get<std::string>()));
    }
    if (j.contains("candidates")) {
      for (const auto& m : j["candidates"]) c.candidates.push_back(resolve(base_dir, m.get<std::string>()));
    }
    if (j.contains("output")) c.output = resolve(base_dir, j["output"].get<std::string>());
    c.workers = j.value("workers", 0u);
  } catch (const json::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
  if (c.n < 2) throw ConfigError(where + ".n: must be >= 2");
  if (c.restarts < 1) throw ConfigError(where + ".restarts: must be >= 1");
  if (!(c.tolerance > 0.0)) throw ConfigError(where + ".tolerance: must be > 0");
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  json j;
  try {
    j = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  ExperimentConfig c = config_from_json(j, path.parent_path(), path.string());
  c.source_text = buf.str();
  std::ifstream model_in(c.model_path);
  std::stringstream model_buf;
  model_buf << model_in.rdbuf();
  c.source_text += model_buf.str();
  return c;
}

bool ResultRow::operator==(const ResultRow& o) const {
  auto same = [](double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; };
  return kind == o.kind && params == o.params && same(measured, o.measured) && same(reference, o.reference) &&
         same(deviation, o.deviation) && same(ci, o.ci);
}

ResultRow make_row(std::string kind, std::string params, double measured, double reference, double ci) {
  ResultRow r;
  r.kind = std::move(kind);
  r.params = std::move(params);
  r.measured = measured;
  r.reference = reference;
  r.deviation = measured - reference;
  r.ci = ci;
  return r;
}

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << "kind,params,measured,reference,deviation,ci\n";
  for (const auto& r : rows) {
    if (r.kind.find_first_of(",\n") != std::string::npos || r.params.find_first_of(",\n") != std::string::npos) {
      throw std::invalid_argument("result kind and params must not contain commas or newlines");
    }
    out << r.kind << ',' << r.params << ',' << fmt(r.measured) << ',' << fmt(r.reference) << ',' << fmt(r.deviation)
        << ',' << fmt(r.ci) << '\n';
  }
}

std::vector<ResultRow> read_results_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "kind,params,measured,reference,deviation,ci") {
    throw std::runtime_error("results file lacks the expected header");
  }
  std::vector<ResultRow> rows;
  auto to_double = [](const std::string& s) {
    if (s == "inf") return kInfinity;
    if (s == "-inf") return -kInfinity;
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::runtime_error("bad number '" + s + "' in results file");
    return v;
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != 6) throw std::runtime_error("results row has " + std::to_string(cells.size()) + " cells: " + line);
    ResultRow r;
    r.kind = cells[0];
    r.params = cells[1];
    r.measured = to_double(cells[2]);
    r.reference = to_double(cells[3]);
    r.deviation = to_double(cells[4]);
    r.ci = to_double(cells[5]);
    rows.push_back(r);
  }
  return rows;
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t hash) {
  for (unsigned char ch : bytes) {
    hash ^= ch;
    hash *= 1099511628211ULL;
  }
  return hash;
}

void write_outputs(const ExperimentConfig& config, const ExperimentResult& result) {
  std::filesystem::create_directories(config.output);
  {
    std::ofstream out(config.output / "results.csv");
    write_results_csv(out, result.rows);
  }
  {
    json report = result.report;
    report["failures"] = result.failures;
    std::ofstream out(config.output / "report.json");
    out << report.dump(2) << '\n';
  }
  std::ostringstream hash;
  hash << std::hex << fnv1a(config.source_text);
  json manifest = {{"kind", to_string(config.kind)},
                   {"config_hash", hash.str()},
                   {"model", config.model_path.string()},
                   {"seeds", config.seeds},
                   {"schedule", config.schedule},
                   {"n", config.n},
                   {"versions",
                    {{"renewal_ldp", kVersion},
                     {"compiler", __VERSION__},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)},
                     {"boost", BOOST_LIB_VERSION},
                     {"json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}},
                   {"rng", "philox4x32-10, substream per path index"}};
  std::ofstream out(config.output / "manifest.json");
  out << manifest.dump(2) << '\n';
}

Vector lln_marginal(const Model& model) {
  require_valid(model);
  const Vector nu = stationary(model.kernel);
  Vector pi(nu.size());
  for (Eigen::Index x = 0; x < nu.size(); ++x) pi(x) = nu(x) * mean_wait(model.waits[static_cast<std::size_t>(x)]);
  if (!pi.allFinite()) throw std::domain_error("LLN marginal undefined: infinite mean holding time");
  return pi / pi.sum();
}

CandidatePair random_regular_pair(const Model& model, std::shared_ptr<const QuadGrid> grid, Philox& rng) {
  const std::size_t n = model.size();
  Matrix p = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index x = 0; x < p.rows(); ++x) {
    for (Eigen::Index y = 0; y < p.cols(); ++y) {
      if (model.kernel.p(x, y) > 0.0) p(x, y) = 0.05 + uniform_open01(rng);
    }
    p.row(x) /= p.row(x).sum();
  }
  Model tilted = model;
  tilted.kernel.p = p;
  CandidatePair pair = lln_limit(tilted, grid);
  // Reweight each state's waits by a bounded density and rescale so that
  // mu(x, 1/tau) keeps its value; then renormalize the total mass.
  double total = 0.0;
  for (std::size_t x = 0; x < n; ++x) {
    const auto& g = grid->state(x);
    const double slope = 2.0 * uniform_open01(rng) - 1.0;
    const double centre = std::log(g.nodes[g.size() / 2]) + (2.0 * uniform_open01(rng) - 1.0);
    std::vector<double> w(g.size());
    double norm = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      w[i] = std::exp(slope * std::tanh(std::log(g.nodes[i]) - centre));
      norm += g.weights[i] * w[i];
    }
    const double z_before = pair.inverse_tau_mass(x);
    for (std::size_t i = 0; i < g.size(); ++i) pair.density[x][i] *= w[i] / norm;
    const double z_after = pair.inverse_tau_mass(x);
    for (double& v : pair.density[x]) v *= z_before / z_after;
    total += pair.finite_mass(x);
  }
  for (auto& d : pair.density) {
    for (double& v : d) v /= total;
  }
  pair.flow /= total;
  return pair;
}

double contraction_grid_oracle(const Model& model, const Vector& pi, bool with_limit) {
  std::vector<Eigen::Index> active;
  for (Eigen::Index x = 0; x < pi.size(); ++x) {
    if (pi(x) > 0.0) active.push_back(x);
  }
  if (active.empty() || active.size() > 2) throw std::invalid_argument("grid oracle supports one or two active states");
  constexpr int kPoints = 200;
  auto eval = [&](const std::vector<double>& logs) {
    Vector zeta = Vector::Zero(pi.size());
    for (std::size_t k = 0; k < active.size(); ++k) zeta(active[k]) = std::exp(logs[k]);
    return contraction_objective(model, pi, zeta);
  };
  double lo = std::log(1e-3), hi = std::log(10.0);
  std::vector<double> los(active.size(), lo), his(active.size(), hi), best(active.size(), lo);
  double best_value = kInfinity;
  for (int level = 0; level < 2; ++level) {
    std::vector<double> step(active.size());
    for (std::size_t k = 0; k < active.size(); ++k) step[k] = (his[k] - los[k]) / (kPoints - 1);
    std::vector<double> at(active.size());
    const int inner = active.size() == 2 ? kPoints : 1;
    for (int i = 0; i < kPoints; ++i) {
      for (int j = 0; j < inner; ++j) {
        at[0] = los[0] + i * step[0];
        if (active.size() == 2) at[1] = los[1] + j * step[1];
        const double v = eval(at);
        if (v < best_value) {
          best_value = v;
          best = at;
        }
      }
    }
    for (std::size_t k = 0; k < active.size(); ++k) {
      los[k] = best[k] - 2.0 * step[k];
      his[k] = best[k] + 2.0 * step[k];
    }
  }
  if (with_limit) {
    double origin = 0.0;
    for (Eigen::Index x : active) {
      const double xi = mgf_abscissa(model.waits[static_cast<std::size_t>(x)]);
      origin += xi > 0.0 ? pi(x) * xi : 0.0;
    }
    best_value = std::min(best_value, origin);
  }
  return best_value;
}

// ---------------------------------------------------------------------------

ExperimentResult run_lln(const ExperimentConfig& config) {
  const Model& model = config.model;
  const auto grid = QuadGrid::build(model);
  const CandidatePair limit = lln_limit(model, grid);
  const DistanceReference reference(limit);
  const double e_nu = stationary_mean_wait(model);
  const Vector nu = stationary(model.kernel);
  const Matrix flow_limit = nu.asDiagonal() * model.kernel.p / e_nu;

  struct Cell {
    double distance, rate, flow_dev;
  };
  const std::size_t seeds = config.seeds.size();
  std::vector<Cell> cells(config.schedule.size() * seeds);
  parallel_for(
      cells.size(),
      [&](std::size_t i) {
        const double t = config.schedule[i / seeds];
        const auto traj = simulate(model, t, config.seeds[i % seeds]);
        const auto emp = empirical_pair(traj, model.size());
        cells[i] = {reference(emp), static_cast<double>(traj.count) / t, (emp.flow - flow_limit).cwiseAbs().maxCoeff()};
      },
      config.workers);

  ExperimentResult result;
  json medians = json::array();
  std::vector<double> median_distances;
  for (std::size_t ti = 0; ti < config.schedule.size(); ++ti) {
    const double t = config.schedule[ti];
    std::vector<double> d, flows;
    for (std::size_t s = 0; s < seeds; ++s) {
      const auto& c = cells[ti * seeds + s];
      const std::string params = "t=" + fmt(t) + ";seed=" + std::to_string(config.seeds[s]);
      result.rows.push_back(make_row("lln.distance", params, c.distance, 0.0));
      result.rows.push_back(make_row("lln.jump_rate", params, c.rate, 1.0 / e_nu));
      result.rows.push_back(make_row("lln.flow_max_deviation", params, c.flow_dev, 0.0));
      d.push_back(c.distance);
      flows.push_back(c.flow_dev);
    }
    const double md = median(d);
    median_distances.push_back(md);
    result.rows.push_back(make_row("lln.median_distance", "t=" + fmt(t), md, 0.0));
    medians.push_back({{"t", t}, {"median_distance", md}, {"max_flow_deviation", *std::max_element(flows.begin(), flows.end())}});
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < median_distances.size(); ++i) decreasing = decreasing && median_distances[i] < median_distances[i - 1];
  result.report = {{"kind", "lln"}, {"stationary_mean_wait", e_nu}, {"medians", medians}, {"strictly_decreasing", decreasing}};
  return result;
}

namespace {

CandidatePair decay_target(const ExperimentConfig& config, std::shared_ptr<const QuadGrid> grid) {
  if (config.target_candidate) return load_candidate(*config.target_candidate, config.model);
  Model m = config.model;
  if (config.target_kernel) {
    m.kernel.p = *config.target_kernel;
    const auto report = validate_model(m);
    if (!report.ok) throw ConfigError("target kernel is not a valid kernel: " + report.violations.front());
  }
  return lln_limit(m, grid);
}

}  // namespace

ExperimentResult run_decay(const ExperimentConfig& config) {
  const Model& model = config.model;
  const auto grid = QuadGrid::build(model);
  const CandidatePair target = decay_target(config, grid);
  const auto membership = check_membership(target, config.tolerance);
  if (!membership.at_least(Membership::U00)) throw ConfigError("decay target must lie in U00");
  const double rate = rate_I(model, target, config.tolerance).value;
  const TiltedModel tilted = tilt_from_pair(model, target, config.tolerance);
  const CandidatePair lln = lln_limit(model, grid);
  const double center_to_lln = distance(target, lln);

  ISOptions options;
  options.hybrid_delta = config.hybrid;
  options.workers = config.workers;

  ExperimentResult result;
  json radii = json::array();
  std::vector<double> median_by_radius;
  for (double radius : config.radii) {
    // Along the segment towards the LLN pair the distance grows linearly,
    // and by convexity I(mix) <= lambda I(target): a point of the ball whose
    // rate bounds the ball infimum from above.
    double ball_rate = rate;
    if (center_to_lln > 0.0) {
      const double lambda = std::max(0.0, 1.0 - radius / center_to_lln);
      ball_rate = rate_I(model, mix(target, lln, lambda), config.tolerance).value;
    }
    const Event event = ball_event(target, radius);
    json per_t = json::array();
    std::vector<double> last_rates;
    for (double t : config.schedule) {
      std::vector<double> rates;
      for (std::uint64_t seed : config.seeds) {
        const auto est = estimate_probability(model, tilted, event, t, config.n, seed, options);
        const std::string params = "radius=" + fmt(radius) + ";t=" + fmt(t) + ";seed=" + std::to_string(seed);
        result.rows.push_back(make_row("decay.estimate", params, est.estimate, std::exp(-t * rate), est.ci));
        result.rows.push_back(make_row("decay.rate_estimate", params, est.rate_estimate, rate));
        per_t.push_back({{"t", t}, {"n", est.n}, {"seed", seed}, {"estimate", est.estimate}, {"ci", est.ci},
                         {"rate_estimate", est.rate_estimate}, {"hit_fraction", est.hit_fraction}});
        rates.push_back(est.rate_estimate);
      }
      const double med = median(rates);
      result.rows.push_back(make_row("decay.median_rate_estimate", "radius=" + fmt(radius) + ";t=" + fmt(t), med, rate));
      last_rates = rates;
    }
    median_by_radius.push_back(median(last_rates));
    radii.push_back({{"radius", radius}, {"ball_point_rate", ball_rate}, {"ball_slack", rate - ball_rate}, {"runs", per_t}});
    result.rows.push_back(make_row("decay.ball_point_rate", "radius=" + fmt(radius), ball_rate, rate));
  }

  json crude = nullptr;
  if (config.crude_t) {
    const double t = *config.crude_t;
    const double radius = config.radii.front();
    const Event event = ball_event(target, radius);
    const TiltedModel identity = tilt_from_hH(model, TestPair::zero(model.size()));
    const auto is = estimate_probability(model, tilted, event, t, config.n, config.seeds.front(), options);
    ISOptions plain;
    plain.workers = config.workers;
    const auto mc = estimate_probability(model, identity, event, t, config.crude_n, config.seeds.front() + 7919, plain);
    const double combined = std::hypot(is.ci, mc.ci);
    const bool consistent = std::abs(is.estimate - mc.estimate) <= 3.0 * combined;
    result.rows.push_back(make_row("decay.crude_check", "radius=" + fmt(radius) + ";t=" + fmt(t), is.estimate, mc.estimate, combined));
    crude = {{"t", t}, {"is_estimate", is.estimate}, {"is_ci", is.ci}, {"crude_estimate", mc.estimate},
             {"crude_ci", mc.ci}, {"crude_n", mc.n}, {"consistent", consistent}};
  }

  // Shrinking the ball should not lower the decay rate.
  std::vector<std::pair<double, double>> by_radius;
  for (std::size_t i = 0; i < config.radii.size(); ++i) by_radius.emplace_back(config.radii[i], median_by_radius[i]);
  std::sort(by_radius.begin(), by_radius.end());
  bool monotone = true;
  for (std::size_t i = 1; i < by_radius.size(); ++i) monotone = monotone && by_radius[i - 1].second >= by_radius[i].second;

  result.report = {{"kind", "decay"},          {"rate_I_target", rate}, {"distance_target_to_lln", center_to_lln},
                   {"radii", radii},           {"crude_check", crude},  {"monotone_in_radius", monotone},
                   {"hybrid", config.hybrid ? json(*config.hybrid) : json(nullptr)}};
  return result;
}

namespace {

void simplex_points(std::size_t n, int steps, std::vector<int>& current, std::size_t pos, int remaining,
                    std::vector<std::vector<int>>& out) {
  if (pos + 1 == n) {
    current[pos] = remaining;
    out.push_back(current);
    return;
  }
  for (int k = remaining; k >= 0; --k) {
    current[pos] = k;
    simplex_points(n, steps, current, pos + 1, remaining - k, out);
  }
}

std::string pi_params(const Vector& pi) {
  std::string s = "pi=";
  for (Eigen::Index x = 0; x < pi.size(); ++x) s += (x ? ":" : "") + fmt(pi(x));
  return s;
}

}  // namespace

ExperimentResult run_contraction(const ExperimentConfig& config) {
  const Model& model = config.model;
  const std::size_t n = model.size();
  if (config.oracle && n != 2) throw ConfigError("contraction oracle mode needs exactly two states");
  const int steps = static_cast<int>(std::lround(1.0 / config.simplex_step));
  std::vector<std::vector<int>> lattice;
  std::vector<int> current(n, 0);
  simplex_points(n, steps, current, 0, steps, lattice);

  std::vector<Vector> pis;
  for (const auto& point : lattice) {
    Vector pi(static_cast<Eigen::Index>(n));
    for (std::size_t x = 0; x < n; ++x) pi(static_cast<Eigen::Index>(x)) = static_cast<double>(point[x]) / steps;
    pis.push_back(pi);
  }
  I1Options options;
  options.restarts = config.restarts;
  std::vector<double> values(pis.size()), oracle(pis.size(), std::numeric_limits<double>::quiet_NaN());
  parallel_for(
      pis.size(),
      [&](std::size_t i) {
        values[i] = rate_I1(model, pis[i], options).value;
        if (config.oracle) oracle[i] = contraction_grid_oracle(model, pis[i]);
      },
      config.workers);

  ExperimentResult result;
  json zero_set = json::array();
  double zero_lo = kInfinity, zero_hi = -kInfinity;
  for (std::size_t i = 0; i < pis.size(); ++i) {
    result.rows.push_back(make_row("contraction.I1", pi_params(pis[i]), values[i], oracle[i]));
    if (values[i] < 1e-6) {
      zero_set.push_back(std::vector<double>(pis[i].data(), pis[i].data() + n));
      zero_lo = std::min(zero_lo, pis[i](0));
      zero_hi = std::max(zero_hi, pis[i](0));
    }
  }
  json lln_entry = nullptr;
  try {
    const Vector marginal = lln_marginal(model);
    const double v = rate_I1(model, marginal, options).value;
    result.rows.push_back(make_row("contraction.lln_marginal", pi_params(marginal), v, 0.0));
    lln_entry = {{"pi", std::vector<double>(marginal.data(), marginal.data() + n)}, {"I1", v}};
  } catch (const std::domain_error&) {
    // Infinite mean: no LLN marginal.
  }
  result.report = {{"kind", "contraction"},
                   {"points", pis.size()},
                   {"zero_set", zero_set},
                   {"zero_set_first_coordinate", zero_set.empty() ? json(nullptr) : json({zero_lo, zero_hi})},
                   {"lln_marginal", lln_entry},
                   {"oracle", config.oracle}};
  return result;
}

ExperimentResult run_legendre(const ExperimentConfig& config) {
  const Model& model = config.model;
  ExperimentResult result;
  json states = json::array();
  for (std::size_t x = 0; x < model.size(); ++x) {
    const WaitLaw& law = model.waits[x];
    const std::string label = model.states.label(x);
    const double xi = mgf_abscissa(law);
    const double mean = mean_wait(law);
    result.rows.push_back(make_row("legendre.xi", "state=" + label, xi, xi));

    std::vector<double> thetas = config.theta_grid;
    if (thetas.empty()) {
      const double top = std::isfinite(xi) ? 0.99 * xi : 5.0;
      for (int k = 0; k <= 40; ++k) thetas.push_back(-5.0 + (std::min(top, 5.0) + 5.0) * k / 40.0);
    }
    for (double theta : thetas) {
      result.rows.push_back(make_row("legendre.log_mgf", "state=" + label + ";theta=" + fmt(theta), log_mgf(law, theta),
                                     std::numeric_limits<double>::quiet_NaN()));
    }

    std::vector<double> ms = config.m_grid;
    if (ms.empty()) {
      const double unit = std::isfinite(mean) ? mean : quantile(law, 0.5);
      for (int k = 1; k <= 1000; ++k) ms.push_back(unit * k / 100.0);
    }
    std::vector<double> values;
    for (double m : ms) {
      const double v = legendre(law, m);
      values.push_back(v);
      double closed = std::numeric_limits<double>::quiet_NaN();
      if (const auto* e = law.as<Exponential>()) closed = m * e->rate - 1.0 - std::log(m * e->rate);
      if (const auto* g = law.as<GammaLaw>()) {
        const double r = m / (g->shape * g->scale);
        closed = g->shape * (r - 1.0 - std::log(r));
      }
      result.rows.push_back(make_row("legendre.conjugate", "state=" + label + ";m=" + fmt(m), v, closed));
    }
    double flat_lo = kInfinity, flat_hi = -kInfinity;
    bool flat_at_end = false;
    for (std::size_t i = 0; i < ms.size(); ++i) {
      if (values[i] <= 1e-9) {
        flat_lo = std::min(flat_lo, ms[i]);
        flat_hi = std::max(flat_hi, ms[i]);
        flat_at_end = i + 1 == ms.size();
      }
    }
    if (flat_at_end && xi == 0.0) flat_hi = kInfinity;
    double worst_second_difference = kInfinity;
    for (std::size_t i = 1; i + 1 < ms.size(); ++i) {
      if (!(std::isfinite(values[i - 1]) && std::isfinite(values[i]) && std::isfinite(values[i + 1]))) continue;
      const double h1 = ms[i] - ms[i - 1], h2 = ms[i + 1] - ms[i];
      const double d2 = (values[i + 1] - values[i]) / h2 - (values[i] - values[i - 1]) / h1;
      worst_second_difference = std::min(worst_second_difference, d2);
    }
    const bool convex = !(worst_second_difference < -1e-8);
    if (!convex) result.failures.push_back("legendre/convexity: state " + label);
    json flat = flat_lo <= flat_hi ? json({flat_lo, std::isinf(flat_hi) ? json("inf") : json(flat_hi)}) : json(nullptr);
    states.push_back({{"state", label},
                      {"law", law.describe()},
                      {"xi", std::isinf(xi) ? json("inf") : json(xi)},
                      {"mean", std::isinf(mean) ? json("inf") : json(mean)},
                      {"flat_region", flat},
                      {"min_second_difference", std::isinf(worst_second_difference) ? json(nullptr) : json(worst_second_difference)},
                      {"convex", convex}});
  }
  result.report = {{"kind", "legendre"}, {"states", states}};
  return result;
}

namespace {

struct Suite {
  ExperimentResult& result;
  void check(bool ok, const std::string& property, const std::string& detail, double measured = 0.0,
             double reference = 0.0) {
    result.rows.push_back(make_row("invariants." + property, detail, measured, reference));
    if (!ok) result.failures.push_back(property + ": " + detail);
  }
};

void trajectory_properties(Suite& suite, const Model& model, const std::string& name, std::uint64_t seed) {
  double worst = 0.0;
  std::string counterexample;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const double t = 20.0 + 5.0 * static_cast<double>(s % 20);
    const auto traj = simulate(model, t, seed, s);
    const auto emp = empirical_pair(traj, model.size());
    const double slack = 1e-12 * static_cast<double>(traj.count + 1) / t;
    for (std::size_t x = 0; x < model.size(); ++x) {
      const double excess = emp.out_flow(x) - emp.inverse_tau_mass(x);
      const double div = std::abs(emp.out_flow(x) - emp.in_flow(x));
      double bad = 0.0;
      if (excess < -slack) bad = -excess;
      if (excess > 1.0 / t + slack) bad = std::max(bad, excess - 1.0 / t);
      if (div > 1.0 / t + slack) bad = std::max(bad, div - 1.0 / t);
      if (bad > worst) {
        worst = bad;
        counterexample = "stream " + std::to_string(s);
      }
    }
    if (emp.total_inverse_tau_mass() > static_cast<double>(traj.count + 1) / t + slack) {
      worst = std::max(worst, 1.0);
      counterexample = "stream " + std::to_string(s);
    }
  }
  suite.check(worst == 0.0, "simulate/trajectory_residuals",
              "model=" + name + ";seed=" + std::to_string(seed) + (counterexample.empty() ? "" : ";" + counterexample), worst, 0.0);
}

void rate_properties(Suite& suite, const Model& model, const std::string& name, std::uint64_t seed) {
  const auto grid = QuadGrid::build(model);
  Philox rng(seed, 1);
  const CandidatePair lln = lln_limit(model, grid);
  const double zero = rate_I(model, lln).value;
  suite.check(std::abs(zero) <= 1e-8, "rate/zero_at_lln", "model=" + name, zero, 0.0);

  double worst_gap = -kInfinity;
  for (int k = 0; k < 3; ++k) {
    const CandidatePair pair = random_regular_pair(model, grid, rng);
    const double rate = rate_I(model, pair).value;
    for (int i = 0; i < 20; ++i) {
      const double v = rate_Ihh(model, pair, random_gamma_member(model, rng));
      worst_gap = std::max(worst_gap, v - rate);
    }
    const double near = rate_Ihh(model, pair, near_optimizer(model, pair));
    worst_gap = std::max(worst_gap, near - rate);
    suite.check(near >= 0.99 * rate - 1e-9, "rate/near_optimizer",
                "model=" + name + ";seed=" + std::to_string(seed) + ";pair=" + std::to_string(k), near, rate);

    const CandidatePair other = random_regular_pair(model, grid, rng);
    const double r2 = rate_I(model, other).value;
    for (double lambda : {0.25, 0.5, 0.75}) {
      const double mixed = rate_I(model, mix(pair, other, lambda)).value;
      const double bound = lambda * rate + (1.0 - lambda) * r2;
      suite.check(mixed <= bound + 1e-6, "rate/convexity",
                  "model=" + name + ";pair=" + std::to_string(k) + ";lambda=" + fmt(lambda), mixed, bound);
    }
  }
  suite.check(worst_gap <= 1e-6, "rate/sup_domination", "model=" + name + ";seed=" + std::to_string(seed), worst_gap, 0.0);
}

void entropy_properties(Suite& suite, std::uint64_t seed) {
  Philox rng(seed, 2);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const std::size_t n = 2 + static_cast<std::size_t>(uniform_open01(rng) * 5.0);
    std::vector<double> a(n), b(n), c(n), d(n);
    auto fill = [&](std::vector<double>& v) {
      double s = 0.0;
      for (double& e : v) s += (e = uniform_open01(rng));
      for (double& e : v) e /= s;
    };
    fill(a);
    fill(b);
    fill(c);
    fill(d);
    const double ab = rel_entropy_discrete(a, b);
    const double aa = rel_entropy_discrete(a, a);
    const double lambda = uniform_open01(rng);
    std::vector<double> m1(n), m2(n);
    for (std::size_t i = 0; i < n; ++i) {
      m1[i] = lambda * a[i] + (1.0 - lambda) * c[i];
      m2[i] = lambda * b[i] + (1.0 - lambda) * d[i];
    }
    const double joint = rel_entropy_discrete(m1, m2) - lambda * ab - (1.0 - lambda) * rel_entropy_discrete(c, d);
    worst = std::max({worst, -ab, std::abs(aa), joint});
  }
  suite.check(worst <= 1e-10, "measures/entropy_properties", "seed=" + std::to_string(seed), worst, 0.0);
}

void tilt_properties(Suite& suite, const Model& model, const std::string& name, std::uint64_t seed) {
  const auto grid = QuadGrid::build(model);
  const CandidatePair lln = lln_limit(model, grid);
  const TiltedModel self = tilt_from_pair(model, lln);
  double dev = (self.kernel() - model.kernel.p).cwiseAbs().maxCoeff();
  for (std::size_t x = 0; x < model.size(); ++x) {
    for (double f : self.grid_density(x)) dev = std::max(dev, std::abs(f - 1.0));
  }
  suite.check(dev <= 1e-10, "tilt/self_tilt", "model=" + name, dev, 0.0);

  Philox rng(seed, 3);
  const CandidatePair pair = random_regular_pair(model, grid, rng);
  const TiltedModel tilted = tilt_from_pair(model, pair);
  const double round_trip = distance(lln_limit(tilted), pair);
  suite.check(round_trip <= 1e-8, "tilt/round_trip", "model=" + name, round_trip, 0.0);

  double worst = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto traj = simulate(tilted, 30.0, seed, s);
    const auto lr = likelihood_ratio_terms(traj, tilted);
    const double scale = std::max({1.0, std::abs(lr.per_step), std::abs(lr.functional)});
    worst = std::max(worst, std::abs(lr.per_step - lr.functional) / scale);
  }
  suite.check(worst <= 1e-8, "tilt/likelihood_routes", "model=" + name + ";seed=" + std::to_string(seed), worst, 0.0);
}

void dv_properties(Suite& suite, const Model& model, const std::string& name, std::uint64_t seed) {
  Philox rng(seed, 4);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    Vector zeta(static_cast<Eigen::Index>(model.size()));
    for (Eigen::Index x = 0; x < zeta.size(); ++x) zeta(x) = 0.05 + 2.0 * uniform_open01(rng);
    const auto dv = donsker_varadhan(model.kernel, zeta);
    const auto doubled = donsker_varadhan(model.kernel, 2.0 * zeta);
    if (std::isinf(dv.value) || std::isinf(doubled.value)) {
      // zeta outside the balanced-flow polytope of the support graph
      if (std::isinf(dv.value) != std::isinf(doubled.value)) worst = kInfinity;
      continue;
    }
    worst = std::max(worst, (dv.Q.rowwise().sum() - zeta).cwiseAbs().maxCoeff());
    worst = std::max(worst, (dv.Q.colwise().sum().transpose() - zeta).cwiseAbs().maxCoeff());
    worst = std::max(worst, std::abs(doubled.value - 2.0 * dv.value));
  }
  suite.check(worst <= 1e-10, "rate/dv_marginals_and_scaling", "model=" + name, worst, 0.0);
}

}  // namespace

ExperimentResult run_invariants(const ExperimentConfig& config) {
  ExperimentResult result;
  Suite suite{result};
  std::vector<std::pair<std::string, Model>> models{{config.model_path.filename().string(), config.model}};
  for (const auto& path : config.extra_models) models.emplace_back(path.filename().string(), load_model(path));
  const std::uint64_t seed = config.seeds.front();

  for (const auto& [name, model] : models) {
    trajectory_properties(suite, model, name, seed);
    bool finite_mean = true;
    for (const auto& law : model.waits) finite_mean = finite_mean && std::isfinite(mean_wait(law));
    if (finite_mean) {
      rate_properties(suite, model, name, seed);
      tilt_properties(suite, model, name, seed);
    }
    dv_properties(suite, model, name, seed);
  }
  entropy_properties(suite, seed);

  for (const auto& path : config.candidates) {
    const CandidatePair pair = load_candidate(path, config.model);
    const auto membership = check_membership(pair, config.tolerance);
    const double value = rate_I(config.model, pair, config.tolerance).value;
    const bool ok = membership.at_least(Membership::Lambda0) ? std::isfinite(value) || value == kInfinity
                                                              : value == kInfinity;
    suite.check(ok, "rate/constraint_gate", "candidate=" + path.filename().string() + ";class=" + to_string(membership.level),
                value, membership.at_least(Membership::Lambda0) ? value : kInfinity);
  }

  json failures = result.failures;
  result.report = {{"kind", "invariants"}, {"checks", result.rows.size()}, {"passed", result.failures.empty()}};
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  switch (config.kind) {
    case ExperimentKind::Lln:
      return run_lln(config);
    case ExperimentKind::Decay:
      return run_decay(config);
    case ExperimentKind::Contraction:
      return run_contraction(config);
    case ExperimentKind::Legendre:
      return run_legendre(config);
    case ExperimentKind::Invariants:
      return run_invariants(config);
  }
  throw std::logic_error("unhandled experiment kind");
}

}  // namespace rldp
