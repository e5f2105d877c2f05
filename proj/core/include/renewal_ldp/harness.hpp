#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "renewal_ldp/json_io.hpp"
#include "renewal_ldp/model.hpp"

namespace rldp {

inline constexpr const char* kVersion = "0.1.0";

enum class ExperimentKind { Lln, Decay, Contraction, Legendre, Invariants };

std::string to_string(ExperimentKind kind);
ExperimentKind parse_kind(const std::string& name);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Lln;
  std::filesystem::path model_path;
  Model model;
  std::vector<double> schedule;          // horizons t, strictly increasing
  std::vector<std::uint64_t> seeds;      // distinct
  std::size_t n = 10000;                 // paths per point
  double tolerance = kDefaultLambda0Tolerance;
  int restarts = 8;
  std::optional<double> hybrid;
  std::vector<double> radii{0.1};
  std::optional<Matrix> target_kernel;   // decay target: LLN pair of (kernel, waits)
  std::optional<std::filesystem::path> target_candidate;
  std::optional<double> crude_t;         // crude Monte Carlo cross-check horizon
  std::size_t crude_n = 100000;
  double simplex_step = 0.01;
  bool oracle = false;
  std::vector<double> theta_grid;        // legendre; defaults per law when empty
  std::vector<double> m_grid;
  std::vector<std::filesystem::path> extra_models;  // invariants
  std::vector<std::filesystem::path> candidates;    // invariants
  std::filesystem::path output = "out";
  unsigned workers = 0;
  std::string source_text;               // config bytes, for the manifest hash
};

/// Reads a JSON experiment config; relative paths resolve against its folder.
/// Throws ConfigError (which includes model validation failures).
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig config_from_json(const json& j, const std::filesystem::path& base_dir, const std::string& where);

struct ResultRow {
  std::string kind;
  std::string params;  // key=value pairs separated by ';'
  double measured = 0.0;
  double reference = 0.0;
  double deviation = 0.0;  // measured - reference
  double ci = 0.0;         // NaN when not applicable

  bool operator==(const ResultRow& other) const;
};

ResultRow make_row(std::string kind, std::string params, double measured, double reference,
                   double ci = std::numeric_limits<double>::quiet_NaN());

struct ExperimentResult {
  std::vector<ResultRow> rows;
  json report = json::object();
  std::vector<std::string> failures;  // property failures: "module/property: detail"
};

ExperimentResult run_lln(const ExperimentConfig& config);
ExperimentResult run_decay(const ExperimentConfig& config);
ExperimentResult run_contraction(const ExperimentConfig& config);
ExperimentResult run_legendre(const ExperimentConfig& config);
ExperimentResult run_invariants(const ExperimentConfig& config);
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Header: kind,params,measured,reference,deviation,ci.
void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_results_csv(std::istream& in);

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t hash = 14695981039346656037ULL);

/// Writes results.csv, report.json and manifest.json into config.output.
void write_outputs(const ExperimentConfig& config, const ExperimentResult& result);

/// Nested grid minimum of the contraction objective for |support(pi)| <= 2:
/// a 200-point log grid per coordinate over [1e-3, 10], refined once around
/// the best cell. `with_limit` also offers the zeta -> 0 value.
double contraction_grid_oracle(const Model& model, const Vector& pi, bool with_limit = true);

/// Random pair in U00 on `grid`: the LLN pair of a random kernel with the
/// support of p, with waits reweighted by a bounded random density.
CandidatePair random_regular_pair(const Model& model, std::shared_ptr<const QuadGrid> grid, Philox& rng);

/// State marginal pi_x = mu(x, ]0,+inf]) of the LLN pair, in closed form.
Vector lln_marginal(const Model& model);

}  // namespace rldp
