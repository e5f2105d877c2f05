#pragma once

#include <filesystem>
#include <ostream>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "renewal_ldp/candidate.hpp"
#include "renewal_ldp/model.hpp"
#include "renewal_ldp/rate.hpp"
#include "renewal_ldp/simulate.hpp"

namespace rldp {

using json = nlohmann::json;

/// Malformed or unreadable configuration; the message names the file and
/// the offending line or key path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

json read_json_file(const std::filesystem::path& path);

/// {"family": "exponential", "rate": 1} and so on; mixtures nest components.
WaitLaw wait_law_from_json(const json& j, const std::string& where);
json to_json(const WaitLaw& law);

/// {"states": [...], "kernel": [[...]], "waits": {label: law}, "initial": [...]}.
/// The initial law defaults to uniform. The model is validated.
Model model_from_json(const json& j, const std::string& where);
Model load_model(const std::filesystem::path& path);
json to_json(const Model& model);

/// Grid nodes are stored so that a reload can confirm it rebuilt the same grid.
json to_json(const CandidatePair& pair, const Model& model);
CandidatePair candidate_from_json(const json& j, const Model& model, const std::string& where);
CandidatePair load_candidate(const std::filesystem::path& path, const Model& model);

json to_json(const EmpiricalPair& pair, const Model& model);

/// Columns k, X_k, tau_{k+1}, S_{k+1}.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj, const Model& model);

json to_json(const RateReport& report, const Model& model);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

}  // namespace rldp
