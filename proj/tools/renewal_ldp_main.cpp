#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "renewal_ldp/harness.hpp"

namespace {

enum ExitCode { kOk = 0, kConfigError = 1, kPropertyFailure = 2, kNonConvergence = 3 };

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Large-deviation experiments for Markov renewal processes"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::string out_dir;
  std::vector<std::uint64_t> seeds;
  double hybrid = -1.0;
  double tolerance = -1.0;
  int restarts = -1;
  unsigned workers = 0;

  for (const char* kind : {"lln", "decay", "contraction", "legendre", "invariants"}) {
    auto* sub = app.add_subcommand(kind, std::string("run the ") + kind + " experiment");
    sub->add_option("--config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (overrides the config)");
    sub->add_option("--seeds", seeds, "seeds (override the config)");
    sub->add_option("--hybrid", hybrid, "tilt only floor((1+delta) Z t) steps")->check(CLI::PositiveNumber);
    sub->add_option("--tolerance", tolerance, "Lambda0 membership tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--restarts", restarts, "multi-start count for I1")->check(CLI::PositiveNumber);
    sub->add_option("--workers", workers, "worker threads (0 = all cores)");
  }
  CLI11_PARSE(app, argc, argv);
  const std::string kind = app.get_subcommands().front()->get_name();

  try {
    rldp::ExperimentConfig config = rldp::load_config(config_path);
    const auto requested = rldp::parse_kind(kind);
    const auto raw = rldp::read_json_file(config_path);
    if (raw.contains("kind") && config.kind != requested) {
      throw rldp::ConfigError(config_path + ": config is for '" + rldp::to_string(config.kind) + "', not '" + kind + "'");
    }
    config.kind = requested;
    if (!out_dir.empty()) config.output = out_dir;
    if (!seeds.empty()) {
      if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
        throw rldp::ConfigError("--seeds: seeds must be distinct");
      }
      config.seeds = seeds;
    }
    if (hybrid > 0.0) config.hybrid = hybrid;
    if (tolerance > 0.0) config.tolerance = tolerance;
    if (restarts > 0) config.restarts = restarts;
    if (workers > 0) config.workers = workers;

    const rldp::ExperimentResult result = rldp::run_experiment(config);
    rldp::write_outputs(config, result);
    std::cout << kind << ": " << result.rows.size() << " rows written to " << config.output.string() << '\n';
    for (const auto& f : result.failures) std::cerr << "FAILED " << f << '\n';
    return result.failures.empty() ? kOk : kPropertyFailure;
  } catch (const rldp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const rldp::ModelError& e) {
    std::cerr << "invalid model: " << e.what() << '\n';
    return kConfigError;
  } catch (const rldp::NonConvergence& e) {
    std::cerr << "numerical non-convergence: " << e.what() << '\n';
    return kNonConvergence;
  } catch (const std::domain_error& e) {
    std::cerr << "precondition failed: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kPropertyFailure;
  }
}
