#pragma once

// Experiment front end. Every command returns the process exit code:
// 0 success, 1 malformed configuration, 2 certification rejected or
// resonant frequency, 3 the iteration did not converge.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace qpkam {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitRejected = 2;
inline constexpr int kExitNotConverged = 3;

struct ExperimentConfig {
  nlohmann::json map;  // catalog entry; "omega" defaults to the top-level one
  std::vector<double> omega;
  double sigma0 = 2.0;
  double gamma = 1e-2, tau = 2.5;
  std::optional<double> alpha;        // sampled from the interval when absent
  double interval_a = 0.4, interval_b = 1.2;
  std::optional<double> p;            // "inf" allowed; defaults to the map's
  std::optional<double> q;
  int K = 16, J = 6, k_max = 6;
  int certify_K = 0;                  // 0: same as K
  double tol = 1e-8;
  double radial_width = 0.05;
  double bandwidth = 2.0;
  int csv_samples = 1000;
  double csv_span = 20.0 * 3.141592653589793;
  nlohmann::json curves;              // diagnose targets, see README
  std::uint64_t seed = 0;
};

// Types and ranges only; constraint relations are left to the library.
// Throws ConfigError.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

struct CliContext {
  std::filesystem::path out = ".";
  bool verbose = false;
  int threads = 1;
  std::ostream* log = nullptr;  // diagnostics; std::cerr when null
};

int cmd_certify(const ExperimentConfig& cfg, const CliContext& ctx);
int cmd_solve(const ExperimentConfig& cfg, const CliContext& ctx);
int cmd_diagnose(const ExperimentConfig& cfg, const CliContext& ctx);
int cmd_schedule(const ExperimentConfig& cfg, const CliContext& ctx);

struct DiophantineArgs {
  std::vector<double> omega;
  double sigma0 = 2.0, gamma = 1e-2, tau = 2.5;
  int K = 16;
  double a = 0.4, b = 1.2;
  int count = 1000;
  std::uint64_t seed = 0;
};
int cmd_diophantine(const DiophantineArgs& args, const CliContext& ctx);

// Full command line, used by the qpkam binary.
int cli_main(int argc, char** argv);

}  // namespace qpkam
