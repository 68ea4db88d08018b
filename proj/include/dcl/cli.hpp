#ifndef DCL_CLI_HPP
#define DCL_CLI_HPP

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace dcl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitPartialSweep = 4;

/// Environment variable naming the default output root.
inline constexpr const char* kOutputRootEnv = "DCL_OUTPUT_ROOT";

std::filesystem::path default_output_root();

/// Entry point shared by the executable and the tests. `args` excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Config overrides for a named sweep arm: dcl, dcl-kl, gaussian-kl,
/// gaussian-js, finetune, multitask, ratio-<r>, or "name:path=value,path=value".
std::vector<std::string> arm_overrides(const std::string& arm);
std::string arm_name(const std::string& arm);

/// Drops the timestamp so two metrics files can be compared byte for byte.
nlohmann::json strip_timestamp(nlohmann::json metrics);

struct SweepRow {
  std::string arm;
  std::size_t runs = 0;
  std::size_t missing = 0;
  double avg_mean = 0.0, avg_std = 0.0;
  double lca_mean = 0.0, lca_std = 0.0;
};

/// Mean and sample standard deviation per arm, in the given arm order.
std::vector<SweepRow> summarize(const std::vector<std::string>& arms,
                                const std::vector<nlohmann::json>& cells);
std::string summary_csv(const std::vector<SweepRow>& rows);
std::string summary_text(const std::vector<SweepRow>& rows);

/// Human-readable report for one metrics.json document.
std::string run_report(const nlohmann::json& metrics);

}  // namespace dcl::cli

#endif  // DCL_CLI_HPP
