#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "bumpvo/config.hpp"
#include "bumpvo/hybrid.hpp"

namespace bumpvo::cli {

inline constexpr const char* kVersion = "0.1.0";

// Stable exit codes.
enum ExitCode : int {
    kOk = 0,
    kConfigError = 2,
    kIoError = 3,
    kTrackingFailed = 4,
    kEmptyAssociation = 5,
};

/// Every tracker tunable under a flat key. Unknown keys are rejected.
struct RunConfig {
    TrackerConfig tracker;

    static RunConfig from_config(const KeyValueConfig& kv);
    static RunConfig load(const std::filesystem::path& path);
    /// Resolved configuration; reading it back yields the same RunConfig.
    std::string manifest() const;
};

struct VoOutputs {
    std::filesystem::path trajectory;
    std::filesystem::path stats;
    std::filesystem::path manifest;
};

/// `traj.txt` -> `traj.txt`, `traj.stats.csv`, `traj.manifest.txt`.
VoOutputs vo_outputs(const std::filesystem::path& trajectory);

int cmd_synth(const std::filesystem::path& config, const std::filesystem::path& out_dir, std::ostream& out,
              std::ostream& err);

/// Empty `config` runs the defaults. `mode` and `seed` override the config.
int cmd_vo(const std::filesystem::path& seq_dir, const std::filesystem::path& config,
           const std::filesystem::path& out_traj, const std::optional<std::string>& mode,
           const std::optional<std::uint64_t>& seed, std::ostream& out, std::ostream& err);

enum class Metric { Ate, Rpe };

struct EvalOptions {
    Metric metric = Metric::Ate;
    int delta = 1;
    bool with_scale = true;
    double max_dt = 0.02;
    bool json = false;
};

int cmd_eval(const std::filesystem::path& est, const std::filesystem::path& gt, const EvalOptions& opts,
             std::ostream& out, std::ostream& err);

int cmd_plot(const std::vector<std::filesystem::path>& inputs, const std::filesystem::path& out_svg,
             std::ostream& out, std::ostream& err);

}  // namespace bumpvo::cli
