#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "lmd/cli/experiment.hpp"

namespace lmd::cli {

// Each command writes its artifacts plus run.json under `out_dir` and
// throws on any failure. Progress and results go to `log`.
void cmd_train(const ExperimentConfig& config, const std::filesystem::path& out_dir, std::ostream& log);
void cmd_score(const ExperimentConfig& config, const std::filesystem::path& out_dir, std::ostream& log);
// Reads config.eval_in_csv and config.eval_out_csv; returns the AUC.
double cmd_eval(const ExperimentConfig& config, const std::filesystem::path& out_dir, std::ostream& log);
void cmd_ablate(const ExperimentConfig& config, const std::filesystem::path& out_dir, std::ostream& log);
void cmd_sample(const ExperimentConfig& config, const std::filesystem::path& out_dir, std::ostream& log);

// Settings swept by each ablation axis, in output order.
std::vector<std::string> ablation_settings(const std::string& axis, const detector::DetectorConfig& base);

// Full command line entry point; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lmd::cli
