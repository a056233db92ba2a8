#pragma once

// Command implementations behind the `cegncde` executable. Each command can
// also be called directly; run_cli maps errors to exit codes
// (2 config, 3 data, 4 numerical, 1 anything else).

#include "cegncde/checkpoint.hpp"
#include "cegncde/micro.hpp"
#include "cegncde/synthetic.hpp"

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace cegncde {

struct TrainOutputs {
    std::string checkpoint;
    std::string history;
    std::string resolved_config;
    std::string metrics;
    json resolved;
};

TrainOutputs cmd_train(const std::string& config_path, const std::vector<std::pair<std::string, std::string>>& overrides,
                       std::ostream& log);

// split is one of train, val, test, all.
json cmd_evaluate(const std::string& checkpoint_path, const std::string& dataset_path, const std::string& split);

Tensor3 cmd_forecast(const std::string& checkpoint_path, const std::string& window_csv, const std::string& out_csv);

// One N x N CSV per time; returns the written paths.
std::vector<std::string> cmd_export_adjacency(const std::string& checkpoint_path, const std::string& window_csv,
                                              const std::vector<double>& times, const std::string& out_dir);

// Returns the sidecar path. With `with_distances`, also writes distances.csv.
std::string cmd_gen_synthetic(const SyntheticSpec& spec, const std::string& out_dir, bool with_distances);

GradCheckReport cmd_gradcheck(const MicroSpec& spec, const GradCheckOptions& options, std::ostream& out);

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cegncde
