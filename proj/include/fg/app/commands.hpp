#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <vector>

#include "fg/app/run_config.hpp"
#include "fg/backtest/strategies.hpp"
#include "fg/marketdata/forward_returns.hpp"
#include "fg/stockgraph/graph.hpp"

namespace fg {

struct GlobalOptions {
    std::optional<std::filesystem::path> config;
    std::optional<std::uint64_t> seed;  // overrides the config's seed
    std::filesystem::path out = "out";
    bool force = false;
    std::size_t jobs = 1;
    std::optional<std::filesystem::path> checkpoint;  // directory written by `train`
};

// Config file (or defaults) with flag overrides applied, validated.
RunConfig resolve_config(const GlobalOptions& options);

// Panel, labels and graphs for a config. Graphs refer to `panel`, so the
// struct is not copyable.
struct LoadedData {
    explicit LoadedData(FactorPanel p);
    LoadedData(const LoadedData&) = delete;
    LoadedData& operator=(const LoadedData&) = delete;

    FactorPanel panel;
    ForwardReturns returns;
    GraphSet graphs;
};

std::unique_ptr<LoadedData> load_data(const RunConfig& config);

// Splits for the configured folds, in fold order. Throws ConfigError for a
// requested fold the calendar does not produce.
std::vector<CvSplit> selected_splits(const RunConfig& config, const FactorPanel& panel);

// Forward pass of every fold's checkpoint over the test dates it owns, sorted
// by date. Refuses checkpoints whose training hash differs from `config`.
std::vector<DateEvaluation> evaluate_checkpoints(const RunConfig& config, const LoadedData& data,
                                                 std::span<const CvSplit> splits,
                                                 const std::filesystem::path& run_dir, std::size_t jobs);

void cmd_gen_data(const GlobalOptions& options, std::ostream& log);
void cmd_train(const GlobalOptions& options, std::ostream& log);
void cmd_backtest(const GlobalOptions& options, std::ostream& log);
void cmd_interpret(const GlobalOptions& options, std::ostream& log);

// Parses argv and dispatches. Returns 0 on success, 1 on validation or usage
// errors, 2 on runtime errors.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fg
