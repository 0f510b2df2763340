#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "fg/backtest/baselines.hpp"
#include "fg/marketdata/cv.hpp"
#include "fg/marketdata/synthetic.hpp"
#include "fg/model/config.hpp"
#include "fg/training/trainer.hpp"

namespace fg {

struct CsvSource {
    std::string factors, prices, sectors;
    std::optional<std::string> groups;
    std::optional<std::string> graph;  // adjacency overrides, `date,src_stock,dst_stock,relation`
};

struct DataConfig {
    std::string source = "synthetic";  // "synthetic" | "csv"
    SyntheticSpec synthetic;           // seed comes from RunConfig::seed
    CsvSource csv;
};

struct CvConfig {
    std::size_t n_folds = 14;
    double valid_fraction = 0.2;
    std::size_t test_span = 1;
    std::vector<std::size_t> folds;  // fold indices to run; empty runs every fold
};

struct EvaluationConfig {
    std::vector<int> horizons{kHorizons.begin(), kHorizons.end()};
    std::size_t n_groups = 10;
    std::string benchmark = "equal_weight";
    std::vector<std::string> baselines{"linear", "ew", "mlp", "s_best", "s_avg", "s_t20"};
    std::size_t heatmap_bucket = 126;
};

// Everything a run depends on. The model's n_factors is taken from the data.
struct RunConfig {
    std::uint64_t seed = 1;
    DataConfig data;
    CvConfig cv;
    ModelConfig model;
    TrainingConfig training;
    EvaluationConfig evaluation;
    BaselineConfig baselines;

    void validate() const;  // throws ConfigError
};

nlohmann::json to_json(const RunConfig& config);

// Keys missing from `j` keep their defaults; unknown keys and wrong types throw ConfigError.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

// 64-bit FNV-1a as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

// Hash of the whole resolved config.
std::string config_hash(const RunConfig& config);

// Hash of the sections a checkpoint depends on: seed, data, cv, model, training.
std::string training_hash(const RunConfig& config);

}  // namespace fg
