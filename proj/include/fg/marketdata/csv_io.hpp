#pragma once

#include <filesystem>
#include <optional>

#include "fg/marketdata/panel.hpp"

namespace fg {

struct PanelFiles {
    std::filesystem::path factors;
    std::filesystem::path prices;
    std::filesystem::path sectors;
    std::optional<std::filesystem::path> groups;  // factor_name,group
};

// Loads the three CSVs, imputes missing factor cells with the same date's
// cross-sectional median, and validates the result.
FactorPanel load_panel(const PanelFiles& files);
FactorPanel load_panel(const std::filesystem::path& factors, const std::filesystem::path& prices,
                       const std::filesystem::path& sectors);

// Writes factors.csv, prices.csv, sectors.csv and factor_groups.csv into dir.
void write_panel(const FactorPanel& panel, const std::filesystem::path& dir);

}  // namespace fg
