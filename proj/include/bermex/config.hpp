#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "bermex/dos.hpp"
#include "bermex/mc_engine.hpp"
#include "bermex/payoffs.hpp"
#include "bermex/regression.hpp"

namespace bermex {

enum class ModelKind { Gbm, Heston };

/// A named vector of real-world drifts for the P-measure estimators.
struct RealWorldDrift {
    std::string label;
    Eigen::VectorXd mu;
};

struct BoundarySpec {
    bool enabled = false;
    int date_index = -1;              ///< -1: N-1
    std::vector<double> lo, hi;       ///< per state component
    std::vector<int> points;          ///< per state component
};

/// Everything one pipeline run needs. Sections of the INI file:
///   [experiment] name, seed, output_dir
///   [model]      type = gbm | heston, and the model parameters
///   [contract]   payoff, strike
///   [grid]       maturity, intervals, substeps
///   [paths]      train, valuation, regression, exposure
///   [training]   decision-network settings
///   [regression] value-surface settings
///   [exposure]   estimators, alphas, mu_p sets separated by ';'
///   [baselines]  lsm / sgbm switches and presets
///   [boundary]   exercise-boundary grid
struct ExperimentConfig {
    std::string name = "experiment";
    std::uint64_t seed = 0;
    std::string output_dir = "out";

    ModelKind model = ModelKind::Gbm;
    GbmModel gbm;
    HestonModel heston;
    QeOptions qe;

    Contract contract;
    double maturity = 1.0;
    int intervals = 1;
    int substeps = 1;

    std::size_t train_paths = 1 << 20;
    std::size_t valuation_paths = 1 << 20;
    std::size_t regression_paths = 1 << 18;
    std::size_t exposure_paths = 1 << 20;

    TrainConfig training;

    bool regression_enabled = true;
    RegressionConfig regression;

    bool exposure_enabled = true;
    std::vector<std::string> estimators{"EE1_Q", "EE2_Q", "PFE_Q"};
    std::vector<double> alphas{0.025, 0.975};
    std::vector<RealWorldDrift> real_world;

    bool lsm = false;
    BasisPreset lsm_basis = BasisPreset::LsmBs;
    bool sgbm = false;
    BasisPreset sgbm_basis = BasisPreset::SgbmBs;
    int sgbm_bundles = 32;

    BoundarySpec boundary;

    TimeGrid grid() const { return TimeGrid::uniform(maturity, intervals, substeps); }
    int state_dim() const { return contract.state_dim(); }
    void validate() const;
};

/// Parses INI text. Errors carry the offending `section.key` and line number.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& file);

/// INI text that parses back to the same configuration (floats with 17 significant digits).
std::string serialize_config(const ExperimentConfig& config);

}  // namespace bermex
