#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "bermex/baselines.hpp"
#include "bermex/config.hpp"
#include "bermex/dos.hpp"
#include "bermex/exposure.hpp"

namespace bermex {

/// Seeds of the pipeline stages, each a pure function of the master seed and the stage name.
struct StageSeeds {
    std::uint64_t train_paths = 0;
    std::uint64_t valuation_paths = 0;
    std::uint64_t regression_paths = 0;
    std::uint64_t exposure_paths = 0;
    std::uint64_t real_world_paths = 0;
    std::uint64_t decision_nets = 0;
    std::uint64_t value_nets = 0;

    static StageSeeds derive(std::uint64_t master);
    /// Seed of the switched path sets for one real-world drift set.
    std::uint64_t switched(const std::string& label) const;
};

/// One price estimate. `estimate` is "lower_bound" (out-of-sample, valuation paths) or
/// "in_sample" (regression baselines on their fitting paths).
struct PriceRow {
    std::string method;
    std::string estimate;
    double value = 0.0;
    double std_err = 0.0;
    std::size_t paths = 0;
    std::uint64_t seed = 0;
};

struct ExerciseFractionRow {
    std::string method;
    std::string measure;
    int date_index = 0;
    double t = 0.0;
    double fraction = 0.0;
};

struct StageTiming {
    std::string stage;
    double seconds = 0.0;
};

struct RunReport {
    std::string name;
    std::vector<PriceRow> prices;
    ExposureProfile exposure;       ///< DOS policy
    ExposureProfile exposure_lsm;   ///< empty unless the LSM baseline ran with exposure
    ExposureProfile exposure_sgbm;  ///< empty unless the SGBM baseline ran with exposure
    std::vector<ExerciseFractionRow> exercise_fractions;
    std::vector<StageTiming> timings;
    std::vector<std::string> warnings;
    std::string failed_stage;  ///< empty on success
    std::string failure;
    std::string config_text;
};

struct RunOptions {
    bool exposure = true;           ///< false for the price verb
    bool write_artifacts = true;
    std::filesystem::path output_dir;  ///< empty: the configured directory
};

/// simulate -> train -> price -> baselines -> regress -> exposure -> boundary.
/// On a stage failure the artifacts produced so far and run_report.json (with the failed
/// stage) are written, then the exception is rethrown.
RunReport run_pipeline(const ExperimentConfig& config, const RunOptions& options = {});

PathSet simulate_q(const ExperimentConfig& config, std::size_t paths, std::uint64_t seed);

void write_price_report(const std::vector<PriceRow>& rows, std::ostream& out);
std::vector<PriceRow> read_price_report(std::istream& in);
void write_exercise_fractions(const std::vector<ExerciseFractionRow>& rows, std::ostream& out);

/// Rectangular state grid for exercise-region maps.
struct BoundaryGrid {
    int date_index = -1;  ///< -1: N-1
    std::vector<double> lo, hi;
    std::vector<int> points;

    /// "lo:hi:points" per state component, components separated by ','.
    static BoundaryGrid parse(const std::string& spec, int date_index = -1);
    RowMatrix states() const;
};

struct NamedRule {
    std::string method;
    const StoppingRule* rule;
};

/// Columns method,date_index,t,x0..x{d-1},payoff,exercise for every rule at every grid point.
/// Returns, per rule after the first, the fraction of grid points where it disagrees with the first.
std::vector<double> write_boundary_grid(const std::vector<NamedRule>& rules, const BoundaryGrid& grid, std::ostream& out);

/// Per-date comparison of exposure profiles: rows are matched on estimator, measure, alpha and
/// date; every pair of reports gets a difference column and a combined standard error.
/// Throws std::invalid_argument when the reports do not share the same dates.
void compare_profiles(const std::vector<ExposureProfile>& profiles, const std::vector<std::string>& names,
                      std::ostream& out);

}  // namespace bermex
