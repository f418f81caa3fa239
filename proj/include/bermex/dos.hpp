#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bermex/features.hpp"
#include "bermex/mc_engine.hpp"
#include "bermex/nn.hpp"
#include "bermex/payoffs.hpp"
#include "bermex/stats.hpp"

namespace bermex {

/// Anything that produces hard exercise decisions f_n on a batch of states.
/// f_0 = 0 and f_N = 1 are fixed by convention and not asked of implementations.
class StoppingRule {
public:
    virtual ~StoppingRule() = default;
    virtual const Contract& contract() const = 0;
    virtual const TimeGrid& grid() const = 0;
    /// Decisions at interior date 1 <= n <= N-1 for the rows of `states`.
    virtual std::vector<std::uint8_t> decide_interior(int n, const Eigen::Ref<const RowMatrix>& states) const = 0;

    /// Decisions at any date, applying f_0 = 0 and f_N = 1.
    std::vector<std::uint8_t> decide(int n, const Eigen::Ref<const RowMatrix>& states) const;
};

/// Per-path stopping indices and discounted cashflows for every entry date.
/// cashflow(m, n) is CF_n: the payoff at tau_n discounted to t_n.
struct CashflowMatrix {
    std::size_t paths = 0;
    int dates = 0;
    double r = 0.0;
    std::vector<std::uint16_t> tau;  ///< [path][date]
    std::vector<double> cf;          ///< [path][date]

    std::uint16_t stop(std::size_t m, int n) const { return tau[m * static_cast<std::size_t>(dates) + n]; }
    double cashflow(std::size_t m, int n) const { return cf[m * static_cast<std::size_t>(dates) + n]; }
    Eigen::VectorXd column(int n) const;
};

/// Backward recursion CF_N = g, CF_n = f_n g + (1 - f_n) e^{-r dt} CF_{n+1} under `rule`.
CashflowMatrix build_cashflows(const StoppingRule& rule, const PathSet& paths, double r);

/// First date >= `from` whose decision fires, scanning `decisions` (one entry per date,
/// entries for dates 0 and N are ignored and replaced by 0 and 1).
int first_hit(std::span<const std::uint8_t> decisions, int from);

/// The same index by the sum-product formula sum_m m f_m prod_{j<m} (1 - f_j).
int stopping_index_sum_product(std::span<const std::uint8_t> decisions, int from);

/// tau_from for one path (date-major states covering dates 0..N).
int stopping_time(const StoppingRule& rule, std::span<const double> path, int from = 0);

/// Global stopping index tau (from t_0) of every path.
std::vector<std::uint16_t> stopping_indices(const StoppingRule& rule, const PathSet& paths);

/// Mean of e^{-r (tau - t_0)} g(x_tau) with its standard error.
MeanSe price_lower_bound(const StoppingRule& rule, const PathSet& paths, double r);

/// Fraction of paths with tau = t_n for n = 0..N.
std::vector<double> exercise_fraction(const StoppingRule& rule, const PathSet& paths);

enum class FilterMode { A1, A2, A3 };
std::string to_string(FilterMode mode);
FilterMode filter_mode_from_string(const std::string& name);

struct TrainConfig {
    int batch_size = 8192;
    int steps_fresh = 1500;  ///< networks trained from a random start
    int steps_warm = 500;    ///< networks started from the next date's parameters
    double lr_fresh = 1e-3;
    double lr_warm = 1e-4;
    FilterMode filter = FilterMode::A2;
    bool augment_payoff = true;
    bool warm_start = true;
    std::vector<int> hidden;  ///< empty: two layers of (state dim + 50)
    Activation hidden_activation = Activation::Relu;
    std::uint64_t seed = 0;
};

struct DateTrainingInfo {
    std::size_t samples = 0;  ///< size of the training subset
    int steps = 0;
    bool warm_started = false;
    bool degenerate = false;  ///< empty subset: never exercise at this date
    double final_loss = 0.0;
};

/// Trained decision networks F_1..F_{N-1} with the filter-mode masks.
class DecisionPolicy : public StoppingRule {
public:
    DecisionPolicy(Contract contract, TimeGrid grid, FilterMode mode, bool augment_payoff, NetSpec spec,
                   FeatureScaler scaler);

    const Contract& contract() const override { return contract_; }
    const TimeGrid& grid() const override { return grid_; }
    std::vector<std::uint8_t> decide_interior(int n, const Eigen::Ref<const RowMatrix>& states) const override;

    /// Network output F_n in (0, 1); degenerate dates return 0.
    Eigen::VectorXd probabilities(int n, const Eigen::Ref<const RowMatrix>& states) const;
    /// 1{F_n >= 1/2} without any mask.
    std::vector<std::uint8_t> raw_decisions(int n, const Eigen::Ref<const RowMatrix>& states) const;

    FilterMode mode() const noexcept { return mode_; }
    bool augment_payoff() const noexcept { return augment_; }
    const NetSpec& spec() const noexcept { return spec_; }
    const FeatureScaler& scaler() const noexcept { return scaler_; }

    bool has_network(int n) const;
    const NetParams& network(int n) const;
    void set_network(int n, NetParams params);
    void set_degenerate(int n);

    std::vector<DateTrainingInfo> training;  ///< indexed by date, 0 and N unused

    /// Directory with manifest.json and one net_XX.xnnp per trained date.
    void save(const std::filesystem::path& dir) const;
    static DecisionPolicy load(const std::filesystem::path& dir);

private:
    RowMatrix features(const Eigen::Ref<const RowMatrix>& states) const;

    Contract contract_;
    TimeGrid grid_;
    FilterMode mode_;
    bool augment_;
    NetSpec spec_;
    FeatureScaler scaler_;
    std::vector<NetParams> nets_;  ///< indexed by date; empty when absent
};

/// Backward training over n = N-1..1 on Q paths.
DecisionPolicy train_policy(const PathSet& paths, const Contract& contract, double r, const TrainConfig& config);

}  // namespace bermex
