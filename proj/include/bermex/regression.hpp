#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bermex/dos.hpp"
#include "bermex/features.hpp"
#include "bermex/mc_engine.hpp"
#include "bermex/nn.hpp"
#include "bermex/payoffs.hpp"

namespace bermex {

/// Laguerre polynomial L_n by the three-term recurrence.
double laguerre(int n, double x);
/// e^{-x/2} L_n(x).
double weighted_laguerre(int n, double x);

enum class BasisPreset { Constant, Monomial, LsmBs, SgbmBs, LsmHeston, SgbmHeston };
std::string to_string(BasisPreset preset);
BasisPreset basis_preset_from_string(const std::string& name);

/// Regression features of a state. Price components enter divided by the strike and the
/// variance component (Heston presets) enters as is.
///   constant     1
///   monomial     1, x_j^k for every state component j and k = 1..degree
///   lsm_bs       1, e^{-s_i/2} L_k(s_i) for k = 0..5 per asset, (max_i log s_i)^k for k = 1..4
///   sgbm_bs      1, s_i^k for k = 1..4 per asset, (max_i log s_i)^k for k = 1..2
///   lsm_heston   1, L_k(s), L_k(nu) for k = 1..3, nu s
///   sgbm_heston  1, s, s nu, nu, nu^2, nu^3
struct BasisSet {
    BasisPreset preset = BasisPreset::Constant;
    double scale = 1.0;
    int assets = 1;
    int state_offset = 0;
    int degree = 2;

    static BasisSet make(BasisPreset preset, const Contract& contract, int degree = 2);

    int size() const;
    std::vector<std::string> names() const;
    Eigen::MatrixXd design(const Eigen::Ref<const RowMatrix>& states) const;
};

struct OlsResult {
    Eigen::VectorXd coef;
    int rank = 0;
    bool rank_deficient = false;
};

/// Least squares by a complete orthogonal decomposition: the QR solution for a full-rank
/// design and the minimum-norm solution otherwise.
OlsResult fit_ols(const Eigen::MatrixXd& design, const Eigen::VectorXd& y);

/// Independent least-squares fits on equally sized bundles of the sorted statistic.
struct LocalOls {
    std::vector<double> upper;  ///< largest statistic of bundles 0..K-2 (queries on a bound go to the lower bundle)
    std::vector<Eigen::VectorXd> coef;
    std::vector<std::size_t> counts;

    int bundles() const noexcept { return static_cast<int>(coef.size()); }
    int bundle_of(double statistic) const;
    Eigen::VectorXd predict(const Eigen::MatrixXd& design, const Eigen::VectorXd& statistic) const;
};

/// Samples are ordered by (statistic, row index) and cut into `n_bundles` consecutive groups of
/// near-equal size; rows keep their original order inside each bundle. Fewer rows than bundles
/// reduce the bundle count. Warnings about rank deficiency are appended to `warnings`.
LocalOls fit_ols_local(const Eigen::MatrixXd& design, const Eigen::VectorXd& y, const Eigen::VectorXd& statistic,
                       int n_bundles, std::vector<std::string>* warnings = nullptr);

/// Bundling statistic: the largest price component.
Eigen::VectorXd bundling_statistic(const Contract& contract, const Eigen::Ref<const RowMatrix>& states);

/// Pathwise option value v(t_n, x).
class ValueFunction {
public:
    virtual ~ValueFunction() = default;
    virtual const Contract& contract() const = 0;
    virtual const TimeGrid& grid() const = 0;
    virtual Eigen::VectorXd value(int n, const Eigen::Ref<const RowMatrix>& states) const = 0;
    /// Standard error of a value estimated as a sample mean independently of the state
    /// (the fitted constant at t_0); 0 where the value is a function of the state.
    virtual double sampling_error(int /*n*/) const { return 0.0; }
};

enum class RegressionMethod { OlsGlobal, OlsLocal, Nn };
std::string to_string(RegressionMethod method);
RegressionMethod regression_method_from_string(const std::string& name);

enum class OutputMode { Identity, PayoffShiftRelu };
std::string to_string(OutputMode mode);
OutputMode output_mode_from_string(const std::string& name);

struct RegressionConfig {
    RegressionMethod method = RegressionMethod::Nn;
    BasisPreset basis = BasisPreset::Monomial;
    int degree = 2;
    int bundles = 32;
    std::vector<int> hidden;  ///< empty: two layers of (state dim + 50)
    Activation hidden_activation = Activation::Relu;
    OutputMode output_mode = OutputMode::Identity;
    bool augment_payoff = true;
    int steps = 1500;
    int batch_size = 8192;
    double learning_rate = 1e-3;
    double final_learning_rate = 1e-5;  ///< geometric decay target; <= 0: constant rate
    std::uint64_t seed = 0;
};

/// Fitted value at one date.
struct DateSurface {
    enum class Kind { Unfitted, Payoff, AllExercise, Constant, Ols, Local, Nn };
    Kind kind = Kind::Unfitted;
    std::size_t samples = 0;  ///< continuation-region regression pairs
    double constant = 0.0;
    double constant_std_err = 0.0;
    Eigen::VectorXd coef;
    LocalOls local;
    NetParams net;
    FeatureScaler scaler;
    double target_scale = 1.0;
};

/// Mean-squared-error fit of a network with scalar output to `target`, in place.
double fit_nn(const NetSpec& spec, NetParams& params, const Eigen::Ref<const RowMatrix>& features,
              const Eigen::VectorXd& target, const MinibatchConfig& config);

class ValueSurface : public ValueFunction {
public:
    ValueSurface(Contract contract, TimeGrid grid, RegressionConfig config,
                 std::shared_ptr<const StoppingRule> rule);

    const Contract& contract() const override { return contract_; }
    const TimeGrid& grid() const override { return grid_; }
    const RegressionConfig& config() const noexcept { return config_; }
    const BasisSet& basis() const noexcept { return basis_; }
    const NetSpec& net_spec() const noexcept { return spec_; }
    const std::shared_ptr<const StoppingRule>& rule() const noexcept { return rule_; }

    /// g(x) at t_N and wherever the stopping rule exercises, the fitted value elsewhere.
    Eigen::VectorXd value(int n, const Eigen::Ref<const RowMatrix>& states) const override;
    double sampling_error(int n) const override;
    /// The fitted regression function alone.
    Eigen::VectorXd regression_value(int n, const Eigen::Ref<const RowMatrix>& states) const;

    /// Fit date n from regression pairs (states, targets) already restricted to the continuation region.
    void fit_date(int n, const Eigen::Ref<const RowMatrix>& states, const Eigen::VectorXd& targets);

    std::vector<DateSurface> dates;
    std::vector<std::string> warnings;

    void save(const std::filesystem::path& dir) const;
    static ValueSurface load(const std::filesystem::path& dir, std::shared_ptr<const StoppingRule> rule);

private:
    Contract contract_;
    TimeGrid grid_;
    RegressionConfig config_;
    BasisSet basis_;
    NetSpec spec_;
    std::shared_ptr<const StoppingRule> rule_;
};

/// Cashflows Y_n of `paths` under the rule, then one fit per date 1..N-1 on the states with
/// f_n = 0. Date 0 (a single initial state) gets the constant mean of Y_0.
ValueSurface fit_surface(std::shared_ptr<const StoppingRule> rule, const PathSet& paths, double r,
                         const RegressionConfig& config);

}  // namespace bermex
