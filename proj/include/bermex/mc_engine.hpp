#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace bermex {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Exercise dates t_0 < ... < t_N plus the number of SDE sub-steps between two dates.
class TimeGrid {
public:
    TimeGrid(std::vector<double> exercise_dates, int substeps_per_interval = 1);

    /// N equally spaced intervals on [t0, maturity].
    static TimeGrid uniform(double maturity, int intervals, int substeps_per_interval = 1, double t0 = 0.0);

    const std::vector<double>& dates() const noexcept { return dates_; }
    double date(int n) const { return dates_.at(static_cast<std::size_t>(n)); }
    /// N: number of intervals; there are N+1 dates.
    int intervals() const noexcept { return static_cast<int>(dates_.size()) - 1; }
    int substeps() const noexcept { return substeps_; }

    /// Index of an exercise date, matched to 1e-12 relative; std::invalid_argument when absent.
    int index_of(double t) const;

    bool operator==(const TimeGrid&) const = default;

private:
    std::vector<double> dates_;
    int substeps_;
};

/// Multi-asset Black-Scholes model with constant coefficients.
struct GbmModel {
    Eigen::VectorXd s0;
    double r = 0.0;
    Eigen::VectorXd q;
    Eigen::VectorXd sigma;
    Eigen::MatrixXd rho;
    std::optional<Eigen::VectorXd> mu_p;  ///< real-world drifts

    int dim() const noexcept { return static_cast<int>(s0.size()); }

    /// Throws std::invalid_argument on shape or sign violations (PSD is checked on use).
    void validate() const;

    /// d assets with identical parameters and a constant off-diagonal correlation.
    static GbmModel symmetric(int d, double s0, double r, double q, double sigma, double rho = 0.0);
};

/// Heston stochastic volatility model. The state is (variance, price).
struct HestonModel {
    double s0 = 100.0;
    double nu0 = 0.04;
    double r = 0.0;
    double q = 0.0;
    double kappa = 1.0;
    double theta = 0.04;
    double xi = 0.5;
    double rho = 0.0;

    void validate() const;
    bool feller_satisfied() const noexcept { return 2.0 * kappa * theta >= xi * xi; }
};

/// Options for the quadratic-exponential variance discretization.
struct QeOptions {
    double psi_threshold = 1.5;
    bool martingale_correction = false;
};

enum class MeasureKind : std::uint8_t { Q = 0, P = 1, Switched = 2 };

struct Measure {
    MeasureKind kind = MeasureKind::Q;
    int switch_index = -1;  ///< only for Switched: last date simulated with the real-world drift

    static Measure q() { return {MeasureKind::Q, -1}; }
    static Measure p() { return {MeasureKind::P, -1}; }
    static Measure switched(int n) { return {MeasureKind::Switched, n}; }

    /// 0 = Q, 1 = P, 2 + n = switched at date n.
    std::uint8_t tag() const;
    static Measure from_tag(std::uint8_t tag);
    std::string label() const;

    bool operator==(const Measure&) const = default;
};

/// Simulated states at the exercise dates, stored row-major as [path][date][component].
/// Immutable after construction.
class PathSet {
public:
    PathSet(std::size_t paths, TimeGrid grid, int dim, Measure measure, std::uint64_t seed,
            std::vector<double> states);

    std::size_t paths() const noexcept { return paths_; }
    int dates() const noexcept { return grid_.intervals() + 1; }
    int dim() const noexcept { return dim_; }
    const TimeGrid& grid() const noexcept { return grid_; }
    const Measure& measure() const noexcept { return measure_; }
    std::uint64_t seed() const noexcept { return seed_; }

    std::span<const double> state(std::size_t path, int date) const {
        return {states_.data() + (path * static_cast<std::size_t>(dates()) + static_cast<std::size_t>(date)) * dim_,
                static_cast<std::size_t>(dim_)};
    }
    /// All dates of one path, date-major.
    std::span<const double> path(std::size_t path) const {
        const std::size_t stride = static_cast<std::size_t>(dates()) * dim_;
        return {states_.data() + path * stride, stride};
    }
    /// M x dim view of the states at one date (strided, no copy).
    Eigen::Map<const RowMatrix, 0, Eigen::OuterStride<>> at_date(int date) const;

    std::span<const double> raw() const noexcept { return states_; }

private:
    std::size_t paths_;
    TimeGrid grid_;
    int dim_;
    Measure measure_;
    std::uint64_t seed_;
    std::vector<double> states_;
};

/// Factor L with L L^T = rho. Lower-triangular Cholesky when rho is positive definite;
/// otherwise eigenvalues >= -1e-12 are clipped to zero. Throws NumericError naming the
/// first leading minor that is not positive when rho is not positive semi-definite.
Eigen::MatrixXd correlation_factor(const Eigen::MatrixXd& rho);

/// Exact log-normal sampling of every exercise date.
PathSet simulate_gbm(const GbmModel& model, const TimeGrid& grid, std::size_t paths, Measure measure,
                     std::uint64_t seed);

/// Real-world drift up to and including `switch_index`, risk-neutral drift afterwards.
PathSet simulate_switched(const GbmModel& model, const TimeGrid& grid, int switch_index, std::size_t paths,
                          std::uint64_t seed);
/// Same, with the switch date given as a time that must lie on the grid.
PathSet simulate_switched(const GbmModel& model, const TimeGrid& grid, double switch_date, std::size_t paths,
                          std::uint64_t seed);

/// QE scheme with `grid.substeps()` steps per interval; states are (variance, price).
PathSet simulate_heston(const HestonModel& model, const TimeGrid& grid, std::size_t paths, std::uint64_t seed,
                        const QeOptions& options = {});

/// Log of the multivariate log-normal transition density of the GBM model.
double gbm_log_transition_density(const GbmModel& model, MeasureKind measure, double t_from, double t_to,
                                  std::span<const double> x_from, std::span<const double> x_to);
double gbm_transition_density(const GbmModel& model, MeasureKind measure, double t_from, double t_to,
                              std::span<const double> x_from, std::span<const double> x_to);

/// Radon-Nikodym weight of P with respect to Q along `path` (dates 0..n, date-major,
/// n+1 states). An empty product (one state) gives 1.
double likelihood_ratio(const GbmModel& model, const TimeGrid& grid, std::span<const double> path);

/// Pre-factored evaluator for log P/Q transition-density ratios, used in the exposure loops.
class LogLikelihoodRatio {
public:
    LogLikelihoodRatio(const GbmModel& model, const TimeGrid& grid);

    /// log p(y|x)/q(y|x) for the step from date n to n+1.
    double step(int n, std::span<const double> x_from, std::span<const double> x_to) const;

    /// Cumulative log-ratio at every date of one path (entry 0 is 0).
    std::vector<double> cumulative(std::span<const double> path) const;

private:
    std::vector<double> dates_;
    Eigen::VectorXd drift_q_;  // r - q - sigma^2/2
    Eigen::VectorXd drift_p_;  // mu - q - sigma^2/2
    Eigen::MatrixXd precision_;  // (diag(sigma) rho diag(sigma))^{-1}
    int dim_;
};

}  // namespace bermex
