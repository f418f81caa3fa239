#include "bermex/mc_engine.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "bermex/errors.hpp"
#include "bermex/rng.hpp"

namespace bermex {

// ---------------------------------------------------------------------------
// TimeGrid

TimeGrid::TimeGrid(std::vector<double> exercise_dates, int substeps_per_interval)
    : dates_(std::move(exercise_dates)), substeps_(substeps_per_interval) {
    if (dates_.size() < 2) throw std::invalid_argument("time grid needs at least two dates (N >= 1)");
    if (substeps_ < 1) throw std::invalid_argument("substeps_per_interval must be >= 1");
    for (std::size_t i = 1; i < dates_.size(); ++i) {
        if (!(dates_[i] > dates_[i - 1])) throw std::invalid_argument("exercise dates must be strictly increasing");
    }
    for (double t : dates_) {
        if (!std::isfinite(t)) throw std::invalid_argument("exercise dates must be finite");
    }
}

TimeGrid TimeGrid::uniform(double maturity, int intervals, int substeps_per_interval, double t0) {
    if (intervals < 1) throw std::invalid_argument("number of intervals must be >= 1");
    std::vector<double> dates(static_cast<std::size_t>(intervals) + 1);
    for (int n = 0; n <= intervals; ++n) dates[static_cast<std::size_t>(n)] = t0 + (maturity - t0) * n / intervals;
    dates.back() = maturity;
    return TimeGrid(std::move(dates), substeps_per_interval);
}

int TimeGrid::index_of(double t) const {
    for (std::size_t i = 0; i < dates_.size(); ++i) {
        if (std::abs(dates_[i] - t) <= 1e-12 * std::max(1.0, std::abs(t))) return static_cast<int>(i);
    }
    throw std::invalid_argument("date " + std::to_string(t) + " is not an exercise date");
}

// ---------------------------------------------------------------------------
// Models

void GbmModel::validate() const {
    const auto d = s0.size();
    if (d < 1) throw std::invalid_argument("GBM model needs at least one asset");
    if (q.size() != d || sigma.size() != d) throw std::invalid_argument("q and sigma must have one entry per asset");
    if (rho.rows() != d || rho.cols() != d) throw std::invalid_argument("rho must be d x d");
    if (mu_p && mu_p->size() != d) throw std::invalid_argument("mu_p must have one entry per asset");
    for (Eigen::Index i = 0; i < d; ++i) {
        if (!(s0[i] > 0.0)) throw std::invalid_argument("initial prices must be positive");
        if (!(sigma[i] >= 0.0)) throw std::invalid_argument("volatilities must be non-negative");
        if (!std::isfinite(q[i])) throw std::invalid_argument("dividend yields must be finite");
        if (std::abs(rho(i, i) - 1.0) > 1e-12) throw std::invalid_argument("rho must have a unit diagonal");
        for (Eigen::Index j = 0; j < d; ++j) {
            if (std::abs(rho(i, j) - rho(j, i)) > 1e-12) throw std::invalid_argument("rho must be symmetric");
            if (std::abs(rho(i, j)) > 1.0) throw std::invalid_argument("correlations must lie in [-1, 1]");
        }
    }
    if (!std::isfinite(r)) throw std::invalid_argument("risk-free rate must be finite");
}

GbmModel GbmModel::symmetric(int d, double s0, double r, double q, double sigma, double rho) {
    GbmModel m;
    m.s0 = Eigen::VectorXd::Constant(d, s0);
    m.r = r;
    m.q = Eigen::VectorXd::Constant(d, q);
    m.sigma = Eigen::VectorXd::Constant(d, sigma);
    m.rho = Eigen::MatrixXd::Constant(d, d, rho);
    m.rho.diagonal().setOnes();
    return m;
}

void HestonModel::validate() const {
    if (!(s0 > 0.0) || !(nu0 > 0.0)) throw std::invalid_argument("Heston s0 and nu0 must be positive");
    if (!(kappa > 0.0) || !(theta > 0.0) || !(xi > 0.0))
        throw std::invalid_argument("Heston kappa, theta and xi must be positive");
    if (!(std::abs(rho) < 1.0)) throw std::invalid_argument("Heston correlation must lie in (-1, 1)");
    if (!std::isfinite(r) || !std::isfinite(q)) throw std::invalid_argument("Heston rates must be finite");
}

// ---------------------------------------------------------------------------
// Measure / PathSet

std::uint8_t Measure::tag() const {
    switch (kind) {
        case MeasureKind::Q: return 0;
        case MeasureKind::P: return 1;
        case MeasureKind::Switched:
            if (switch_index < 0 || switch_index > 253) throw std::invalid_argument("switch index out of range");
            return static_cast<std::uint8_t>(2 + switch_index);
    }
    return 0;
}

Measure Measure::from_tag(std::uint8_t tag) {
    if (tag == 0) return q();
    if (tag == 1) return p();
    return switched(tag - 2);
}

std::string Measure::label() const {
    switch (kind) {
        case MeasureKind::Q: return "Q";
        case MeasureKind::P: return "P";
        case MeasureKind::Switched: return "switched(" + std::to_string(switch_index) + ")";
    }
    return "?";
}

PathSet::PathSet(std::size_t paths, TimeGrid grid, int dim, Measure measure, std::uint64_t seed,
                 std::vector<double> states)
    : paths_(paths), grid_(std::move(grid)), dim_(dim), measure_(measure), seed_(seed), states_(std::move(states)) {
    if (paths_ < 1) throw std::invalid_argument("a path set needs at least one path");
    if (dim_ < 1) throw std::invalid_argument("state dimension must be >= 1");
    if (states_.size() != paths_ * static_cast<std::size_t>(dates()) * static_cast<std::size_t>(dim_))
        throw std::invalid_argument("state buffer size does not match M x (N+1) x d");
    for (double x : states_) {
        if (!std::isfinite(x)) throw NumericError("path set contains non-finite states");
    }
}

Eigen::Map<const RowMatrix, 0, Eigen::OuterStride<>> PathSet::at_date(int date) const {
    if (date < 0 || date >= dates()) throw std::out_of_range("date index out of range");
    return {states_.data() + static_cast<std::size_t>(date) * dim_, static_cast<Eigen::Index>(paths_), dim_,
            Eigen::OuterStride<>(static_cast<Eigen::Index>(dates()) * dim_)};
}

// ---------------------------------------------------------------------------
// Correlation

Eigen::MatrixXd correlation_factor(const Eigen::MatrixXd& rho) {
    Eigen::LLT<Eigen::MatrixXd> llt(rho);
    if (llt.info() == Eigen::Success) return llt.matrixL();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(rho);
    const Eigen::VectorXd lambda = eig.eigenvalues();
    if (lambda.minCoeff() < -1e-12) {
        Eigen::Index order = rho.rows();
        for (Eigen::Index k = 1; k <= rho.rows(); ++k) {
            const Eigen::MatrixXd minor = rho.topLeftCorner(k, k);
            if (minor.determinant() <= 0.0) {
                order = k;
                break;
            }
        }
        throw NumericError("correlation matrix is not positive semi-definite: leading minor of order " +
                           std::to_string(order) + " is not positive (smallest eigenvalue " +
                           std::to_string(lambda.minCoeff()) + ")");
    }
    return eig.eigenvectors() * lambda.cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

// ---------------------------------------------------------------------------
// GBM

namespace {

PathSet simulate_gbm_impl(const GbmModel& model, const TimeGrid& grid, std::size_t paths, Measure measure,
                          std::uint64_t seed) {
    model.validate();
    const bool needs_p = measure.kind != MeasureKind::Q;
    if (needs_p && !model.mu_p) throw std::invalid_argument("real-world simulation needs mu_p");
    if (paths < 1) throw std::invalid_argument("number of paths must be >= 1");

    const int d = model.dim();
    const int dates = grid.intervals() + 1;
    const Eigen::MatrixXd factor = correlation_factor(model.rho);
    const Eigen::ArrayXd half_var = 0.5 * model.sigma.array().square();
    const Eigen::ArrayXd drift_q = model.r - model.q.array() - half_var;
    const Eigen::ArrayXd drift_p = needs_p ? Eigen::ArrayXd(model.mu_p->array() - model.q.array() - half_var)
                                           : drift_q;
    const Eigen::ArrayXd log_s0 = model.s0.array().log();

    std::vector<double> states(paths * static_cast<std::size_t>(dates) * d);
    const auto count = static_cast<std::int64_t>(paths);

#pragma omp parallel for schedule(static)
    for (std::int64_t m = 0; m < count; ++m) {
        PathRng rng(seed, static_cast<std::uint64_t>(m));
        Eigen::ArrayXd log_s = log_s0;
        Eigen::VectorXd eps(d);
        double* out = states.data() + static_cast<std::size_t>(m) * dates * d;
        for (int i = 0; i < d; ++i) out[i] = model.s0[i];
        for (int n = 0; n < dates - 1; ++n) {
            const double dt = grid.date(n + 1) - grid.date(n);
            bool real_world = measure.kind == MeasureKind::P ||
                              (measure.kind == MeasureKind::Switched && n < measure.switch_index);
            const Eigen::ArrayXd& drift = real_world ? drift_p : drift_q;
            for (int i = 0; i < d; ++i) eps[i] = rng.normal();
            const Eigen::ArrayXd z = (factor * eps).array();
            log_s += drift * dt + model.sigma.array() * std::sqrt(dt) * z;
            for (int i = 0; i < d; ++i) out[(n + 1) * d + i] = std::exp(log_s[i]);
        }
    }
    return PathSet(paths, grid, d, measure, seed, std::move(states));
}

}  // namespace

PathSet simulate_gbm(const GbmModel& model, const TimeGrid& grid, std::size_t paths, Measure measure,
                     std::uint64_t seed) {
    if (measure.kind == MeasureKind::Switched) return simulate_switched(model, grid, measure.switch_index, paths, seed);
    return simulate_gbm_impl(model, grid, paths, measure, seed);
}

PathSet simulate_switched(const GbmModel& model, const TimeGrid& grid, int switch_index, std::size_t paths,
                          std::uint64_t seed) {
    if (switch_index < 0 || switch_index > grid.intervals())
        throw std::invalid_argument("switch date is not an exercise date");
    return simulate_gbm_impl(model, grid, paths, Measure::switched(switch_index), seed);
}

PathSet simulate_switched(const GbmModel& model, const TimeGrid& grid, double switch_date, std::size_t paths,
                          std::uint64_t seed) {
    return simulate_switched(model, grid, grid.index_of(switch_date), paths, seed);
}

// ---------------------------------------------------------------------------
// Heston (Andersen's QE scheme, central discretization of the integrated variance)

PathSet simulate_heston(const HestonModel& model, const TimeGrid& grid, std::size_t paths, std::uint64_t seed,
                        const QeOptions& options) {
    model.validate();
    if (paths < 1) throw std::invalid_argument("number of paths must be >= 1");
    const int dates = grid.intervals() + 1;
    const int sub = grid.substeps();
    const double kappa = model.kappa, theta = model.theta, xi = model.xi, rho = model.rho;
    const double psi_c = options.psi_threshold;

    std::vector<double> states(paths * static_cast<std::size_t>(dates) * 2);
    const auto count = static_cast<std::int64_t>(paths);

#pragma omp parallel for schedule(static)
    for (std::int64_t m = 0; m < count; ++m) {
        PathRng rng(seed, static_cast<std::uint64_t>(m));
        double v = model.nu0;
        double log_s = std::log(model.s0);
        double* out = states.data() + static_cast<std::size_t>(m) * dates * 2;
        out[0] = v;
        out[1] = model.s0;
        for (int n = 0; n < dates - 1; ++n) {
            const double h = (grid.date(n + 1) - grid.date(n)) / sub;
            const double ekh = std::exp(-kappa * h);
            const double k0 = -rho * kappa * theta * h / xi;
            const double k1 = 0.5 * h * (kappa * rho / xi - 0.5) - rho / xi;
            const double k2 = 0.5 * h * (kappa * rho / xi - 0.5) + rho / xi;
            const double k3 = 0.5 * h * (1.0 - rho * rho);
            const double k4 = k3;
            for (int s = 0; s < sub; ++s) {
                const double mean = theta + (v - theta) * ekh;
                const double var = v * xi * xi * ekh / kappa * (1.0 - ekh) +
                                   theta * xi * xi / (2.0 * kappa) * (1.0 - ekh) * (1.0 - ekh);
                const double psi = var / (mean * mean);
                double v_next;
                double drift_k0 = k0;
                const double a_corr = k2 + 0.5 * k4;
                if (psi <= psi_c) {
                    const double inv = 2.0 / psi;
                    const double b2 = inv - 1.0 + std::sqrt(inv) * std::sqrt(inv - 1.0);
                    const double a = mean / (1.0 + b2);
                    const double b = std::sqrt(b2);
                    const double zv = rng.normal();
                    v_next = a * (b + zv) * (b + zv);
                    if (options.martingale_correction && a_corr < 1.0 / (2.0 * a)) {
                        drift_k0 = -a_corr * b2 * a / (1.0 - 2.0 * a_corr * a) + 0.5 * std::log(1.0 - 2.0 * a_corr * a) -
                                   (k1 + 0.5 * k3) * v;
                    }
                } else {
                    const double p = (psi - 1.0) / (psi + 1.0);
                    const double beta = (1.0 - p) / mean;
                    const double u = rng.uniform();
                    v_next = u <= p ? 0.0 : std::log((1.0 - p) / (1.0 - u)) / beta;
                    if (options.martingale_correction && a_corr < beta) {
                        drift_k0 = -std::log(p + beta * (1.0 - p) / (beta - a_corr)) - (k1 + 0.5 * k3) * v;
                    }
                }
                const double zs = rng.normal();
                log_s += (model.r - model.q) * h + drift_k0 + k1 * v + k2 * v_next +
                         std::sqrt(std::max(0.0, k3 * v + k4 * v_next)) * zs;
                v = v_next;
            }
            out[(n + 1) * 2] = v;
            out[(n + 1) * 2 + 1] = std::exp(log_s);
        }
    }
    return PathSet(paths, grid, 2, Measure::q(), seed, std::move(states));
}

// ---------------------------------------------------------------------------
// Densities and likelihood ratios

namespace {

Eigen::MatrixXd covariance_rate(const GbmModel& model) {
    return model.sigma.asDiagonal() * model.rho * model.sigma.asDiagonal();
}

void require_positive(std::span<const double> x, const char* what) {
    for (double v : x) {
        if (!(v > 0.0)) throw std::invalid_argument(std::string(what) + " must be strictly positive");
    }
}

}  // namespace

double gbm_log_transition_density(const GbmModel& model, MeasureKind measure, double t_from, double t_to,
                                  std::span<const double> x_from, std::span<const double> x_to) {
    model.validate();
    const int d = model.dim();
    if (static_cast<int>(x_from.size()) != d || static_cast<int>(x_to.size()) != d)
        throw std::invalid_argument("state dimension does not match the model");
    if (!(t_to > t_from)) throw std::invalid_argument("transition density needs t_to > t_from");
    require_positive(x_from, "x_from");
    require_positive(x_to, "x_to");
    if (measure != MeasureKind::Q && !model.mu_p) throw std::invalid_argument("real-world density needs mu_p");
    if (measure == MeasureKind::Switched) throw std::invalid_argument("transition density needs measure Q or P");

    const double dt = t_to - t_from;
    const Eigen::VectorXd a = measure == MeasureKind::P ? *model.mu_p : Eigen::VectorXd::Constant(d, model.r);
    const Eigen::VectorXd drift = (a - model.q - 0.5 * model.sigma.cwiseAbs2()) * dt;

    Eigen::VectorXd y(d);
    double log_jacobian = 0.0;
    for (int i = 0; i < d; ++i) {
        y[i] = std::log(x_to[static_cast<std::size_t>(i)]) - std::log(x_from[static_cast<std::size_t>(i)]) - drift[i];
        log_jacobian += std::log(x_to[static_cast<std::size_t>(i)]);
    }
    const Eigen::MatrixXd cov = covariance_rate(model) * dt;
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) throw NumericError("transition covariance is singular");
    const Eigen::VectorXd w = llt.matrixL().solve(y);
    double log_det = 0.0;
    for (int i = 0; i < d; ++i) log_det += 2.0 * std::log(llt.matrixL()(i, i));
    return -0.5 * (d * std::log(2.0 * std::numbers::pi) + log_det + w.squaredNorm()) - log_jacobian;
}

double gbm_transition_density(const GbmModel& model, MeasureKind measure, double t_from, double t_to,
                              std::span<const double> x_from, std::span<const double> x_to) {
    return std::exp(gbm_log_transition_density(model, measure, t_from, t_to, x_from, x_to));
}

LogLikelihoodRatio::LogLikelihoodRatio(const GbmModel& model, const TimeGrid& grid)
    : dates_(grid.dates()), dim_(model.dim()) {
    model.validate();
    if (!model.mu_p) throw std::invalid_argument("likelihood ratio needs mu_p");
    const Eigen::VectorXd half_var = 0.5 * model.sigma.cwiseAbs2();
    drift_q_ = Eigen::VectorXd::Constant(dim_, model.r) - model.q - half_var;
    drift_p_ = *model.mu_p - model.q - half_var;
    const Eigen::MatrixXd cov = covariance_rate(model);
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) throw NumericError("likelihood ratio needs a non-singular covariance");
    precision_ = llt.solve(Eigen::MatrixXd::Identity(dim_, dim_));
}

double LogLikelihoodRatio::step(int n, std::span<const double> x_from, std::span<const double> x_to) const {
    const double dt = dates_[static_cast<std::size_t>(n) + 1] - dates_[static_cast<std::size_t>(n)];
    Eigen::VectorXd a(dim_), b(dim_);
    for (int i = 0; i < dim_; ++i) {
        const double xf = x_from[static_cast<std::size_t>(i)], xt = x_to[static_cast<std::size_t>(i)];
        if (!(xf > 0.0) || !(xt > 0.0)) throw std::invalid_argument("likelihood ratio needs positive states");
        const double z = std::log(xt / xf);
        a[i] = z - drift_p_[i] * dt;
        b[i] = z - drift_q_[i] * dt;
    }
    return -(a.dot(precision_ * a) - b.dot(precision_ * b)) / (2.0 * dt);
}

std::vector<double> LogLikelihoodRatio::cumulative(std::span<const double> path) const {
    const std::size_t d = static_cast<std::size_t>(dim_);
    const std::size_t count = path.size() / d;
    std::vector<double> out(count, 0.0);
    for (std::size_t n = 1; n < count; ++n) {
        out[n] = out[n - 1] + step(static_cast<int>(n - 1), path.subspan((n - 1) * d, d), path.subspan(n * d, d));
    }
    return out;
}

double likelihood_ratio(const GbmModel& model, const TimeGrid& grid, std::span<const double> path) {
    const auto d = static_cast<std::size_t>(model.dim());
    if (path.size() % d != 0 || path.empty()) throw std::invalid_argument("path length is not a multiple of d");
    const std::size_t count = path.size() / d;
    if (count > grid.dates().size()) throw std::invalid_argument("path is longer than the time grid");
    if (count == 1) return 1.0;
    LogLikelihoodRatio lr(model, grid);
    const auto cum = lr.cumulative(path);
    const double ratio = std::exp(cum.back());
    if (!(ratio > 0.0)) throw NumericError("likelihood ratio underflowed to zero");
    return ratio;
}

}  // namespace bermex
