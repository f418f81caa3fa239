#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bermex/dos.hpp"
#include "bermex/mc_engine.hpp"
#include "bermex/regression.hpp"
#include "bermex/stats.hpp"

namespace bermex {

/// One estimate at one exercise date. `alpha` is set for PFE rows only, `std_err` for EE rows only.
struct ExposureRow {
    int date_index = 0;
    double t = 0.0;
    std::string estimator;  ///< EE1_Q, EE2_Q, EE1_P, EE2_P, EE3_P, PFE_Q, PFE_P
    std::string measure;    ///< "Q" or a real-world label such as "P"
    double value = 0.0;
    std::optional<double> std_err;
    std::optional<double> alpha;
    std::size_t paths = 0;
    std::uint64_t seed = 0;
};

struct ExposureProfile {
    std::vector<ExposureRow> rows;

    void append(const ExposureProfile& other);
    /// Rows of one estimator (and measure / alpha when given), ordered by date.
    std::vector<ExposureRow> select(const std::string& estimator, const std::string& measure = "",
                                    std::optional<double> alpha = std::nullopt) const;

    /// Columns date_index,t,estimator,measure,value,std_err,alpha,M,seed with 17 significant digits.
    void write_csv(std::ostream& out) const;
    static ExposureProfile read_csv(std::istream& in);
};

/// 1-based order-statistic index: ceil(alpha M) for alpha >= 0.5, floor(alpha M) below.
/// Throws std::invalid_argument when alpha is outside (0, 1) or the index is 0.
std::size_t pfe_index(double alpha, std::size_t paths);
/// The pfe_index(alpha, n)-th smallest of `values` (partially reorders them).
double order_statistic(std::vector<double>& values, double alpha);

/// Switched path set for a date index (real-world drift up to and including that date).
using SwitchedProvider = std::function<PathSet(int date_index)>;

/// Provider that simulates each switched set on demand with seed derive_seed(seed, "switched:<n>").
SwitchedProvider switched_provider(const GbmModel& model, const TimeGrid& grid, std::size_t paths, std::uint64_t seed);

/// EE1_Q (when `surface` is given), EE2_Q and PFE_Q at every alpha from one pass over Q paths.
ExposureProfile exposure_q(const StoppingRule& rule, const ValueFunction* surface, const PathSet& paths, double r,
                           std::span<const double> alphas = {});

/// EE1_P (with `surface`), EE2_P and PFE_P at every alpha; date n uses provider(n).
ExposureProfile exposure_p_switched(const StoppingRule& rule, const ValueFunction* surface,
                                    const SwitchedProvider& provider, double r, std::span<const double> alphas = {},
                                    const std::string& measure = "P");

/// EE^2_Q: mean of e^{-r(tau_n - t_n)} g(x_{tau_n}) 1{tau > t_n}.
ExposureProfile ee_q_cashflow(const StoppingRule& rule, const PathSet& paths, double r);
/// EE^1_Q: mean of v(t_n, x_{t_n}) 1{tau > t_n}.
ExposureProfile ee_q_surface(const StoppingRule& rule, const ValueFunction& surface, const PathSet& paths);
/// EE^1_P on switched paths.
ExposureProfile ee_p_surface(const StoppingRule& rule, const ValueFunction& surface, const SwitchedProvider& provider,
                             const std::string& measure = "P");
/// EE^2_P on switched paths.
ExposureProfile ee_p_cashflow(const StoppingRule& rule, const SwitchedProvider& provider, double r,
                              const std::string& measure = "P");
/// EE^3_P: Q paths, cashflow exposure weighted by the likelihood ratio of the states up to t_n.
ExposureProfile ee_p_likelihood(const StoppingRule& rule, const PathSet& paths, const GbmModel& model, double r,
                                const std::string& measure = "P");
/// Always rejected: the Heston model has no closed-form transition density here.
ExposureProfile ee_p_likelihood(const StoppingRule& rule, const PathSet& paths, const HestonModel& model, double r,
                                const std::string& measure = "P");
/// PFE_Q (Q paths) or PFE_P (any other measure tag) of v(t_n, x) 1{tau > t_n}.
ExposureProfile pfe(const StoppingRule& rule, const ValueFunction& surface, const PathSet& paths,
                    std::span<const double> alphas, const std::string& measure = "Q");

/// Sample mean and standard error of the likelihood ratio at every date of Q paths.
std::vector<MeanSe> likelihood_ratio_means(const GbmModel& model, const PathSet& paths);

}  // namespace bermex
