#include "bermex/exposure.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "bermex/rng.hpp"

namespace bermex {

void ExposureProfile::append(const ExposureProfile& other) {
    rows.insert(rows.end(), other.rows.begin(), other.rows.end());
}

std::vector<ExposureRow> ExposureProfile::select(const std::string& estimator, const std::string& measure,
                                                 std::optional<double> alpha) const {
    std::vector<ExposureRow> out;
    for (const auto& r : rows) {
        if (r.estimator != estimator) continue;
        if (!measure.empty() && r.measure != measure) continue;
        if (alpha && (!r.alpha || *r.alpha != *alpha)) continue;
        out.push_back(r);
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.date_index < b.date_index; });
    return out;
}

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void ExposureProfile::write_csv(std::ostream& out) const {
    out << "date_index,t,estimator,measure,value,std_err,alpha,M,seed\n";
    for (const auto& r : rows) {
        out << r.date_index << ',' << fmt17(r.t) << ',' << r.estimator << ',' << r.measure << ',' << fmt17(r.value)
            << ',' << (r.std_err ? fmt17(*r.std_err) : "") << ',' << (r.alpha ? fmt17(*r.alpha) : "") << ','
            << r.paths << ',' << r.seed << '\n';
    }
}

ExposureProfile ExposureProfile::read_csv(std::istream& in) {
    ExposureProfile p;
    std::string line;
    if (!std::getline(in, line) || line.rfind("date_index,", 0) != 0)
        throw std::runtime_error("exposure CSV lacks the expected header");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() == 8) f.emplace_back();
        if (f.size() != 9) throw std::runtime_error("malformed exposure CSV line: " + line);
        ExposureRow r;
        r.date_index = std::stoi(f[0]);
        r.t = std::stod(f[1]);
        r.estimator = f[2];
        r.measure = f[3];
        r.value = std::stod(f[4]);
        if (!f[5].empty()) r.std_err = std::stod(f[5]);
        if (!f[6].empty()) r.alpha = std::stod(f[6]);
        r.paths = std::stoull(f[7]);
        r.seed = std::stoull(f[8]);
        p.rows.push_back(r);
    }
    return p;
}

std::size_t pfe_index(double alpha, std::size_t paths) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("PFE level alpha must lie in (0, 1)");
    const double am = alpha * static_cast<double>(paths);
    const auto idx = static_cast<std::size_t>(alpha >= 0.5 ? std::ceil(am) : std::floor(am));
    if (idx == 0)
        throw std::invalid_argument("PFE order statistic index is 0 (alpha " + fmt17(alpha) + ", M " +
                                    std::to_string(paths) + ")");
    return std::min(idx, paths);
}

double order_statistic(std::vector<double>& values, double alpha) {
    const std::size_t k = pfe_index(alpha, values.size()) - 1;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k), values.end());
    return values[k];
}

SwitchedProvider switched_provider(const GbmModel& model, const TimeGrid& grid, std::size_t paths, std::uint64_t seed) {
    return [model, grid, paths, seed](int n) {
        return simulate_switched(model, grid, n, paths, derive_seed(seed, "switched:" + std::to_string(n)));
    };
}

namespace {

struct DateEstimates {
    std::optional<MeanSe> ee_surface;
    MeanSe ee_cashflow;
    std::vector<double> pfe;
};

// All estimators at date n of one path set with global stopping indices `tau`.
DateEstimates estimate_date(const StoppingRule& rule, const ValueFunction* surface, const PathSet& paths,
                            const std::vector<std::uint16_t>& tau, int n, double r, std::span<const double> alphas,
                            bool want_cashflow) {
    const std::size_t m_count = paths.paths();
    const auto& grid = paths.grid();
    DateEstimates out;
    std::vector<Eigen::Index> alive;
    for (std::size_t m = 0; m < m_count; ++m)
        if (tau[m] > n) alive.push_back(static_cast<Eigen::Index>(m));

    if (want_cashflow) {
        std::vector<double> y(m_count, 0.0);
        for (auto m : alive) {
            const auto um = static_cast<std::size_t>(m);
            y[um] = discount(r, grid.date(n), grid.date(tau[um])) * payoff(rule.contract(), paths.state(um, tau[um]));
        }
        out.ee_cashflow = mean_se(y);
    }
    if (surface) {
        std::vector<double> v(m_count, 0.0);
        if (!alive.empty()) {
            const auto x = paths.at_date(n);
            RowMatrix xs(static_cast<Eigen::Index>(alive.size()), x.cols());
            for (std::size_t i = 0; i < alive.size(); ++i) xs.row(static_cast<Eigen::Index>(i)) = x.row(alive[i]);
            const Eigen::VectorXd vals = surface->value(n, xs);
            for (std::size_t i = 0; i < alive.size(); ++i)
                v[static_cast<std::size_t>(alive[i])] = vals[static_cast<Eigen::Index>(i)];
        }
        out.ee_surface = mean_se(v);
        out.ee_surface->std_err = std::hypot(out.ee_surface->std_err, surface->sampling_error(n));
        for (double a : alphas) out.pfe.push_back(order_statistic(v, a));
    }
    return out;
}

void emit(ExposureProfile& p, const PathSet& paths, int n, const std::string& estimator, const std::string& measure,
          double value, std::optional<double> se, std::optional<double> alpha) {
    p.rows.push_back({n, paths.grid().date(n), estimator, measure, value, se, alpha, paths.paths(), paths.seed()});
}

void check_alphas(std::span<const double> alphas, std::size_t paths) {
    for (double a : alphas) pfe_index(a, paths);
}

}  // namespace

ExposureProfile exposure_q(const StoppingRule& rule, const ValueFunction* surface, const PathSet& paths, double r,
                           std::span<const double> alphas) {
    if (paths.measure().kind != MeasureKind::Q) throw std::invalid_argument("Q exposure needs Q paths");
    if (!alphas.empty() && !surface) throw std::invalid_argument("PFE needs a value surface");
    check_alphas(alphas, paths.paths());
    const auto tau = stopping_indices(rule, paths);
    ExposureProfile p;
    for (int n = 0; n <= paths.grid().intervals(); ++n) {
        const auto est = estimate_date(rule, surface, paths, tau, n, r, alphas, true);
        if (est.ee_surface) emit(p, paths, n, "EE1_Q", "Q", est.ee_surface->mean, est.ee_surface->std_err, {});
        emit(p, paths, n, "EE2_Q", "Q", est.ee_cashflow.mean, est.ee_cashflow.std_err, {});
        for (std::size_t i = 0; i < est.pfe.size(); ++i) emit(p, paths, n, "PFE_Q", "Q", est.pfe[i], {}, alphas[i]);
    }
    return p;
}

ExposureProfile exposure_p_switched(const StoppingRule& rule, const ValueFunction* surface,
                                    const SwitchedProvider& provider, double r, std::span<const double> alphas,
                                    const std::string& measure) {
    if (!provider) throw std::invalid_argument("P exposure needs switched path sets");
    if (!alphas.empty() && !surface) throw std::invalid_argument("PFE needs a value surface");
    ExposureProfile p;
    const int last = rule.grid().intervals();
    for (int n = 0; n <= last; ++n) {
        const PathSet paths = provider(n);
        if (paths.measure() != Measure::switched(n) && !(n == 0 && paths.measure().kind == MeasureKind::Q))
            throw std::invalid_argument("switched path set for date " + std::to_string(n) + " has measure " +
                                        paths.measure().label());
        check_alphas(alphas, paths.paths());
        const auto tau = stopping_indices(rule, paths);
        const auto est = estimate_date(rule, surface, paths, tau, n, r, alphas, true);
        if (est.ee_surface) emit(p, paths, n, "EE1_P", measure, est.ee_surface->mean, est.ee_surface->std_err, {});
        emit(p, paths, n, "EE2_P", measure, est.ee_cashflow.mean, est.ee_cashflow.std_err, {});
        for (std::size_t i = 0; i < est.pfe.size(); ++i) emit(p, paths, n, "PFE_P", measure, est.pfe[i], {}, alphas[i]);
    }
    return p;
}

ExposureProfile ee_q_cashflow(const StoppingRule& rule, const PathSet& paths, double r) {
    return exposure_q(rule, nullptr, paths, r);
}

ExposureProfile ee_q_surface(const StoppingRule& rule, const ValueFunction& surface, const PathSet& paths) {
    if (paths.measure().kind != MeasureKind::Q) throw std::invalid_argument("Q exposure needs Q paths");
    const auto tau = stopping_indices(rule, paths);
    ExposureProfile p;
    for (int n = 0; n <= paths.grid().intervals(); ++n) {
        const auto est = estimate_date(rule, &surface, paths, tau, n, 0.0, {}, false);
        emit(p, paths, n, "EE1_Q", "Q", est.ee_surface->mean, est.ee_surface->std_err, {});
    }
    return p;
}

ExposureProfile ee_p_surface(const StoppingRule& rule, const ValueFunction& surface, const SwitchedProvider& provider,
                             const std::string& measure) {
    ExposureProfile all = exposure_p_switched(rule, &surface, provider, 0.0, {}, measure);
    ExposureProfile p;
    for (const auto& row : all.rows)
        if (row.estimator == "EE1_P") p.rows.push_back(row);
    return p;
}

ExposureProfile ee_p_cashflow(const StoppingRule& rule, const SwitchedProvider& provider, double r,
                              const std::string& measure) {
    return exposure_p_switched(rule, nullptr, provider, r, {}, measure);
}

ExposureProfile ee_p_likelihood(const StoppingRule& rule, const PathSet& paths, const GbmModel& model, double r,
                                const std::string& measure) {
    if (paths.measure().kind != MeasureKind::Q) throw std::invalid_argument("EE3_P reweights Q paths");
    const LogLikelihoodRatio lr(model, paths.grid());
    const auto tau = stopping_indices(rule, paths);
    const int last = paths.grid().intervals();
    const std::size_t count = paths.paths();
    const auto& grid = paths.grid();
    // contributions[n][m]
    std::vector<std::vector<double>> contrib(static_cast<std::size_t>(last) + 1, std::vector<double>(count, 0.0));
    for (std::size_t m = 0; m < count; ++m) {
        const int stop = tau[m];
        const double g = payoff(rule.contract(), paths.state(m, stop));
        double log_l = 0.0;
        for (int n = 0; n < stop; ++n) {
            if (n > 0) log_l += lr.step(n - 1, paths.state(m, n - 1), paths.state(m, n));
            contrib[static_cast<std::size_t>(n)][m] = std::exp(log_l) * discount(r, grid.date(n), grid.date(stop)) * g;
        }
    }
    ExposureProfile p;
    for (int n = 0; n <= last; ++n) {
        const auto ms = mean_se(contrib[static_cast<std::size_t>(n)]);
        emit(p, paths, n, "EE3_P", measure, ms.mean, ms.std_err, {});
    }
    return p;
}

ExposureProfile ee_p_likelihood(const StoppingRule&, const PathSet&, const HestonModel&, double, const std::string&) {
    throw std::invalid_argument(
        "EE3_P needs closed-form transition densities, which the Heston model does not provide; "
        "use EE1_P or EE2_P on switched paths instead");
}

ExposureProfile pfe(const StoppingRule& rule, const ValueFunction& surface, const PathSet& paths,
                    std::span<const double> alphas, const std::string& measure) {
    check_alphas(alphas, paths.paths());
    const auto tau = stopping_indices(rule, paths);
    const std::string estimator = paths.measure().kind == MeasureKind::Q ? "PFE_Q" : "PFE_P";
    ExposureProfile p;
    for (int n = 0; n <= paths.grid().intervals(); ++n) {
        const auto est = estimate_date(rule, &surface, paths, tau, n, 0.0, alphas, false);
        for (std::size_t i = 0; i < est.pfe.size(); ++i) emit(p, paths, n, estimator, measure, est.pfe[i], {}, alphas[i]);
    }
    return p;
}

std::vector<MeanSe> likelihood_ratio_means(const GbmModel& model, const PathSet& paths) {
    const LogLikelihoodRatio lr(model, paths.grid());
    const int dates = paths.dates();
    std::vector<std::vector<double>> w(static_cast<std::size_t>(dates), std::vector<double>(paths.paths()));
    for (std::size_t m = 0; m < paths.paths(); ++m) {
        const auto cum = lr.cumulative(paths.path(m));
        for (int n = 0; n < dates; ++n) w[static_cast<std::size_t>(n)][m] = std::exp(cum[static_cast<std::size_t>(n)]);
    }
    std::vector<MeanSe> out;
    for (const auto& col : w) out.push_back(mean_se(col));
    return out;
}

}  // namespace bermex
