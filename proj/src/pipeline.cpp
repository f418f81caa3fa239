#include "bermex/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "json.hpp"

#include "bermex/errors.hpp"
#include "bermex/rng.hpp"

namespace bermex {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

bool wants(const ExperimentConfig& c, const std::string& estimator) {
    for (const auto& e : c.estimators)
        if (e == estimator) return true;
    return false;
}

ExposureProfile keep_requested(const ExperimentConfig& c, const ExposureProfile& in) {
    ExposureProfile out;
    for (const auto& row : in.rows)
        if (wants(c, row.estimator)) out.rows.push_back(row);
    return out;
}

void stamp_seed(ExposureProfile& p, std::uint64_t seed) {
    for (auto& row : p.rows) row.seed = seed;
}

std::vector<ExerciseFractionRow> fractions(const std::string& method, const std::string& measure,
                                           const StoppingRule& rule, const PathSet& paths) {
    const auto f = exercise_fraction(rule, paths);
    std::vector<ExerciseFractionRow> rows;
    for (int n = 0; n < static_cast<int>(f.size()); ++n)
        rows.push_back({method, measure, n, paths.grid().date(n), f[static_cast<std::size_t>(n)]});
    return rows;
}

GbmModel real_world_model(const ExperimentConfig& c, const RealWorldDrift& rw) {
    GbmModel m = c.gbm;
    m.mu_p = rw.mu;
    return m;
}

class Stage {
public:
    Stage(RunReport& report, std::string name) : report_(report), name_(std::move(name)), start_(clock::now()) {
        report_.failed_stage = name_;
    }
    ~Stage() {
        const double s = std::chrono::duration<double>(clock::now() - start_).count();
        report_.timings.push_back({name_, s});
    }
    void done() { report_.failed_stage.clear(); }

private:
    using clock = std::chrono::steady_clock;
    RunReport& report_;
    std::string name_;
    clock::time_point start_;
};

nlohmann::json report_json(const RunReport& r) {
    nlohmann::json j;
    j["name"] = r.name;
    j["status"] = r.failed_stage.empty() ? "ok" : "failed";
    if (!r.failed_stage.empty()) j["failure"] = {{"stage", r.failed_stage}, {"message", r.failure}};
    nlohmann::json prices = nlohmann::json::array();
    for (const auto& p : r.prices)
        prices.push_back({{"method", p.method}, {"estimate", p.estimate}, {"value", p.value}, {"std_err", p.std_err},
                          {"M", p.paths}, {"seed", p.seed}});
    j["prices"] = prices;
    nlohmann::json timings = nlohmann::json::array();
    for (const auto& t : r.timings) timings.push_back({{"stage", t.stage}, {"seconds", t.seconds}});
    j["timings"] = timings;
    j["warnings"] = r.warnings;
    j["config"] = r.config_text;
    return j;
}

void write_text(const std::filesystem::path& file, const std::string& text) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    out << text;
}

template <typename F>
void write_with(const std::filesystem::path& file, F&& body) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    body(out);
}

void write_artifacts(const RunReport& r, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_with(dir / "price_report.csv", [&](std::ostream& o) { write_price_report(r.prices, o); });
    if (!r.exercise_fractions.empty())
        write_with(dir / "exercise_fraction.csv", [&](std::ostream& o) { write_exercise_fractions(r.exercise_fractions, o); });
    if (!r.exposure.rows.empty()) write_with(dir / "exposure_profile.csv", [&](std::ostream& o) { r.exposure.write_csv(o); });
    if (!r.exposure_lsm.rows.empty())
        write_with(dir / "exposure_profile_lsm.csv", [&](std::ostream& o) { r.exposure_lsm.write_csv(o); });
    if (!r.exposure_sgbm.rows.empty())
        write_with(dir / "exposure_profile_sgbm.csv", [&](std::ostream& o) { r.exposure_sgbm.write_csv(o); });
    write_text(dir / "config.ini", r.config_text);
    write_text(dir / "run_report.json", report_json(r).dump(2) + "\n");
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

}  // namespace

StageSeeds StageSeeds::derive(std::uint64_t master) {
    StageSeeds s;
    s.train_paths = derive_seed(master, "train_paths");
    s.valuation_paths = derive_seed(master, "val_paths");
    s.regression_paths = derive_seed(master, "reg_paths");
    s.exposure_paths = derive_seed(master, "exposure_paths");
    s.real_world_paths = derive_seed(master, "real_world_paths");
    s.decision_nets = derive_seed(master, "decision_nets");
    s.value_nets = derive_seed(master, "value_nets");
    return s;
}

std::uint64_t StageSeeds::switched(const std::string& label) const { return derive_seed(exposure_paths, label); }

PathSet simulate_q(const ExperimentConfig& c, std::size_t paths, std::uint64_t seed) {
    if (c.model == ModelKind::Gbm) return simulate_gbm(c.gbm, c.grid(), paths, Measure::q(), seed);
    return simulate_heston(c.heston, c.grid(), paths, seed, c.qe);
}

RunReport run_pipeline(const ExperimentConfig& config, const RunOptions& options) {
    config.validate();
    const ExperimentConfig& c = config;
    const StageSeeds seeds = StageSeeds::derive(c.seed);
    const double r = c.model == ModelKind::Gbm ? c.gbm.r : c.heston.r;
    const auto dir = options.output_dir.empty() ? std::filesystem::path(c.output_dir) : options.output_dir;
    const TimeGrid grid = c.grid();
    const int N = grid.intervals();

    RunReport report;
    report.name = c.name;
    report.config_text = serialize_config(c);

    std::shared_ptr<DecisionPolicy> policy;
    std::unique_ptr<BaselineModel> lsm, sgbm;
    std::unique_ptr<ValueSurface> surface;
    std::unique_ptr<PathSet> train;

    try {
        {
            Stage s(report, "simulate_train");
            train = std::make_unique<PathSet>(simulate_q(c, c.train_paths, seeds.train_paths));
            s.done();
        }
        {
            Stage s(report, "train_policy");
            TrainConfig tc = c.training;
            tc.seed = seeds.decision_nets;
            policy = std::make_shared<DecisionPolicy>(train_policy(*train, c.contract, r, tc));
            for (int n = 1; n < N; ++n)
                if (policy->training[static_cast<std::size_t>(n)].degenerate)
                    report.warnings.push_back("decision date " + std::to_string(n) +
                                              ": empty training subset, never exercise there");
            if (options.write_artifacts) policy->save(dir / "policy");
            s.done();
        }
        if (c.lsm || c.sgbm) {
            Stage s(report, "baselines");
            if (c.lsm) {
                const BasisSet basis = BasisSet::make(c.lsm_basis, c.contract);
                lsm = std::make_unique<BaselineModel>(lsm_fit(*train, c.contract, basis, true, r));
                report.prices.push_back({"lsm", "in_sample", lsm->price.mean, lsm->price.std_err, c.train_paths, seeds.train_paths});
                for (const auto& w : lsm->warnings) report.warnings.push_back("lsm: " + w);
            }
            if (c.sgbm) {
                const BasisSet basis = BasisSet::make(c.sgbm_basis, c.contract);
                sgbm = std::make_unique<BaselineModel>(sgbm_fit(*train, c.contract, basis, c.sgbm_bundles, r));
                report.prices.push_back({"sgbm", "in_sample", sgbm->price.mean, sgbm->price.std_err, c.train_paths, seeds.train_paths});
                for (const auto& w : sgbm->warnings) report.warnings.push_back("sgbm: " + w);
            }
            s.done();
        }
        {
            Stage s(report, "price");
            const PathSet val = simulate_q(c, c.valuation_paths, seeds.valuation_paths);
            auto add = [&](const std::string& method, const StoppingRule& rule) {
                const MeanSe p = price_lower_bound(rule, val, r);
                report.prices.push_back({method, "lower_bound", p.mean, p.std_err, c.valuation_paths, seeds.valuation_paths});
                const auto rows = fractions(method, "Q", rule, val);
                report.exercise_fractions.insert(report.exercise_fractions.end(), rows.begin(), rows.end());
            };
            add("dos", *policy);
            if (lsm) add("lsm", *lsm);
            if (sgbm) add("sgbm", *sgbm);
            s.done();
        }
        if (c.regression_enabled && options.exposure && c.exposure_enabled) {
            Stage s(report, "regression");
            const PathSet reg = simulate_q(c, c.regression_paths, seeds.regression_paths);
            RegressionConfig rc = c.regression;
            rc.seed = seeds.value_nets;
            surface = std::make_unique<ValueSurface>(fit_surface(policy, reg, r, rc));
            for (const auto& w : surface->warnings) report.warnings.push_back("surface: " + w);
            if (options.write_artifacts) surface->save(dir / "surface");
            s.done();
        }
        if (options.exposure && c.exposure_enabled) {
            Stage s(report, "exposure");
            const std::vector<double>& alphas = c.alphas;
            const PathSet q = simulate_q(c, c.exposure_paths, seeds.exposure_paths);
            ExposureProfile prof = keep_requested(c, exposure_q(*policy, surface.get(), q, r, alphas));
            stamp_seed(prof, seeds.exposure_paths);
            report.exposure.append(prof);

            if (lsm) {
                // exposure mode: all-sample regression
                auto all = std::make_unique<BaselineModel>(
                    lsm_fit(*train, c.contract, BasisSet::make(c.lsm_basis, c.contract), false, r));
                ExposureProfile lp = keep_requested(c, exposure_q(*all, all.get(), q, r, alphas));
                stamp_seed(lp, seeds.exposure_paths);
                report.exposure_lsm.append(lp);
            }
            if (sgbm) {
                ExposureProfile sp = keep_requested(c, exposure_q(*sgbm, sgbm.get(), q, r, alphas));
                stamp_seed(sp, seeds.exposure_paths);
                report.exposure_sgbm.append(sp);
            }

            const bool any_switched = wants(c, "EE1_P") || wants(c, "EE2_P") || wants(c, "PFE_P");
            for (const auto& rw : c.real_world) {
                const GbmModel pm = real_world_model(c, rw);
                const std::uint64_t sw_seed = seeds.switched(rw.label);
                if (any_switched) {
                    const auto provider = switched_provider(pm, grid, c.exposure_paths, sw_seed);
                    ExposureProfile pp =
                        keep_requested(c, exposure_p_switched(*policy, surface.get(), provider, r, alphas, rw.label));
                    stamp_seed(pp, sw_seed);
                    report.exposure.append(pp);
                }
                if (wants(c, "EE3_P")) {
                    ExposureProfile lp = ee_p_likelihood(*policy, q, pm, r, rw.label);
                    stamp_seed(lp, seeds.exposure_paths);
                    report.exposure.append(lp);
                }
                const std::uint64_t p_seed = derive_seed(seeds.real_world_paths, rw.label);
                const PathSet p_paths = simulate_gbm(pm, grid, c.exposure_paths, Measure::p(), p_seed);
                const auto rows = fractions("dos", rw.label, *policy, p_paths);
                report.exercise_fractions.insert(report.exercise_fractions.end(), rows.begin(), rows.end());
            }
            s.done();
        }
        if (c.boundary.enabled) {
            Stage s(report, "boundary");
            BoundaryGrid bg{c.boundary.date_index, c.boundary.lo, c.boundary.hi, c.boundary.points};
            std::vector<NamedRule> rules{{"dos", policy.get()}};
            if (lsm) rules.push_back({"lsm", lsm.get()});
            if (sgbm) rules.push_back({"sgbm", sgbm.get()});
            std::ostringstream out;
            const auto disagreement = write_boundary_grid(rules, bg, out);
            for (std::size_t i = 0; i < disagreement.size(); ++i)
                report.warnings.push_back("boundary: " + rules[i + 1].method + " disagrees with dos on " +
                                          fmt(disagreement[i]) + " of the grid points");
            if (options.write_artifacts) {
                std::filesystem::create_directories(dir);
                write_text(dir / "boundary_grid.csv", out.str());
            }
            s.done();
        }
    } catch (const std::exception& e) {
        report.failure = e.what();
        if (options.write_artifacts) {
            try {
                write_artifacts(report, dir);
            } catch (const std::exception&) {
            }
        }
        throw;
    }
    if (options.write_artifacts) write_artifacts(report, dir);
    return report;
}

void write_price_report(const std::vector<PriceRow>& rows, std::ostream& out) {
    out << "method,estimate,value,std_err,M,seed\n";
    for (const auto& p : rows)
        out << p.method << ',' << p.estimate << ',' << fmt(p.value) << ',' << fmt(p.std_err) << ',' << p.paths << ','
            << p.seed << '\n';
}

std::vector<PriceRow> read_price_report(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "method,estimate,value,std_err,M,seed")
        throw std::invalid_argument("not a price report");
    std::vector<PriceRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 6) throw std::invalid_argument("malformed price report line: " + line);
        rows.push_back({f[0], f[1], std::stod(f[2]), std::stod(f[3]), std::stoull(f[4]), std::stoull(f[5])});
    }
    return rows;
}

void write_exercise_fractions(const std::vector<ExerciseFractionRow>& rows, std::ostream& out) {
    out << "method,measure,date_index,t,fraction\n";
    for (const auto& f : rows)
        out << f.method << ',' << f.measure << ',' << f.date_index << ',' << fmt(f.t) << ',' << fmt(f.fraction) << '\n';
}

BoundaryGrid BoundaryGrid::parse(const std::string& spec, int date_index) {
    BoundaryGrid g;
    g.date_index = date_index;
    for (const auto& comp : split(spec, ',')) {
        const auto f = split(comp, ':');
        if (f.size() != 3) throw std::invalid_argument("grid component '" + comp + "' is not lo:hi:points");
        try {
            g.lo.push_back(std::stod(f[0]));
            g.hi.push_back(std::stod(f[1]));
            g.points.push_back(std::stoi(f[2]));
        } catch (const std::logic_error&) {
            throw std::invalid_argument("grid component '" + comp + "' is not numeric");
        }
        if (g.points.back() < 1 || g.hi.back() < g.lo.back())
            throw std::invalid_argument("grid component '" + comp + "' needs points >= 1 and hi >= lo");
    }
    if (g.lo.empty()) throw std::invalid_argument("empty grid spec");
    return g;
}

RowMatrix BoundaryGrid::states() const {
    const int d = static_cast<int>(lo.size());
    Eigen::Index total = 1;
    for (int p : points) total *= p;
    RowMatrix x(total, d);
    for (Eigen::Index i = 0; i < total; ++i) {
        Eigen::Index rest = i;
        for (int k = d - 1; k >= 0; --k) {
            const int p = points[static_cast<std::size_t>(k)];
            const Eigen::Index j = rest % p;
            rest /= p;
            const double a = lo[static_cast<std::size_t>(k)], b = hi[static_cast<std::size_t>(k)];
            x(i, k) = p == 1 ? a : a + (b - a) * static_cast<double>(j) / (p - 1);
        }
    }
    return x;
}

std::vector<double> write_boundary_grid(const std::vector<NamedRule>& rules, const BoundaryGrid& grid, std::ostream& out) {
    if (rules.empty()) throw std::invalid_argument("no stopping rules");
    const StoppingRule& first = *rules.front().rule;
    const int N = first.grid().intervals();
    const int n = grid.date_index < 0 ? N - 1 : grid.date_index;
    if (n < 1 || n > N) throw std::invalid_argument("boundary date must lie in 1..N");
    const int d = first.contract().state_dim();
    if (static_cast<int>(grid.lo.size()) != d)
        throw std::invalid_argument("grid has " + std::to_string(grid.lo.size()) + " components, the state has " +
                                    std::to_string(d));
    const RowMatrix x = grid.states();
    const Eigen::VectorXd g = payoff_rows(first.contract(), x);

    out << "method,date_index,t";
    for (int k = 0; k < d; ++k) out << ",x" << k;
    out << ",payoff,exercise\n";
    std::vector<std::uint8_t> reference;
    std::vector<double> disagreement;
    for (const auto& [method, rule] : rules) {
        if (!(rule->grid() == first.grid())) throw std::invalid_argument(method + ": exercise dates differ");
        const auto f = rule->decide(n, x);
        if (reference.empty()) {
            reference = f;
        } else {
            std::size_t diff = 0;
            for (std::size_t i = 0; i < f.size(); ++i) diff += f[i] != reference[i];
            disagreement.push_back(static_cast<double>(diff) / static_cast<double>(f.size()));
        }
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            out << method << ',' << n << ',' << fmt(first.grid().date(n));
            for (int k = 0; k < d; ++k) out << ',' << fmt(x(i, k));
            out << ',' << fmt(g(i)) << ',' << int(f[static_cast<std::size_t>(i)]) << '\n';
        }
    }
    return disagreement;
}

void compare_profiles(const std::vector<ExposureProfile>& profiles, const std::vector<std::string>& names,
                      std::ostream& out) {
    if (profiles.size() < 2) throw std::invalid_argument("compare needs at least two reports");
    if (names.size() != profiles.size()) throw std::invalid_argument("one name per report");

    auto dates_of = [](const ExposureProfile& p) {
        std::map<int, double> d;
        for (const auto& row : p.rows) d.emplace(row.date_index, row.t);
        return d;
    };
    const auto dates = dates_of(profiles.front());
    for (std::size_t i = 1; i < profiles.size(); ++i) {
        const auto other = dates_of(profiles[i]);
        bool same = other.size() == dates.size();
        for (auto a = dates.begin(), b = other.begin(); same && a != dates.end(); ++a, ++b)
            same = a->first == b->first && std::abs(a->second - b->second) <= 1e-12 * std::max(1.0, std::abs(a->second));
        if (!same) throw std::invalid_argument("report '" + names[i] + "' has different exercise dates than '" + names[0] + "'");
    }

    using Key = std::tuple<std::string, std::string, double, int>;  // estimator, measure, alpha (-1 for EE), date
    std::vector<std::map<Key, const ExposureRow*>> index(profiles.size());
    std::vector<Key> order;
    std::set<Key> seen;
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        for (const auto& row : profiles[i].rows) {
            const Key k{row.estimator, row.measure, row.alpha.value_or(-1.0), row.date_index};
            index[i][k] = &row;
            if (seen.insert(k).second) order.push_back(k);
        }
    }
    std::sort(order.begin(), order.end());

    out << "estimator,measure,alpha,date_index,t";
    for (const auto& n : names) out << ",value_" << n;
    for (std::size_t i = 0; i < names.size(); ++i)
        for (std::size_t j = i + 1; j < names.size(); ++j)
            out << ",diff_" << names[j] << "_" << names[i] << ",se_" << names[j] << "_" << names[i];
    out << '\n';
    for (const auto& k : order) {
        const auto& [est, meas, alpha, date] = k;
        out << est << ',' << meas << ',' << (alpha < 0 ? std::string() : fmt(alpha)) << ',' << date << ','
            << fmt(dates.at(date));
        std::vector<const ExposureRow*> rows;
        for (const auto& idx : index) {
            const auto it = idx.find(k);
            rows.push_back(it == idx.end() ? nullptr : it->second);
        }
        for (const auto* row : rows) out << ',' << (row ? fmt(row->value) : std::string());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            for (std::size_t j = i + 1; j < rows.size(); ++j) {
                if (!rows[i] || !rows[j]) {
                    out << ",,";
                    continue;
                }
                out << ',' << fmt(rows[j]->value - rows[i]->value) << ',';
                if (rows[i]->std_err && rows[j]->std_err)
                    out << fmt(std::sqrt(*rows[i]->std_err * *rows[i]->std_err + *rows[j]->std_err * *rows[j]->std_err));
            }
        }
        out << '\n';
    }
}

}  // namespace bermex
