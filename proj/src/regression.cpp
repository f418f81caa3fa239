#include "bermex/regression.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <Eigen/QR>

#include "json.hpp"
#include "bermex/errors.hpp"
#include "bermex/rng.hpp"

namespace bermex {

double laguerre(int n, double x) {
    if (n < 0) throw std::invalid_argument("Laguerre degree must be >= 0");
    double prev = 1.0;
    if (n == 0) return prev;
    double cur = 1.0 - x;
    for (int k = 1; k < n; ++k) {
        const double next = ((2.0 * k + 1.0 - x) * cur - k * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    return cur;
}

double weighted_laguerre(int n, double x) { return std::exp(-0.5 * x) * laguerre(n, x); }

std::string to_string(BasisPreset preset) {
    switch (preset) {
        case BasisPreset::Constant: return "constant";
        case BasisPreset::Monomial: return "monomial";
        case BasisPreset::LsmBs: return "lsm_bs";
        case BasisPreset::SgbmBs: return "sgbm_bs";
        case BasisPreset::LsmHeston: return "lsm_heston";
        case BasisPreset::SgbmHeston: return "sgbm_heston";
    }
    return "?";
}

BasisPreset basis_preset_from_string(const std::string& name) {
    for (auto p : {BasisPreset::Constant, BasisPreset::Monomial, BasisPreset::LsmBs, BasisPreset::SgbmBs,
                   BasisPreset::LsmHeston, BasisPreset::SgbmHeston}) {
        if (to_string(p) == name) return p;
    }
    throw std::invalid_argument("unknown basis preset '" + name + "'");
}

BasisSet BasisSet::make(BasisPreset preset, const Contract& contract, int degree) {
    if (degree < 1) throw std::invalid_argument("monomial degree must be >= 1");
    if ((preset == BasisPreset::LsmHeston || preset == BasisPreset::SgbmHeston) &&
        (contract.state_offset != 1 || contract.assets != 1))
        throw std::invalid_argument("Heston basis presets need a (variance, price) state");
    return {preset, contract.strike, contract.assets, contract.state_offset, degree};
}

int BasisSet::size() const {
    const int dim = assets + state_offset;
    switch (preset) {
        case BasisPreset::Constant: return 1;
        case BasisPreset::Monomial: return 1 + dim * degree;
        case BasisPreset::LsmBs: return 1 + 6 * assets + 4;
        case BasisPreset::SgbmBs: return 1 + 4 * assets + 2;
        case BasisPreset::LsmHeston: return 8;
        case BasisPreset::SgbmHeston: return 6;
    }
    return 0;
}

std::vector<std::string> BasisSet::names() const {
    std::vector<std::string> out{"1"};
    const int dim = assets + state_offset;
    auto s = [&](int i) { return "s" + std::to_string(i + 1); };
    switch (preset) {
        case BasisPreset::Constant: break;
        case BasisPreset::Monomial:
            for (int j = 0; j < dim; ++j)
                for (int k = 1; k <= degree; ++k) out.push_back("x" + std::to_string(j + 1) + "^" + std::to_string(k));
            break;
        case BasisPreset::LsmBs:
            for (int i = 0; i < assets; ++i)
                for (int k = 0; k <= 5; ++k) out.push_back("wL" + std::to_string(k) + "(" + s(i) + ")");
            for (int k = 1; k <= 4; ++k) out.push_back("maxlog^" + std::to_string(k));
            break;
        case BasisPreset::SgbmBs:
            for (int i = 0; i < assets; ++i)
                for (int k = 1; k <= 4; ++k) out.push_back(s(i) + "^" + std::to_string(k));
            for (int k = 1; k <= 2; ++k) out.push_back("maxlog^" + std::to_string(k));
            break;
        case BasisPreset::LsmHeston:
            for (int k = 1; k <= 3; ++k) out.push_back("L" + std::to_string(k) + "(s)");
            for (int k = 1; k <= 3; ++k) out.push_back("L" + std::to_string(k) + "(nu)");
            out.push_back("nu*s");
            break;
        case BasisPreset::SgbmHeston: out.insert(out.end(), {"s", "s*nu", "nu", "nu^2", "nu^3"}); break;
    }
    return out;
}

Eigen::MatrixXd BasisSet::design(const Eigen::Ref<const RowMatrix>& states) const {
    const int dim = assets + state_offset;
    if (states.cols() != dim) throw std::invalid_argument("state width does not match the basis");
    Eigen::MatrixXd phi(states.rows(), size());
    for (Eigen::Index m = 0; m < states.rows(); ++m) {
        int c = 0;
        phi(m, c++) = 1.0;
        auto price = [&](int i) { return states(m, state_offset + i) / scale; };
        auto max_log = [&] {
            double v = -std::numeric_limits<double>::infinity();
            for (int i = 0; i < assets; ++i) v = std::max(v, std::log(price(i)));
            return v;
        };
        switch (preset) {
            case BasisPreset::Constant: break;
            case BasisPreset::Monomial:
                for (int j = 0; j < dim; ++j) {
                    const double x = j >= state_offset ? states(m, j) / scale : states(m, j);
                    double p = 1.0;
                    for (int k = 1; k <= degree; ++k) phi(m, c++) = (p *= x);
                }
                break;
            case BasisPreset::LsmBs: {
                for (int i = 0; i < assets; ++i) {
                    const double x = price(i);
                    const double w = std::exp(-0.5 * x);
                    double prev = 1.0, cur = 1.0 - x;
                    phi(m, c++) = w * prev;
                    phi(m, c++) = w * cur;
                    for (int k = 1; k < 5; ++k) {
                        const double next = ((2.0 * k + 1.0 - x) * cur - k * prev) / (k + 1.0);
                        prev = cur;
                        cur = next;
                        phi(m, c++) = w * cur;
                    }
                }
                const double ml = max_log();
                double p = 1.0;
                for (int k = 1; k <= 4; ++k) phi(m, c++) = (p *= ml);
                break;
            }
            case BasisPreset::SgbmBs: {
                for (int i = 0; i < assets; ++i) {
                    double p = 1.0;
                    for (int k = 1; k <= 4; ++k) phi(m, c++) = (p *= price(i));
                }
                const double ml = max_log();
                phi(m, c++) = ml;
                phi(m, c++) = ml * ml;
                break;
            }
            case BasisPreset::LsmHeston: {
                const double s = price(0), nu = states(m, 0);
                for (int k = 1; k <= 3; ++k) phi(m, c++) = laguerre(k, s);
                for (int k = 1; k <= 3; ++k) phi(m, c++) = laguerre(k, nu);
                phi(m, c++) = nu * s;
                break;
            }
            case BasisPreset::SgbmHeston: {
                const double s = price(0), nu = states(m, 0);
                phi(m, c++) = s;
                phi(m, c++) = s * nu;
                phi(m, c++) = nu;
                phi(m, c++) = nu * nu;
                phi(m, c++) = nu * nu * nu;
                break;
            }
        }
    }
    return phi;
}

OlsResult fit_ols(const Eigen::MatrixXd& design, const Eigen::VectorXd& y) {
    if (design.rows() != y.size()) throw std::invalid_argument("design and target lengths differ");
    if (design.rows() < 1) throw std::invalid_argument("least squares needs at least one sample");
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);
    OlsResult out;
    out.coef = cod.solve(y);
    out.rank = static_cast<int>(cod.rank());
    out.rank_deficient = out.rank < design.cols();
    if (!out.coef.allFinite()) throw NumericError("least-squares solve produced non-finite coefficients");
    return out;
}

int LocalOls::bundle_of(double statistic) const {
    const auto it = std::lower_bound(upper.begin(), upper.end(), statistic);
    return static_cast<int>(it - upper.begin());
}

Eigen::VectorXd LocalOls::predict(const Eigen::MatrixXd& design, const Eigen::VectorXd& statistic) const {
    Eigen::VectorXd out(design.rows());
    for (Eigen::Index m = 0; m < design.rows(); ++m)
        out[m] = design.row(m).dot(coef[static_cast<std::size_t>(bundle_of(statistic[m]))]);
    return out;
}

LocalOls fit_ols_local(const Eigen::MatrixXd& design, const Eigen::VectorXd& y, const Eigen::VectorXd& statistic,
                       int n_bundles, std::vector<std::string>* warnings) {
    const Eigen::Index rows = design.rows();
    if (rows < 1) throw std::invalid_argument("local regression needs at least one sample");
    if (y.size() != rows || statistic.size() != rows) throw std::invalid_argument("input lengths differ");
    if (n_bundles < 1) throw std::invalid_argument("bundle count must be >= 1");
    const auto k = static_cast<Eigen::Index>(std::min<Eigen::Index>(n_bundles, rows));

    std::vector<Eigen::Index> order(static_cast<std::size_t>(rows));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return statistic[a] < statistic[b]; });

    LocalOls out;
    for (Eigen::Index b = 0; b < k; ++b) {
        const auto start = static_cast<std::size_t>(b * rows / k), end = static_cast<std::size_t>((b + 1) * rows / k);
        std::vector<Eigen::Index> members(order.begin() + static_cast<std::ptrdiff_t>(start),
                                          order.begin() + static_cast<std::ptrdiff_t>(end));
        if (b + 1 < k) out.upper.push_back(statistic[members.back()]);
        std::sort(members.begin(), members.end());
        Eigen::MatrixXd sub(static_cast<Eigen::Index>(members.size()), design.cols());
        Eigen::VectorXd ys(static_cast<Eigen::Index>(members.size()));
        for (std::size_t i = 0; i < members.size(); ++i) {
            sub.row(static_cast<Eigen::Index>(i)) = design.row(members[i]);
            ys[static_cast<Eigen::Index>(i)] = y[members[i]];
        }
        const auto fit = fit_ols(sub, ys);
        if (fit.rank_deficient && warnings)
            warnings->push_back("bundle " + std::to_string(b) + " with " + std::to_string(members.size()) +
                                " samples is rank deficient (rank " + std::to_string(fit.rank) +
                                "); minimum-norm solution used");
        out.coef.push_back(fit.coef);
        out.counts.push_back(members.size());
    }
    return out;
}

Eigen::VectorXd bundling_statistic(const Contract& contract, const Eigen::Ref<const RowMatrix>& states) {
    if (states.cols() != contract.state_dim()) throw std::invalid_argument("state width does not match the contract");
    return states.middleCols(contract.state_offset, contract.assets).rowwise().maxCoeff();
}

std::string to_string(RegressionMethod method) {
    switch (method) {
        case RegressionMethod::OlsGlobal: return "ols_global";
        case RegressionMethod::OlsLocal: return "ols_local";
        case RegressionMethod::Nn: return "nn";
    }
    return "?";
}

RegressionMethod regression_method_from_string(const std::string& name) {
    if (name == "ols_global") return RegressionMethod::OlsGlobal;
    if (name == "ols_local") return RegressionMethod::OlsLocal;
    if (name == "nn") return RegressionMethod::Nn;
    throw std::invalid_argument("unknown regression method '" + name + "'");
}

std::string to_string(OutputMode mode) { return mode == OutputMode::Identity ? "identity" : "payoff_shift_relu"; }

OutputMode output_mode_from_string(const std::string& name) {
    if (name == "identity") return OutputMode::Identity;
    if (name == "payoff_shift_relu") return OutputMode::PayoffShiftRelu;
    throw std::invalid_argument("unknown output mode '" + name + "'");
}

double fit_nn(const NetSpec& spec, NetParams& params, const Eigen::Ref<const RowMatrix>& features,
              const Eigen::VectorXd& target, const MinibatchConfig& config) {
    if (target.size() != features.rows()) throw std::invalid_argument("features and targets differ in length");
    const BatchLoss loss = [&](std::span<const Eigen::Index> idx, const Eigen::VectorXd& out, Eigen::VectorXd& grad) {
        const double b = static_cast<double>(idx.size());
        double total = 0.0;
        for (std::size_t j = 0; j < idx.size(); ++j) {
            const double e = out[static_cast<Eigen::Index>(j)] - target[idx[j]];
            total += e * e;
            grad[static_cast<Eigen::Index>(j)] = 2.0 * e / b;
        }
        return total / b;
    };
    return train_minibatch(spec, params, features, loss, config);
}

// ---------------------------------------------------------------------------
// ValueSurface

ValueSurface::ValueSurface(Contract contract, TimeGrid grid, RegressionConfig config,
                           std::shared_ptr<const StoppingRule> rule)
    : contract_(contract), grid_(std::move(grid)), config_(std::move(config)),
      basis_(BasisSet::make(config_.basis, contract_, config_.degree)), rule_(std::move(rule)) {
    contract_.validate();
    if (rule_ && rule_->grid().dates() != grid_.dates())
        throw std::invalid_argument("stopping rule and surface use different exercise dates");
    const int d = contract_.state_dim();
    spec_.input_dim = d + (config_.augment_payoff ? 1 : 0);
    spec_.hidden = config_.hidden.empty() ? std::vector<int>{d + 50, d + 50} : config_.hidden;
    spec_.hidden_activation = config_.hidden_activation;
    spec_.output_activation =
        config_.output_mode == OutputMode::PayoffShiftRelu ? Activation::Relu : Activation::Identity;
    spec_.init_seed = derive_seed(config_.seed, "value_net_init");
    spec_.validate();
    dates.resize(grid_.dates().size());
    dates.back().kind = DateSurface::Kind::Payoff;
}

void ValueSurface::fit_date(int n, const Eigen::Ref<const RowMatrix>& states, const Eigen::VectorXd& targets) {
    const int last = grid_.intervals();
    if (n < 0 || n >= last) throw std::out_of_range("surfaces are fitted at dates 0..N-1");
    if (states.rows() != targets.size()) throw std::invalid_argument("states and targets differ in length");
    DateSurface ds;
    ds.samples = static_cast<std::size_t>(states.rows());
    if (states.rows() == 0) {
        ds.kind = DateSurface::Kind::AllExercise;
        warnings.push_back("date " + std::to_string(n) + ": empty continuation region, surface falls back to the payoff");
    } else if (n == 0) {
        ds.kind = DateSurface::Kind::Constant;
        const auto ms = mean_se(std::span<const double>(targets.data(), static_cast<std::size_t>(targets.size())));
        ds.constant = ms.mean;
        ds.constant_std_err = ms.std_err;
    } else if (config_.method == RegressionMethod::OlsGlobal) {
        const auto fit = fit_ols(basis_.design(states), targets);
        if (fit.rank_deficient)
            warnings.push_back("date " + std::to_string(n) + ": rank-deficient design (rank " +
                               std::to_string(fit.rank) + "), minimum-norm solution used");
        ds.kind = DateSurface::Kind::Ols;
        ds.coef = fit.coef;
    } else if (config_.method == RegressionMethod::OlsLocal) {
        std::vector<std::string> w;
        ds.local = fit_ols_local(basis_.design(states), targets, bundling_statistic(contract_, states), config_.bundles, &w);
        for (auto& msg : w) warnings.push_back("date " + std::to_string(n) + ": " + msg);
        ds.kind = DateSurface::Kind::Local;
    } else {
        RowMatrix feats = make_features(contract_, states, config_.augment_payoff);
        ds.scaler = FeatureScaler::fit(feats);
        ds.scaler.apply_inplace(feats);
        Eigen::VectorXd t = targets;
        if (config_.output_mode == OutputMode::PayoffShiftRelu) t -= payoff_rows(contract_, states);
        const double rms = std::sqrt(t.squaredNorm() / static_cast<double>(t.size()));
        ds.target_scale = rms > 0.0 ? rms : 1.0;
        t /= ds.target_scale;
        NetSpec date_spec = spec_;
        date_spec.init_seed = derive_seed(config_.seed, "value_net_init:" + std::to_string(n));
        ds.net = init_params(date_spec);
        MinibatchConfig mb;
        mb.steps = config_.steps;
        mb.batch_size = config_.batch_size;
        mb.shuffle_seed = derive_seed(config_.seed, "value_net_batches:" + std::to_string(n));
        mb.adam.learning_rate = config_.learning_rate;
        mb.final_learning_rate = config_.final_learning_rate;
        fit_nn(spec_, ds.net, feats, t, mb);
        ds.kind = DateSurface::Kind::Nn;
    }
    dates[static_cast<std::size_t>(n)] = std::move(ds);
}

Eigen::VectorXd ValueSurface::regression_value(int n, const Eigen::Ref<const RowMatrix>& states) const {
    if (n < 0 || n > grid_.intervals()) throw std::out_of_range("date index out of range");
    const auto& ds = dates[static_cast<std::size_t>(n)];
    switch (ds.kind) {
        case DateSurface::Kind::Unfitted: throw std::logic_error("surface is not fitted at date " + std::to_string(n));
        case DateSurface::Kind::Payoff:
        case DateSurface::Kind::AllExercise: return payoff_rows(contract_, states);
        case DateSurface::Kind::Constant: return Eigen::VectorXd::Constant(states.rows(), ds.constant);
        case DateSurface::Kind::Ols: return basis_.design(states) * ds.coef;
        case DateSurface::Kind::Local:
            return ds.local.predict(basis_.design(states), bundling_statistic(contract_, states));
        case DateSurface::Kind::Nn: {
            RowMatrix feats = make_features(contract_, states, config_.augment_payoff);
            ds.scaler.apply_inplace(feats);
            Eigen::VectorXd out = ds.target_scale * forward_chunked(spec_, ds.net, feats);
            if (config_.output_mode == OutputMode::PayoffShiftRelu) out += payoff_rows(contract_, states);
            return out;
        }
    }
    return {};
}

double ValueSurface::sampling_error(int n) const {
    const auto& ds = dates.at(static_cast<std::size_t>(n));
    return ds.kind == DateSurface::Kind::Constant ? ds.constant_std_err : 0.0;
}

Eigen::VectorXd ValueSurface::value(int n, const Eigen::Ref<const RowMatrix>& states) const {
    if (n == grid_.intervals()) return payoff_rows(contract_, states);
    Eigen::VectorXd v = regression_value(n, states);
    if (rule_ && n > 0) {
        const auto f = rule_->decide(n, states);
        bool any = false;
        for (auto fi : f) any = any || fi;
        if (any) {
            const Eigen::VectorXd g = payoff_rows(contract_, states);
            for (Eigen::Index m = 0; m < v.size(); ++m)
                if (f[static_cast<std::size_t>(m)]) v[m] = g[m];
        }
    }
    return v;
}

namespace {

std::string kind_name(DateSurface::Kind k) {
    switch (k) {
        case DateSurface::Kind::Unfitted: return "unfitted";
        case DateSurface::Kind::Payoff: return "payoff";
        case DateSurface::Kind::AllExercise: return "all_exercise";
        case DateSurface::Kind::Constant: return "constant";
        case DateSurface::Kind::Ols: return "ols";
        case DateSurface::Kind::Local: return "local";
        case DateSurface::Kind::Nn: return "nn";
    }
    return "?";
}

DateSurface::Kind kind_from_name(const std::string& s) {
    for (auto k : {DateSurface::Kind::Unfitted, DateSurface::Kind::Payoff, DateSurface::Kind::AllExercise,
                   DateSurface::Kind::Constant, DateSurface::Kind::Ols, DateSurface::Kind::Local, DateSurface::Kind::Nn}) {
        if (kind_name(k) == s) return k;
    }
    throw std::runtime_error("unknown surface kind '" + s + "'");
}

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd from_vec(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

void ValueSurface::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    nlohmann::json j;
    j["format"] = "bermex-surface";
    j["version"] = 1;
    j["contract"] = {{"kind", to_string(contract_.kind)},
                     {"strike", contract_.strike},
                     {"assets", contract_.assets},
                     {"state_offset", contract_.state_offset}};
    j["grid"] = {{"dates", grid_.dates()}, {"substeps", grid_.substeps()}};
    j["config"] = {{"method", to_string(config_.method)},
                   {"basis", to_string(config_.basis)},
                   {"degree", config_.degree},
                   {"bundles", config_.bundles},
                   {"hidden", spec_.hidden},
                   {"hidden_activation", to_string(config_.hidden_activation)},
                   {"output_mode", to_string(config_.output_mode)},
                   {"augment_payoff", config_.augment_payoff},
                   {"steps", config_.steps},
                   {"batch_size", config_.batch_size},
                   {"learning_rate", config_.learning_rate},
                   {"seed", config_.seed}};
    nlohmann::json arr = nlohmann::json::array();
    for (std::size_t n = 0; n < dates.size(); ++n) {
        const auto& ds = dates[n];
        nlohmann::json e = {{"date_index", n}, {"kind", kind_name(ds.kind)}, {"samples", ds.samples}};
        if (ds.kind == DateSurface::Kind::Constant) {
            e["constant"] = ds.constant;
            e["constant_std_err"] = ds.constant_std_err;
        }
        if (ds.kind == DateSurface::Kind::Ols) e["coef"] = to_vec(ds.coef);
        if (ds.kind == DateSurface::Kind::Local) {
            e["upper"] = ds.local.upper;
            e["counts"] = ds.local.counts;
            nlohmann::json coefs = nlohmann::json::array();
            for (const auto& c : ds.local.coef) coefs.push_back(to_vec(c));
            e["bundle_coef"] = coefs;
        }
        if (ds.kind == DateSurface::Kind::Nn) {
            char name[32];
            std::snprintf(name, sizeof name, "value_%02zu.xnnp", n);
            save_params(dir / name, spec_, ds.net);
            e["file"] = name;
            e["scaler_mean"] = to_vec(ds.scaler.mean);
            e["scaler_inv_std"] = to_vec(ds.scaler.inv_std);
            e["target_scale"] = ds.target_scale;
        }
        arr.push_back(e);
    }
    j["dates"] = arr;
    j["warnings"] = warnings;
    std::ofstream out(dir / "manifest.json");
    if (!out) throw std::runtime_error("cannot write surface manifest in " + dir.string());
    out << j.dump(2) << '\n';
}

ValueSurface ValueSurface::load(const std::filesystem::path& dir, std::shared_ptr<const StoppingRule> rule) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw std::runtime_error("no surface manifest in " + dir.string());
    const auto j = nlohmann::json::parse(in);
    if (j.at("format") != "bermex-surface") throw std::runtime_error("not a surface bundle: " + dir.string());
    Contract c;
    c.kind = payoff_kind_from_string(j.at("contract").at("kind"));
    c.strike = j.at("contract").at("strike");
    c.assets = j.at("contract").at("assets");
    c.state_offset = j.at("contract").at("state_offset");
    TimeGrid grid(j.at("grid").at("dates").get<std::vector<double>>(), j.at("grid").at("substeps").get<int>());
    const auto& jc = j.at("config");
    RegressionConfig cfg;
    cfg.method = regression_method_from_string(jc.at("method"));
    cfg.basis = basis_preset_from_string(jc.at("basis"));
    cfg.degree = jc.at("degree");
    cfg.bundles = jc.at("bundles");
    cfg.hidden = jc.at("hidden").get<std::vector<int>>();
    cfg.hidden_activation = activation_from_string(jc.at("hidden_activation"));
    cfg.output_mode = output_mode_from_string(jc.at("output_mode"));
    cfg.augment_payoff = jc.at("augment_payoff");
    cfg.steps = jc.at("steps");
    cfg.batch_size = jc.at("batch_size");
    cfg.learning_rate = jc.at("learning_rate");
    cfg.seed = jc.at("seed");
    ValueSurface s(c, std::move(grid), cfg, std::move(rule));
    for (const auto& e : j.at("dates")) {
        const auto n = e.at("date_index").get<std::size_t>();
        auto& ds = s.dates.at(n);
        ds.kind = kind_from_name(e.at("kind"));
        ds.samples = e.at("samples");
        if (ds.kind == DateSurface::Kind::Constant) {
            ds.constant = e.at("constant");
            ds.constant_std_err = e.value("constant_std_err", 0.0);
        }
        if (ds.kind == DateSurface::Kind::Ols) ds.coef = from_vec(e.at("coef").get<std::vector<double>>());
        if (ds.kind == DateSurface::Kind::Local) {
            ds.local.upper = e.at("upper").get<std::vector<double>>();
            ds.local.counts = e.at("counts").get<std::vector<std::size_t>>();
            for (const auto& cv : e.at("bundle_coef")) ds.local.coef.push_back(from_vec(cv.get<std::vector<double>>()));
        }
        if (ds.kind == DateSurface::Kind::Nn) {
            NetSpec file_spec;
            ds.net = load_params(dir / e.at("file").get<std::string>(), file_spec);
            if (file_spec.layer_sizes() != s.spec_.layer_sizes())
                throw std::runtime_error("value network file does not match the manifest");
            ds.scaler.mean = from_vec(e.at("scaler_mean").get<std::vector<double>>());
            ds.scaler.inv_std = from_vec(e.at("scaler_inv_std").get<std::vector<double>>());
            ds.target_scale = e.at("target_scale");
        }
    }
    s.warnings = j.at("warnings").get<std::vector<std::string>>();
    return s;
}

ValueSurface fit_surface(std::shared_ptr<const StoppingRule> rule, const PathSet& paths, double r,
                         const RegressionConfig& config) {
    if (!rule) throw std::invalid_argument("surface fitting needs a stopping rule");
    if (paths.measure().kind != MeasureKind::Q) throw std::invalid_argument("regression paths must be simulated under Q");
    const auto cm = build_cashflows(*rule, paths, r);
    ValueSurface surface(rule->contract(), paths.grid(), config, rule);
    const int last = paths.grid().intervals();
    surface.fit_date(0, paths.at_date(0), cm.column(0));
    for (int n = 1; n < last; ++n) {
        const auto x = paths.at_date(n);
        const auto f = rule->decide(n, x);
        std::vector<Eigen::Index> keep;
        for (std::size_t m = 0; m < f.size(); ++m)
            if (!f[m]) keep.push_back(static_cast<Eigen::Index>(m));
        RowMatrix xs(static_cast<Eigen::Index>(keep.size()), x.cols());
        Eigen::VectorXd ys(static_cast<Eigen::Index>(keep.size()));
        for (std::size_t i = 0; i < keep.size(); ++i) {
            xs.row(static_cast<Eigen::Index>(i)) = x.row(keep[i]);
            ys[static_cast<Eigen::Index>(i)] = cm.cashflow(static_cast<std::size_t>(keep[i]), n);
        }
        surface.fit_date(n, xs, ys);
    }
    return surface;
}

}  // namespace bermex
