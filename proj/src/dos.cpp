#include "bermex/dos.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "bermex/rng.hpp"

namespace bermex {

namespace {

void require_same_dates(const TimeGrid& a, const TimeGrid& b) {
    if (a.dates() != b.dates()) throw std::invalid_argument("policy and path set use different exercise dates");
}

RowMatrix gather_rows(const Eigen::Ref<const RowMatrix>& x, std::span<const Eigen::Index> rows) {
    RowMatrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
    return out;
}

}  // namespace

std::vector<std::uint8_t> StoppingRule::decide(int n, const Eigen::Ref<const RowMatrix>& states) const {
    const int last = grid().intervals();
    if (n < 0 || n > last) throw std::out_of_range("date index out of range");
    if (n == 0) return std::vector<std::uint8_t>(static_cast<std::size_t>(states.rows()), 0);
    if (n == last) return std::vector<std::uint8_t>(static_cast<std::size_t>(states.rows()), 1);
    return decide_interior(n, states);
}

Eigen::VectorXd CashflowMatrix::column(int n) const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(paths));
    for (std::size_t m = 0; m < paths; ++m) out[static_cast<Eigen::Index>(m)] = cashflow(m, n);
    return out;
}

CashflowMatrix build_cashflows(const StoppingRule& rule, const PathSet& paths, double r) {
    require_same_dates(rule.grid(), paths.grid());
    const int last = paths.grid().intervals();
    const std::size_t dates = static_cast<std::size_t>(last) + 1;
    CashflowMatrix cm;
    cm.paths = paths.paths();
    cm.dates = last + 1;
    cm.r = r;
    cm.tau.assign(cm.paths * dates, 0);
    cm.cf.assign(cm.paths * dates, 0.0);
    for (int n = last; n >= 0; --n) {
        const auto x = paths.at_date(n);
        const auto f = rule.decide(n, x);
        const Eigen::VectorXd g = payoff_rows(rule.contract(), x);
        const double disc = n < last ? discount(r, paths.grid().date(n), paths.grid().date(n + 1)) : 1.0;
        for (std::size_t m = 0; m < cm.paths; ++m) {
            const std::size_t k = m * dates + static_cast<std::size_t>(n);
            if (f[m]) {
                cm.cf[k] = g[static_cast<Eigen::Index>(m)];
                cm.tau[k] = static_cast<std::uint16_t>(n);
            } else {
                cm.cf[k] = disc * cm.cf[k + 1];
                cm.tau[k] = cm.tau[k + 1];
            }
        }
    }
    return cm;
}

int first_hit(std::span<const std::uint8_t> decisions, int from) {
    const int last = static_cast<int>(decisions.size()) - 1;
    if (last < 1 || from < 0 || from > last) throw std::invalid_argument("invalid decision sequence or start date");
    for (int m = from; m < last; ++m) {
        if (m > 0 && decisions[static_cast<std::size_t>(m)]) return m;
    }
    return last;
}

int stopping_index_sum_product(std::span<const std::uint8_t> decisions, int from) {
    const int last = static_cast<int>(decisions.size()) - 1;
    if (last < 1 || from < 0 || from > last) throw std::invalid_argument("invalid decision sequence or start date");
    auto f = [&](int m) -> int { return m == 0 ? 0 : m == last ? 1 : (decisions[static_cast<std::size_t>(m)] ? 1 : 0); };
    int tau = 0;
    int survive = 1;
    for (int m = from; m <= last; ++m) {
        tau += m * f(m) * survive;
        survive *= 1 - f(m);
    }
    return tau;
}

int stopping_time(const StoppingRule& rule, std::span<const double> path, int from) {
    const int last = rule.grid().intervals();
    const int d = rule.contract().state_dim();
    if (path.size() != static_cast<std::size_t>(last + 1) * d) throw std::invalid_argument("path does not cover all dates");
    if (from < 0 || from > last) throw std::out_of_range("start date out of range");
    for (int n = from; n < last; ++n) {
        const Eigen::Map<const RowMatrix> x(path.data() + static_cast<std::size_t>(n) * d, 1, d);
        if (rule.decide(n, x)[0]) return n;
    }
    return last;
}

std::vector<std::uint16_t> stopping_indices(const StoppingRule& rule, const PathSet& paths) {
    require_same_dates(rule.grid(), paths.grid());
    const int last = paths.grid().intervals();
    std::vector<std::uint16_t> tau(paths.paths(), static_cast<std::uint16_t>(last));
    std::vector<Eigen::Index> active(paths.paths());
    for (std::size_t m = 0; m < active.size(); ++m) active[m] = static_cast<Eigen::Index>(m);
    for (int n = 1; n < last && !active.empty(); ++n) {
        const RowMatrix x = gather_rows(paths.at_date(n), active);
        const auto f = rule.decide_interior(n, x);
        std::vector<Eigen::Index> still;
        still.reserve(active.size());
        for (std::size_t i = 0; i < active.size(); ++i) {
            if (f[i])
                tau[static_cast<std::size_t>(active[i])] = static_cast<std::uint16_t>(n);
            else
                still.push_back(active[i]);
        }
        active = std::move(still);
    }
    return tau;
}

MeanSe price_lower_bound(const StoppingRule& rule, const PathSet& paths, double r) {
    const auto tau = stopping_indices(rule, paths);
    const auto& grid = paths.grid();
    std::vector<double> values(paths.paths());
    for (std::size_t m = 0; m < values.size(); ++m) {
        const int n = tau[m];
        values[m] = discount(r, grid.date(0), grid.date(n)) * payoff(rule.contract(), paths.state(m, n));
    }
    return mean_se(values);
}

std::vector<double> exercise_fraction(const StoppingRule& rule, const PathSet& paths) {
    const auto tau = stopping_indices(rule, paths);
    std::vector<double> frac(static_cast<std::size_t>(paths.dates()), 0.0);
    for (auto t : tau) frac[t] += 1.0;
    for (auto& f : frac) f /= static_cast<double>(paths.paths());
    return frac;
}

std::string to_string(FilterMode mode) {
    switch (mode) {
        case FilterMode::A1: return "A1";
        case FilterMode::A2: return "A2";
        case FilterMode::A3: return "A3";
    }
    return "?";
}

FilterMode filter_mode_from_string(const std::string& name) {
    if (name == "A1") return FilterMode::A1;
    if (name == "A2") return FilterMode::A2;
    if (name == "A3") return FilterMode::A3;
    throw std::invalid_argument("unknown filter mode '" + name + "'");
}

// ---------------------------------------------------------------------------
// DecisionPolicy

DecisionPolicy::DecisionPolicy(Contract contract, TimeGrid grid, FilterMode mode, bool augment_payoff, NetSpec spec,
                               FeatureScaler scaler)
    : contract_(contract), grid_(std::move(grid)), mode_(mode), augment_(augment_payoff), spec_(std::move(spec)),
      scaler_(std::move(scaler)) {
    contract_.validate();
    spec_.validate();
    if (spec_.input_dim != contract_.state_dim() + (augment_ ? 1 : 0))
        throw std::invalid_argument("network input dimension does not match state and augmentation");
    if (!scaler_.empty() && scaler_.mean.size() != spec_.input_dim)
        throw std::invalid_argument("scaler width does not match the network input");
    nets_.resize(grid_.dates().size());
    training.resize(grid_.dates().size());
}

RowMatrix DecisionPolicy::features(const Eigen::Ref<const RowMatrix>& states) const {
    RowMatrix f = make_features(contract_, states, augment_);
    scaler_.apply_inplace(f);
    return f;
}

bool DecisionPolicy::has_network(int n) const {
    return n > 0 && n < grid_.intervals() && !nets_[static_cast<std::size_t>(n)].weights.empty();
}

const NetParams& DecisionPolicy::network(int n) const {
    if (!has_network(n)) throw std::out_of_range("no decision network at date " + std::to_string(n));
    return nets_[static_cast<std::size_t>(n)];
}

void DecisionPolicy::set_network(int n, NetParams params) {
    if (n <= 0 || n >= grid_.intervals()) throw std::out_of_range("decision networks live at dates 1..N-1");
    nets_[static_cast<std::size_t>(n)] = std::move(params);
    training[static_cast<std::size_t>(n)].degenerate = false;
}

void DecisionPolicy::set_degenerate(int n) {
    if (n <= 0 || n >= grid_.intervals()) throw std::out_of_range("decision networks live at dates 1..N-1");
    nets_[static_cast<std::size_t>(n)] = NetParams{};
    training[static_cast<std::size_t>(n)].degenerate = true;
}

Eigen::VectorXd DecisionPolicy::probabilities(int n, const Eigen::Ref<const RowMatrix>& states) const {
    if (!has_network(n)) return Eigen::VectorXd::Zero(states.rows());
    return forward_chunked(spec_, nets_[static_cast<std::size_t>(n)], features(states));
}

std::vector<std::uint8_t> DecisionPolicy::raw_decisions(int n, const Eigen::Ref<const RowMatrix>& states) const {
    std::vector<std::uint8_t> f(static_cast<std::size_t>(states.rows()), 0);
    if (!has_network(n)) return f;
    const Eigen::VectorXd p = probabilities(n, states);
    for (Eigen::Index i = 0; i < p.size(); ++i) f[static_cast<std::size_t>(i)] = p[i] >= 0.5 ? 1 : 0;
    return f;
}

std::vector<std::uint8_t> DecisionPolicy::decide_interior(int n, const Eigen::Ref<const RowMatrix>& states) const {
    if (n <= 0 || n >= grid_.intervals()) throw std::out_of_range("interior decisions live at dates 1..N-1");
    auto f = raw_decisions(n, states);
    switch (mode_) {
        case FilterMode::A1: break;
        case FilterMode::A2: {
            const Eigen::VectorXd g = payoff_rows(contract_, states);
            for (std::size_t i = 0; i < f.size(); ++i) f[i] = f[i] && g[static_cast<Eigen::Index>(i)] > 0.0;
            break;
        }
        case FilterMode::A3: {
            for (int k = n + 1; k < grid_.intervals(); ++k) {
                const auto next = raw_decisions(k, states);
                for (std::size_t i = 0; i < f.size(); ++i) f[i] = f[i] && next[i];
            }
            break;
        }
    }
    return f;
}

void DecisionPolicy::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    nlohmann::json j;
    j["format"] = "bermex-policy";
    j["version"] = 1;
    j["contract"] = {{"kind", to_string(contract_.kind)},
                     {"strike", contract_.strike},
                     {"assets", contract_.assets},
                     {"state_offset", contract_.state_offset}};
    j["grid"] = {{"dates", grid_.dates()}, {"substeps", grid_.substeps()}};
    j["filter_mode"] = to_string(mode_);
    j["augment_payoff"] = augment_;
    j["network"] = {{"input_dim", spec_.input_dim},
                    {"hidden", spec_.hidden},
                    {"hidden_activation", to_string(spec_.hidden_activation)},
                    {"output_activation", to_string(spec_.output_activation)},
                    {"init_seed", spec_.init_seed}};
    j["scaler"] = {{"mean", std::vector<double>(scaler_.mean.data(), scaler_.mean.data() + scaler_.mean.size())},
                   {"inv_std",
                    std::vector<double>(scaler_.inv_std.data(), scaler_.inv_std.data() + scaler_.inv_std.size())}};
    nlohmann::json dates = nlohmann::json::array();
    for (int n = 1; n < grid_.intervals(); ++n) {
        const auto& info = training[static_cast<std::size_t>(n)];
        nlohmann::json e = {{"date_index", n},
                            {"samples", info.samples},
                            {"steps", info.steps},
                            {"warm_started", info.warm_started},
                            {"degenerate", info.degenerate},
                            {"final_loss", info.final_loss}};
        if (has_network(n)) {
            char name[32];
            std::snprintf(name, sizeof name, "net_%02d.xnnp", n);
            save_params(dir / name, spec_, nets_[static_cast<std::size_t>(n)]);
            e["file"] = name;
        }
        dates.push_back(e);
    }
    j["dates"] = dates;
    std::ofstream out(dir / "manifest.json");
    if (!out) throw std::runtime_error("cannot write policy manifest in " + dir.string());
    out << j.dump(2) << '\n';
}

DecisionPolicy DecisionPolicy::load(const std::filesystem::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw std::runtime_error("no policy manifest in " + dir.string());
    const auto j = nlohmann::json::parse(in);
    if (j.at("format") != "bermex-policy") throw std::runtime_error("not a policy bundle: " + dir.string());
    Contract c;
    c.kind = payoff_kind_from_string(j.at("contract").at("kind"));
    c.strike = j.at("contract").at("strike");
    c.assets = j.at("contract").at("assets");
    c.state_offset = j.at("contract").at("state_offset");
    TimeGrid grid(j.at("grid").at("dates").get<std::vector<double>>(), j.at("grid").at("substeps").get<int>());
    NetSpec spec;
    spec.input_dim = j.at("network").at("input_dim");
    spec.hidden = j.at("network").at("hidden").get<std::vector<int>>();
    spec.hidden_activation = activation_from_string(j.at("network").at("hidden_activation"));
    spec.output_activation = activation_from_string(j.at("network").at("output_activation"));
    spec.init_seed = j.at("network").at("init_seed");
    FeatureScaler scaler;
    const auto mean = j.at("scaler").at("mean").get<std::vector<double>>();
    const auto inv = j.at("scaler").at("inv_std").get<std::vector<double>>();
    scaler.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
    scaler.inv_std = Eigen::Map<const Eigen::VectorXd>(inv.data(), static_cast<Eigen::Index>(inv.size()));
    DecisionPolicy policy(c, std::move(grid), filter_mode_from_string(j.at("filter_mode")),
                          j.at("augment_payoff").get<bool>(), spec, std::move(scaler));
    for (const auto& e : j.at("dates")) {
        const int n = e.at("date_index");
        if (e.contains("file")) {
            NetSpec file_spec;
            auto params = load_params(dir / e.at("file").get<std::string>(), file_spec);
            if (file_spec.layer_sizes() != spec.layer_sizes())
                throw std::runtime_error("network file for date " + std::to_string(n) + " does not match the manifest");
            policy.set_network(n, std::move(params));
        } else {
            policy.set_degenerate(n);
        }
        auto& info = policy.training[static_cast<std::size_t>(n)];
        info.samples = e.at("samples");
        info.steps = e.at("steps");
        info.warm_started = e.at("warm_started");
        info.degenerate = e.at("degenerate");
        info.final_loss = e.at("final_loss");
    }
    return policy;
}

// ---------------------------------------------------------------------------
// Training

DecisionPolicy train_policy(const PathSet& paths, const Contract& contract, double r, const TrainConfig& config) {
    contract.validate();
    if (paths.measure().kind != MeasureKind::Q) throw std::invalid_argument("decision networks are trained on Q paths");
    if (paths.dim() != contract.state_dim()) throw std::invalid_argument("path dimension does not match the contract");
    if (config.batch_size < 1 || config.steps_fresh < 1 || config.steps_warm < 1)
        throw std::invalid_argument("batch size and step counts must be >= 1");
    const int last = paths.grid().intervals();
    const int d = paths.dim();

    NetSpec spec;
    spec.input_dim = d + (config.augment_payoff ? 1 : 0);
    spec.hidden = config.hidden.empty() ? std::vector<int>{d + 50, d + 50} : config.hidden;
    spec.hidden_activation = config.hidden_activation;
    spec.output_activation = Activation::Sigmoid;
    spec.init_seed = derive_seed(config.seed, "decision_net_init");

    FeatureScaler scaler = FeatureScaler::identity(spec.input_dim);
    if (last > 1) {
        RowMatrix pooled(static_cast<Eigen::Index>(paths.paths()) * (last - 1), spec.input_dim);
        for (int n = 1; n < last; ++n) {
            pooled.middleRows(static_cast<Eigen::Index>(paths.paths()) * (n - 1), static_cast<Eigen::Index>(paths.paths())) =
                make_features(contract, paths.at_date(n), config.augment_payoff);
        }
        scaler = FeatureScaler::fit(pooled);
    }

    DecisionPolicy policy(contract, paths.grid(), config.filter, config.augment_payoff, spec, scaler);

    const auto rows = static_cast<Eigen::Index>(paths.paths());
    Eigen::VectorXd cf = payoff_rows(contract, paths.at_date(last));
    for (int n = last - 1; n >= 1; --n) {
        const auto x = paths.at_date(n);
        const Eigen::VectorXd g = payoff_rows(contract, x);
        const Eigen::VectorXd cont = discount(r, paths.grid().date(n), paths.grid().date(n + 1)) * cf;

        std::vector<Eigen::Index> subset;
        subset.reserve(static_cast<std::size_t>(rows));
        if (config.filter == FilterMode::A1) {
            for (Eigen::Index m = 0; m < rows; ++m) subset.push_back(m);
        } else if (config.filter == FilterMode::A2) {
            for (Eigen::Index m = 0; m < rows; ++m)
                if (g[m] > 0.0) subset.push_back(m);
        } else {
            if (n == last - 1) {
                for (Eigen::Index m = 0; m < rows; ++m) subset.push_back(m);
            } else {
                const auto next = policy.decide_interior(n + 1, x);
                for (Eigen::Index m = 0; m < rows; ++m)
                    if (next[static_cast<std::size_t>(m)]) subset.push_back(m);
            }
        }

        auto& info = policy.training[static_cast<std::size_t>(n)];
        info.samples = subset.size();
        if (subset.empty()) {
            policy.set_degenerate(n);
            cf = cont;
            continue;
        }

        RowMatrix feats = make_features(contract, gather_rows(x, subset), config.augment_payoff);
        scaler.apply_inplace(feats);
        Eigen::VectorXd gs(static_cast<Eigen::Index>(subset.size())), cs(static_cast<Eigen::Index>(subset.size()));
        for (std::size_t i = 0; i < subset.size(); ++i) {
            gs[static_cast<Eigen::Index>(i)] = g[subset[i]];
            cs[static_cast<Eigen::Index>(i)] = cont[subset[i]];
        }

        const bool warm = config.warm_start && policy.has_network(n + 1);
        NetParams params;
        if (warm) {
            params = policy.network(n + 1);
        } else {
            NetSpec date_spec = spec;
            date_spec.init_seed = derive_seed(config.seed, "decision_net_init:" + std::to_string(n));
            params = init_params(date_spec);
        }
        MinibatchConfig mb;
        mb.steps = warm ? config.steps_warm : config.steps_fresh;
        mb.batch_size = config.batch_size;
        mb.shuffle_seed = derive_seed(config.seed, "decision_net_batches:" + std::to_string(n));
        mb.adam.learning_rate = warm ? config.lr_warm : config.lr_fresh;

        const BatchLoss loss = [&](std::span<const Eigen::Index> idx, const Eigen::VectorXd& out,
                                   Eigen::VectorXd& grad) {
            const double b = static_cast<double>(idx.size());
            double total = 0.0;
            for (std::size_t j = 0; j < idx.size(); ++j) {
                const double gj = gs[idx[j]], cj = cs[idx[j]], fj = out[static_cast<Eigen::Index>(j)];
                total += fj * gj + (1.0 - fj) * cj;
                grad[static_cast<Eigen::Index>(j)] = -(gj - cj) / b;
            }
            return -total / b;
        };
        info.final_loss = train_minibatch(spec, params, feats, loss, mb);
        info.steps = mb.steps;
        info.warm_started = warm;
        policy.set_network(n, std::move(params));

        const auto f = policy.decide_interior(n, x);
        for (Eigen::Index m = 0; m < rows; ++m) cf[m] = f[static_cast<std::size_t>(m)] ? g[m] : cont[m];
    }
    return policy;
}

}  // namespace bermex
