#include "bermex/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "bermex/errors.hpp"

namespace bermex {

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>> kKnownKeys = {
    {"experiment", {"name", "seed", "output_dir"}},
    {"model",
     {"type", "assets", "s0", "r", "q", "sigma", "rho", "nu0", "kappa", "theta", "xi", "martingale_correction",
      "psi_threshold"}},
    {"contract", {"payoff", "strike"}},
    {"grid", {"maturity", "intervals", "substeps"}},
    {"paths", {"train", "valuation", "regression", "exposure"}},
    {"training",
     {"batch_size", "steps_fresh", "steps_warm", "lr_fresh", "lr_warm", "filter", "augment_payoff", "warm_start",
      "hidden", "hidden_activation"}},
    {"regression",
     {"enabled", "method", "basis", "degree", "bundles", "hidden", "hidden_activation", "output_mode",
      "augment_payoff", "steps", "batch_size", "learning_rate", "final_learning_rate"}},
    {"exposure", {"enabled", "estimators", "alphas", "mu_p"}},
    {"baselines", {"lsm", "lsm_basis", "sgbm", "sgbm_basis", "sgbm_bundles"}},
    {"boundary", {"enabled", "date", "lo", "hi", "points"}},
};

const std::set<std::string> kEstimators = {"EE1_Q", "EE2_Q", "EE1_P", "EE2_P", "EE3_P", "PFE_Q", "PFE_P"};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(trim(item));
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_short(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

template <typename T>
std::string join(const std::vector<T>& xs, const char* sep = ",") {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += sep;
        if constexpr (std::is_floating_point_v<T>)
            out += fmt(xs[i]);
        else if constexpr (std::is_arithmetic_v<T>)
            out += std::to_string(xs[i]);
        else
            out += xs[i];
    }
    return out;
}

std::string join_vec(const Eigen::VectorXd& v, const char* sep = ",") {
    return join(std::vector<double>(v.data(), v.data() + v.size()), sep);
}

class Reader {
public:
    explicit Reader(const std::string& text) {
        std::istringstream in(text);
        try {
            pt::read_ini(in, tree_);
        } catch (const pt::ini_parser_error& e) {
            throw ConfigError("", e.message(), static_cast<int>(e.line()));
        }
        std::istringstream scan(text);
        std::string line, section;
        int no = 0;
        while (std::getline(scan, line)) {
            ++no;
            const std::string t = trim(line);
            if (t.empty() || t[0] == ';' || t[0] == '#') continue;
            if (t[0] == '[') {
                section = trim(t.substr(1, t.find(']') - 1));
                section_lines_[section] = no;
                continue;
            }
            const auto eq = t.find('=');
            if (eq != std::string::npos) lines_[section + "." + trim(t.substr(0, eq))] = no;
        }
        for (const auto& [sec, body] : tree_) {
            if (body.empty() && !body.data().empty())
                throw ConfigError(sec, "keys must live inside a [section]", line_of(std::string(".") + sec));
            const auto known = kKnownKeys.find(sec);
            if (known == kKnownKeys.end())
                throw ConfigError(sec, "unknown section", section_lines_.count(sec) ? section_lines_.at(sec) : 0);
            for (const auto& [key, value] : body) {
                if (!known->second.count(key)) throw ConfigError(sec + "." + key, "unknown key", line_of(sec + "." + key));
            }
        }
    }

    bool has(const std::string& field) const { return tree_.get_optional<std::string>(pt::ptree::path_type(field, '.')).has_value(); }

    std::string str(const std::string& field, const std::string& fallback) const {
        const auto v = tree_.get_optional<std::string>(pt::ptree::path_type(field, '.'));
        return v ? trim(*v) : fallback;
    }

    std::string required(const std::string& field) const {
        if (!has(field)) throw ConfigError(field, "required key is missing");
        return str(field, "");
    }

    double number(const std::string& field, double fallback) const {
        return has(field) ? parse_number(field, str(field, "")) : fallback;
    }

    double number(const std::string& field) const { return parse_number(field, required(field)); }

    std::int64_t integer(const std::string& field, std::int64_t fallback) const {
        return has(field) ? parse_integer(field, str(field, "")) : fallback;
    }

    bool boolean(const std::string& field, bool fallback) const {
        if (!has(field)) return fallback;
        const std::string v = str(field, "");
        if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
        if (v == "false" || v == "0" || v == "no" || v == "off") return false;
        fail(field, "expected a boolean, got '" + v + "'");
    }

    std::vector<double> numbers(const std::string& field, const std::string& text) const {
        std::vector<double> out;
        for (const auto& item : split(text, ',')) out.push_back(parse_number(field, item));
        return out;
    }

    std::vector<int> integers(const std::string& field) const {
        std::vector<int> out;
        const std::string text = str(field, "");
        if (text.empty()) return out;
        for (const auto& item : split(text, ',')) out.push_back(static_cast<int>(parse_integer(field, item)));
        return out;
    }

    template <typename F>
    auto convert(const std::string& field, F&& f) const {
        try {
            return f(str(field, ""));
        } catch (const std::invalid_argument& e) {
            fail(field, e.what());
        }
    }

    [[noreturn]] void fail(const std::string& field, const std::string& msg) const {
        throw ConfigError(field, msg, line_of(field));
    }

    int line_of(const std::string& field) const {
        const auto it = lines_.find(field);
        if (it != lines_.end()) return it->second;
        const auto sec = section_lines_.find(field.substr(0, field.find('.')));
        return sec == section_lines_.end() ? 0 : sec->second;
    }

private:
    double parse_number(const std::string& field, const std::string& text) const {
        const std::string t = trim(text);
        char* end = nullptr;
        const double v = std::strtod(t.c_str(), &end);
        if (t.empty() || end != t.c_str() + t.size() || !std::isfinite(v))
            fail(field, "expected a finite number, got '" + t + "'");
        return v;
    }

    std::int64_t parse_integer(const std::string& field, const std::string& text) const {
        const std::string t = trim(text);
        const auto caret = t.find('^');
        if (caret != std::string::npos) {
            const auto base = parse_integer(field, t.substr(0, caret));
            const auto exp = parse_integer(field, t.substr(caret + 1));
            if (base < 0 || exp < 0 || exp > 62) fail(field, "power out of range in '" + t + "'");
            std::int64_t v = 1;
            for (std::int64_t i = 0; i < exp; ++i) v *= base;
            return v;
        }
        char* end = nullptr;
        const long long v = std::strtoll(t.c_str(), &end, 10);
        if (t.empty() || end != t.c_str() + t.size()) fail(field, "expected an integer, got '" + t + "'");
        return v;
    }

    pt::ptree tree_;
    std::map<std::string, int> lines_;
    std::map<std::string, int> section_lines_;
};

Eigen::VectorXd per_asset(const Reader& rd, const std::string& field, int assets, double fallback) {
    if (!rd.has(field)) return Eigen::VectorXd::Constant(assets, fallback);
    const auto v = rd.numbers(field, rd.str(field, ""));
    if (v.size() == 1) return Eigen::VectorXd::Constant(assets, v[0]);
    if (static_cast<int>(v.size()) != assets)
        rd.fail(field, "expected 1 or " + std::to_string(assets) + " values, got " + std::to_string(v.size()));
    return Eigen::Map<const Eigen::VectorXd>(v.data(), assets);
}

template <typename T, typename F>
T checked(const Reader& rd, const std::string& field, T fallback, F&& parse) {
    if (!rd.has(field)) return fallback;
    return rd.convert(field, parse);
}

}  // namespace

void ExperimentConfig::validate() const {
    auto bad = [](const std::string& field, const std::string& msg) { throw ConfigError(field, msg); };
    try {
        if (model == ModelKind::Gbm)
            gbm.validate();
        else
            heston.validate();
    } catch (const std::invalid_argument& e) {
        bad("model", e.what());
    }
    if (model == ModelKind::Gbm) {
        try {
            correlation_factor(gbm.rho);
        } catch (const std::exception& e) {
            bad("model.rho", e.what());
        }
    }
    try {
        contract.validate();
    } catch (const std::invalid_argument& e) {
        bad("contract", e.what());
    }
    if (!(maturity > 0.0)) bad("grid.maturity", "must be positive");
    if (intervals < 1) bad("grid.intervals", "must be >= 1");
    if (intervals > 65000) bad("grid.intervals", "too many exercise dates");
    if (substeps < 1) bad("grid.substeps", "must be >= 1");
    if (train_paths < 1) bad("paths.train", "must be >= 1");
    if (valuation_paths < 1) bad("paths.valuation", "must be >= 1");
    if (regression_paths < 1) bad("paths.regression", "must be >= 1");
    if (exposure_paths < 1) bad("paths.exposure", "must be >= 1");
    if (training.batch_size < 1) bad("training.batch_size", "must be >= 1");
    if (training.steps_fresh < 1) bad("training.steps_fresh", "must be >= 1");
    if (training.steps_warm < 1) bad("training.steps_warm", "must be >= 1");
    if (!(training.lr_fresh > 0.0)) bad("training.lr_fresh", "must be positive");
    if (!(training.lr_warm > 0.0)) bad("training.lr_warm", "must be positive");
    if (regression.steps < 1) bad("regression.steps", "must be >= 1");
    if (regression.batch_size < 1) bad("regression.batch_size", "must be >= 1");
    if (regression.bundles < 1) bad("regression.bundles", "must be >= 1");
    if (sgbm_bundles < 1) bad("baselines.sgbm_bundles", "must be >= 1");
    for (double a : alphas)
        if (!(a > 0.0 && a < 1.0)) bad("exposure.alphas", "every alpha must lie in (0, 1)");
    bool wants_p = false, wants_surface = false;
    for (const auto& e : estimators) {
        if (!kEstimators.count(e)) bad("exposure.estimators", "unknown estimator '" + e + "'");
        wants_p = wants_p || e.back() == 'P';
        wants_surface = wants_surface || e.rfind("EE1", 0) == 0 || e.rfind("PFE", 0) == 0;
    }
    if (exposure_enabled && wants_surface && !regression_enabled)
        bad("exposure.estimators", "EE1 and PFE estimators need [regression] enabled");
    if (exposure_enabled && wants_p) {
        if (model == ModelKind::Heston)
            bad("exposure.estimators",
                "real-world estimators need closed-form P dynamics and densities; only the GBM model provides them");
        if (real_world.empty()) bad("exposure.mu_p", "real-world estimators need at least one mu_p set");
    }
    for (const auto& rw : real_world)
        if (rw.mu.size() != contract.assets) bad("exposure.mu_p", "each mu_p set needs one drift per asset");
    if (boundary.enabled) {
        const auto d = static_cast<std::size_t>(state_dim());
        if (boundary.lo.size() != d || boundary.hi.size() != d || boundary.points.size() != d)
            bad("boundary", "lo, hi and points need one entry per state component");
        for (std::size_t i = 0; i < d; ++i) {
            if (boundary.points[i] < 1) bad("boundary.points", "must be >= 1");
            if (boundary.hi[i] < boundary.lo[i]) bad("boundary.hi", "must be >= lo");
        }
        if (boundary.date_index >= intervals || boundary.date_index < -1 || boundary.date_index == 0)
            bad("boundary.date", "must be an interior exercise date");
    }
}

ExperimentConfig parse_config(std::istream& in) {
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const Reader rd(text);
    ExperimentConfig c;

    c.name = rd.str("experiment.name", c.name);
    c.seed = static_cast<std::uint64_t>(rd.integer("experiment.seed", 0));
    c.output_dir = rd.str("experiment.output_dir", c.output_dir);

    const std::string type = rd.required("model.type");
    if (type == "gbm") {
        c.model = ModelKind::Gbm;
        const int d = static_cast<int>(rd.integer("model.assets", 1));
        if (d < 1) rd.fail("model.assets", "must be >= 1");
        c.gbm.s0 = per_asset(rd, "model.s0", d, 100.0);
        c.gbm.r = rd.number("model.r");
        c.gbm.q = per_asset(rd, "model.q", d, 0.0);
        c.gbm.sigma = per_asset(rd, "model.sigma", d, 0.2);
        c.gbm.rho = Eigen::MatrixXd::Identity(d, d);
        if (rd.has("model.rho")) {
            const auto rows = split(rd.str("model.rho", ""), ';');
            if (rows.size() == 1) {
                const auto v = rd.numbers("model.rho", rows[0]);
                if (v.size() != 1) rd.fail("model.rho", "give one correlation or d rows separated by ';'");
                c.gbm.rho = Eigen::MatrixXd::Constant(d, d, v[0]);
                c.gbm.rho.diagonal().setOnes();
            } else {
                if (static_cast<int>(rows.size()) != d) rd.fail("model.rho", "expected " + std::to_string(d) + " rows");
                for (int i = 0; i < d; ++i) {
                    const auto v = rd.numbers("model.rho", rows[static_cast<std::size_t>(i)]);
                    if (static_cast<int>(v.size()) != d) rd.fail("model.rho", "row " + std::to_string(i + 1) + " needs " + std::to_string(d) + " entries");
                    for (int j = 0; j < d; ++j) c.gbm.rho(i, j) = v[static_cast<std::size_t>(j)];
                }
            }
        }
        for (const char* k : {"model.nu0", "model.kappa", "model.theta", "model.xi", "model.martingale_correction",
                              "model.psi_threshold"})
            if (rd.has(k)) rd.fail(k, "not a GBM parameter");
        c.contract.assets = d;
        c.contract.state_offset = 0;
    } else if (type == "heston") {
        c.model = ModelKind::Heston;
        auto& h = c.heston;
        h.s0 = rd.number("model.s0");
        h.nu0 = rd.number("model.nu0");
        h.r = rd.number("model.r");
        h.q = rd.number("model.q", 0.0);
        h.kappa = rd.number("model.kappa");
        h.theta = rd.number("model.theta");
        h.xi = rd.number("model.xi");
        h.rho = rd.number("model.rho", 0.0);
        c.qe.martingale_correction = rd.boolean("model.martingale_correction", false);
        c.qe.psi_threshold = rd.number("model.psi_threshold", 1.5);
        for (const char* k : {"model.assets", "model.sigma"})
            if (rd.has(k)) rd.fail(k, "not a Heston parameter");
        c.contract.assets = 1;
        c.contract.state_offset = 1;
        c.substeps = 10;
    } else {
        rd.fail("model.type", "expected 'gbm' or 'heston', got '" + type + "'");
    }

    c.contract.kind = rd.convert("contract.payoff", [](const std::string& s) { return payoff_kind_from_string(s); });
    c.contract.strike = rd.number("contract.strike");
    if (!(c.contract.strike > 0.0)) rd.fail("contract.strike", "must be positive");

    c.maturity = rd.number("grid.maturity");
    c.intervals = static_cast<int>(rd.integer("grid.intervals", 1));
    c.substeps = static_cast<int>(rd.integer("grid.substeps", c.substeps));

    c.train_paths = static_cast<std::size_t>(rd.integer("paths.train", static_cast<std::int64_t>(c.train_paths)));
    c.valuation_paths = static_cast<std::size_t>(rd.integer("paths.valuation", static_cast<std::int64_t>(c.valuation_paths)));
    c.regression_paths = static_cast<std::size_t>(rd.integer("paths.regression", static_cast<std::int64_t>(c.regression_paths)));
    c.exposure_paths = static_cast<std::size_t>(rd.integer("paths.exposure", static_cast<std::int64_t>(c.exposure_paths)));
    for (const char* k : {"paths.train", "paths.valuation", "paths.regression", "paths.exposure"})
        if (rd.has(k) && rd.integer(k, 1) < 1) rd.fail(k, "must be >= 1");

    auto& t = c.training;
    t.batch_size = static_cast<int>(rd.integer("training.batch_size", t.batch_size));
    t.steps_fresh = static_cast<int>(rd.integer("training.steps_fresh", t.steps_fresh));
    t.steps_warm = static_cast<int>(rd.integer("training.steps_warm", t.steps_warm));
    t.lr_fresh = rd.number("training.lr_fresh", t.lr_fresh);
    t.lr_warm = rd.number("training.lr_warm", t.lr_warm);
    t.filter = checked(rd, "training.filter", t.filter, [](const std::string& s) { return filter_mode_from_string(s); });
    t.augment_payoff = rd.boolean("training.augment_payoff", t.augment_payoff);
    t.warm_start = rd.boolean("training.warm_start", t.warm_start);
    t.hidden = rd.integers("training.hidden");
    t.hidden_activation = checked(rd, "training.hidden_activation", t.hidden_activation,
                                  [](const std::string& s) { return activation_from_string(s); });

    auto& g = c.regression;
    c.regression_enabled = rd.boolean("regression.enabled", c.regression_enabled);
    g.method = checked(rd, "regression.method", g.method, [](const std::string& s) { return regression_method_from_string(s); });
    g.basis = checked(rd, "regression.basis", g.basis, [](const std::string& s) { return basis_preset_from_string(s); });
    g.degree = static_cast<int>(rd.integer("regression.degree", g.degree));
    g.bundles = static_cast<int>(rd.integer("regression.bundles", g.bundles));
    g.hidden = rd.integers("regression.hidden");
    g.hidden_activation = checked(rd, "regression.hidden_activation", g.hidden_activation,
                                  [](const std::string& s) { return activation_from_string(s); });
    g.output_mode = checked(rd, "regression.output_mode", g.output_mode, [](const std::string& s) { return output_mode_from_string(s); });
    g.augment_payoff = rd.boolean("regression.augment_payoff", g.augment_payoff);
    g.steps = static_cast<int>(rd.integer("regression.steps", g.steps));
    g.batch_size = static_cast<int>(rd.integer("regression.batch_size", g.batch_size));
    g.learning_rate = rd.number("regression.learning_rate", g.learning_rate);
    g.final_learning_rate = rd.number("regression.final_learning_rate", g.final_learning_rate);
    if (g.degree < 1) rd.fail("regression.degree", "must be >= 1");

    c.exposure_enabled = rd.boolean("exposure.enabled", c.exposure_enabled);
    if (rd.has("exposure.estimators")) {
        c.estimators.clear();
        for (const auto& e : split(rd.str("exposure.estimators", ""), ',')) {
            if (!kEstimators.count(e)) rd.fail("exposure.estimators", "unknown estimator '" + e + "'");
            c.estimators.push_back(e);
        }
    }
    if (rd.has("exposure.alphas")) {
        const std::string a = rd.str("exposure.alphas", "");
        c.alphas = a.empty() ? std::vector<double>{} : rd.numbers("exposure.alphas", a);
        for (double v : c.alphas)
            if (!(v > 0.0 && v < 1.0)) rd.fail("exposure.alphas", "every alpha must lie in (0, 1)");
    }
    if (rd.has("exposure.mu_p")) {
        for (const auto& set : split(rd.str("exposure.mu_p", ""), ';')) {
            if (set.empty()) continue;
            const auto v = rd.numbers("exposure.mu_p", set);
            RealWorldDrift rw;
            if (v.size() == 1)
                rw.mu = Eigen::VectorXd::Constant(c.contract.assets, v[0]);
            else if (static_cast<int>(v.size()) == c.contract.assets)
                rw.mu = Eigen::Map<const Eigen::VectorXd>(v.data(), c.contract.assets);
            else
                rd.fail("exposure.mu_p", "each set needs 1 or " + std::to_string(c.contract.assets) + " drifts");
            std::string label = "P(mu=";
            for (std::size_t i = 0; i < v.size(); ++i) label += (i ? "|" : "") + fmt_short(v[i]);
            rw.label = label + ")";
            c.real_world.push_back(rw);
        }
    }

    c.lsm = rd.boolean("baselines.lsm", c.lsm);
    c.lsm_basis = checked(rd, "baselines.lsm_basis", c.model == ModelKind::Heston ? BasisPreset::LsmHeston : BasisPreset::LsmBs,
                          [](const std::string& s) { return basis_preset_from_string(s); });
    c.sgbm = rd.boolean("baselines.sgbm", c.sgbm);
    c.sgbm_basis = checked(rd, "baselines.sgbm_basis", c.model == ModelKind::Heston ? BasisPreset::SgbmHeston : BasisPreset::SgbmBs,
                           [](const std::string& s) { return basis_preset_from_string(s); });
    c.sgbm_bundles = static_cast<int>(rd.integer("baselines.sgbm_bundles", c.sgbm_bundles));

    c.boundary.enabled = rd.boolean("boundary.enabled", false);
    c.boundary.date_index = static_cast<int>(rd.integer("boundary.date", -1));
    if (rd.has("boundary.lo")) c.boundary.lo = rd.numbers("boundary.lo", rd.str("boundary.lo", ""));
    if (rd.has("boundary.hi")) c.boundary.hi = rd.numbers("boundary.hi", rd.str("boundary.hi", ""));
    c.boundary.points = rd.integers("boundary.points");

    try {
        c.validate();
    } catch (const ConfigError& e) {
        if (e.line() == 0) {
            const std::string field = e.field();
            const std::string what = e.what();
            const std::string prefix = field.empty() ? "" : field + ": ";
            throw ConfigError(field, what.substr(prefix.size()), rd.line_of(field));
        }
        throw;
    }
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("", "cannot open config file " + file.string());
    return parse_config(in);
}

std::string serialize_config(const ExperimentConfig& c) {
    std::ostringstream o;
    auto b = [](bool v) { return v ? "true" : "false"; };
    o << "[experiment]\nname = " << c.name << "\nseed = " << c.seed << "\noutput_dir = " << c.output_dir << "\n\n";
    o << "[model]\n";
    if (c.model == ModelKind::Gbm) {
        const int d = c.gbm.dim();
        o << "type = gbm\nassets = " << d << "\ns0 = " << join_vec(c.gbm.s0) << "\nr = " << fmt(c.gbm.r)
          << "\nq = " << join_vec(c.gbm.q) << "\nsigma = " << join_vec(c.gbm.sigma) << "\nrho = ";
        for (int i = 0; i < d; ++i) o << (i ? "; " : "") << join_vec(c.gbm.rho.row(i).transpose());
        o << "\n\n";
    } else {
        const auto& h = c.heston;
        o << "type = heston\ns0 = " << fmt(h.s0) << "\nnu0 = " << fmt(h.nu0) << "\nr = " << fmt(h.r) << "\nq = " << fmt(h.q)
          << "\nkappa = " << fmt(h.kappa) << "\ntheta = " << fmt(h.theta) << "\nxi = " << fmt(h.xi) << "\nrho = " << fmt(h.rho)
          << "\nmartingale_correction = " << b(c.qe.martingale_correction) << "\npsi_threshold = " << fmt(c.qe.psi_threshold)
          << "\n\n";
    }
    o << "[contract]\npayoff = " << to_string(c.contract.kind) << "\nstrike = " << fmt(c.contract.strike) << "\n\n";
    o << "[grid]\nmaturity = " << fmt(c.maturity) << "\nintervals = " << c.intervals << "\nsubsteps = " << c.substeps << "\n\n";
    o << "[paths]\ntrain = " << c.train_paths << "\nvaluation = " << c.valuation_paths << "\nregression = " << c.regression_paths
      << "\nexposure = " << c.exposure_paths << "\n\n";
    const auto& t = c.training;
    o << "[training]\nbatch_size = " << t.batch_size << "\nsteps_fresh = " << t.steps_fresh << "\nsteps_warm = " << t.steps_warm
      << "\nlr_fresh = " << fmt(t.lr_fresh) << "\nlr_warm = " << fmt(t.lr_warm) << "\nfilter = " << to_string(t.filter)
      << "\naugment_payoff = " << b(t.augment_payoff) << "\nwarm_start = " << b(t.warm_start) << "\nhidden = " << join(t.hidden)
      << "\nhidden_activation = " << to_string(t.hidden_activation) << "\n\n";
    const auto& g = c.regression;
    o << "[regression]\nenabled = " << b(c.regression_enabled) << "\nmethod = " << to_string(g.method) << "\nbasis = " << to_string(g.basis)
      << "\ndegree = " << g.degree << "\nbundles = " << g.bundles << "\nhidden = " << join(g.hidden)
      << "\nhidden_activation = " << to_string(g.hidden_activation) << "\noutput_mode = " << to_string(g.output_mode)
      << "\naugment_payoff = " << b(g.augment_payoff) << "\nsteps = " << g.steps << "\nbatch_size = " << g.batch_size
      << "\nlearning_rate = " << fmt(g.learning_rate) << "\nfinal_learning_rate = " << fmt(g.final_learning_rate) << "\n\n";
    o << "[exposure]\nenabled = " << b(c.exposure_enabled) << "\nestimators = " << join(c.estimators) << "\nalphas = " << join(c.alphas)
      << "\nmu_p = ";
    for (std::size_t i = 0; i < c.real_world.size(); ++i) o << (i ? "; " : "") << join_vec(c.real_world[i].mu);
    o << "\n\n";
    o << "[baselines]\nlsm = " << b(c.lsm) << "\nlsm_basis = " << to_string(c.lsm_basis) << "\nsgbm = " << b(c.sgbm)
      << "\nsgbm_basis = " << to_string(c.sgbm_basis) << "\nsgbm_bundles = " << c.sgbm_bundles << "\n\n";
    o << "[boundary]\nenabled = " << b(c.boundary.enabled) << "\ndate = " << c.boundary.date_index << "\nlo = " << join(c.boundary.lo)
      << "\nhi = " << join(c.boundary.hi) << "\npoints = " << join(c.boundary.points) << "\n";
    return o.str();
}

}  // namespace bermex
