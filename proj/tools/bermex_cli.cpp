#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "bermex/config.hpp"
#include "bermex/errors.hpp"
#include "bermex/pipeline.hpp"

namespace fs = std::filesystem;
using namespace bermex;

namespace {

constexpr int kOk = 0;
constexpr int kOther = 1;
constexpr int kConfig = 2;
constexpr int kNumeric = 3;

void print_summary(const RunReport& report) {
    for (const auto& p : report.prices)
        std::printf("%-6s %-12s %.6f (SE %.6f, M=%zu)\n", p.method.c_str(), p.estimate.c_str(), p.value, p.std_err,
                    p.paths);
    for (const auto& t : report.timings) std::printf("stage %-16s %8.2f s\n", t.stage.c_str(), t.seconds);
    for (const auto& w : report.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
}

int run_config(const std::string& file, const std::string& out, bool exposure) {
    const ExperimentConfig config = load_config(file);
    RunOptions options;
    options.exposure = exposure;
    options.output_dir = out;
    const RunReport report = run_pipeline(config, options);
    print_summary(report);
    return kOk;
}

struct Report {
    std::string name;
    ExposureProfile profile;
    std::optional<ExperimentConfig> config;
};

Report load_report(const fs::path& arg) {
    Report r;
    fs::path csv = arg;
    if (fs::is_directory(arg)) {
        csv = arg / "exposure_profile.csv";
        r.name = arg.filename().string();
    } else {
        r.name = arg.parent_path().filename().string();
        const std::string stem = arg.stem().string();
        if (stem != "exposure_profile") r.name += (r.name.empty() ? "" : ":") + stem;
    }
    if (r.name.empty()) r.name = csv.stem().string();
    std::ifstream in(csv);
    if (!in) throw std::runtime_error("cannot open " + csv.string());
    r.profile = ExposureProfile::read_csv(in);
    const fs::path cfg = csv.parent_path() / "config.ini";
    if (fs::exists(cfg)) r.config = load_config(cfg);
    return r;
}

int compare(const std::vector<std::string>& args, const std::string& out) {
    std::vector<ExposureProfile> profiles;
    std::vector<std::string> names;
    std::optional<ExperimentConfig> first;
    for (const auto& a : args) {
        Report r = load_report(a);
        if (r.config) {
            if (!first) {
                first = r.config;
            } else {
                const auto& x = *first;
                const auto& y = *r.config;
                if (!(x.grid() == y.grid())) throw std::invalid_argument(a + ": exercise dates differ");
                if (x.contract.kind != y.contract.kind || x.contract.strike != y.contract.strike ||
                    x.contract.assets != y.contract.assets)
                    throw std::invalid_argument(a + ": contract differs");
            }
        }
        std::string name = r.name;
        for (int k = 2; std::find(names.begin(), names.end(), name) != names.end(); ++k)
            name = r.name + "#" + std::to_string(k);
        names.push_back(name);
        profiles.push_back(std::move(r.profile));
    }
    if (out.empty()) {
        compare_profiles(profiles, names, std::cout);
    } else {
        std::ofstream o(out, std::ios::binary);
        if (!o) throw std::runtime_error("cannot write " + out);
        compare_profiles(profiles, names, o);
    }
    return kOk;
}

int boundary(const std::string& policy_dir, const std::string& spec, int date, const std::string& out) {
    const DecisionPolicy policy = DecisionPolicy::load(policy_dir);
    const BoundaryGrid grid = BoundaryGrid::parse(spec, date);
    if (out.empty()) {
        write_boundary_grid({{"dos", &policy}}, grid, std::cout);
    } else {
        std::ofstream o(out, std::ios::binary);
        if (!o) throw std::runtime_error("cannot write " + out);
        write_boundary_grid({{"dos", &policy}}, grid, o);
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bermudan option exercise policies, value regression and exposure profiles"};
    app.require_subcommand(1);

    std::string config_file, out;
    auto* run = app.add_subcommand("run", "Full pipeline: train, price, regress, exposure");
    run->add_option("config", config_file, "Experiment configuration")->required();
    run->add_option("-o,--out", out, "Output directory (overrides the configuration)");

    auto* price = app.add_subcommand("price", "Train and price, skipping regression and exposure");
    price->add_option("config", config_file, "Experiment configuration")->required();
    price->add_option("-o,--out", out, "Output directory (overrides the configuration)");

    std::vector<std::string> reports;
    auto* cmp = app.add_subcommand("compare", "Per-date comparison of exposure profiles");
    cmp->add_option("reports", reports, "Run directories or exposure_profile CSV files")->required()->expected(2, -1);
    cmp->add_option("-o,--out", out, "Output CSV (default: stdout)");

    std::string policy_dir, spec;
    int date = -1;
    auto* bnd = app.add_subcommand("boundary", "Exercise decisions of a trained policy on a state grid");
    bnd->add_option("policy", policy_dir, "Policy bundle directory")->required();
    bnd->add_option("grid", spec, "lo:hi:points per state component, separated by ','")->required();
    bnd->add_option("-d,--date", date, "Exercise date index (default N-1)");
    bnd->add_option("-o,--out", out, "Output CSV (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kOther;
    }

    try {
        if (*run) return run_config(config_file, out, true);
        if (*price) return run_config(config_file, out, false);
        if (*cmp) return compare(reports, out);
        if (*bnd) return boundary(policy_dir, spec, date, out);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfig;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return kNumeric;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kOther;
    }
    return kOther;
}
