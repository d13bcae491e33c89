// qutritsim: command-line front end for the qutrit evolution library.
//
// One verb per capability:
//   simulate   run scenarios (configs and/or presets), write all requested artifacts
//   entropy    same, but the output set is forced to the entropy series
//   poincare   same, forced to section crossings
//   classify   same, forced to the trajectory classification
//   equilibria same, forced to the stationary-solution listing
//   verify     run the algebra identity battery on seeded random draws
//   presets    list the bundled figure presets
//
// Exit codes: 0 success, 2 configuration/usage error, 3 numerical failure,
// 4 engine cross-check discrepancy.

#include <atomic>
#include <cstdio>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "qutrit/scenario.hpp"

namespace {

using namespace qutrit;

struct CommonOptions {
    std::vector<std::string> configs;
    std::vector<std::string> presets;
    std::string engine = "auto";
    std::string out_dir = "out";
    std::string format = "csv";
    std::uint64_t seed = 0;
};

void add_common(CLI::App* cmd, CommonOptions& opt) {
    cmd->add_option("--config", opt.configs, "scenario JSON file (repeatable)");
    cmd->add_option("--preset", opt.presets, "bundled preset name (repeatable)");
    cmd->add_option("--engine", opt.engine, "auto|closed|exact|ode")->capture_default_str();
    cmd->add_option("--out", opt.out_dir, "output directory")->capture_default_str();
    cmd->add_option("--format", opt.format, "csv|json")->capture_default_str();
    cmd->add_option("--seed", opt.seed, "seed for randomized searches")->capture_default_str();
}

int run_batch(const CommonOptions& opt, const std::optional<std::set<std::string>>& force_outputs) {
    std::vector<ScenarioConfig> configs;
    try {
        for (const auto& name : opt.presets) configs.push_back(preset(name));
        for (const auto& path : opt.configs) configs.push_back(load_scenario(path));
        if (configs.empty()) throw ConfigError("no --config or --preset given");
        for (auto& cfg : configs) {
            cfg.engine = engine_from_string(opt.engine);
            cfg.seed = opt.seed;
            if (force_outputs) cfg.outputs = *force_outputs;
            cfg.validate();
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    }

    std::atomic<int> status{0};
    auto run_one = [&](const ScenarioConfig& cfg) {
        try {
            const ScenarioResult res = run_scenario(cfg);
            const auto dir = configs.size() == 1
                ? std::filesystem::path(opt.out_dir)
                : std::filesystem::path(opt.out_dir) / cfg.name;
            const auto files = write_outputs(res, dir, opt.format);
            std::ostringstream msg;
            msg << cfg.name << ": case " << to_string(res.case_tag) << ", engine "
                << to_string(res.engine_used) << ", cross-check "
                << format_double(res.crosscheck_max) << "\n";
            for (const auto& f : files) msg << "  wrote " << f << "\n";
            std::cout << msg.str();
        } catch (const ConfigError& e) {
            std::cerr << cfg.name << ": config error: " << e.what() << "\n";
            status.store(kExitConfigError);
        } catch (const CrossCheckError& e) {
            std::cerr << cfg.name << ": " << e.what() << "\n";
            status.store(kExitCrossCheckError);
        } catch (const std::exception& e) {
            std::cerr << cfg.name << ": numerical failure: " << e.what() << "\n";
            status.store(kExitNumericalError);
        }
    };

    if (configs.size() == 1) {
        run_one(configs.front());
    } else {
        // scenarios are independent; fan out across worker threads
        const unsigned workers =
            std::min<unsigned>(std::max(1u, std::thread::hardware_concurrency()),
                               static_cast<unsigned>(configs.size()));
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < configs.size();
                     i = next.fetch_add(1))
                    run_one(configs[i]);
            });
        for (auto& th : pool) th.join();
    }
    return status.load();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"linear and nonlinear qutrit evolution on the Bloch 8-vector"};
    app.require_subcommand(1);

    CommonOptions opt;
    std::optional<std::set<std::string>> force;

    auto* simulate = app.add_subcommand("simulate", "run scenarios and write their artifacts");
    add_common(simulate, opt);
    auto* entropy_cmd = app.add_subcommand("entropy", "entropy time series of a scenario");
    add_common(entropy_cmd, opt);
    auto* poincare_cmd = app.add_subcommand("poincare", "section crossings of a scenario");
    add_common(poincare_cmd, opt);
    auto* classify_cmd = app.add_subcommand("classify", "long-time classification");
    add_common(classify_cmd, opt);
    auto* equilibria_cmd =
        app.add_subcommand("equilibria", "stationary solutions for the scenario parameters");
    add_common(equilibria_cmd, opt);

    std::uint64_t verify_seed = 1;
    int verify_count = 1000;
    auto* verify_cmd =
        app.add_subcommand("verify", "check the algebra identity battery on random draws");
    verify_cmd->add_option("--seed", verify_seed, "random seed")->capture_default_str();
    verify_cmd->add_option("--count", verify_count, "number of draws")->capture_default_str();

    auto* presets_cmd = app.add_subcommand("presets", "preset utilities");
    auto* presets_list = presets_cmd->add_subcommand("list", "list bundled presets");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : qutrit::kExitConfigError;
    }

    try {
        if (simulate->parsed()) return run_batch(opt, std::nullopt);
        if (entropy_cmd->parsed())
            return run_batch(opt, std::set<std::string>{"trajectory", "entropy"});
        if (poincare_cmd->parsed()) return run_batch(opt, std::set<std::string>{"poincare"});
        if (classify_cmd->parsed())
            return run_batch(opt, std::set<std::string>{"classification"});
        if (equilibria_cmd->parsed())
            return run_batch(opt, std::set<std::string>{"equilibria"});
        if (verify_cmd->parsed()) {
            const qutrit::VerifyReport rep = qutrit::verify_identities(verify_seed, verify_count);
            std::cout << rep.text;
            return rep.pass ? 0 : 1;
        }
        if (presets_cmd->parsed()) {
            if (presets_list->parsed() || presets_cmd->get_subcommands().empty()) {
                for (const auto& name : qutrit::preset_names()) std::cout << name << "\n";
                return 0;
            }
        }
    } catch (const qutrit::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return qutrit::kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return qutrit::kExitNumericalError;
    }
    return 0;
}
