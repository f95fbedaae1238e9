// Command-line front end: `krein run <config.json>` or `krein run --preset
// NAME`, plus `krein presets`.  Exit codes: 0 all checks green, 2 numeric
// verdict failures, 3 config/validation problems.

#include <CLI11.hpp>

#include <cstdio>
#include <string>

#include <krein/scenario.hpp>
#include <krein/version.hpp>

int main(int argc, char** argv) {
    CLI::App app{"Krein-system spectral toolbox"};
    app.set_version_flag("--version", std::string(krein::version));
    app.require_subcommand(0, 1);

    auto* run = app.add_subcommand("run", "execute a scenario from a config file or preset");
    std::string config_path, preset, out_dir;
    unsigned threads = 0;
    long long seed = -1;
    run->add_option("config", config_path, "path to a JSON scenario config");
    run->add_option("--preset", preset, "preset name (see `krein presets`)");
    run->add_option("--out", out_dir, "output directory (overrides config)");
    run->add_option("--threads", threads, "worker thread count (overrides config)");
    run->add_option("--seed", seed, "random seed (overrides config)");

    auto* presets = app.add_subcommand("presets", "list available presets");

    CLI11_PARSE(app, argc, argv);

    if (presets->parsed()) {
        for (const auto& [name, desc] : krein::preset_catalog())
            std::printf("%-22s %s\n", name.c_str(), desc.c_str());
        return 0;
    }

    if (!run->parsed()) {
        std::fputs(app.help().c_str(), stdout);
        return 0;
    }

    try {
        krein::json j;
        if (!preset.empty() && !config_path.empty()) {
            std::fputs("error: give either a config file or --preset, not both\n", stderr);
            return 3;
        }
        if (!preset.empty()) {
            j = krein::preset_config(preset);
        } else if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) {
                std::fprintf(stderr, "error: cannot open %s\n", config_path.c_str());
                return 3;
            }
            in >> j;
        } else {
            std::fputs("error: `krein run` needs a config file or --preset\n", stderr);
            return 3;
        }
        if (!out_dir.empty()) j["out_dir"] = out_dir;
        if (threads > 0) j["threads"] = threads;
        if (seed >= 0) j["seed"] = static_cast<std::uint64_t>(seed);

        auto cfg = krein::ScenarioConfig::parse(j);
        auto bundle = krein::run_scenario(cfg);
        for (const auto& c : bundle.checks)
            std::printf("[%s] %s: %s\n", c.pass ? "PASS" : "FAIL", c.name.c_str(),
                        c.detail.c_str());
        std::printf("%s: %zu checks, %s (reports in %s)\n", cfg.kind.c_str(),
                    bundle.checks.size(), bundle.all_pass() ? "all green" : "FAILURES",
                    bundle.out_dir.string().c_str());
        return bundle.exit_code();
    } catch (const krein::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 3;
    } catch (const nlohmann::json::exception& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
