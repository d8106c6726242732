#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <spdlog/spdlog.h>

#include "romcut/pipeline.hpp"

namespace {

int run(const std::string& command, const std::string& config_path, const std::string& mu_text, bool deterministic) {
    romcut::Config c = romcut::Config::load(config_path);
    if (deterministic) c.apply("deterministic", "true");
    std::optional<romcut::ParameterPoint> mu;
    if (!mu_text.empty()) mu = romcut::parse_mu(mu_text);

    if (command == "fom") {
        const auto r = romcut::run_fom(c, mu);
        fmt::print("fom at mu = ({}): {} dofs, {} active cells, {:.3f} s, norms [{}]\n", fmt::join(r.mu, ", "), r.dofs,
                   r.active_cells, r.seconds, fmt::join(r.norms, ", "));
    } else if (command == "offline") {
        if (mu) throw romcut::ConfigError("--mu is not used by offline");
        const auto r = romcut::run_offline(c);
        fmt::print("offline: {} models written to {} (snapshots {:.2f} s)\n", r.models.size(), c.output,
                   r.snapshot_seconds);
    } else if (command == "online") {
        const auto m = romcut::run_online(c, mu);
        fmt::print("online: {} evaluations\n{}", m.size(), romcut::report(c.output));
    } else {
        fmt::print("{}", romcut::report(c.output));
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"romcut: localized reduced-order models on parameter-dependent cut-cell domains"};
    app.require_subcommand(1, 1);
    std::string config_path, mu_text;
    bool deterministic = false;
    bool verbose = false;
    for (const char* name : {"fom", "offline", "online", "report"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "benchmark configuration (key = value)")->required();
        sub->add_option("--mu", mu_text, "parameter point \"v1,v2\"");
        sub->add_flag("--deterministic", deterministic, "exact SVD everywhere");
        sub->add_flag("-v,--verbose", verbose, "debug logging");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }
    spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);
    const std::string command = app.get_subcommands().front()->get_name();
    try {
        return run(command, config_path, mu_text, deterministic);
    } catch (const romcut::ConfigError& e) {
        spdlog::error("{}", e.what());
        return 2;
    } catch (const romcut::NumericalError& e) {
        spdlog::error("{}", e.what());
        return 3;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 3;
    }
}
