#include <functional>
#include <iostream>
#include <map>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "chainqed/commands.hpp"

namespace
{
    using namespace chainqed;

    struct Overrides
    {
        std::string config_path;
        std::vector<std::string> assignments;
        std::optional<int> atoms;
        std::optional<double> spacing;
        std::optional<int> n_max;
        std::optional<std::string> output;
        std::optional<double> pulse_area;
        std::optional<int> xi_aim;
        std::optional<double> time;
    };

    void add_common(CLI::App* cmd, Overrides& o)
    {
        cmd->add_option("--config", o.config_path, "JSON config file");
        cmd->add_option("--set", o.assignments, "override as section.key=value (repeatable)");
        cmd->add_option("--atoms", o.atoms, "geometry.n_atoms");
        cmd->add_option("--spacing", o.spacing, "geometry.spacing in units of the transition wavelength");
        cmd->add_option("--n-max", o.n_max, "truncation.n_max");
        cmd->add_option("--output", o.output, "output.directory");
        cmd->add_option("--pulse-area", o.pulse_area, "drive.pulse_area");
        cmd->add_option("--xi-aim", o.xi_aim, "pvd.xi_aim");
    }

    RunConfig resolve(const Overrides& o)
    {
        RunConfig c = o.config_path.empty() ? RunConfig{} : RunConfig::load(o.config_path);
        for (const auto& a : o.assignments)
            c.set(a);
        if (o.atoms)
            c.set(fmt::format("geometry.n_atoms={}", *o.atoms));
        if (o.spacing)
            c.set(fmt::format("geometry.spacing={:.17g}", *o.spacing));
        if (o.n_max)
            c.set(fmt::format("truncation.n_max={}", *o.n_max));
        if (o.output)
            c.set(fmt::format("output.directory={}", nlohmann::json(*o.output).dump()));
        if (o.pulse_area)
            c.set(fmt::format("drive.pulse_area={:.17g}", *o.pulse_area));
        if (o.xi_aim)
            c.set(fmt::format("pvd.xi_aim={}", *o.xi_aim));
        if (o.time)
            c.set(fmt::format("radiation.snapshot_time={:.17g}", *o.time));
        c.validate();
        return c;
    }

    int report_error(const std::string& kind, const std::string& message)
    {
        nlohmann::json record;
        record["error"] = {{"kind", kind}, {"message", message}};
        std::cerr << record.dump() << '\n';
        return 1;
    }
}

int main(int argc, char** argv)
{
    using Command = std::function<std::vector<std::filesystem::path>(const RunConfig&)>;
    const std::vector<std::tuple<std::string, std::string, Command>> commands{
        {"modes", "single-mode table, analytic dispersion and double modes", cmd_modes},
        {"protocol", "illuminate, transfer, store and emit; writes the time series", cmd_protocol},
        {"storage-sweep", "transition time over sweep.sizes x sweep.pulse_areas", cmd_storage_sweep},
        {"validate-truncation", "compare n_max = 1, 2, 3 over illumination and storage", cmd_validate_truncation},
        {"radiation", "far-field pattern at a protocol snapshot", cmd_radiation},
        {"rate-model", "three-state cascade and closed forms for the configured chain", cmd_rate_model},
        {"kappa-map", "Gamma_(1,2) / Gamma_1 over sweep.sizes x sweep.spacings", cmd_kappa_map},
    };

    CLI::App app{"Collective dynamics of a sub-wavelength atomic chain"};
    app.require_subcommand(1);
    bool print_config = false;
    app.add_flag("--print-config", print_config, "print the resolved config instead of running");

    Overrides overrides;
    std::map<CLI::App*, Command> handlers;
    for (const auto& [name, help, fn] : commands)
    {
        CLI::App* cmd = app.add_subcommand(name, help);
        add_common(cmd, overrides);
        if (name == "radiation")
            cmd->add_option("--time", overrides.time, "snapshot time; default is the end of the first emission transfer");
        handlers[cmd] = fn;
    }

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp& e)
    {
        return app.exit(e);
    }
    catch (const CLI::CallForAllHelp& e)
    {
        return app.exit(e);
    }
    catch (const CLI::ParseError& e)
    {
        return report_error("Usage", e.what());
    }

    try
    {
        const RunConfig config = resolve(overrides);
        if (print_config)
        {
            std::cout << config.to_json() << '\n';
            return 0;
        }
        for (auto* sub : app.get_subcommands())
            for (const auto& path : handlers.at(sub)(config))
                std::cout << path.string() << '\n';
        return 0;
    }
    catch (const Error& e)
    {
        return report_error(std::string(to_string(e.kind())), e.what());
    }
    catch (const std::exception& e)
    {
        return report_error("Internal", e.what());
    }
}
