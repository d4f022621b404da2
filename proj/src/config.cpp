#include "chainqed/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

namespace chainqed
{
    namespace
    {
        using json = nlohmann::json;

        class Section
        {
        public:
            Section(const json& root, const char* name) : m_name(name)
            {
                if (!root.contains(name))
                    return;
                m_node = &root.at(name);
                if (!m_node->is_object())
                    fail(ErrorKind::Config, fmt::format("config section '{}' must be an object", name));
            }

            ~Section() noexcept(false)
            {
                if (!m_node || std::uncaught_exceptions() > 0)
                    return;
                for (const auto& item : m_node->items())
                    if (!m_seen.count(item.key()))
                        fail(ErrorKind::Config, fmt::format("unknown config key '{}.{}'", m_name, item.key()));
            }

            template <typename T>
            void read(const char* key, T& out)
            {
                m_seen.insert(key);
                if (!m_node || !m_node->contains(key))
                    return;
                const json& v = m_node->at(key);
                if (!matches(v, out))
                    fail(ErrorKind::Config, fmt::format("config key '{}.{}' has the wrong type", m_name, key));
                out = v.get<T>();
            }

        private:
            std::string m_name;
            const json* m_node = nullptr;
            std::set<std::string> m_seen;

            static bool matches(const json& v, const int&) { return v.is_number_integer(); }
            static bool matches(const json& v, const Real&) { return v.is_number(); }
            static bool matches(const json& v, const bool&) { return v.is_boolean(); }
            static bool matches(const json& v, const std::string&) { return v.is_string(); }
            template <typename T>
            static bool matches(const json& v, const std::vector<T>&)
            {
                if (!v.is_array())
                    return false;
                for (const auto& e : v)
                    if (!matches(e, T{}))
                        return false;
                return true;
            }
            template <typename T, std::size_t N>
            static bool matches(const json& v, const std::array<T, N>&)
            {
                if (!v.is_array() || v.size() != N)
                    return false;
                for (const auto& e : v)
                    if (!matches(e, T{}))
                        return false;
                return true;
            }
        };

        json to_tree(const RunConfig& c)
        {
            json j;
            j["geometry"] = {{"n_atoms", c.geometry.n_atoms}, {"spacing", c.geometry.spacing}};
            j["truncation"] = {{"n_max", c.truncation.n_max}};
            j["drive"] = {{"rabi", c.drive.rabi},
                          {"pulse_area", c.drive.pulse_area},
                          {"profile", c.drive.profile},
                          {"custom", c.drive.custom}};
            j["pvd"] = {{"amplitude", c.pvd.amplitude}, {"xi_aim", c.pvd.xi_aim}};
            j["schedule"] = {{"storage_time", c.schedule.storage_time},
                             {"emission_cycles", c.schedule.emission_cycles},
                             {"closed_form_storage", c.schedule.closed_form_storage},
                             {"storage_samples", c.schedule.storage_samples}};
            j["integrator"] = {{"dt_drive", c.integrator.dt_drive},
                               {"dt_transfer", c.integrator.dt_transfer},
                               {"dt_free", c.integrator.dt_free}};
            j["output"] = {{"directory", c.output.directory},
                           {"stride", c.output.stride},
                           {"single_modes", c.output.single_modes},
                           {"pair_modes", c.output.pair_modes}};
            j["sweep"] = {{"sizes", c.sweep.sizes},
                          {"pulse_areas", c.sweep.pulse_areas},
                          {"spacings", c.sweep.spacings},
                          {"window_decays", c.sweep.window_decays},
                          {"samples", c.sweep.samples},
                          {"times", c.sweep.times}};
            j["radiation"] = {{"snapshot_time", c.radiation.snapshot_time},
                              {"n_theta", c.radiation.n_theta},
                              {"n_phi", c.radiation.n_phi}};
            j["validation"] = {{"max_atoms", c.validation.max_atoms}};
            return j;
        }

        RunConfig from_tree(const json& j)
        {
            if (!j.is_object())
                fail(ErrorKind::Config, "config document must be a JSON object");
            static const std::set<std::string> sections{"geometry", "truncation", "drive", "pvd", "schedule",
                                                        "integrator", "output", "sweep", "radiation", "validation"};
            for (const auto& item : j.items())
                if (!sections.count(item.key()))
                    fail(ErrorKind::Config, fmt::format("unknown config section '{}'", item.key()));

            RunConfig c;
            {
                Section s(j, "geometry");
                s.read("n_atoms", c.geometry.n_atoms);
                s.read("spacing", c.geometry.spacing);
            }
            {
                Section s(j, "truncation");
                s.read("n_max", c.truncation.n_max);
            }
            {
                Section s(j, "drive");
                s.read("rabi", c.drive.rabi);
                s.read("pulse_area", c.drive.pulse_area);
                s.read("profile", c.drive.profile);
                s.read("custom", c.drive.custom);
            }
            {
                Section s(j, "pvd");
                s.read("amplitude", c.pvd.amplitude);
                s.read("xi_aim", c.pvd.xi_aim);
            }
            {
                Section s(j, "schedule");
                s.read("storage_time", c.schedule.storage_time);
                s.read("emission_cycles", c.schedule.emission_cycles);
                s.read("closed_form_storage", c.schedule.closed_form_storage);
                s.read("storage_samples", c.schedule.storage_samples);
            }
            {
                Section s(j, "integrator");
                s.read("dt_drive", c.integrator.dt_drive);
                s.read("dt_transfer", c.integrator.dt_transfer);
                s.read("dt_free", c.integrator.dt_free);
            }
            {
                Section s(j, "output");
                s.read("directory", c.output.directory);
                s.read("stride", c.output.stride);
                s.read("single_modes", c.output.single_modes);
                s.read("pair_modes", c.output.pair_modes);
            }
            {
                Section s(j, "sweep");
                s.read("sizes", c.sweep.sizes);
                s.read("pulse_areas", c.sweep.pulse_areas);
                s.read("spacings", c.sweep.spacings);
                s.read("window_decays", c.sweep.window_decays);
                s.read("samples", c.sweep.samples);
                s.read("times", c.sweep.times);
            }
            {
                Section s(j, "radiation");
                s.read("snapshot_time", c.radiation.snapshot_time);
                s.read("n_theta", c.radiation.n_theta);
                s.read("n_phi", c.radiation.n_phi);
            }
            {
                Section s(j, "validation");
                s.read("max_atoms", c.validation.max_atoms);
            }
            c.validate();
            return c;
        }
    }

    void RunConfig::validate() const
    {
        auto require = [](bool ok, const std::string& what) {
            if (!ok)
                fail(ErrorKind::Config, what);
        };
        require(geometry.n_atoms >= 1, "geometry.n_atoms must be >= 1");
        require(geometry.spacing > 0.0, "geometry.spacing must be positive");
        require(truncation.n_max >= 1 && truncation.n_max <= 3, "truncation.n_max must be 1, 2 or 3");
        require(drive.rabi > 0.0, "drive.rabi must be positive");
        require(drive.pulse_area >= 0.0, "drive.pulse_area must be non-negative");
        require(drive.profile == "superradiant" || drive.profile == "uniform" || drive.profile == "custom",
                "drive.profile must be superradiant, uniform or custom");
        require(drive.profile != "custom" || static_cast<int>(drive.custom.size()) == geometry.n_atoms,
                "drive.custom needs one entry per atom");
        require(pvd.amplitude > 0.0, "pvd.amplitude must be positive");
        require(pvd.xi_aim >= 1, "pvd.xi_aim must be >= 1");
        require(schedule.storage_time >= 0.0, "schedule.storage_time must be non-negative");
        require(schedule.emission_cycles >= 0, "schedule.emission_cycles must be non-negative");
        require(schedule.storage_samples >= 0, "schedule.storage_samples must be non-negative");
        require(integrator.dt_drive >= 0.0 && integrator.dt_transfer >= 0.0 && integrator.dt_free >= 0.0,
                "integrator steps must be non-negative");
        require(!output.directory.empty(), "output.directory must not be empty");
        require(output.stride >= 1, "output.stride must be >= 1");
        for (int xi : output.single_modes)
            require(xi >= 1 && xi <= geometry.n_atoms, "output.single_modes entries must lie in 1..n_atoms");
        for (const auto& p : output.pair_modes)
            require(p[0] >= 1 && p[1] <= geometry.n_atoms && p[0] < p[1],
                    "output.pair_modes entries must be pairs 1 <= a < b <= n_atoms");
        for (int n : sweep.sizes)
            require(n >= 2, "sweep.sizes entries must be >= 2");
        for (Real x : sweep.pulse_areas)
            require(x >= 0.0, "sweep.pulse_areas entries must be non-negative");
        for (Real a : sweep.spacings)
            require(a > 0.0, "sweep.spacings entries must be positive");
        for (Real t : sweep.times)
            require(t >= 0.0, "sweep.times entries must be non-negative");
        require(sweep.window_decays > 0.0, "sweep.window_decays must be positive");
        require(sweep.samples >= 2, "sweep.samples must be >= 2");
        require(radiation.n_theta >= 2 && radiation.n_phi >= 1, "radiation grid too small");
        require(validation.max_atoms >= 1, "validation.max_atoms must be >= 1");
    }

    std::string RunConfig::to_json() const { return to_tree(*this).dump(2); }

    RunConfig RunConfig::from_json(const std::string& text)
    {
        json j;
        try
        {
            j = json::parse(text);
        }
        catch (const json::exception& e)
        {
            fail(ErrorKind::Config, fmt::format("config is not valid JSON: {}", e.what()));
        }
        return from_tree(j);
    }

    RunConfig RunConfig::load(const std::string& path)
    {
        std::ifstream in(path);
        if (!in)
            fail(ErrorKind::Io, fmt::format("cannot read config file '{}'", path));
        std::stringstream buffer;
        buffer << in.rdbuf();
        return from_json(buffer.str());
    }

    void RunConfig::set(const std::string& assignment)
    {
        const auto eq = assignment.find('=');
        const auto dot = assignment.find('.');
        if (eq == std::string::npos || dot == std::string::npos || dot > eq)
            fail(ErrorKind::Config, fmt::format("override '{}' is not of the form section.key=value", assignment));
        const std::string section = assignment.substr(0, dot);
        const std::string key = assignment.substr(dot + 1, eq - dot - 1);
        const std::string text = assignment.substr(eq + 1);

        json value;
        try
        {
            value = json::parse(text);
        }
        catch (const json::exception&)
        {
            value = text;
        }
        json tree = to_tree(*this);
        if (!tree.contains(section))
            fail(ErrorKind::Config, fmt::format("unknown config section '{}'", section));
        tree[section][key] = value;
        *this = from_tree(tree);
    }
}
