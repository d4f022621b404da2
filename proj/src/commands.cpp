#include "chainqed/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <future>
#include <numbers>
#include <set>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>

#include "chainqed/radiation.hpp"
#include "chainqed/rate_model.hpp"

namespace chainqed
{
    namespace
    {
        using json = nlohmann::json;

        /// Runs body(i) for i in [0, count) on up to hardware_concurrency threads.
        template <typename F>
        void parallel_for(std::size_t count, F&& body)
        {
            const std::size_t workers =
                std::min<std::size_t>(count, std::max(1u, std::thread::hardware_concurrency()));
            std::atomic<std::size_t> next{0};
            std::vector<std::future<void>> futures;
            for (std::size_t w = 0; w < workers; ++w)
                futures.push_back(std::async(std::launch::async, [&] {
                    for (std::size_t i = next++; i < count; i = next++)
                        body(i);
                }));
            for (auto& f : futures)
                f.get();
        }

        std::filesystem::path output_directory(const RunConfig& config)
        {
            const std::filesystem::path dir(config.output.directory);
            std::error_code ec;
            std::filesystem::create_directories(dir, ec);
            if (ec)
                fail(ErrorKind::Io, fmt::format("cannot create output directory '{}': {}", dir.string(), ec.message()));
            return dir;
        }

        std::vector<Real> linspace(Real from, Real to, int count)
        {
            std::vector<Real> out(static_cast<std::size_t>(count));
            for (int i = 0; i < count; ++i)
                out[static_cast<std::size_t>(i)] =
                    count == 1 ? from : from + (to - from) * static_cast<Real>(i) / static_cast<Real>(count - 1);
            return out;
        }

        /// pop_n columns hold atomic population n P_n, so they sum to pop_total.
        std::vector<CsvCell> population_cells(const TimeSeries& s, std::size_t i)
        {
            const VectorXr& p = s.manifold_populations[i];
            std::vector<CsvCell> row{s.total_pop[i]};
            for (int k = 1; k <= 3; ++k)
                row.emplace_back(k < p.size() ? static_cast<Real>(k) * p[k] : 0.0);
            row.emplace_back(s.gamma[i]);
            return row;
        }

        std::string phase_at(const TimeSeries& s, std::size_t i)
        {
            std::string name = s.phases.empty() ? std::string() : s.phases.front().name;
            for (const auto& m : s.phases)
                if (m.first_sample < i || (m.first_sample == i && i == 0))
                    name = m.name;
            return name;
        }
    }

    CsvTable::CsvTable(std::string name, std::vector<std::string> columns, int schema_version)
        : m_name(std::move(name)), m_columns(std::move(columns)), m_schema_version(schema_version)
    {
    }

    void CsvTable::add_row(std::vector<CsvCell> row)
    {
        if (row.size() != m_columns.size())
            fail(ErrorKind::DimensionMismatch,
                 fmt::format("{}: row has {} cells, table has {} columns", m_name, row.size(), m_columns.size()));
        m_rows.push_back(std::move(row));
    }

    std::string format_cell(const CsvCell& cell)
    {
        if (const auto* r = std::get_if<Real>(&cell))
            return std::isnan(*r) ? std::string("nan") : fmt::format("{:.17g}", *r);
        if (const auto* i = std::get_if<long long>(&cell))
            return fmt::format("{}", *i);
        return std::get<std::string>(cell);
    }

    std::string CsvTable::csv() const
    {
        std::string out;
        for (std::size_t c = 0; c < m_columns.size(); ++c)
            out += (c ? "," : "") + m_columns[c];
        out += '\n';
        for (const auto& row : m_rows)
        {
            for (std::size_t c = 0; c < row.size(); ++c)
            {
                if (c)
                    out += ',';
                out += format_cell(row[c]);
            }
            out += '\n';
        }
        return out;
    }

    std::filesystem::path CsvTable::write(const std::filesystem::path& directory, const RunConfig& config) const
    {
        const auto path = directory / (m_name + ".csv");
        const auto sidecar = directory / (m_name + ".csv.json");
        {
            std::ofstream out(path, std::ios::binary);
            if (!(out << csv()))
                fail(ErrorKind::Io, fmt::format("cannot write '{}'", path.string()));
        }
        json meta;
        meta["artifact"] = "chainqed";
        meta["version"] = artifact_version;
        meta["schema"] = fmt::format("{}/{}", m_name, m_schema_version);
        meta["columns"] = m_columns;
        meta["rows"] = m_rows.size();
        meta["config"] = json::parse(config.to_json());
        std::ofstream out(sidecar, std::ios::binary);
        if (!(out << meta.dump(2) << '\n'))
            fail(ErrorKind::Io, fmt::format("cannot write '{}'", sidecar.string()));
        return path;
    }

    ChainGeometry geometry_of(const RunConfig& config)
    {
        ChainGeometry g = ChainGeometry::longitudinal(config.geometry.n_atoms, config.geometry.spacing);
        g.validate();
        return g;
    }

    ProtocolParameters protocol_parameters(const RunConfig& config)
    {
        ProtocolParameters p;
        p.rabi = config.drive.rabi;
        p.pulse_area = config.drive.pulse_area;
        if (config.drive.profile == "uniform")
            p.profile = DriveProfile::Uniform;
        else if (config.drive.profile == "custom")
        {
            p.profile = DriveProfile::Custom;
            p.custom_profile = Eigen::Map<const VectorXr>(config.drive.custom.data(),
                                                          static_cast<Eigen::Index>(config.drive.custom.size()))
                                   .cast<Complex>();
        }
        else
            p.profile = DriveProfile::Superradiant;
        p.pvd_amplitude = config.pvd.amplitude;
        p.xi_aim = config.pvd.xi_aim;
        p.storage_time = config.schedule.storage_time;
        p.emission_cycles = config.schedule.emission_cycles;
        p.dt_drive = config.integrator.dt_drive;
        p.dt_transfer = config.integrator.dt_transfer;
        p.dt_free = config.integrator.dt_free;
        p.closed_form_storage = config.schedule.closed_form_storage;
        p.storage_samples = config.schedule.storage_samples;
        return p;
    }

    ProjectionRequest projection_request(const RunConfig& config)
    {
        const int n = config.geometry.n_atoms;
        ProjectionRequest req;
        if (!config.output.single_modes.empty() || !config.output.pair_modes.empty())
        {
            req.singles = config.output.single_modes;
            for (const auto& p : config.output.pair_modes)
                req.pairs.emplace_back(p[0], p[1]);
            if (!req.pairs.empty() && config.truncation.n_max < 2)
                fail(ErrorKind::Config, "output.pair_modes needs truncation.n_max >= 2");
            return req;
        }
        std::set<int> singles{1, n};
        if (config.pvd.xi_aim <= n)
            singles.insert(config.pvd.xi_aim);
        if (n >= 2)
            singles.insert({2, n - 1});
        req.singles.assign(singles.begin(), singles.end());
        if (config.truncation.n_max >= 2 && n >= 2)
        {
            std::set<std::pair<int, int>> pairs{{1, 2}, {n - 1, n}};
            if (n >= 3)
                pairs.insert({{1, n - 1}, {2, n}});
            req.pairs.assign(pairs.begin(), pairs.end());
        }
        return req;
    }

    std::vector<std::filesystem::path> cmd_modes(const RunConfig& config)
    {
        config.validate();
        const auto dir = output_directory(config);
        const ChainGeometry geometry = geometry_of(config);
        const int n = geometry.n_atoms;
        const auto couplings = coupling_matrices(geometry);
        const auto singles = single_modes(couplings);

        std::vector<std::filesystem::path> written;
        CsvTable modes("modes", {"xi", "kz", "shift", "decay"});
        for (const auto& m : singles)
            modes.add_row({static_cast<long long>(m.label), kz_of_mode(n, geometry.spacing, m.label), m.shift, m.decay});
        written.push_back(modes.write(dir, config));

        CsvTable dispersion("dispersion", {"kz", "shift", "decay"});
        for (Real kz : linspace(0.0, std::numbers::pi / geometry.spacing, 512))
        {
            const Dispersion d = analytic_dispersion(kz, geometry.spacing);
            dispersion.add_row({kz, d.shift, d.decay});
        }
        written.push_back(dispersion.write(dir, config));

        if (config.truncation.n_max >= 2 && n >= 2)
        {
            const TruncatedBasis basis(n, 2);
            CsvTable pairs("double_modes", {"rank", "xi_a", "xi_b", "label_overlap", "ambiguous", "shift", "decay"});
            for (const auto& p : double_modes(couplings, basis, singles))
                pairs.add_row({static_cast<long long>(p.rank), static_cast<long long>(p.pair_label.first),
                               static_cast<long long>(p.pair_label.second), p.label_overlap,
                               static_cast<long long>(p.ambiguous()), p.shift, p.decay});
            written.push_back(pairs.write(dir, config));
        }
        return written;
    }

    std::vector<std::filesystem::path> cmd_protocol(const RunConfig& config)
    {
        config.validate();
        const auto dir = output_directory(config);
        const ChainModel model = ChainModel::build(geometry_of(config), config.truncation.n_max);
        const auto schedule = ProtocolSchedule::canonical(protocol_parameters(config), model);
        RunOptions options;
        options.stride = config.output.stride;
        options.projections = projection_request(config);
        const ProtocolResult result = run_protocol(schedule, model, options);
        const TimeSeries& s = result.series;

        std::vector<std::string> columns{"t", "pop_total", "pop_1", "pop_2", "pop_3", "gamma"};
        for (const auto& name : s.projection_names)
            columns.push_back(name);
        CsvTable series("protocol", columns);
        for (std::size_t i = 0; i < s.size(); ++i)
        {
            std::vector<CsvCell> row{s.times[i]};
            for (auto& c : population_cells(s, i))
                row.push_back(std::move(c));
            for (Eigen::Index k = 0; k < s.projections[i].size(); ++k)
                row.emplace_back(s.projections[i][k]);
            series.add_row(std::move(row));
        }

        CsvTable phases("phases", {"name", "start", "end", "first_sample"});
        for (const auto& p : s.phases)
            phases.add_row({p.name, p.start, p.end, static_cast<long long>(p.first_sample)});

        CsvTable emission("emission", {"xi", "decay", "emitted"});
        for (int xi = 1; xi <= model.n_atoms(); ++xi)
            emission.add_row({static_cast<long long>(xi), model.modes[static_cast<std::size_t>(xi - 1)].decay,
                              result.emitted[xi - 1]});

        return {series.write(dir, config), phases.write(dir, config), emission.write(dir, config)};
    }

    StorageRun storage_run(const ChainModel& model, Real pulse_area, const RunConfig& config)
    {
        if (model.pairs.empty())
            fail(ErrorKind::Config, "storage analysis needs n_max >= 2");
        ProtocolParameters params = protocol_parameters(config);
        const Real decay_first = model.modes.front().decay;
        params.pulse_area = pulse_area;
        params.storage_time = config.sweep.window_decays / decay_first;
        params.emission_cycles = 0;
        params.closed_form_storage = true;
        params.storage_samples = config.sweep.samples;

        RunOptions options;
        options.stride = config.output.stride;
        options.track_emission = false;
        const auto result = run_protocol(ProtocolSchedule::canonical(params, model), model, options);

        StorageRun run;
        run.n_atoms = model.n_atoms();
        run.spacing = model.geometry.spacing;
        run.pulse_area = pulse_area;
        run.decay_first = decay_first;
        run.kappa = find_pair(model.pairs, {1, 2}).decay / decay_first;
        run.series = result.series;
        run.transition_time = std::numeric_limits<Real>::quiet_NaN();

        const PhaseMarker& storage = run.series.phase("storage");
        try
        {
            const auto t = extract_transition_time(run.series.times, run.series.gamma, decay_first, storage.start);
            if (t)
            {
                run.status = "ok";
                run.transition_time = *t - storage.start;
            }
            else
                run.status = "none";
        }
        catch (const Error& e)
        {
            if (e.kind() != ErrorKind::Inconclusive)
                throw;
            run.status = "inconclusive";
        }
        return run;
    }

    std::vector<std::filesystem::path> cmd_storage_sweep(const RunConfig& config)
    {
        config.validate();
        const auto dir = output_directory(config);
        const auto& sw = config.sweep;

        std::vector<int> fit_sizes;
        for (int n = 10; n <= 40; ++n)
            fit_sizes.push_back(n);
        std::vector<Real> alpha(sw.spacings.size());
        for (std::size_t a = 0; a < sw.spacings.size(); ++a)
            alpha[a] = fit_subradiant_prefactor(sw.spacings[a], fit_sizes);

        // one job per (spacing, N); pulse areas share the model
        const std::size_t n_sizes = sw.sizes.size(), n_areas = sw.pulse_areas.size();
        std::vector<StorageRun> runs(sw.spacings.size() * n_sizes * n_areas);
        parallel_for(sw.spacings.size() * n_sizes, [&](std::size_t job) {
            const std::size_t a = job / n_sizes, s = job % n_sizes;
            const ChainModel model =
                ChainModel::build(ChainGeometry::longitudinal(sw.sizes[s], sw.spacings[a]), 2);
            for (std::size_t p = 0; p < n_areas; ++p)
            {
                StorageRun run = storage_run(model, sw.pulse_areas[p], config);
                run.series = {};
                runs[job * n_areas + p] = std::move(run);
            }
        });

        const Real nan = std::numeric_limits<Real>::quiet_NaN();
        CsvTable table("storage_sweep",
                       {"n_atoms", "spacing", "pulse_area", "status", "t_tr", "gamma_1", "kappa", "alpha_1",
                        "t_tr_formula", "ratio"});
        for (std::size_t i = 0; i < runs.size(); ++i)
        {
            const StorageRun& r = runs[i];
            const Real a1 = alpha[i / (n_sizes * n_areas)];
            Real formula = nan;
            if (r.kappa > 1.0)
                if (auto f = transition_time_formula(r.pulse_area, r.kappa, a1, r.n_atoms))
                    formula = *f;
            const Real ratio = r.status == "ok" && r.transition_time > 0.0 ? formula / r.transition_time : nan;
            table.add_row({static_cast<long long>(r.n_atoms), r.spacing, r.pulse_area, r.status, r.transition_time,
                           r.decay_first, r.kappa, a1, formula, ratio});
        }

        CsvTable fit("storage_sweep_fit", {"spacing", "pulse_area", "points", "exponent", "prefactor"});
        for (std::size_t a = 0; a < sw.spacings.size(); ++a)
            for (std::size_t p = 0; p < n_areas; ++p)
            {
                std::vector<Real> x, y;
                for (std::size_t s = 0; s < n_sizes; ++s)
                {
                    const StorageRun& r = runs[(a * n_sizes + s) * n_areas + p];
                    if (r.status == "ok" && r.transition_time > 0.0)
                    {
                        x.push_back(r.n_atoms);
                        y.push_back(r.transition_time);
                    }
                }
                PowerLaw law{nan, nan};
                if (x.size() >= 2)
                    law = fit_power_law(x, y);
                fit.add_row({sw.spacings[a], sw.pulse_areas[p], static_cast<long long>(x.size()), law.exponent,
                             law.prefactor});
            }
        return {table.write(dir, config), fit.write(dir, config)};
    }

    std::vector<std::filesystem::path> cmd_validate_truncation(const RunConfig& config)
    {
        config.validate();
        const int n = config.geometry.n_atoms;
        const int limit = config.validation.max_atoms;
        if (n > limit)
            fail(ErrorKind::Config,
                 fmt::format("n_max = 3 with {} atoms exceeds the memory guard; use geometry.n_atoms <= {} "
                             "or raise validation.max_atoms",
                             n, limit));
        const auto dir = output_directory(config);

        ProtocolParameters params = protocol_parameters(config);
        params.emission_cycles = 0;
        params.closed_form_storage = false;
        RunOptions options;
        options.stride = config.output.stride;
        options.track_emission = false;

        CsvTable table("truncation", {"n_max", "phase", "t", "pop_total", "pop_1", "pop_2", "pop_3", "gamma"});
        for (int n_max = 1; n_max <= std::min(3, n); ++n_max)
        {
            const ChainModel model = ChainModel::build(geometry_of(config), n_max);
            const ProtocolSchedule schedule = ProtocolSchedule::canonical(params, model);
            const auto result = run_protocol(schedule, model, options);
            const TimeSeries& s = result.series;
            for (std::size_t i = 0; i < s.size(); ++i)
            {
                std::vector<CsvCell> row{static_cast<long long>(n_max), phase_at(s, i), s.times[i]};
                for (auto& c : population_cells(s, i))
                    row.push_back(std::move(c));
                table.add_row(std::move(row));
            }
        }
        return {table.write(dir, config)};
    }

    std::vector<std::filesystem::path> cmd_radiation(const RunConfig& config)
    {
        config.validate();
        const ChainModel model = ChainModel::build(geometry_of(config), config.truncation.n_max);
        const auto schedule = ProtocolSchedule::canonical(protocol_parameters(config), model);
        const Real total = schedule.total_duration();
        const Real requested = config.radiation.snapshot_time;
        if (requested > total)
            fail(ErrorKind::OutOfRange,
                 fmt::format("snapshot time {} lies outside the run window [0, {}]", requested, total));

        RunOptions options;
        options.stride = std::max(config.output.stride, 1000000);
        options.track_emission = false;
        if (requested >= 0.0)
            options.snapshot_times = {requested};
        const auto result = run_protocol(schedule, model, options);

        const Snapshot* chosen = nullptr;
        if (requested < 0.0)
        {
            const std::string wanted = config.schedule.emission_cycles > 0 ? "emission_transfer_1" : "transfer";
            for (const auto& s : result.snapshots)
                if (s.phase == wanted && !chosen)
                    chosen = &s;
        }
        else
            for (const auto& s : result.snapshots)
                if (!chosen || std::abs(s.time - requested) < std::abs(chosen->time - requested))
                    chosen = &s;
        if (!chosen)
            fail(ErrorKind::OutOfRange, "no snapshot available for the requested time");

        FarFieldGrid grid;
        grid.n_theta = config.radiation.n_theta;
        grid.n_phi = config.radiation.n_phi;
        const FarFieldPattern pattern = far_field_pattern(chosen->coherences, model.geometry, grid);

        const auto dir = output_directory(config);
        CsvTable table("radiation", {"theta", "phi", "intensity"});
        for (Eigen::Index it = 0; it < pattern.theta.size(); ++it)
            for (Eigen::Index ip = 0; ip < pattern.phi.size(); ++ip)
                table.add_row({pattern.theta[it], pattern.phi[ip], pattern.intensity(it, ip)});

        const Real nan = std::numeric_limits<Real>::quiet_NaN();
        const auto cone = cone_angle(config.pvd.xi_aim, model.n_atoms(), model.geometry.spacing);
        const Real peak = pattern.peak_theta();
        const Real mismatch =
            cone ? std::min(std::abs(peak - *cone), std::abs(peak - (std::numbers::pi - *cone))) : nan;
        CsvTable summary("radiation_cone",
                         {"xi_aim", "snapshot_phase", "snapshot_time", "cone_angle", "peak_theta", "mismatch"});
        summary.add_row({static_cast<long long>(config.pvd.xi_aim), chosen->phase, chosen->time, cone ? *cone : nan,
                         peak, mismatch});
        return {table.write(dir, config), summary.write(dir, config)};
    }

    std::vector<std::filesystem::path> cmd_rate_model(const RunConfig& config)
    {
        config.validate();
        const auto dir = output_directory(config);
        const ChainModel model = ChainModel::build(geometry_of(config), 2);
        const Real pulse = config.drive.pulse_area;
        const RateModelConfig rm = rate_model_for(model, pulse);
        const Real kappa = rm.decay_pair / rm.decay_first;

        std::vector<int> fit_sizes;
        for (int n = 10; n <= 40; ++n)
            fit_sizes.push_back(n);
        const Real alpha1 = fit_subradiant_prefactor(model.geometry.spacing, fit_sizes);
        const Real nan = std::numeric_limits<Real>::quiet_NaN();
        Real formula = nan;
        if (kappa > 1.0)
            if (auto f = transition_time_formula(pulse, kappa, alpha1, model.n_atoms()))
                formula = *f;

        CsvTable rates("rate_model_rates", {"decay_first", "decay_second", "decay_pair", "branch_first",
                                            "branch_second", "kappa", "alpha_1", "t_tr_formula"});
        rates.add_row({rm.decay_first, rm.decay_second, rm.decay_pair, rm.branch_first, rm.branch_second, kappa,
                       alpha1, formula});

        CsvTable curve("rate_model", {"t", "pair", "first", "second", "pop_rate_model", "pop_closed_form",
                                      "gamma_closed_form"});
        for (Real t : linspace(0.0, config.sweep.window_decays / rm.decay_first, config.sweep.samples))
        {
            const RateState s = evolve_rate_model(rm, t);
            curve.add_row({t, s.pair, s.first, s.second, s.atomic_population(),
                           pop_closed_form(pulse, rm.decay_first, rm.decay_pair, t),
                           gamma_closed_form(pulse, rm.decay_first, kappa, t)});
        }
        return {rates.write(dir, config), curve.write(dir, config)};
    }

    std::vector<std::filesystem::path> cmd_kappa_map(const RunConfig& config)
    {
        config.validate();
        const auto dir = output_directory(config);
        const auto& sw = config.sweep;
        struct Cell
        {
            Real decay_first = 0.0, decay_pair = 0.0;
        };
        std::vector<Cell> cells(sw.spacings.size() * sw.sizes.size());
        parallel_for(cells.size(), [&](std::size_t i) {
            const int n = sw.sizes[i % sw.sizes.size()];
            if (n < 3)
                fail(ErrorKind::OutOfRange, fmt::format("kappa map needs at least three atoms, got {}", n));
            const auto couplings =
                coupling_matrices(ChainGeometry::longitudinal(n, sw.spacings[i / sw.sizes.size()]));
            const auto singles = single_modes(couplings);
            const auto pairs = double_modes(couplings, TruncatedBasis(n, 2), singles);
            cells[i] = {singles.front().decay, find_pair(pairs, {1, 2}).decay};
        });

        CsvTable table("kappa_map", {"n_atoms", "spacing", "decay_first", "decay_pair", "kappa"});
        for (std::size_t i = 0; i < cells.size(); ++i)
            table.add_row({static_cast<long long>(sw.sizes[i % sw.sizes.size()]), sw.spacings[i / sw.sizes.size()],
                           cells[i].decay_first, cells[i].decay_pair, cells[i].decay_pair / cells[i].decay_first});
        return {table.write(dir, config)};
    }
}
