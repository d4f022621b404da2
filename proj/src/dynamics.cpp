#include "chainqed/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "chainqed/free_evolution.hpp"

namespace chainqed
{
    namespace
    {
        constexpr Real nan = std::numeric_limits<Real>::quiet_NaN();

        // Embedded projection vectors for the requested modes.
        struct Recorder
        {
            std::vector<std::pair<int, VectorXc>> vectors; // (manifold, block vector)
            std::vector<std::string> names;

            Recorder(const ChainModel& model, const ProjectionRequest& request)
            {
                for (int xi : request.singles)
                {
                    if (xi < 1 || xi > model.n_atoms())
                        fail(ErrorKind::OutOfRange, fmt::format("projection on mode {} outside 1..{}", xi, model.n_atoms()));
                    vectors.emplace_back(1, model.modes[xi - 1].amplitudes);
                    names.push_back(fmt::format("proj_{}", xi));
                }
                for (auto label : request.pairs)
                {
                    if (model.pairs.empty())
                        fail(ErrorKind::BasisMismatch, "pair projections need n_max >= 2");
                    const auto& mode = find_pair(model.pairs, label);
                    vectors.emplace_back(2, mode.amplitudes);
                    names.push_back(fmt::format("proj_{}_{}", mode.pair_label.first, mode.pair_label.second));
                }
            }

            VectorXr project(const MatrixXc& rho, const TruncatedBasis& basis) const
            {
                VectorXr out(vectors.size());
                for (std::size_t i = 0; i < vectors.size(); ++i)
                {
                    const auto& [k, v] = vectors[i];
                    const auto blk = rho.block(basis.offset(k), basis.offset(k), v.size(), v.size());
                    out[static_cast<Eigen::Index>(i)] = (v.adjoint() * blk * v).value().real();
                }
                return out;
            }
        };

        void record(TimeSeries& series, Real t, const MatrixXc& rho, const ChainModel& model,
                    const SparseMatrixC& hamiltonian, const Recorder& recorder)
        {
            series.times.push_back(t);
            series.manifold_populations.push_back(manifold_populations(rho, model.basis));
            series.total_pop.push_back(total_population(rho, model.basis));
            series.gamma.push_back(instantaneous_decay(rho, hamiltonian, model.equation));
            series.projections.push_back(recorder.project(rho, model.basis));
        }

        VectorXr single_populations(const MatrixXc& rho, const ChainModel& model, const MatrixXc& vectors)
        {
            const int n = model.n_atoms();
            const auto blk = rho.block(model.basis.offset(1), model.basis.offset(1), n, n);
            return (vectors.adjoint() * blk * vectors).diagonal().real();
        }

        MatrixXc mode_matrix(const ChainModel& model)
        {
            const int n = model.n_atoms();
            MatrixXc v(n, n);
            for (int i = 0; i < n; ++i)
                v.col(i) = model.modes[i].amplitudes;
            return v;
        }

        VectorXr mode_decays(const ChainModel& model)
        {
            VectorXr g(model.n_atoms());
            for (int i = 0; i < model.n_atoms(); ++i)
                g[i] = model.modes[i].decay;
            return g;
        }

        Real frame_of(const Phase& phase) { return phase.drive ? phase.drive->detuning : 0.0; }

        bool use_closed_form(const Phase& phase, const ChainModel& model)
        {
            return phase.closed_form && !phase.drive && !phase.pvd && model.basis.n_max() <= 2;
        }

        MatrixXc closed_form_phase(const MatrixXc& rho0, const Phase& phase, const ChainModel& model, Real t0,
                                   const RunOptions& options, TimeSeries& series, ProtocolResult* extras,
                                   const Recorder& recorder)
        {
            const TruncatedBasis& basis = model.basis;
            const int n_max = basis.n_max();
            const FreeEvolution evolution(basis, model.h_eff, model.couplings.decay);

            std::vector<FreeEvolution::Observable> obs;
            for (int k = 0; k <= n_max; ++k)
                obs.push_back({{{k, MatrixXc::Identity(basis.block_size(k), basis.block_size(k))}}});
            FreeEvolution::Observable total;
            for (int k = 1; k <= n_max; ++k)
                total.terms.emplace_back(k, Real(k) * MatrixXc::Identity(basis.block_size(k), basis.block_size(k)));
            obs.push_back(total);
            for (const auto& [k, v] : recorder.vectors)
                obs.push_back({{{k, v * v.adjoint()}}});
            const bool emission = phase.emission && options.track_emission && extras;
            const auto first_mode = static_cast<Eigen::Index>(obs.size());
            if (emission)
                for (const auto& mode : model.modes)
                    obs.push_back({{{1, mode.amplitudes * mode.amplitudes.adjoint()}}});

            std::vector<Real> times;
            if (phase.samples > 0)
                for (int i = 1; i <= phase.samples; ++i)
                    times.push_back(phase.duration * i / phase.samples);
            else
            {
                const Real spacing = phase_step(phase, model) * std::max(1, options.stride);
                const auto count = static_cast<long>(std::ceil(phase.duration / spacing - 1e-9));
                for (long i = 1; i < count; ++i)
                    times.push_back(spacing * static_cast<Real>(i));
                times.push_back(phase.duration);
            }
            if (emission)
                times.insert(times.begin(), 0.0);

            const auto result = evolution.propagate(rho0, obs, times, phase.duration);
            const auto n_proj = static_cast<Eigen::Index>(recorder.vectors.size());
            for (std::size_t i = emission ? 1 : 0; i < times.size(); ++i)
            {
                const auto r = static_cast<Eigen::Index>(i);
                VectorXr pops(n_max + 1);
                for (int k = 0; k <= n_max; ++k)
                    pops[k] = result.values(r, k);
                const Real pop = result.values(r, n_max + 1);
                series.times.push_back(t0 + times[i]);
                series.manifold_populations.push_back(pops);
                series.total_pop.push_back(pop);
                series.gamma.push_back(pop > 1e-12 ? -result.rates(r, n_max + 1) / pop : nan);
                series.projections.push_back(result.values.row(r).segment(n_max + 2, n_proj).transpose());
            }
            if (emission)
            {
                const VectorXr g = mode_decays(model);
                for (std::size_t i = 1; i < times.size(); ++i)
                {
                    const auto r = static_cast<Eigen::Index>(i);
                    const Real h = times[i] - times[i - 1];
                    for (int m = 0; m < model.n_atoms(); ++m)
                        extras->emitted[m] += 0.5 * h * g[m] *
                                              (result.values(r, first_mode + m) + result.values(r - 1, first_mode + m));
                }
            }
            if (extras)
                for (Real ts : options.snapshot_times)
                    if (ts > t0 && ts < t0 + phase.duration)
                    {
                        const auto at = evolution.propagate(rho0, {}, {}, ts - t0);
                        extras->snapshots.push_back({phase.name, ts, coherences(at.final_state, basis)});
                    }
            return result.final_state;
        }
    }

    ChainModel ChainModel::build(const ChainGeometry& geometry, int n_max)
    {
        geometry.validate();
        ChainModel model;
        model.geometry = geometry;
        model.couplings = coupling_matrices(geometry);
        model.modes = single_modes(model.couplings);
        model.basis = TruncatedBasis(geometry.n_atoms, n_max);
        model.h_eff = embed_hopping(model.couplings.h_eff, model.basis);
        model.equation = MasterEquation(model.basis, model.couplings.decay);
        if (n_max >= 2)
            model.pairs = double_modes(model.couplings, model.basis, model.modes);
        return model;
    }

    Real ChainModel::hopping_norm() const { return couplings.h_eff.cwiseAbs().rowwise().sum().maxCoeff(); }

    VectorXc DriveConfig::site_rabi(const std::vector<CollectiveMode>& modes, int n_atoms) const
    {
        switch (profile)
        {
        case DriveProfile::Superradiant:
            if (static_cast<int>(modes.size()) != n_atoms)
                fail(ErrorKind::Config, "shaped drive needs the single-mode list of the chain");
            return rabi * modes.back().amplitudes;
        case DriveProfile::Uniform:
            return VectorXc::Constant(n_atoms, Complex(rabi, 0.0));
        case DriveProfile::Custom:
            if (custom.size() != n_atoms)
                fail(ErrorKind::Config, fmt::format("custom drive profile has {} entries for {} atoms", custom.size(), n_atoms));
            return rabi * custom;
        }
        fail(ErrorKind::Config, "unknown drive profile");
    }

    VectorXr DetuningPattern::site_detuning(int n_atoms) const
    {
        VectorXr d(n_atoms);
        switch (kind)
        {
        case DetuningKind::Staggered:
            for (int n = 1; n <= n_atoms; ++n)
                d[n - 1] = (n % 2 ? -1.0 : 1.0) * amplitude;
            return d;
        case DetuningKind::Sinusoidal:
            if (target < 1 || target > n_atoms)
                fail(ErrorKind::OutOfRange, fmt::format("target mode {} outside 1..{}", target, n_atoms));
            for (int n = 1; n <= n_atoms; ++n)
                d[n - 1] = amplitude * std::sin(n * target * std::numbers::pi / (n_atoms + 1));
            return d;
        case DetuningKind::Custom:
            if (custom.size() != n_atoms)
                fail(ErrorKind::Config, fmt::format("custom detuning pattern has {} entries for {} atoms", custom.size(), n_atoms));
            return custom;
        }
        fail(ErrorKind::Config, "unknown detuning pattern");
    }

    SparseMatrixC drive_hamiltonian(const DriveConfig& cfg, const std::vector<CollectiveMode>& modes,
                                    const TruncatedBasis& basis)
    {
        const VectorXc omega = cfg.site_rabi(modes, basis.n_atoms());
        std::vector<Eigen::Triplet<Complex>> entries;
        for (int a = 0; a < basis.dimension(); ++a)
        {
            if (basis.excitations(a) > 0 && cfg.detuning != 0.0)
                entries.emplace_back(a, a, -cfg.detuning * basis.excitations(a));
            for (int n = 0; n < basis.n_atoms(); ++n)
            {
                const int up = basis.raise(a, n);
                if (up < 0 || omega[n] == 0.0)
                    continue;
                entries.emplace_back(up, a, -omega[n]);
                entries.emplace_back(a, up, -std::conj(omega[n]));
            }
        }
        SparseMatrixC h(basis.dimension(), basis.dimension());
        h.setFromTriplets(entries.begin(), entries.end());
        return h;
    }

    SparseMatrixC pvd_hamiltonian(const DetuningPattern& pattern, const TruncatedBasis& basis)
    {
        return embed_site_diagonal(-pattern.site_detuning(basis.n_atoms()), basis);
    }

    ProtocolSchedule ProtocolSchedule::canonical(const ProtocolParameters& p, const ChainModel& model)
    {
        if (!(p.rabi > 0.0) || !(p.pulse_area >= 0.0) || !(p.pvd_amplitude > 0.0))
            fail(ErrorKind::Config, "protocol needs rabi > 0, pulse area >= 0 and PVD amplitude > 0");
        if (p.storage_time < 0.0 || p.emission_cycles < 0)
            fail(ErrorKind::Config, "storage time and emission cycles must be non-negative");

        ProtocolSchedule s;
        const Real t1 = p.pulse_area / p.rabi;

        Phase illuminate;
        illuminate.name = "illumination";
        illuminate.duration = t1;
        illuminate.dt = p.dt_drive;
        DriveConfig drive;
        drive.rabi = p.rabi;
        drive.profile = p.profile;
        drive.custom = p.custom_profile;
        // resonant with the superradiant mode the shaped profile addresses
        drive.detuning = model.modes.back().shift;
        drive.t_start = 0.0;
        drive.t_end = t1;
        illuminate.drive = drive;
        s.phases.push_back(illuminate);

        Real t = t1;
        Phase transfer;
        transfer.name = "transfer";
        transfer.duration = std::numbers::pi / (2.0 * p.pvd_amplitude);
        transfer.dt = p.dt_transfer;
        DetuningPattern staggered;
        staggered.kind = DetuningKind::Staggered;
        staggered.amplitude = p.pvd_amplitude;
        staggered.t_start = t;
        staggered.t_end = t + transfer.duration;
        transfer.pvd = staggered;
        s.phases.push_back(transfer);
        t += transfer.duration;

        if (p.storage_time > 0.0)
        {
            Phase store;
            store.name = "storage";
            store.duration = p.storage_time;
            store.dt = p.dt_free;
            store.closed_form = p.closed_form_storage;
            store.samples = p.storage_samples;
            s.phases.push_back(store);
            t += store.duration;
        }

        if (p.emission_cycles > 0)
        {
            const int n = model.n_atoms();
            if (p.xi_aim < 1 || p.xi_aim > n)
                fail(ErrorKind::Config, fmt::format("xi_aim = {} outside 1..{}", p.xi_aim, n));
            const Real flight = 2.0 / model.modes[p.xi_aim - 1].decay;
            for (int c = 1; c <= p.emission_cycles; ++c)
            {
                Phase shift;
                shift.name = fmt::format("emission_transfer_{}", c);
                shift.duration = std::numbers::pi / (3.0 * p.pvd_amplitude);
                shift.dt = p.dt_transfer;
                shift.emission = true;
                DetuningPattern sine;
                sine.kind = DetuningKind::Sinusoidal;
                sine.amplitude = p.pvd_amplitude;
                sine.target = p.xi_aim;
                sine.t_start = t;
                sine.t_end = t + shift.duration;
                shift.pvd = sine;
                s.phases.push_back(shift);
                t += shift.duration;

                Phase fly;
                fly.name = fmt::format("emission_free_{}", c);
                fly.duration = flight;
                fly.dt = p.dt_free;
                fly.emission = true;
                s.phases.push_back(fly);
                t += flight;
            }
        }
        return s;
    }

    Real ProtocolSchedule::total_duration() const
    {
        Real t = 0.0;
        for (const auto& p : phases)
            t += p.duration;
        return t;
    }

    const PhaseMarker& TimeSeries::phase(const std::string& name) const
    {
        for (const auto& m : phases)
            if (m.name == name)
                return m;
        fail(ErrorKind::OutOfRange, fmt::format("no phase named '{}' in the series", name));
    }

    VectorXr manifold_populations(const MatrixXc& rho, const TruncatedBasis& basis)
    {
        if (rho.rows() != basis.dimension() || rho.cols() != basis.dimension())
            fail(ErrorKind::BasisMismatch, "density matrix does not match the basis");
        VectorXr pops(basis.n_max() + 1);
        for (int k = 0; k <= basis.n_max(); ++k)
            pops[k] = rho.diagonal().segment(basis.offset(k), basis.block_size(k)).real().sum();
        return pops;
    }

    Real total_population(const MatrixXc& rho, const TruncatedBasis& basis)
    {
        const VectorXr pops = manifold_populations(rho, basis);
        Real sum = 0.0;
        for (int k = 1; k < pops.size(); ++k)
            sum += k * pops[k];
        return sum;
    }

    Real mode_projection(const MatrixXc& rho, const CollectiveMode& mode, const TruncatedBasis& basis)
    {
        if (rho.rows() != basis.dimension() || mode.amplitudes.size() != basis.n_atoms())
            fail(ErrorKind::BasisMismatch, "mode and density matrix do not share the basis");
        const auto blk = rho.block(basis.offset(1), basis.offset(1), basis.n_atoms(), basis.n_atoms());
        return (mode.amplitudes.adjoint() * blk * mode.amplitudes).value().real();
    }

    Real mode_projection(const MatrixXc& rho, const TwoExcitationMode& mode, const TruncatedBasis& basis)
    {
        if (basis.n_max() < 2 || rho.rows() != basis.dimension() || mode.amplitudes.size() != basis.block_size(2))
            fail(ErrorKind::BasisMismatch, "double mode and density matrix do not share the basis");
        const auto blk = rho.block(basis.offset(2), basis.offset(2), basis.block_size(2), basis.block_size(2));
        return (mode.amplitudes.adjoint() * blk * mode.amplitudes).value().real();
    }

    VectorXc coherences(const MatrixXc& rho, const TruncatedBasis& basis)
    {
        VectorXc c = VectorXc::Zero(basis.n_atoms());
        for (int y = 1; y < basis.dimension(); ++y)
            for (int n : basis.state(y))
                c[n] += rho(y, basis.lower(y, n));
        return c;
    }

    Real instantaneous_decay(const MatrixXc& rho, const SparseMatrixC& hamiltonian, const MasterEquation& equation,
                             Real floor)
    {
        const Real pop = total_population(rho, equation.basis());
        if (!(pop > floor))
            return nan;
        return -equation.excitation_rate(rho, hamiltonian) / pop;
    }

    void change_frame(MatrixXc& rho, const TruncatedBasis& basis, Real from, Real to, Real t)
    {
        const Real w = (to - from) * t;
        if (w == 0.0)
            return;
        for (int j = 0; j <= basis.n_max(); ++j)
            for (int k = 0; k <= basis.n_max(); ++k)
                if (j != k)
                    rho.block(basis.offset(j), basis.offset(k), basis.block_size(j), basis.block_size(k)) *=
                        std::exp(I * w * Real(j - k));
    }

    SparseMatrixC phase_hamiltonian(const Phase& phase, const ChainModel& model)
    {
        SparseMatrixC h = model.h_eff;
        if (phase.drive)
            h += drive_hamiltonian(*phase.drive, model.modes, model.basis);
        if (phase.pvd)
            h += pvd_hamiltonian(*phase.pvd, model.basis);
        return h;
    }

    Real max_stable_step(const Phase& phase, const ChainModel& model)
    {
        Real fastest = std::max(1.0, model.hopping_norm());
        if (phase.drive)
            fastest = std::max({fastest, std::abs(phase.drive->rabi), std::abs(phase.drive->detuning)});
        if (phase.pvd)
            fastest = std::max(fastest, phase.pvd->site_detuning(model.n_atoms()).cwiseAbs().maxCoeff());
        return 0.05 / fastest;
    }

    Real phase_step(const Phase& phase, const ChainModel& model)
    {
        if (phase.dt > 0.0)
            return phase.dt;
        Real dt = 0.02;
        if (phase.drive)
            dt = 0.02 / std::max(std::abs(phase.drive->rabi),
                                 std::abs(phase.drive->detuning) + model.hopping_norm());
        else if (phase.pvd)
            dt = 0.02 / std::max(1.0, std::abs(phase.pvd->amplitude));
        return std::min(dt, 0.4 * max_stable_step(phase, model));
    }

    MatrixXc integrate(const MatrixXc& rho0, const Phase& phase, const ChainModel& model, Real t0,
                       const RunOptions& options, TimeSeries& series, ProtocolResult* extras)
    {
        const Real target = phase_step(phase, model);
        const Real limit = max_stable_step(phase, model);
        if (target > limit * (1.0 + 1e-12))
            fail(ErrorKind::Config,
                 fmt::format("phase '{}': dt = {:.4g} exceeds the stability limit {:.4g}", phase.name, target, limit));
        if (!(phase.duration > 0.0))
            fail(ErrorKind::Config, fmt::format("phase '{}' needs a positive duration", phase.name));

        const Recorder recorder(model, options.projections);
        if (use_closed_form(phase, model))
            return closed_form_phase(rho0, phase, model, t0, options, series, extras, recorder);

        const auto steps = std::max<long>(1, static_cast<long>(std::ceil(phase.duration / target - 1e-9)));
        const Real dt = phase.duration / static_cast<Real>(steps);
        const SparseMatrixC h = phase_hamiltonian(phase, model);
        const MasterEquation& me = model.equation;

        const bool emission = phase.emission && options.track_emission && extras;
        const MatrixXc vectors = emission ? mode_matrix(model) : MatrixXc();
        const VectorXr decays = mode_decays(model);
        VectorXr before = emission ? single_populations(rho0, model, vectors) : VectorXr();

        const Real trace0 = rho0.trace().real();
        const int stride = std::max(1, options.stride);
        MatrixXc rho = rho0, k1, k2, k3, k4, tmp;
        for (long step = 1; step <= steps; ++step)
        {
            me.rhs_hermitian(rho, h, k1);
            tmp = rho + (0.5 * dt) * k1;
            me.rhs_hermitian(tmp, h, k2);
            tmp = rho + (0.5 * dt) * k2;
            me.rhs_hermitian(tmp, h, k3);
            tmp = rho + dt * k3;
            me.rhs_hermitian(tmp, h, k4);
            rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            rho = (0.5 * (rho + rho.adjoint())).eval();

            const Real trace = rho.trace().real();
            if (!std::isfinite(trace) || std::abs(trace - trace0) > 1e-4)
                fail(ErrorKind::Stability,
                     fmt::format("phase '{}': trace drifted from {:.10f} to {:.10f}", phase.name, trace0, trace));

            const Real t_prev = t0 + dt * static_cast<Real>(step - 1);
            const Real t = t0 + dt * static_cast<Real>(step);
            if (emission)
            {
                const VectorXr after = single_populations(rho, model, vectors);
                extras->emitted += (0.5 * dt) * decays.cwiseProduct(before + after);
                before = after;
            }
            if (extras)
                for (Real ts : options.snapshot_times)
                    if (ts > t_prev && ts <= t && step < steps)
                        extras->snapshots.push_back({phase.name, t, coherences(rho, model.basis)});

            bool keep;
            if (phase.samples > 0)
                keep = (step * phase.samples) / steps != ((step - 1) * phase.samples) / steps;
            else
                keep = step % stride == 0;
            if (keep || step == steps)
                record(series, t, rho, model, h, recorder);
        }
        return rho;
    }

    ProtocolResult run_protocol(const ProtocolSchedule& schedule, const ChainModel& model, const RunOptions& options,
                                const MatrixXc& initial)
    {
        const TruncatedBasis& basis = model.basis;
        ProtocolResult result;
        result.emitted = VectorXr::Zero(model.n_atoms());
        MatrixXc rho;
        if (initial.size() == 0)
        {
            rho = MatrixXc::Zero(basis.dimension(), basis.dimension());
            rho(0, 0) = 1.0;
        }
        else
        {
            if (initial.rows() != basis.dimension() || initial.cols() != basis.dimension())
                fail(ErrorKind::BasisMismatch, "initial state does not match the basis");
            rho = initial;
        }

        const Recorder recorder(model, options.projections);
        result.series.projection_names = recorder.names;
        for (const auto& p : schedule.phases)
            if (p.duration < 0.0)
                fail(ErrorKind::Config, fmt::format("phase '{}' has negative duration", p.name));

        const Phase* first = nullptr;
        for (const auto& p : schedule.phases)
            if (p.duration > 0.0)
            {
                first = &p;
                break;
            }
        record(result.series, 0.0, rho, model, first ? phase_hamiltonian(*first, model) : model.h_eff, recorder);

        Real t = 0.0, frame = 0.0;
        for (const auto& phase : schedule.phases)
        {
            if (phase.duration == 0.0)
                continue;
            const Real next = frame_of(phase);
            change_frame(rho, basis, frame, next, t);
            frame = next;
            result.series.phases.push_back({phase.name, t, t + phase.duration, result.series.size() - 1});
            rho = integrate(rho, phase, model, t, options, result.series, &result);
            t += phase.duration;
            result.snapshots.push_back({phase.name, t, coherences(rho, basis)});
        }
        change_frame(rho, basis, frame, 0.0, t);
        result.final_state = rho;
        return result;
    }

    std::optional<Real> extract_transition_time(const std::vector<Real>& times, const std::vector<Real>& gamma,
                                                Real target, Real window_start)
    {
        if (times.size() != gamma.size())
            fail(ErrorKind::DimensionMismatch, "times and gamma differ in length");
        if (!(target > 0.0))
            fail(ErrorKind::Domain, "target decay rate must be positive");
        std::size_t begin = 0;
        while (begin < times.size() && times[begin] < window_start)
            ++begin;
        if (times.size() - begin < 2)
            fail(ErrorKind::Inconclusive, "transition-time window holds fewer than two samples");

        auto close = [&](std::size_t i) {
            return std::isfinite(gamma[i]) && std::abs(gamma[i] - target) / target < 0.1;
        };
        if (!close(times.size() - 1))
            return std::nullopt;
        std::size_t i = times.size() - 1;
        while (i > begin && close(i - 1))
            --i;
        const Real span = times.back() - times[begin];
        if (i > begin && times[i] - times[begin] > 0.9 * span)
            fail(ErrorKind::Inconclusive, "gamma only settles in the last tenth of the window");
        return times[i];
    }
}
