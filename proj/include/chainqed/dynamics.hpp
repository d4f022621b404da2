#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "chainqed/fock_space.hpp"
#include "chainqed/lattice_green.hpp"
#include "chainqed/modes.hpp"

namespace chainqed
{
    /// Everything fixed by the geometry and the truncation.
    struct ChainModel
    {
        ChainGeometry geometry;
        CouplingMatrices couplings;
        std::vector<CollectiveMode> modes;
        std::vector<TwoExcitationMode> pairs; // empty when n_max < 2
        TruncatedBasis basis;
        SparseMatrixC h_eff;
        MasterEquation equation;

        static ChainModel build(const ChainGeometry& geometry, int n_max);

        int n_atoms() const { return geometry.n_atoms; }
        /// Row-sum norm of the one-excitation H_eff.
        Real hopping_norm() const;
    };

    enum class DriveProfile
    {
        Superradiant,
        Uniform,
        Custom,
    };

    struct DriveConfig
    {
        Real rabi = 0.0;
        Real detuning = 0.0;
        DriveProfile profile = DriveProfile::Superradiant;
        VectorXc custom;
        Real t_start = 0.0;
        Real t_end = 0.0;

        /// Omega_n for each atom.
        VectorXc site_rabi(const std::vector<CollectiveMode>& modes, int n_atoms) const;
    };

    enum class DetuningKind
    {
        Staggered,
        Sinusoidal,
        Custom,
    };

    struct DetuningPattern
    {
        DetuningKind kind = DetuningKind::Staggered;
        Real amplitude = 0.0;
        int target = 1; // xi_aim for the sinusoidal pattern
        VectorXr custom;
        Real t_start = 0.0;
        Real t_end = 0.0;

        /// Delta_n, n = 1..N: staggered (-1)^n Delta, sinusoidal Delta sin(n xi_aim pi/(N+1)).
        VectorXr site_detuning(int n_atoms) const;
    };

    /// -Delta_0 N_exc - sum_n (Omega_n sigma_eg^n + h.c.)
    SparseMatrixC drive_hamiltonian(const DriveConfig& cfg, const std::vector<CollectiveMode>& modes,
                                    const TruncatedBasis& basis);

    /// Diagonal -sum_{n in S} Delta_n.
    SparseMatrixC pvd_hamiltonian(const DetuningPattern& pattern, const TruncatedBasis& basis);

    struct Phase
    {
        std::string name;
        Real duration = 0.0;
        Real dt = 0.0; // 0 picks the default for the active terms
        std::optional<DriveConfig> drive;
        std::optional<DetuningPattern> pvd;
        bool emission = false;
        bool closed_form = false; // use FreeEvolution when possible
        int samples = 0;          // > 0: this many evenly spaced records instead of the stride
    };

    struct ProtocolParameters
    {
        Real rabi = 100.0;
        Real pulse_area = 0.6; // Omega t_1
        DriveProfile profile = DriveProfile::Superradiant;
        VectorXc custom_profile;
        Real pvd_amplitude = 100.0;
        int xi_aim = 1;
        Real storage_time = 0.0;
        int emission_cycles = 0;
        Real dt_drive = 0.0;
        Real dt_transfer = 0.0;
        Real dt_free = 0.0;
        bool closed_form_storage = true;
        int storage_samples = 0;
    };

    struct ProtocolSchedule
    {
        std::vector<Phase> phases;

        /// illuminate, staggered transfer pi/(2 Delta), store, then emission_cycles x
        /// [sinusoidal transfer pi/(3 Delta), free flight 2/Gamma_xi_aim].
        static ProtocolSchedule canonical(const ProtocolParameters& params, const ChainModel& model);

        Real total_duration() const;
    };

    struct PhaseMarker
    {
        std::string name;
        Real start = 0.0;
        Real end = 0.0;
        std::size_t first_sample = 0;
    };

    struct TimeSeries
    {
        std::vector<Real> times;
        std::vector<VectorXr> manifold_populations; // probability per excitation number
        std::vector<Real> total_pop;                // <N_exc>
        std::vector<Real> gamma;                    // NaN where total_pop is below the floor
        std::vector<std::string> projection_names;
        std::vector<VectorXr> projections;
        std::vector<PhaseMarker> phases;

        std::size_t size() const { return times.size(); }
        const PhaseMarker& phase(const std::string& name) const;
    };

    /// Which mode projections to record: single-mode labels and double-mode pair labels.
    struct ProjectionRequest
    {
        std::vector<int> singles;
        std::vector<std::pair<int, int>> pairs;
    };

    struct Snapshot
    {
        std::string phase;
        Real time = 0.0;
        VectorXc coherences; // <sigma_ge^n>
    };

    struct RunOptions
    {
        int stride = 1;
        ProjectionRequest projections;
        std::vector<Real> snapshot_times;
        bool track_emission = true;
    };

    struct ProtocolResult
    {
        TimeSeries series;
        MatrixXc final_state;
        VectorXr emitted; // integral of Gamma_xi p_xi over emission phases, per single mode
        std::vector<Snapshot> snapshots;
    };

    VectorXr manifold_populations(const MatrixXc& rho, const TruncatedBasis& basis);
    Real total_population(const MatrixXc& rho, const TruncatedBasis& basis);

    /// Re <psi|rho|psi> with the unit right eigenvector embedded in the basis.
    /// For a double mode the atomic population it carries is twice this value.
    Real mode_projection(const MatrixXc& rho, const CollectiveMode& mode, const TruncatedBasis& basis);
    Real mode_projection(const MatrixXc& rho, const TwoExcitationMode& mode, const TruncatedBasis& basis);

    /// <sigma_ge^n> = Tr(sigma_ge^n rho).
    VectorXc coherences(const MatrixXc& rho, const TruncatedBasis& basis);

    /// -(d<N_exc>/dt)/<N_exc> from the master equation; NaN below `floor`.
    Real instantaneous_decay(const MatrixXc& rho, const SparseMatrixC& hamiltonian, const MasterEquation& equation,
                             Real floor = 1e-12);

    /// Maps rho from the frame rotating at omega_eg + from to the one at omega_eg + to, at time t.
    void change_frame(MatrixXc& rho, const TruncatedBasis& basis, Real from, Real to, Real t);

    /// Hamiltonian active during a phase (H_eff + drive + PVD), in that phase's frame.
    SparseMatrixC phase_hamiltonian(const Phase& phase, const ChainModel& model);

    /// Step size for a phase: explicit dt if set, else 0.02 over the fastest active frequency.
    Real phase_step(const Phase& phase, const ChainModel& model);

    /// Largest allowed RK4 step, 0.05 / max(Omega, Delta, |H_eff|_inf, 1).
    Real max_stable_step(const Phase& phase, const ChainModel& model);

    /// Fixed-step RK4 for one phase starting at `t0`; appends records to `series`.
    MatrixXc integrate(const MatrixXc& rho0, const Phase& phase, const ChainModel& model, Real t0,
                       const RunOptions& options, TimeSeries& series, ProtocolResult* extras = nullptr);

    ProtocolResult run_protocol(const ProtocolSchedule& schedule, const ChainModel& model,
                                const RunOptions& options = {}, const MatrixXc& initial = MatrixXc());

    /// First time >= window_start after which |gamma - target|/target < 0.1 holds for the rest
    /// of the series. nullopt if it never settles; Inconclusive if it only settles in the final
    /// tenth of the window.
    std::optional<Real> extract_transition_time(const std::vector<Real>& times, const std::vector<Real>& gamma,
                                                Real target, Real window_start);
}
