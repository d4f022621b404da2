#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "chainqed/fock_space.hpp"
#include "chainqed/lattice_green.hpp"

namespace chainqed
{
    /// Eigenmode of the one-excitation effective Hamiltonian, eigenvalue shift - i decay / 2.
    struct CollectiveMode
    {
        int label = 0; // 1..N, ascending decay
        VectorXc amplitudes;
        Real shift = 0.0;
        Real decay = 0.0;

        Complex eigenvalue() const { return {shift, -0.5 * decay}; }
    };

    /// Eigenmode of H_eff in the two-excitation manifold, amplitudes over pairs m < n.
    struct TwoExcitationMode
    {
        int rank = 0; // 1..N(N-1)/2, ascending decay
        std::pair<int, int> pair_label{0, 0};
        Real label_overlap = 0.0;
        VectorXc amplitudes;
        Real shift = 0.0;
        Real decay = 0.0;

        bool ambiguous() const { return label_overlap < 0.5; }
    };

    std::vector<CollectiveMode> single_modes(const CouplingMatrices& coupling);

    /// sqrt(2/(N+1)) sin((N+1-xi) m pi/(N+1)), m = 1..N.
    VectorXr sine_ansatz(int n_atoms, int label);

    Real kz_of_mode(int n_atoms, Real spacing, int label);

    struct Dispersion
    {
        Real decay = 0.0;
        Real shift = 0.0;
    };

    /// Infinite-chain dispersion for dipoles along the chain: decay from the light-cone
    /// sum over reciprocal vectors, shift from the Li_2 / Li_3 lattice sums.
    Dispersion analytic_dispersion(Real kz, Real spacing);

    /// Li_s(z) for s in {2, 3} and |z| <= 1.
    Complex polylog(int s, Complex z);

    std::vector<TwoExcitationMode> double_modes(const CouplingMatrices& coupling, const TruncatedBasis& basis,
                                                const std::vector<CollectiveMode>& singles);
    std::vector<TwoExcitationMode> double_modes(const CouplingMatrices& coupling, const TruncatedBasis& basis);

    /// Normalized antisymmetric product of single modes xi1, xi2 (1-based labels) over pairs m < n.
    VectorXc fermionic_ansatz(const std::vector<CollectiveMode>& modes, int xi1, int xi2);

    /// <ans(xi1, xi2)| E^dag E^dag |g> / (norm Omega^2) with sine-ansatz coefficients,
    /// as the double sum over i < j.
    Complex two_photon_drive_overlap(int n_atoms, int xi1, int xi2, Real rabi);

    /// Dual bra of a right eigenvector of a complex symmetric matrix: c^T / (c^T c).
    VectorXc biorthogonal_dual(const VectorXc& right);

    /// Index into a double-mode list of the mode carrying `label`; throws OutOfRange if absent.
    const TwoExcitationMode& find_pair(const std::vector<TwoExcitationMode>& modes, std::pair<int, int> label);

    /// Embeds a one-excitation vector (length N) or pair vector (length N(N-1)/2) into the basis.
    VectorXc embed_single(const VectorXc& amplitudes, const TruncatedBasis& basis);
    VectorXc embed_pair(const VectorXc& amplitudes, const TruncatedBasis& basis);

    struct PowerLaw
    {
        Real exponent = 0.0;
        Real prefactor = 0.0;
    };

    /// Least-squares line through (log x, log y).
    PowerLaw fit_power_law(const std::vector<Real>& x, const std::vector<Real>& y);

    /// alpha_1 in Gamma_1 = alpha_1 N^-3, fitted with the exponent fixed to -3.
    Real fit_subradiant_prefactor(Real spacing, const std::vector<int>& sizes);
}
