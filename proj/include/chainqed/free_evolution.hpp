#pragma once

#include <utility>
#include <vector>

#include "chainqed/fock_space.hpp"

namespace chainqed
{
    /// Closed-form propagation of the master equation under a number-conserving Hamiltonian
    /// (no drive) for n_max <= 2.
    ///
    /// Each manifold block H_k = V_k diag(mu_k) V_k^-1 is diagonalized once. In those
    /// coordinates every block of rho is a sum of exponentials e^{-i nu t}; the only
    /// cross-manifold feeding is the recycling of (j+1, k+1) into (j, k). Observables
    /// are evaluated exactly at any set of times, with their time derivatives.
    class FreeEvolution
    {
    public:
        /// Sum over manifolds k of Re Tr(weight_k rho_kk).
        struct Observable
        {
            std::vector<std::pair<int, MatrixXc>> terms;
        };

        struct Result
        {
            MatrixXr values; // sample x observable
            MatrixXr rates;  // time derivatives
            MatrixXc final_state;
        };

        FreeEvolution(const TruncatedBasis& basis, const SparseMatrixC& hamiltonian, const MatrixXr& decay);

        /// Times are measured from the state rho0; `t_final` fixes the returned state.
        Result propagate(const MatrixXc& rho0, const std::vector<Observable>& observables,
                         const std::vector<Real>& times, Real t_final) const;

        const TruncatedBasis& basis() const { return m_basis; }

    private:
        struct Secular
        {
            int q;
            Complex nu_q;
            Complex nu_p;
            Complex weight;
        };

        struct Sourced
        {
            MatrixXc rowsum;
            MatrixXc final_sum;
            MatrixXc beta;
            std::vector<Secular> secular;
        };

        TruncatedBasis m_basis;
        std::vector<VectorXc> m_mu;
        std::vector<MatrixXc> m_vec;
        std::vector<MatrixXc> m_inv;
        VectorXr m_jump_rates;
        // m_jumps[k][J]: jump J from manifold k+1 to k in eigen-coordinates
        std::vector<std::vector<MatrixXc>> m_jumps;

        MatrixXc frequencies(int j, int k) const;
        Sourced stream_source(int j, int k, const MatrixXc& source, const MatrixXc& weights, Real t_final) const;
    };
}
