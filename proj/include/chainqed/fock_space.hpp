#pragma once

#include <vector>

#include "chainqed/types.hpp"

namespace chainqed
{
    /// Excitation configurations with at most n_max excited atoms.
    /// Order: ground, singles, pairs (lexicographic), triples (lexicographic).
    /// Atom indices are zero-based internally.
    class TruncatedBasis
    {
    public:
        using State = std::vector<int>;

        TruncatedBasis() = default;
        TruncatedBasis(int n_atoms, int n_max);

        int n_atoms() const { return m_atoms; }
        int n_max() const { return m_max; }
        int dimension() const { return static_cast<int>(m_states.size()); }

        const State& state(int index) const { return m_states.at(index); }
        const std::vector<State>& states() const { return m_states; }
        int excitations(int index) const { return static_cast<int>(m_states[index].size()); }

        /// First index and size of the k-excitation block.
        int offset(int k) const { return m_offsets.at(k); }
        int block_size(int k) const { return m_offsets.at(k + 1) - m_offsets.at(k); }

        /// Index of a sorted subset; -1 when the subset is not in the basis.
        int index_of(const State& subset) const;

        /// Index of the state obtained by adding atom `m` to state `index`; -1 if m is
        /// already excited or the result is beyond n_max.
        int raise(int index, int m) const;
        /// Index of the state with atom `m` removed; -1 if m is not excited.
        int lower(int index, int m) const;

        bool operator==(const TruncatedBasis& other) const
        {
            return m_atoms == other.m_atoms && m_max == other.m_max;
        }

    private:
        int m_atoms = 0;
        int m_max = 0;
        std::vector<State> m_states;
        std::vector<int> m_offsets;
        std::vector<std::vector<long long>> m_binomial;

        long long rank_in_block(const State& subset) const;
    };

    long long binomial(int n, int k);

    /// sigma_ge^n: removes atom n's excitation (amplitude 1).
    SparseMatrixR lowering_operator(int atom, const TruncatedBasis& basis);

    /// Many-body embedding of a one-excitation operator h: sum_mn h_mn sigma_eg^m sigma_ge^n.
    SparseMatrixC embed_hopping(const MatrixXc& h, const TruncatedBasis& basis);

    /// Diagonal operator with entry sum_{n in S} values_n on state S.
    SparseMatrixC embed_site_diagonal(const VectorXr& values, const TruncatedBasis& basis);

    /// Number operator N_exc as a diagonal vector.
    VectorXr excitation_numbers(const TruncatedBasis& basis);

    /// Dense restriction of an operator to the block (row manifold j, column manifold k).
    MatrixXc manifold_block(const SparseMatrixC& op, const TruncatedBasis& basis, int j, int k);

    /// Right-hand side of the master equation
    ///   d rho/dt = -i(H rho - rho H^dag) + sum_mn Gamma_mn sigma_ge^m rho sigma_eg^n.
    /// The recycling term is evaluated directly from the raising tables of the basis.
    class MasterEquation
    {
    public:
        MasterEquation() = default;
        MasterEquation(const TruncatedBasis& basis, const MatrixXr& decay);

        const TruncatedBasis& basis() const { return m_basis; }
        const MatrixXr& decay() const { return m_decay; }

        /// General form, no assumption on rho.
        MatrixXc rhs(const MatrixXc& rho, const SparseMatrixC& hamiltonian) const;

        /// Same result for Hermitian rho, using rho H^dag = (H rho)^dag.
        void rhs_hermitian(const MatrixXc& rho, const SparseMatrixC& hamiltonian, MatrixXc& out) const;

        /// Adds the recycling term to `out`.
        void add_recycling(const MatrixXc& rho, MatrixXc& out) const;

        /// d<N_exc>/dt for Hermitian rho.
        Real excitation_rate(const MatrixXc& rho, const SparseMatrixC& hamiltonian) const;

    private:
        struct Raise
        {
            int atom;
            int target;
        };

        TruncatedBasis m_basis;
        MatrixXr m_decay;
        VectorXr m_numbers;
        // raise lists for states below n_max
        std::vector<std::vector<Raise>> m_up;
        int m_low_dim = 0;

        void check(const MatrixXc& rho, const SparseMatrixC& hamiltonian) const;
    };

    MatrixXc me_rhs(const MatrixXc& rho, const SparseMatrixC& hamiltonian, const MatrixXr& decay,
                    const TruncatedBasis& basis);
}
