#include "chainqed/fock_space.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace chainqed
{
    long long binomial(int n, int k)
    {
        if (k < 0 || k > n)
            return 0;
        long long r = 1;
        for (int i = 1; i <= k; ++i)
            r = r * (n - k + i) / i;
        return r;
    }

    TruncatedBasis::TruncatedBasis(int n_atoms, int n_max)
        : m_atoms(n_atoms), m_max(n_max)
    {
        if (n_atoms < 1)
            fail(ErrorKind::InvalidGeometry, "basis needs at least one atom");
        if (n_max < 1 || n_max > 3 || n_max > n_atoms)
            fail(ErrorKind::OutOfRange,
                 fmt::format("n_max = {} must lie in [1, min(3, N = {})]", n_max, n_atoms));

        m_binomial.assign(n_atoms + 1, std::vector<long long>(n_max + 1, 0));
        for (int n = 0; n <= n_atoms; ++n)
            for (int k = 0; k <= n_max; ++k)
                m_binomial[n][k] = binomial(n, k);

        m_offsets.push_back(0);
        m_states.push_back({});
        for (int k = 1; k <= n_max; ++k)
        {
            m_offsets.push_back(static_cast<int>(m_states.size()));
            State s(k);
            for (int i = 0; i < k; ++i)
                s[i] = i;
            while (true)
            {
                m_states.push_back(s);
                int i = k - 1;
                while (i >= 0 && s[i] == n_atoms - k + i)
                    --i;
                if (i < 0)
                    break;
                ++s[i];
                for (int j = i + 1; j < k; ++j)
                    s[j] = s[j - 1] + 1;
            }
        }
        m_offsets.push_back(static_cast<int>(m_states.size()));
    }

    long long TruncatedBasis::rank_in_block(const State& subset) const
    {
        const int k = static_cast<int>(subset.size());
        long long rank = 0;
        int prev = -1;
        for (int i = 0; i < k; ++i)
        {
            for (int j = prev + 1; j < subset[i]; ++j)
                rank += m_binomial[m_atoms - 1 - j][k - 1 - i];
            prev = subset[i];
        }
        return rank;
    }

    int TruncatedBasis::index_of(const State& subset) const
    {
        const int k = static_cast<int>(subset.size());
        if (k > m_max)
            return -1;
        for (int i = 0; i < k; ++i)
        {
            if (subset[i] < 0 || subset[i] >= m_atoms)
                return -1;
            if (i > 0 && subset[i] <= subset[i - 1])
                return -1;
        }
        if (k == 0)
            return 0;
        return m_offsets[k] + static_cast<int>(rank_in_block(subset));
    }

    int TruncatedBasis::raise(int index, int m) const
    {
        const State& s = m_states[index];
        if (static_cast<int>(s.size()) >= m_max || std::binary_search(s.begin(), s.end(), m))
            return -1;
        State t = s;
        t.insert(std::upper_bound(t.begin(), t.end(), m), m);
        return index_of(t);
    }

    int TruncatedBasis::lower(int index, int m) const
    {
        const State& s = m_states[index];
        auto it = std::lower_bound(s.begin(), s.end(), m);
        if (it == s.end() || *it != m)
            return -1;
        State t = s;
        t.erase(t.begin() + (it - s.begin()));
        return index_of(t);
    }

    SparseMatrixR lowering_operator(int atom, const TruncatedBasis& basis)
    {
        if (atom < 0 || atom >= basis.n_atoms())
            fail(ErrorKind::OutOfRange, fmt::format("atom index {} outside chain of {}", atom, basis.n_atoms()));
        const int d = basis.dimension();
        std::vector<Eigen::Triplet<Real>> entries;
        for (int col = 0; col < d; ++col)
        {
            const int row = basis.lower(col, atom);
            if (row >= 0)
                entries.emplace_back(row, col, 1.0);
        }
        SparseMatrixR op(d, d);
        op.setFromTriplets(entries.begin(), entries.end());
        return op;
    }

    SparseMatrixC embed_hopping(const MatrixXc& h, const TruncatedBasis& basis)
    {
        const int n = basis.n_atoms();
        if (h.rows() != n || h.cols() != n)
            fail(ErrorKind::DimensionMismatch, "embed_hopping: one-excitation operator does not match the basis");
        const int d = basis.dimension();
        std::vector<Eigen::Triplet<Complex>> entries;
        for (int col = 0; col < d; ++col)
        {
            const auto& s = basis.state(col);
            for (int src : s)
            {
                const int lowered = basis.lower(col, src);
                entries.emplace_back(col, col, h(src, src));
                for (int dst = 0; dst < n; ++dst)
                {
                    if (dst == src)
                        continue;
                    const int row = basis.raise(lowered, dst);
                    if (row >= 0)
                        entries.emplace_back(row, col, h(dst, src));
                }
            }
        }
        SparseMatrixC op(d, d);
        op.setFromTriplets(entries.begin(), entries.end());
        op.prune(Complex(0.0, 0.0));
        return op;
    }

    SparseMatrixC embed_site_diagonal(const VectorXr& values, const TruncatedBasis& basis)
    {
        if (values.size() != basis.n_atoms())
            fail(ErrorKind::DimensionMismatch, "embed_site_diagonal: one value per atom expected");
        const int d = basis.dimension();
        std::vector<Eigen::Triplet<Complex>> entries;
        for (int i = 0; i < d; ++i)
        {
            Real sum = 0.0;
            for (int m : basis.state(i))
                sum += values[m];
            if (sum != 0.0)
                entries.emplace_back(i, i, Complex(sum, 0.0));
        }
        SparseMatrixC op(d, d);
        op.setFromTriplets(entries.begin(), entries.end());
        return op;
    }

    VectorXr excitation_numbers(const TruncatedBasis& basis)
    {
        VectorXr n(basis.dimension());
        for (int i = 0; i < basis.dimension(); ++i)
            n[i] = basis.excitations(i);
        return n;
    }

    MatrixXc manifold_block(const SparseMatrixC& op, const TruncatedBasis& basis, int j, int k)
    {
        const int r0 = basis.offset(j), c0 = basis.offset(k);
        MatrixXc block = MatrixXc::Zero(basis.block_size(j), basis.block_size(k));
        for (int r = 0; r < block.rows(); ++r)
            for (SparseMatrixC::InnerIterator it(op, r0 + r); it; ++it)
            {
                const int c = static_cast<int>(it.col()) - c0;
                if (c >= 0 && c < block.cols())
                    block(r, c) = it.value();
            }
        return block;
    }

    MasterEquation::MasterEquation(const TruncatedBasis& basis, const MatrixXr& decay)
        : m_basis(basis), m_decay(decay), m_numbers(excitation_numbers(basis))
    {
        if (decay.rows() != basis.n_atoms() || decay.cols() != basis.n_atoms())
            fail(ErrorKind::DimensionMismatch, "decay matrix does not match the basis");
        m_low_dim = basis.offset(basis.n_max());
        m_up.resize(m_low_dim);
        for (int a = 0; a < m_low_dim; ++a)
            for (int m = 0; m < basis.n_atoms(); ++m)
            {
                const int t = basis.raise(a, m);
                if (t >= 0)
                    m_up[a].push_back({m, t});
            }
    }

    void MasterEquation::check(const MatrixXc& rho, const SparseMatrixC& hamiltonian) const
    {
        const int d = m_basis.dimension();
        if (rho.rows() != d || rho.cols() != d || hamiltonian.rows() != d || hamiltonian.cols() != d)
            fail(ErrorKind::DimensionMismatch,
                 fmt::format("master equation on dimension {} got rho {}x{} and H {}x{}", d, rho.rows(),
                             rho.cols(), hamiltonian.rows(), hamiltonian.cols()));
    }

    void MasterEquation::add_recycling(const MatrixXc& rho, MatrixXc& out) const
    {
        for (int b = 0; b < m_low_dim; ++b)
        {
            const auto& ub = m_up[b];
            for (int a = 0; a < m_low_dim; ++a)
            {
                Complex acc(0.0, 0.0);
                for (const Raise& ra : m_up[a])
                {
                    const Real* g = m_decay.data() + static_cast<Eigen::Index>(ra.atom) * m_decay.rows();
                    for (const Raise& rb : ub)
                        acc += g[rb.atom] * rho(ra.target, rb.target);
                }
                out(a, b) += acc;
            }
        }
    }

    MatrixXc MasterEquation::rhs(const MatrixXc& rho, const SparseMatrixC& hamiltonian) const
    {
        check(rho, hamiltonian);
        MatrixXc out = -I * (hamiltonian * rho - rho * hamiltonian.adjoint());
        add_recycling(rho, out);
        return out;
    }

    void MasterEquation::rhs_hermitian(const MatrixXc& rho, const SparseMatrixC& hamiltonian, MatrixXc& out) const
    {
        check(rho, hamiltonian);
        out.noalias() = hamiltonian * rho;
        out = (-I) * (out - out.adjoint()).eval();
        add_recycling(rho, out);
    }

    Real MasterEquation::excitation_rate(const MatrixXc& rho, const SparseMatrixC& hamiltonian) const
    {
        check(rho, hamiltonian);
        Real rate = 0.0;
        for (int a = 1; a < m_basis.dimension(); ++a)
        {
            Complex hr(0.0, 0.0);
            for (SparseMatrixC::InnerIterator it(hamiltonian, a); it; ++it)
                hr += it.value() * rho(it.col(), a);
            rate += m_numbers[a] * 2.0 * hr.imag();
        }
        for (int a = 1; a < m_low_dim; ++a)
        {
            Complex acc(0.0, 0.0);
            for (const Raise& ra : m_up[a])
                for (const Raise& rb : m_up[a])
                    acc += m_decay(ra.atom, rb.atom) * rho(ra.target, rb.target);
            rate += m_numbers[a] * acc.real();
        }
        return rate;
    }

    MatrixXc me_rhs(const MatrixXc& rho, const SparseMatrixC& hamiltonian, const MatrixXr& decay,
                    const TruncatedBasis& basis)
    {
        return MasterEquation(basis, decay).rhs(rho, hamiltonian);
    }
}
