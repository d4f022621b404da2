#pragma once

// Independent dense constructions used as oracles by the unit tests.

#include <cstdlib>
#include <vector>

#include "chainqed/fock_space.hpp"

namespace testing
{
    using namespace chainqed;

    /// sigma_ge^atom on the full 2^N space; bit m of a state index marks atom m excited.
    inline MatrixXr full_lowering(int n_atoms, int atom)
    {
        const int dim = 1 << n_atoms;
        MatrixXr op = MatrixXr::Zero(dim, dim);
        for (int s = 0; s < dim; ++s)
            if (s & (1 << atom))
                op(s & ~(1 << atom), s) = 1.0;
        return op;
    }

    inline int bitmask(const std::vector<int>& subset)
    {
        int mask = 0;
        for (int m : subset)
            mask |= 1 << m;
        return mask;
    }

    /// Columns: full-space vectors of the truncated basis states, in basis order.
    inline MatrixXr isometry(const TruncatedBasis& basis)
    {
        MatrixXr p = MatrixXr::Zero(1 << basis.n_atoms(), basis.dimension());
        for (int i = 0; i < basis.dimension(); ++i)
            p(bitmask(basis.state(i)), i) = 1.0;
        return p;
    }

    /// sum_mn h_mn sigma_eg^m sigma_ge^n on the full space.
    inline MatrixXc full_hopping(const MatrixXc& h)
    {
        const int n = static_cast<int>(h.rows());
        const int dim = 1 << n;
        MatrixXc out = MatrixXc::Zero(dim, dim);
        for (int m = 0; m < n; ++m)
            for (int k = 0; k < n; ++k)
                out += h(m, k) * (full_lowering(n, m).transpose() * full_lowering(n, k)).cast<Complex>();
        return out;
    }

    inline MatrixXc random_density(int dim, unsigned seed)
    {
        std::srand(seed);
        const MatrixXc a = MatrixXc::Random(dim, dim);
        MatrixXc rho = a * a.adjoint();
        return rho / rho.trace();
    }
}
