#include "chainqed/free_evolution.hpp"

#include <cmath>

#include <fmt/format.h>

namespace chainqed
{
    namespace
    {
        Eigen::Map<const VectorXc> flat(const MatrixXc& m) { return {m.data(), m.size()}; }

        // e^{-i nu_q t} (e^{z} - 1)/z * t with z = -i (nu_p - nu_q) t, and its time derivative.
        std::pair<Complex, Complex> secular_term(Complex nu_q, Complex nu_p, Real t)
        {
            const Complex delta = -I * (nu_p - nu_q);
            const Complex z = delta * t;
            const Complex phi = std::abs(z) < 1e-5 ? 1.0 + z / 2.0 + z * z / 6.0 : (std::exp(z) - 1.0) / z;
            const Complex base = std::exp(-I * nu_q * t);
            const Complex g = base * t * phi;
            return {g, -I * nu_q * g + base * std::exp(z)};
        }
    }

    FreeEvolution::FreeEvolution(const TruncatedBasis& basis, const SparseMatrixC& hamiltonian, const MatrixXr& decay)
        : m_basis(basis)
    {
        const int n_max = basis.n_max();
        const int d = basis.dimension();
        if (n_max > 2)
            fail(ErrorKind::Config, "closed-form free evolution supports n_max <= 2");
        if (hamiltonian.rows() != d || hamiltonian.cols() != d)
            fail(ErrorKind::DimensionMismatch, "free evolution: Hamiltonian does not match the basis");
        if (decay.rows() != basis.n_atoms() || decay.cols() != basis.n_atoms())
            fail(ErrorKind::DimensionMismatch, "free evolution: decay matrix does not match the basis");
        for (int r = 0; r < d; ++r)
            for (SparseMatrixC::InnerIterator it(hamiltonian, r); it; ++it)
                if (basis.excitations(r) != basis.excitations(static_cast<int>(it.col())) && it.value() != 0.0)
                    fail(ErrorKind::Config, "free evolution needs a number-conserving Hamiltonian");

        for (int k = 0; k <= n_max; ++k)
        {
            const MatrixXc block = manifold_block(hamiltonian, basis, k, k);
            Eigen::ComplexEigenSolver<MatrixXc> solver(block);
            if (solver.info() != Eigen::Success)
                fail(ErrorKind::Diagonalization, fmt::format("free evolution: manifold {} did not diagonalize", k));
            MatrixXc inv = solver.eigenvectors().partialPivLu().inverse();
            const Real cond = solver.eigenvectors().norm() * inv.norm();
            if (!std::isfinite(cond) || cond > 1e10)
                fail(ErrorKind::Diagonalization,
                     fmt::format("free evolution: manifold {} is numerically defective (cond {:.3g})", k, cond));
            m_mu.push_back(solver.eigenvalues());
            m_vec.push_back(solver.eigenvectors());
            m_inv.push_back(std::move(inv));
        }

        Eigen::SelfAdjointEigenSolver<MatrixXr> jumps(decay);
        m_jump_rates = jumps.eigenvalues().cwiseMax(0.0);
        const MatrixXr& u = jumps.eigenvectors();
        const int n = basis.n_atoms();
        m_jumps.resize(n_max);
        for (int k = 0; k < n_max; ++k)
        {
            const int lo = basis.offset(k), hi = basis.offset(k + 1);
            for (int j = 0; j < n; ++j)
            {
                MatrixXc lowering = MatrixXc::Zero(basis.block_size(k), basis.block_size(k + 1));
                for (int b = 0; b < basis.block_size(k + 1); ++b)
                    for (int m : basis.state(hi + b))
                        lowering(basis.lower(hi + b, m) - lo, b) += u(m, j);
                m_jumps[k].push_back(m_inv[k] * lowering * m_vec[k + 1]);
            }
        }
    }

    MatrixXc FreeEvolution::frequencies(int j, int k) const
    {
        return m_mu[j].replicate(1, m_mu[k].size()) -
               m_mu[k].conjugate().transpose().replicate(m_mu[j].size(), 1);
    }

    FreeEvolution::Sourced FreeEvolution::stream_source(int j, int k, const MatrixXc& source, const MatrixXc& weights,
                                                        Real t_final) const
    {
        const auto dj = m_mu[j].size(), dk = m_mu[k].size();
        const auto dj1 = m_mu[j + 1].size(), dk1 = m_mu[k + 1].size();
        const auto jumps = m_jump_rates.size();
        const MatrixXc nu_q = frequencies(j, k);
        const MatrixXc nu_p = frequencies(j + 1, k + 1);
        const auto n_obs = weights.cols();

        MatrixXc right(jumps, dk * dk1);
        for (Eigen::Index J = 0; J < jumps; ++J)
            right.row(J) = flat(MatrixXc(m_jumps[k][J].conjugate())).transpose();

        Sourced out;
        out.rowsum = MatrixXc::Zero(dj, dk);
        out.final_sum = MatrixXc::Zero(dj, dk);
        out.beta = MatrixXc::Zero(n_obs, dj1 * dk1);

        MatrixXc left(dj, jumps);
        MatrixXc amp(dj * dk, dk1);
        for (Eigen::Index a = 0; a < dj1; ++a)
        {
            for (Eigen::Index J = 0; J < jumps; ++J)
                left.col(J) = m_jump_rates[J] * m_jumps[j][J].col(a);
            const MatrixXc s = left * right;
            amp.setZero();
            for (Eigen::Index b = 0; b < dk1; ++b)
            {
                const Complex x = source(a, b);
                if (x == 0.0)
                    continue;
                const Complex np = nu_p(a, b);
                const Complex ep = std::exp(-I * np * t_final);
                for (Eigen::Index d = 0; d < dk; ++d)
                    for (Eigen::Index c = 0; c < dj; ++c)
                    {
                        const Complex z = s(c, d + dk * b) * x;
                        if (z == 0.0)
                            continue;
                        const Complex nq = nu_q(c, d);
                        const Complex diff = nq - np;
                        if (std::abs(diff) > 1e-10 * (1.0 + std::abs(nq)))
                        {
                            const Complex coeff = z / (I * diff);
                            out.rowsum(c, d) += coeff;
                            out.final_sum(c, d) += coeff * ep;
                            amp(c + dj * d, b) = coeff;
                        }
                        else
                            out.secular.push_back({static_cast<int>(c + dj * d), nq, np, z});
                    }
            }
            if (n_obs > 0)
            {
                const MatrixXc contrib = weights.transpose() * amp;
                for (Eigen::Index b = 0; b < dk1; ++b)
                    out.beta.col(a + dj1 * b) = contrib.col(b);
            }
        }
        return out;
    }

    FreeEvolution::Result FreeEvolution::propagate(const MatrixXc& rho0, const std::vector<Observable>& observables,
                                                   const std::vector<Real>& times, Real t_final) const
    {
        const int n_max = m_basis.n_max();
        const int d = m_basis.dimension();
        if (rho0.rows() != d || rho0.cols() != d)
            fail(ErrorKind::DimensionMismatch, "free evolution: state does not match the basis");
        if (!(t_final >= 0.0))
            fail(ErrorKind::Domain, "free evolution: final time must be non-negative");
        for (Real t : times)
            if (!(t >= 0.0))
                fail(ErrorKind::Domain, "free evolution: sample times must be non-negative");

        auto block = [&](int j, int k) {
            return rho0.block(m_basis.offset(j), m_basis.offset(k), m_basis.block_size(j), m_basis.block_size(k));
        };
        // x[j][k], j >= k, in eigen-coordinates
        std::vector<std::vector<MatrixXc>> x(n_max + 1);
        for (int j = 0; j <= n_max; ++j)
            for (int k = 0; k <= j; ++k)
                x[j].push_back(m_inv[j] * block(j, k) * m_inv[k].adjoint());
        const Complex trace0 = rho0.trace();

        const auto n_obs = static_cast<Eigen::Index>(observables.size());
        std::vector<MatrixXc> weights(n_max + 1);
        std::vector<VectorXc> trace_weight(n_max + 1);
        for (int k = 1; k <= n_max; ++k)
        {
            weights[k] = MatrixXc::Zero(m_mu[k].size() * m_mu[k].size(), n_obs);
            trace_weight[k] = flat(MatrixXc((m_vec[k].adjoint() * m_vec[k]).transpose()));
        }
        VectorXc constant = VectorXc::Zero(n_obs);
        for (Eigen::Index o = 0; o < n_obs; ++o)
            for (const auto& [k, f] : observables[o].terms)
            {
                if (k < 0 || k > n_max || f.rows() != m_basis.block_size(k) || f.cols() != m_basis.block_size(k))
                    fail(ErrorKind::DimensionMismatch, "free evolution: observable does not match the basis");
                if (k == 0)
                {
                    constant[o] += f(0, 0) * trace0;
                    for (int kk = 1; kk <= n_max; ++kk)
                        weights[kk].col(o) -= f(0, 0) * trace_weight[kk];
                }
                else
                    weights[k].col(o) += flat(MatrixXc((m_vec[k].adjoint() * f * m_vec[k]).transpose()));
            }

        // Diagonal blocks (k, k) are fed by (k+1, k+1); the top block is free.
        std::vector<Sourced> fed(n_max + 1);
        for (int k = 1; k < n_max; ++k)
            fed[k] = stream_source(k, k, x[k + 1][k + 1], weights[k], t_final);

        Eigen::Index n_terms = 1;
        for (int k = 1; k <= n_max; ++k)
            n_terms += x[k][k].size();
        VectorXc nu(n_terms);
        MatrixXc coeff(n_terms, n_obs);
        nu[0] = 0.0;
        coeff.row(0) = constant.transpose();
        Eigen::Index row = 1;
        for (int k = 1; k <= n_max; ++k)
        {
            const auto size = x[k][k].size();
            MatrixXc own = x[k][k];
            if (k < n_max)
                own -= fed[k].rowsum;
            nu.segment(row, size) = flat(frequencies(k, k));
            coeff.middleRows(row, size) = weights[k].array().colwise() * flat(own).array();
            if (k > 1)
                coeff.middleRows(row, size) += fed[k - 1].beta.transpose();
            row += size;
        }

        Result result;
        const auto n_times = static_cast<Eigen::Index>(times.size());
        result.values = MatrixXr::Zero(n_times, n_obs);
        result.rates = MatrixXr::Zero(n_times, n_obs);
        if (n_obs > 0 && n_times > 0)
        {
            constexpr Eigen::Index chunk = 32;
            MatrixXc e(n_terms, chunk), de(n_terms, chunk);
            VectorXc current(n_terms), step(n_terms);
            Real last_t = 0.0, last_h = -1.0;
            int since_sync = 0;
            Eigen::Index filled = 0, first = 0;
            auto flush = [&]() {
                const MatrixXc v = coeff.transpose() * e.leftCols(filled);
                const MatrixXc dv = coeff.transpose() * de.leftCols(filled);
                result.values.middleRows(first, filled) = v.real().transpose();
                result.rates.middleRows(first, filled) = dv.real().transpose();
                first += filled;
                filled = 0;
            };
            for (Eigen::Index i = 0; i < n_times; ++i)
            {
                const Real t = times[i];
                if (i == 0 || since_sync >= 256 || t < last_t)
                {
                    current = (-I * t * nu).array().exp();
                    since_sync = 0;
                }
                else
                {
                    const Real h = t - last_t;
                    if (h != last_h)
                    {
                        step = (-I * h * nu).array().exp();
                        last_h = h;
                    }
                    current = current.cwiseProduct(step);
                    ++since_sync;
                }
                last_t = t;
                e.col(filled) = current;
                de.col(filled) = (-I * nu).cwiseProduct(current);
                if (++filled == chunk)
                    flush();
            }
            if (filled > 0)
                flush();

            for (int k = 1; k < n_max; ++k)
                for (const Secular& s : fed[k].secular)
                    for (Eigen::Index i = 0; i < n_times; ++i)
                    {
                        const auto [g, dg] = secular_term(s.nu_q, s.nu_p, times[i]);
                        for (Eigen::Index o = 0; o < n_obs; ++o)
                        {
                            result.values(i, o) += (weights[k](s.q, o) * s.weight * g).real();
                            result.rates(i, o) += (weights[k](s.q, o) * s.weight * dg).real();
                        }
                    }
        }

        // State at t_final.
        MatrixXc rho = MatrixXc::Zero(d, d);
        Complex populated(0.0, 0.0);
        for (int j = 1; j <= n_max; ++j)
            for (int k = 0; k <= j; ++k)
            {
                const MatrixXc decay = (-I * t_final * frequencies(j, k)).array().exp();
                MatrixXc xf;
                if (j < n_max)
                {
                    const Sourced s = j == k ? fed[j] : stream_source(j, k, x[j + 1][k + 1], MatrixXc(), t_final);
                    xf = decay.cwiseProduct(x[j][k] - s.rowsum) + s.final_sum;
                    for (const Secular& sec : s.secular)
                        xf.data()[sec.q] += sec.weight * secular_term(sec.nu_q, sec.nu_p, t_final).first;
                }
                else
                    xf = decay.cwiseProduct(x[j][k]);
                const MatrixXc b = m_vec[j] * xf * m_vec[k].adjoint();
                rho.block(m_basis.offset(j), m_basis.offset(k), b.rows(), b.cols()) = b;
                if (j != k)
                    rho.block(m_basis.offset(k), m_basis.offset(j), b.cols(), b.rows()) = b.adjoint();
                else
                    populated += b.trace();
            }
        rho(0, 0) = trace0 - populated;
        result.final_state = (rho + rho.adjoint()) / 2.0;
        return result;
    }
}
