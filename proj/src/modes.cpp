#include "chainqed/modes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace chainqed
{
    namespace
    {
        void check_label(int n_atoms, int label)
        {
            if (label < 1 || label > n_atoms)
                fail(ErrorKind::OutOfRange, fmt::format("mode label {} outside 1..{}", label, n_atoms));
        }

        // Unit norm, largest-magnitude component real positive.
        void fix_phase(VectorXc& v)
        {
            Eigen::Index imax = 0;
            v.cwiseAbs().maxCoeff(&imax);
            const Complex pivot = v[imax];
            v *= std::conj(pivot) / std::abs(pivot);
            v.normalize();
        }

        struct Eigenpair
        {
            Complex value;
            VectorXc vector;
        };

        std::vector<Eigenpair> sorted_eigenpairs(const MatrixXc& h, const char* what)
        {
            Eigen::ComplexEigenSolver<MatrixXc> solver(h);
            if (solver.info() != Eigen::Success)
                fail(ErrorKind::Diagonalization, fmt::format("{}: eigen-solver did not converge", what));
            std::vector<Eigenpair> pairs;
            pairs.reserve(h.rows());
            for (Eigen::Index i = 0; i < h.rows(); ++i)
            {
                VectorXc v = solver.eigenvectors().col(i);
                fix_phase(v);
                pairs.push_back({solver.eigenvalues()[i], std::move(v)});
            }
            std::sort(pairs.begin(), pairs.end(), [](const Eigenpair& a, const Eigenpair& b) {
                const Real ga = -2.0 * a.value.imag(), gb = -2.0 * b.value.imag();
                if (std::abs(a.value - b.value) >= 1e-10 && ga != gb)
                    return ga < gb;
                return a.value.real() < b.value.real();
            });
            return pairs;
        }

        // zeta(2j) for j >= 1
        Real zeta_even(int j)
        {
            constexpr Real pi = std::numbers::pi;
            switch (j)
            {
            case 1: return pi * pi / 6.0;
            case 2: return std::pow(pi, 4) / 90.0;
            case 3: return std::pow(pi, 6) / 945.0;
            case 4: return std::pow(pi, 8) / 9450.0;
            case 5: return std::pow(pi, 10) / 93555.0;
            default: break;
            }
            Real sum = 0.0;
            for (int l = 40; l >= 1; --l)
                sum += std::pow(static_cast<Real>(l), -2.0 * j);
            return sum;
        }
    }

    std::vector<CollectiveMode> single_modes(const CouplingMatrices& coupling)
    {
        const auto pairs = sorted_eigenpairs(coupling.h_eff, "single_modes");
        std::vector<CollectiveMode> modes;
        modes.reserve(pairs.size());
        int label = 1;
        for (const auto& p : pairs)
            modes.push_back({label++, p.vector, p.value.real(), -2.0 * p.value.imag()});
        return modes;
    }

    VectorXr sine_ansatz(int n_atoms, int label)
    {
        check_label(n_atoms, label);
        const Real norm = std::sqrt(2.0 / (n_atoms + 1));
        const Real q = (n_atoms + 1 - label) * std::numbers::pi / (n_atoms + 1);
        VectorXr v(n_atoms);
        for (int m = 1; m <= n_atoms; ++m)
            v[m - 1] = norm * std::sin(q * m);
        return v;
    }

    Real kz_of_mode(int n_atoms, Real spacing, int label)
    {
        check_label(n_atoms, label);
        return std::numbers::pi * (n_atoms + 1 - label) / (spacing * (n_atoms + 1));
    }

    Complex polylog(int s, Complex z)
    {
        if (s != 2 && s != 3)
            fail(ErrorKind::Domain, fmt::format("polylog order {} not supported", s));
        const Real r = std::abs(z);
        if (r > 1.0 + 1e-14)
            fail(ErrorKind::Domain, fmt::format("polylog argument |z| = {} exceeds 1", r));

        if (r <= 0.5)
        {
            Complex sum(0.0, 0.0), power = z;
            for (int l = 1; l < 200; ++l)
            {
                const Complex term = power / std::pow(static_cast<Real>(l), s);
                sum += term;
                if (std::abs(term) < 1e-18)
                    break;
                power *= z;
            }
            return sum;
        }

        const Real zeta_s = s == 2 ? zeta_even(1) : 1.2020569031595942853997;
        const Complex mu = std::log(z);
        if (std::abs(mu) == 0.0)
            return zeta_s;

        // Expansion in mu = ln z, valid for |mu| < 2 pi.
        Complex sum = zeta_s;
        if (s == 3)
        {
            sum += zeta_even(1) * mu;
            sum += 0.5 * mu * mu * (1.5 - std::log(-mu));
            sum += -0.5 * mu * mu * mu / 6.0;
        }
        else
        {
            sum += mu * (1.0 - std::log(-mu));
            sum += -0.5 * mu * mu / 2.0;
        }
        // zeta(1 - 2j) terms; the remaining negative-argument zetas vanish.
        const Complex x = mu / (2.0 * std::numbers::pi);
        Complex x2j = 1.0;
        for (int j = 1; j < 200; ++j)
        {
            x2j *= x * x;
            Real denom = 1.0;
            for (int i = 0; i < s; ++i)
                denom *= 2.0 * j + i;
            const Complex term = (j % 2 ? -2.0 : 2.0) * zeta_even(j) * x2j * std::pow(mu, s - 1) / denom;
            sum += term;
            if (std::abs(term) < 1e-18)
                break;
        }
        return sum;
    }

    Dispersion analytic_dispersion(Real kz, Real spacing)
    {
        if (!(spacing > 0.0))
            fail(ErrorKind::InvalidGeometry, "analytic_dispersion: spacing must be positive");
        const Real k = k0<>;
        const Real g = 2.0 * std::numbers::pi / spacing;

        Dispersion d;
        const int reach = static_cast<int>(std::ceil((k + std::abs(kz)) / g)) + 1;
        for (int m = -reach; m <= reach; ++m)
        {
            const Real q = kz + m * g;
            if (std::abs(q) < k)
                d.decay += 1.0 - q * q / (k * k);
        }
        d.decay *= 3.0 * std::numbers::pi / (2.0 * k * spacing);

        const Complex z1 = std::exp(Complex(0.0, (k + kz) * spacing));
        const Complex z2 = std::exp(Complex(0.0, (k - kz) * spacing));
        const Complex lattice = polylog(3, z1) + polylog(3, z2) - I * k * spacing * (polylog(2, z1) + polylog(2, z2));
        d.shift = (-3.0 / (2.0 * std::pow(k * spacing, 3)) * lattice).real();
        return d;
    }

    VectorXc biorthogonal_dual(const VectorXc& right)
    {
        const Complex norm = right.transpose() * right;
        if (std::abs(norm) < 1e-300)
            fail(ErrorKind::Domain, "biorthogonal_dual: self-orthogonal vector");
        return right / norm;
    }

    VectorXc fermionic_ansatz(const std::vector<CollectiveMode>& modes, int xi1, int xi2)
    {
        const int n = static_cast<int>(modes.size());
        check_label(n, xi1);
        check_label(n, xi2);
        if (xi1 == xi2)
            fail(ErrorKind::DegenerateAnsatz, fmt::format("fermionic ansatz with equal labels ({0}, {0})", xi1));
        const VectorXc& c1 = modes[xi1 - 1].amplitudes;
        const VectorXc& c2 = modes[xi2 - 1].amplitudes;
        VectorXc v(n * (n - 1) / 2);
        int idx = 0;
        for (int m = 0; m < n; ++m)
            for (int k = m + 1; k < n; ++k)
                v[idx++] = c1[m] * c2[k] - c2[m] * c1[k];
        const Real norm = v.norm();
        if (norm < 1e-14)
            fail(ErrorKind::DegenerateAnsatz, "fermionic ansatz vanishes");
        return v / norm;
    }

    std::vector<TwoExcitationMode> double_modes(const CouplingMatrices& coupling, const TruncatedBasis& basis,
                                                const std::vector<CollectiveMode>& singles)
    {
        const int n = coupling.n_atoms();
        if (n < 2)
            fail(ErrorKind::OutOfRange, "double_modes needs at least two atoms");
        if (basis.n_atoms() != n || basis.n_max() < 2)
            fail(ErrorKind::BasisMismatch, "double_modes needs a basis of the same chain with n_max >= 2");

        const MatrixXc h2 = manifold_block(embed_hopping(coupling.h_eff, basis), basis, 2, 2);
        const auto pairs = sorted_eigenpairs(h2, "double_modes");
        const int p = static_cast<int>(pairs.size());

        std::vector<std::pair<int, int>> labels;
        MatrixXc ansatz(p, p);
        for (int a = 1; a <= n; ++a)
            for (int b = a + 1; b <= n; ++b)
            {
                ansatz.col(static_cast<Eigen::Index>(labels.size())) = fermionic_ansatz(singles, a, b);
                labels.emplace_back(a, b);
            }
        MatrixXc vectors(p, p);
        for (int r = 0; r < p; ++r)
            vectors.col(r) = pairs[r].vector;
        const MatrixXr overlap = (ansatz.adjoint() * vectors).cwiseAbs();

        // Greedy one-to-one matching, largest overlap first.
        std::vector<std::pair<int, int>> order; // (label index, rank index)
        order.reserve(static_cast<std::size_t>(p) * p);
        for (int l = 0; l < p; ++l)
            for (int r = 0; r < p; ++r)
                order.emplace_back(l, r);
        std::sort(order.begin(), order.end(), [&](const auto& x, const auto& y) {
            const Real ox = overlap(x.first, x.second), oy = overlap(y.first, y.second);
            if (ox != oy)
                return ox > oy;
            return x < y;
        });

        std::vector<TwoExcitationMode> modes(p);
        std::vector<char> label_used(p, 0), rank_used(p, 0);
        int assigned = 0;
        for (const auto& [l, r] : order)
        {
            if (label_used[l] || rank_used[r])
                continue;
            label_used[l] = rank_used[r] = 1;
            modes[r].pair_label = labels[l];
            modes[r].label_overlap = overlap(l, r);
            if (++assigned == p)
                break;
        }
        for (int r = 0; r < p; ++r)
        {
            modes[r].rank = r + 1;
            modes[r].amplitudes = pairs[r].vector;
            modes[r].shift = pairs[r].value.real();
            modes[r].decay = -2.0 * pairs[r].value.imag();
        }
        return modes;
    }

    std::vector<TwoExcitationMode> double_modes(const CouplingMatrices& coupling, const TruncatedBasis& basis)
    {
        return double_modes(coupling, basis, single_modes(coupling));
    }

    const TwoExcitationMode& find_pair(const std::vector<TwoExcitationMode>& modes, std::pair<int, int> label)
    {
        if (label.first > label.second)
            std::swap(label.first, label.second);
        for (const auto& m : modes)
            if (m.pair_label == label)
                return m;
        fail(ErrorKind::OutOfRange, fmt::format("no double mode labelled ({}, {})", label.first, label.second));
    }

    Complex two_photon_drive_overlap(int n_atoms, int xi1, int xi2, Real rabi)
    {
        check_label(n_atoms, xi1);
        check_label(n_atoms, xi2);
        if (!(rabi > 0.0))
            fail(ErrorKind::Domain, "two_photon_drive_overlap: Rabi frequency must be positive");
        const int n1 = n_atoms + 1;
        const Real step = std::numbers::pi / n1;
        Real sum = 0.0;
        for (int i = 1; i <= n_atoms; ++i)
            for (int j = i + 1; j <= n_atoms; ++j)
            {
                const Real drive = std::sin(i * step) * std::sin(j * step);
                const Real bracket = std::sin((n1 - xi1) * i * step) * std::sin((n1 - xi2) * j * step) -
                                     std::sin((n1 - xi2) * i * step) * std::sin((n1 - xi1) * j * step);
                sum += drive * bracket;
            }
        return Complex(4.0 * sum / (static_cast<Real>(n1) * n1), 0.0);
    }

    VectorXc embed_single(const VectorXc& amplitudes, const TruncatedBasis& basis)
    {
        if (amplitudes.size() != basis.block_size(1))
            fail(ErrorKind::BasisMismatch, "single-mode vector does not match the basis");
        VectorXc v = VectorXc::Zero(basis.dimension());
        v.segment(basis.offset(1), basis.block_size(1)) = amplitudes;
        return v;
    }

    VectorXc embed_pair(const VectorXc& amplitudes, const TruncatedBasis& basis)
    {
        if (basis.n_max() < 2 || amplitudes.size() != basis.block_size(2))
            fail(ErrorKind::BasisMismatch, "pair-mode vector does not match the basis");
        VectorXc v = VectorXc::Zero(basis.dimension());
        v.segment(basis.offset(2), basis.block_size(2)) = amplitudes;
        return v;
    }

    PowerLaw fit_power_law(const std::vector<Real>& x, const std::vector<Real>& y)
    {
        if (x.size() != y.size() || x.size() < 2)
            fail(ErrorKind::Domain, "fit_power_law needs at least two (x, y) pairs");
        const auto n = static_cast<Real>(x.size());
        Real sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < x.size(); ++i)
        {
            if (!(x[i] > 0.0) || !(y[i] > 0.0))
                fail(ErrorKind::Domain, "fit_power_law needs positive data");
            const Real lx = std::log(x[i]), ly = std::log(y[i]);
            sx += lx;
            sy += ly;
            sxx += lx * lx;
            sxy += lx * ly;
        }
        const Real det = n * sxx - sx * sx;
        if (det <= 0.0)
            fail(ErrorKind::Domain, "fit_power_law needs distinct x values");
        PowerLaw fit;
        fit.exponent = (n * sxy - sx * sy) / det;
        fit.prefactor = std::exp((sy - fit.exponent * sx) / n);
        return fit;
    }

    Real fit_subradiant_prefactor(Real spacing, const std::vector<int>& sizes)
    {
        if (sizes.empty())
            fail(ErrorKind::Domain, "fit_subradiant_prefactor needs at least one chain size");
        Real sum = 0.0;
        for (int n : sizes)
        {
            const auto modes = single_modes(coupling_matrices(ChainGeometry::longitudinal(n, spacing)));
            sum += std::log(modes.front().decay) + 3.0 * std::log(static_cast<Real>(n));
        }
        return std::exp(sum / static_cast<Real>(sizes.size()));
    }
}
