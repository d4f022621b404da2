#include "chainqed/lattice_green.hpp"

#include <cmath>

namespace chainqed
{
    std::string_view to_string(ErrorKind kind)
    {
        switch (kind)
        {
        case ErrorKind::SelfInteraction: return "SelfInteraction";
        case ErrorKind::InvalidGeometry: return "InvalidGeometry";
        case ErrorKind::Diagonalization: return "Diagonalization";
        case ErrorKind::Domain: return "Domain";
        case ErrorKind::OutOfRange: return "OutOfRange";
        case ErrorKind::DegenerateAnsatz: return "DegenerateAnsatz";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::BasisMismatch: return "BasisMismatch";
        case ErrorKind::Config: return "Config";
        case ErrorKind::Stability: return "Stability";
        case ErrorKind::ZeroField: return "ZeroField";
        case ErrorKind::Inconclusive: return "Inconclusive";
        case ErrorKind::Io: return "Io";
        }
        return "Unknown";
    }

    void ChainGeometry::validate() const
    {
        if (n_atoms < 1)
            fail(ErrorKind::InvalidGeometry, "chain needs at least one atom");
        if (!(spacing > 0.0) || !std::isfinite(spacing))
            fail(ErrorKind::InvalidGeometry, "lattice spacing must be positive");
        if (std::abs(dipole.norm() - 1.0) > 1e-12)
            fail(ErrorKind::InvalidGeometry, "dipole orientation must be a unit vector");
    }

    Complex projected_green(const ChainGeometry& geometry, int m, int n)
    {
        const Tensor3<Real> g = dyadic_green<Real>(geometry.position(m), geometry.position(n));
        const VectorXc p = geometry.dipole.cast<Complex>();
        return p.dot(g * p);
    }

    CouplingMatrices coupling_matrices(const ChainGeometry& geometry)
    {
        geometry.validate();
        const int n = geometry.n_atoms;

        // Im p.G.p for the self term is k0/(6 pi); dividing by it fixes Gamma_0 = 1.
        const Real decay_scale = 6.0 * std::numbers::pi / k0<>;
        const Real shift_scale = 3.0 * std::numbers::pi / k0<>;

        CouplingMatrices c;
        c.decay = MatrixXr::Identity(n, n);
        c.h_eff = MatrixXc::Constant(n, n, Complex(0.0, 0.0));
        for (int m = 0; m < n; ++m)
        {
            c.h_eff(m, m) = Complex(0.0, -0.5);
            for (int k = m + 1; k < n; ++k)
            {
                const Complex g = projected_green(geometry, m, k);
                c.decay(m, k) = c.decay(k, m) = decay_scale * g.imag();
                c.h_eff(m, k) = c.h_eff(k, m) = -shift_scale * g;
            }
        }
        return c;
    }
}
