#include "chainqed/radiation.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "chainqed/modes.hpp"

namespace chainqed
{
    FarFieldPattern far_field_pattern(const VectorXc& coherences, const ChainGeometry& geometry,
                                      const FarFieldGrid& grid)
    {
        geometry.validate();
        if (coherences.size() != geometry.n_atoms)
            fail(ErrorKind::DimensionMismatch,
                 fmt::format("{} coherences for {} atoms", coherences.size(), geometry.n_atoms));
        if (grid.n_theta < 2 || grid.n_phi < 1)
            fail(ErrorKind::Config, "far-field grid needs at least two polar and one azimuthal sample");
        if (coherences.squaredNorm() == 0.0)
            fail(ErrorKind::ZeroField, "all coherences vanish");

        FarFieldPattern out;
        out.theta = VectorXr::LinSpaced(grid.n_theta, 0.0, std::numbers::pi);
        out.phi = grid.n_phi > 1 ? VectorXr(VectorXr::LinSpaced(grid.n_phi, 0.0, 2.0 * std::numbers::pi))
                                 : VectorXr(VectorXr::Zero(1));
        out.intensity.resize(grid.n_theta, grid.n_phi);

        const Vector3d& p = geometry.dipole;
        for (int it = 0; it < grid.n_theta; ++it)
            for (int ip = 0; ip < grid.n_phi; ++ip)
            {
                const Real th = out.theta[it], ph = out.phi[ip];
                const Vector3d dir(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th));
                Complex array(0.0, 0.0);
                for (int n = 0; n < geometry.n_atoms; ++n)
                    array += std::exp(Complex(0.0, -k0<> * dir.dot(geometry.position(n)))) * coherences[n];
                const Real transverse = (p - dir * dir.dot(p)).squaredNorm();
                out.intensity(it, ip) = transverse * std::norm(array);
            }
        const Real peak = out.intensity.maxCoeff();
        if (!(peak > 0.0))
            fail(ErrorKind::ZeroField, "radiated field vanishes on the whole grid");
        out.intensity /= peak;
        return out;
    }

    Real FarFieldPattern::peak_theta() const
    {
        Eigen::Index row = 0, col = 0;
        intensity.maxCoeff(&row, &col);
        if (row == 0 || row + 1 == intensity.rows())
            return theta[row];
        const Real y0 = intensity(row - 1, col), y1 = intensity(row, col), y2 = intensity(row + 1, col);
        const Real curvature = y0 - 2.0 * y1 + y2;
        if (curvature >= 0.0)
            return theta[row];
        const Real offset = 0.5 * (y0 - y2) / curvature;
        return theta[row] + offset * (theta[row + 1] - theta[row]);
    }

    std::optional<Real> cone_angle(int xi_aim, int n_atoms, Real spacing)
    {
        const Real kz = kz_of_mode(n_atoms, spacing, xi_aim);
        const Real k = k0<>;
        if (kz >= k)
            return std::nullopt;
        return std::atan2(std::sqrt(k * k - kz * kz), kz);
    }
}
