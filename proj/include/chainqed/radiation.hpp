#pragma once

#include <optional>

#include "chainqed/lattice_green.hpp"

namespace chainqed
{
    struct FarFieldGrid
    {
        int n_phi = 361;
        int n_theta = 181;
    };

    /// |E|^2 on a uniform (theta, phi) grid, theta from the chain axis, peak normalized to 1.
    struct FarFieldPattern
    {
        VectorXr theta;
        VectorXr phi;
        MatrixXr intensity; // n_theta x n_phi

        /// Polar angle of the maximum, refined by a parabola through the neighbouring samples.
        Real peak_theta() const;
    };

    /// Far field of dipoles with amplitudes <sigma_ge^n>, using the transverse 1/r part of
    /// the Green tensor: (I - r r) p sum_n e^{-i k0 r.r_n} <sigma_ge^n>.
    FarFieldPattern far_field_pattern(const VectorXc& coherences, const ChainGeometry& geometry,
                                      const FarFieldGrid& grid = {});

    /// atan(k_perp / k_z) for mode xi_aim; nullopt when k_z >= k0.
    std::optional<Real> cone_angle(int xi_aim, int n_atoms, Real spacing);
}
