#pragma once

#include "chainqed/types.hpp"

namespace chainqed
{
    /// Regular chain of two-level emitters at r_m = (0, 0, m a), m = 1..N.
    /// Lengths are in units of the resonant wavelength lambda_eg.
    struct ChainGeometry
    {
        int n_atoms = 1;
        Real spacing = 0.35;
        Vector3d dipole = Vector3d::UnitZ();

        static ChainGeometry longitudinal(int n_atoms, Real spacing)
        {
            return ChainGeometry{n_atoms, spacing, Vector3d::UnitZ()};
        }

        void validate() const;

        /// Position of atom `m` (zero-based, so atom m sits at z = (m + 1) a).
        Vector3d position(int m) const { return {0.0, 0.0, (m + 1) * spacing}; }
    };

    /// Collective couplings in natural units (Gamma_0 = 1, lambda_eg = 1).
    struct CouplingMatrices
    {
        /// Gamma_mn, real symmetric, unit diagonal.
        MatrixXr decay;
        /// One-excitation block of H_eff; complex symmetric, anti-Hermitian part -i decay / 2.
        MatrixXc h_eff;

        int n_atoms() const { return static_cast<int>(decay.rows()); }
    };

    /// Free-space dyadic Green tensor (I + grad grad / k0^2) e^{i k0 r} / (4 pi r)
    /// between two distinct points; throws SelfInteraction for coincident points.
    template <typename Scalar>
    Tensor3<Scalar> dyadic_green(const Vector3<Scalar>& r_src, const Vector3<Scalar>& r_obs)
    {
        using C = std::complex<Scalar>;
        const Vector3<Scalar> d = r_obs - r_src;
        const Scalar r = d.norm();
        if (!(r > Scalar(1e-12)))
            fail(ErrorKind::SelfInteraction, "dyadic_green: source and observation points coincide");

        const Scalar kr = k0<Scalar> * r;
        const Vector3<Scalar> u = d / r;
        const C prefactor = std::exp(C(0, kr)) / (Scalar(4) * std::numbers::pi_v<Scalar> * r);
        const C iso = C(1) + C(0, 1) / kr - C(1) / (kr * kr);
        const C radial = C(-1) - C(0, 3) / kr + C(3) / (kr * kr);

        Tensor3<Scalar> g = iso * Tensor3<Scalar>::Identity();
        g += radial * (u * u.transpose()).template cast<C>();
        return prefactor * g;
    }

    /// p^* . G(r_n, r_m) . p for unit dipole p, in units where Im of the self term is k0 / (6 pi).
    Complex projected_green(const ChainGeometry& geometry, int m, int n);

    CouplingMatrices coupling_matrices(const ChainGeometry& geometry);
}
