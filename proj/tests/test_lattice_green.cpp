#include <doctest.h>

#include <cmath>

#include "chainqed/lattice_green.hpp"

using namespace chainqed;

TEST_SUITE("lattice_green")
{
    TEST_CASE("coincident points are rejected")
    {
        const Vector3d r(0.1, 0.2, 0.3);
        try
        {
            dyadic_green<Real>(r, r);
            FAIL("expected SelfInteraction");
        }
        catch (const Error& e)
        {
            CHECK(e.kind() == ErrorKind::SelfInteraction);
        }
    }

    TEST_CASE("reciprocity")
    {
        const Vector3d a(0.1, -0.3, 0.2), b(-0.25, 0.4, 0.9);
        const Tensor3<Real> forward = dyadic_green<Real>(a, b);
        const Tensor3<Real> backward = dyadic_green<Real>(b, a);
        CHECK((forward - backward.transpose()).norm() < 1e-12);
    }

    TEST_CASE("longitudinal component at a = 0.35")
    {
        // e^{ikr}/(4 pi r) 2 [1/(kr)^2 - i/(kr)] at kr = 0.7 pi
        const Complex expected(0.11201870354562038, 0.197611101148617);
        const Tensor3<Real> g = dyadic_green<Real>(Vector3d::Zero(), Vector3d(0.0, 0.0, 0.35));
        CHECK(std::abs(g(2, 2) - expected) < 1e-12);
        CHECK(std::abs(g(0, 1)) < 1e-15);
        CHECK(std::abs(g(0, 2)) < 1e-15);
    }

    TEST_CASE("isolated atom")
    {
        const auto c = coupling_matrices(ChainGeometry::longitudinal(1, 0.35));
        CHECK(c.decay(0, 0) == doctest::Approx(1.0));
        CHECK(std::abs(c.h_eff(0, 0) - Complex(0.0, -0.5)) < 1e-15);
    }

    TEST_CASE("two atoms along the chain")
    {
        const auto c = coupling_matrices(ChainGeometry::longitudinal(2, 0.35));
        const Real x = 0.7 * std::numbers::pi;
        const Real scalar = 3.0 * (std::sin(x) / (x * x * x) - std::cos(x) / (x * x));
        CHECK(std::abs(scalar - 0.5928333034458511) < 1e-14);
        CHECK(std::abs(c.decay(0, 1) - scalar) < 1e-12);
        CHECK(std::abs(c.decay(1, 0) - scalar) < 1e-12);
    }

    TEST_CASE("decay matrix of 100 atoms is PSD with trace N")
    {
        const auto c = coupling_matrices(ChainGeometry::longitudinal(100, 0.35));
        CHECK(std::abs(c.decay.trace() - 100.0) < 1e-9);
        CHECK((c.decay - c.decay.transpose()).norm() < 1e-12);
        const Eigen::SelfAdjointEigenSolver<MatrixXr> eig(c.decay);
        CHECK(eig.eigenvalues().minCoeff() > -1e-10);
        CHECK((c.h_eff - c.h_eff.transpose()).norm() < 1e-12);
        const MatrixXc anti = (c.h_eff - c.h_eff.adjoint()) / Complex(0.0, 2.0);
        CHECK((anti + 0.5 * c.decay.cast<Complex>()).cwiseAbs().maxCoeff() < 1e-12);
    }

    TEST_CASE("geometry validation")
    {
        CHECK_THROWS_AS(coupling_matrices(ChainGeometry::longitudinal(0, 0.35)), Error);
        CHECK_THROWS_AS(coupling_matrices(ChainGeometry::longitudinal(3, -0.1)), Error);
        ChainGeometry bent = ChainGeometry::longitudinal(3, 0.35);
        bent.dipole = Vector3d(1.0, 1.0, 0.0);
        CHECK_THROWS_AS(bent.validate(), Error);
    }
}
