#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "chainqed/fock_space.hpp"
#include "chainqed/lattice_green.hpp"
#include "support.hpp"

using namespace chainqed;

TEST_SUITE("fock_space")
{
    TEST_CASE("basis dimensions and ordering")
    {
        CHECK(TruncatedBasis(20, 2).dimension() == 211);
        CHECK(TruncatedBasis(10, 3).dimension() == 176);
        const TruncatedBasis one(1, 1);
        REQUIRE(one.dimension() == 2);
        CHECK(one.state(0).empty());
        CHECK(one.state(1) == std::vector<int>{0});

        const TruncatedBasis b(6, 3);
        for (int i = 0; i < b.dimension(); ++i)
            CHECK(b.index_of(b.state(i)) == i);
        CHECK(b.state(b.offset(2)) == std::vector<int>{0, 1});
        CHECK(b.state(b.offset(3) - 1) == std::vector<int>{4, 5});
        CHECK(b.index_of({0, 1, 2, 3}) == -1);

        CHECK_THROWS_AS(TruncatedBasis(2, 3), Error);
        CHECK_THROWS_AS(TruncatedBasis(8, 4), Error);
        CHECK_THROWS_AS(TruncatedBasis(8, 0), Error);
    }

    TEST_CASE("lowering operators")
    {
        const TruncatedBasis b(5, 3);
        for (int n = 0; n < 5; ++n)
        {
            const MatrixXr low = MatrixXr(lowering_operator(n, b));
            CHECK((low * low).norm() == 0.0);
            const MatrixXr number = low.transpose() * low;
            for (int i = 0; i < b.dimension(); ++i)
            {
                const auto& s = b.state(i);
                const bool excited = std::find(s.begin(), s.end(), n) != s.end();
                CHECK(number(i, i) == (excited ? 1.0 : 0.0));
            }
        }
    }

    TEST_CASE("three atoms: lowering operators against the tensor-product space")
    {
        const TruncatedBasis b(3, 2);
        const MatrixXr p = testing::isometry(b);
        for (int n = 0; n < 3; ++n)
        {
            const MatrixXr expected = p.transpose() * testing::full_lowering(3, n) * p;
            CHECK((MatrixXr(lowering_operator(n, b)) - expected).norm() == 0.0);
        }
    }

    TEST_CASE("hopping embedding against the tensor-product space")
    {
        const auto c = coupling_matrices(ChainGeometry::longitudinal(5, 0.3));
        const TruncatedBasis b(5, 3);
        const MatrixXc p = testing::isometry(b).cast<Complex>();
        const MatrixXc expected = p.transpose() * testing::full_hopping(c.h_eff) * p;
        CHECK((MatrixXc(embed_hopping(c.h_eff, b)) - expected).norm() < 1e-13);
    }

    TEST_CASE("site diagonal is additive")
    {
        const TruncatedBasis b(4, 2);
        VectorXr d(4);
        d << 1.0, -2.0, 0.5, 3.0;
        const MatrixXc op = MatrixXc(embed_site_diagonal(d, b));
        CHECK(op(0, 0) == Complex(0.0, 0.0));
        CHECK(op(b.index_of({1, 3}), b.index_of({1, 3})) == Complex(1.0, 0.0));
        CHECK(op(b.index_of({2}), b.index_of({2})) == Complex(0.5, 0.0));
    }

    TEST_CASE("ground state is stationary")
    {
        const auto c = coupling_matrices(ChainGeometry::longitudinal(4, 0.35));
        const TruncatedBasis b(4, 2);
        MatrixXc rho = MatrixXc::Zero(b.dimension(), b.dimension());
        rho(0, 0) = 1.0;
        CHECK(me_rhs(rho, embed_hopping(c.h_eff, b), c.decay, b).norm() == 0.0);
    }

    TEST_CASE("single atom decays at unit rate")
    {
        const auto c = coupling_matrices(ChainGeometry::longitudinal(1, 0.35));
        const TruncatedBasis b(1, 1);
        MatrixXc rho = MatrixXc::Zero(2, 2);
        rho(1, 1) = 1.0;
        const MatrixXc d = me_rhs(rho, embed_hopping(c.h_eff, b), c.decay, b);
        CHECK(std::abs(d(1, 1) - Complex(-1.0, 0.0)) < 1e-15);
        CHECK(std::abs(d(0, 0) - Complex(1.0, 0.0)) < 1e-15);
    }

    TEST_CASE("two atoms: symmetric state decays at Gamma_0 + Gamma_12")
    {
        const auto c = coupling_matrices(ChainGeometry::longitudinal(2, 0.35));
        const TruncatedBasis b(2, 2);
        const MasterEquation me(b, c.decay);
        VectorXc psi = VectorXc::Zero(b.dimension());
        psi[1] = psi[2] = std::sqrt(0.5);
        const MatrixXc rho = psi * psi.adjoint();
        CHECK(me.excitation_rate(rho, embed_hopping(c.h_eff, b)) ==
              doctest::Approx(-(1.0 + c.decay(0, 1))).epsilon(1e-12));
    }

    TEST_CASE("right-hand side: Hermiticity, trace and the fast path")
    {
        const int n = 5;
        const auto c = coupling_matrices(ChainGeometry::longitudinal(n, 0.35));
        const TruncatedBasis b(n, 2);
        const MasterEquation me(b, c.decay);
        const SparseMatrixC h = embed_hopping(c.h_eff, b);
        const MatrixXc rho = testing::random_density(b.dimension(), 7);

        const MatrixXc general = me.rhs(rho, h);
        MatrixXc fast;
        me.rhs_hermitian(rho, h, fast);
        CHECK((general - fast).norm() < 1e-12);
        CHECK((general - general.adjoint()).norm() < 1e-12);
        CHECK(std::abs(general.trace()) < 1e-12);

        const VectorXr numbers = excitation_numbers(b);
        const Real direct = (numbers.cast<Complex>().asDiagonal() * general).trace().real();
        CHECK(me.excitation_rate(rho, h) == doctest::Approx(direct).epsilon(1e-12));
        CHECK(direct <= 0.0);

        CHECK_THROWS_AS(me.rhs(MatrixXc::Zero(3, 3), h), Error);
    }
}
