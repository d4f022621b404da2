#include <doctest.h>

#include <cmath>

#include "chainqed/dynamics.hpp"
#include "chainqed/free_evolution.hpp"
#include "support.hpp"

using namespace chainqed;

namespace
{
    Phase free_phase(Real duration, Real dt = 0.0)
    {
        Phase p;
        p.name = "free";
        p.duration = duration;
        p.dt = dt;
        return p;
    }

    Phase drive_phase(const ChainModel& model, Real rabi, Real duration, Real dt = 0.0)
    {
        Phase p;
        p.name = "drive";
        p.duration = duration;
        p.dt = dt;
        DriveConfig d;
        d.rabi = rabi;
        d.detuning = model.modes.back().shift;
        d.t_end = duration;
        p.drive = d;
        return p;
    }

    MatrixXc excited_mode(const ChainModel& model, int xi)
    {
        const VectorXc psi = embed_single(model.modes[static_cast<std::size_t>(xi - 1)].amplitudes, model.basis);
        return psi * psi.adjoint();
    }
}

TEST_SUITE("dynamics")
{
    TEST_CASE("drive Hamiltonian without Rabi coupling is the detuning diagonal")
    {
        const ChainModel model = ChainModel::build(ChainGeometry::longitudinal(4, 0.35), 2);
        DriveConfig d;
        d.rabi = 0.0;
        d.detuning = 1.5;
        const MatrixXc h = MatrixXc(drive_hamiltonian(d, model.modes, model.basis));
        const VectorXr n = excitation_numbers(model.basis);
        CHECK((h - (-1.5 * n).cast<Complex>().asDiagonal().toDenseMatrix()).norm() < 1e-15);
    }

    TEST_CASE("shaped drive couples the ground state to the superradiant mode only")
    {
        const ChainModel model = ChainModel::build(ChainGeometry::longitudinal(20, 0.35), 1);
        DriveConfig d;
        d.rabi = 100.0;
        const SparseMatrixC h = drive_hamiltonian(d, model.modes, model.basis);
        VectorXc ground = VectorXc::Zero(model.basis.dimension());
        ground[0] = 1.0;
        const VectorXc singles = (h * ground).segment(1, 20);
        for (const auto& m : model.modes)
        {
            const Complex dual = (biorthogonal_dual(m.amplitudes).transpose() * singles).value();
            const Complex expected = m.label == 20 ? Complex(-100.0, 0.0) : Complex(0.0, 0.0);
            CAPTURE(m.label);
            CHECK(std::abs(dual - expected) < 1e-10);
            if (m.label != 20)
                CHECK(std::abs(m.amplitudes.dot(singles)) < 2e-2 * 100.0);
        }
    }

    TEST_CASE("uniform drive on two atoms")
    {
        const ChainModel model = ChainModel::build(ChainGeometry::longitudinal(2, 0.35), 2);
        DriveConfig d;
        d.rabi = 3.0;
        d.detuning = 0.5;
        d.profile = DriveProfile::Uniform;
        // basis: g, e1, e2, e1e2
        MatrixXc expected = MatrixXc::Zero(4, 4);
        expected.diagonal() << 0.0, -0.5, -0.5, -1.0;
        for (auto [from, to] : {std::pair{0, 1}, {0, 2}, {1, 3}, {2, 3}})
            expected(to, from) = expected(from, to) = -3.0;
        CHECK((MatrixXc(drive_hamiltonian(d, model.modes, model.basis)) - expected).norm() < 1e-15);
    }

    TEST_CASE("PVD Hamiltonian")
    {
        const TruncatedBasis b(6, 2);
        DetuningPattern p;
        p.kind = DetuningKind::Staggered;
        p.amplitude = 2.0;
        const VectorXr d = p.site_detuning(6);
        CHECK(d[0] == -2.0);
        CHECK(d[1] == 2.0);
        const MatrixXc h = MatrixXc(pvd_hamiltonian(p, b));
        CHECK(h(0, 0) == Complex(0.0, 0.0));
        const int pair = b.index_of({0, 3});
        CHECK(h(pair, pair).real() == doctest::Approx(-(d[0] + d[3])));

        DetuningPattern s;
        s.kind = DetuningKind::Sinusoidal;
        s.amplitude = 1.0;
        s.target = 2;
        CHECK(s.site_detuning(6)[2] == doctest::Approx(std::sin(3.0 * 2.0 * std::numbers::pi / 7.0)));
    }

    TEST_CASE("staggered PVD is anti-diagonal in the mode basis")
    {
        const int n = 100;
        const auto modes = single_modes(coupling_matrices(ChainGeometry::longitudinal(n, 0.35)));
        DetuningPattern p;
        p.amplitude = 1.0;
        const VectorXr d = p.site_detuning(n);
        Real off = 0.0, anti = 1.0;
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
            {
                const Real v = std::abs(modes[a].amplitudes.dot((-d).cast<Complex>().cwiseProduct(modes[b].amplitudes)));
                if (a + b == n - 1)
                    anti = std::min(anti, v);
                else
                    off = std::max(off, v);
            }
        CHECK(anti > 0.9);
        CHECK(off < 0.05);
    }

    TEST_CASE("observables on simple states")
    {
        const ChainModel model = ChainModel::build(ChainGeometry::longitudinal(5, 0.35), 2);
        const int dim = model.basis.dimension();
        MatrixXc ground = MatrixXc::Zero(dim, dim);
        ground(0, 0) = 1.0;
        CHECK((manifold_populations(ground, model.basis) - VectorXr::Unit(3, 0)).norm() == 0.0);
        CHECK(mode_projection(ground, model.modes[0], model.basis) == 0.0);

        MatrixXc mixed = MatrixXc::Zero(dim, dim);
        for (int i = 1; i <= 5; ++i)
            mixed(i, i) = 0.2;
        CHECK((manifold_populations(mixed, model.basis) - VectorXr::Unit(3, 1)).norm() < 1e-15);

        const MatrixXc rho = excited_mode(model, 3);
        CHECK(mode_projection(rho, model.modes[2], model.basis) == doctest::Approx(1.0).epsilon(1e-12));
        const VectorXc pair = embed_pair(model.pairs[0].amplitudes, model.basis);
        CHECK(mode_projection(pair * pair.adjoint(), model.pairs[0], model.basis) ==
              doctest::Approx(1.0).epsilon(1e-12));
    }

    TEST_CASE("manifold populations against projector operators")
    {
        const ChainModel model = ChainModel::build(ChainGeometry::longitudinal(6, 0.35), 3);
        const MatrixXc rho = testing::random_density(model.basis.dimension(), 11);
        const VectorXr pops = manifold_populations(rho, model.basis);
        const MatrixXr iso = testing::isometry(model.basis);
        for (int k = 0; k <= 3; ++k)
        {
            // projector onto k excitations, built on the full 2^N space and pulled back
            MatrixXr full = MatrixXr::Zero(64, 64);
            for (int s = 0; s < 64; ++s)
                if (__builtin_popcount(static_cast<unsigned>(s)) == k)
                    full(s, s) = 1.0;
            const MatrixXc proj = (iso.transpose() * full * iso).cast<Complex>();
            CHECK(pops[k] == doctest::Approx((proj * rho).trace().real()).epsilon(1e-13));
        }
        CHECK(total_population(rho, model.basis) == doctest::Approx(pops[1] + 2 * pops[2] + 3 * pops[3]));
    }

    TEST_CASE("frame change round trip")
    {
        const ChainModel model = ChainModel::build(ChainGeometry::longitudinal(4, 0.35), 2);
        const MatrixXc rho = testing::random_density(model.basis.dimension(), 3);
        MatrixXc moved = rho;
        change_frame(moved, model.basis, 0.0, 2.5, 1.3);
        CHECK((moved - rho).norm() > 1e-3);
        CHECK((moved.diagonal() - rho.diagonal()).norm() < 1e-15);
        change_frame(moved, model.basis, 2.5, 0.0, 1.3);
        CHECK((moved - rho).norm() < 1e-14);
    }

    TEST_CASE("single atom free decay")
    {
        const ChainModel model = ChainModel::build(ChainGeometry::longitudinal(1, 0.35), 1);
        MatrixXc rho = MatrixXc::Zero(2, 2);
        rho(1, 1) = 1.0;
        ProtocolSchedule s;
        s.phases.push_back(free_phase(5.0));
        const auto result = run_protocol(s, model, {}, rho);
        CHECK(std::abs(result.series.total_pop.back() - std::exp(-5.0)) < 1e-6);
        for (Real g : result.series.gamma)
            CHECK(g == doctest::Approx(1.0).epsilon(1e-12));
    }

    TEST_CASE("explicit step above the stability limit is rejected")
    {
        const ChainModel model = ChainModel::build(ChainGeometry::longitudinal(4, 0.35), 2);
        const Phase p = drive_phase(model, 100.0, 0.01, 1e-2);
        CHECK(p.dt > max_stable_step(p, model));
        ProtocolSchedule s;
        s.phases.push_back(p);
        try
        {
            run_protocol(s, model);
            FAIL("expected Config");
        }
        catch (const Error& e)
        {
            CHECK(e.kind() == ErrorKind::Config);
        }
    }

    TEST_CASE("RK4 self-convergence on a driven four-atom chain")
    {
        const ChainModel model = ChainModel::build(ChainGeometry::longitudinal(4, 0.35), 2);
        const Phase probe = drive_phase(model, 100.0, 0.02);
        const Real coarse = max_stable_step(probe, model);
        std::vector<MatrixXc> finals;
        for (Real dt : {coarse, coarse / 2, coarse / 4})
        {
            ProtocolSchedule s;
            s.phases.push_back(drive_phase(model, 100.0, 0.02, dt));
            finals.push_back(run_protocol(s, model).final_state);
        }
        const Real e1 = (finals[0] - finals[1]).norm(), e2 = (finals[1] - finals[2]).norm();
        const Real order = std::log2(e1 / e2);
        MESSAGE("measured RK4 order " << order);
        CHECK(order >= 3.8);

        ProtocolSchedule a, b;
        a.phases.push_back(drive_phase(model, 100.0, 0.02));
        b.phases.push_back(drive_phase(model, 100.0, 0.02, phase_step(a.phases[0], model) / 2));
        const Real pa = run_protocol(a, model).series.total_pop.back();
        const Real pb = run_protocol(b, model).series.total_pop.back();
        CHECK(std::abs(pa - pb) < 1e-8);
    }

    TEST_CASE("closed-form free evolution matches RK4")
    {
        const ChainModel model = ChainModel::build(ChainGeometry::longitudinal(5, 0.35), 2);
        ProtocolSchedule prep;
        prep.phases.push_back(drive_phase(model, 100.0, 0.006));
        MatrixXc rho = run_protocol(prep, model).final_state;

        ProtocolSchedule rk, exact;
        rk.phases.push_back(free_phase(3.0, 0.002));
        Phase cf = free_phase(3.0);
        cf.closed_form = true;
        cf.samples = 150;
        exact.phases.push_back(cf);
        const auto a = run_protocol(rk, model, {}, rho);
        const auto b = run_protocol(exact, model, {}, rho);
        CHECK((a.final_state - b.final_state).norm() < 1e-10);
        CHECK(std::abs(a.series.total_pop.back() - b.series.total_pop.back()) < 1e-12);
        CHECK(std::abs(a.series.gamma.back() - b.series.gamma.back()) < 1e-9);
    }

    TEST_CASE("analytic decay rate against a central difference")
    {
        const ChainModel model = ChainModel::build(ChainGeometry::longitudinal(6, 0.35), 2);
        ProtocolSchedule prep;
        prep.phases.push_back(drive_phase(model, 100.0, 0.005));
        const MatrixXc rho = run_protocol(prep, model).final_state;
        ProtocolSchedule s;
        Phase p = free_phase(2.0, 0.001);
        s.phases.push_back(p);
        const auto r = run_protocol(s, model, {}, rho);
        const auto& t = r.series.times;
        const auto& pop = r.series.total_pop;
        for (std::size_t i = 100; i + 100 < t.size(); i += 250)
        {
            const Real derivative = (pop[i + 1] - pop[i - 1]) / (t[i + 1] - t[i - 1]);
            const Real fd = -derivative / pop[i];
            CHECK(std::abs(fd - r.series.gamma[i]) < 1e-4);
        }
    }

    TEST_CASE("instantaneous decay floor")
    {
        const ChainModel model = ChainModel::build(ChainGeometry::longitudinal(3, 0.35), 1);
        MatrixXc ground = MatrixXc::Zero(4, 4);
        ground(0, 0) = 1.0;
        CHECK(std::isnan(instantaneous_decay(ground, model.h_eff, model.equation)));
        CHECK(instantaneous_decay(excited_mode(model, 2), model.h_eff, model.equation) ==
              doctest::Approx(model.modes[1].decay).epsilon(1e-10));
    }

    TEST_CASE("canonical schedule composition")
    {
        const ChainModel model = ChainModel::build(ChainGeometry::longitudinal(6, 0.35), 2);
        ProtocolParameters p;
        const auto short_run = ProtocolSchedule::canonical(p, model);
        REQUIRE(short_run.phases.size() == 2);
        CHECK(short_run.phases[0].name == "illumination");
        CHECK(short_run.phases[1].name == "transfer");
        CHECK(short_run.phases[1].duration == doctest::Approx(std::numbers::pi / 200.0));
        const auto r = run_protocol(short_run, model);
        CHECK(r.series.phases.size() == 2);
        CHECK(r.series.times.back() == doctest::Approx(0.006 + std::numbers::pi / 200.0));

        p.storage_time = 10.0;
        p.emission_cycles = 2;
        p.xi_aim = 4;
        const auto full = ProtocolSchedule::canonical(p, model);
        REQUIRE(full.phases.size() == 7);
        CHECK(full.phases[4].name == "emission_free_1");
        CHECK(full.phases[4].duration == doctest::Approx(2.0 / model.modes[3].decay));
        CHECK(full.phases[5].duration == doctest::Approx(std::numbers::pi / 300.0));
    }

    TEST_CASE("staggered transfer applied twice restores the single-mode pattern")
    {
        const int n = 20;
        const ChainModel model = ChainModel::build(ChainGeometry::longitudinal(n, 0.35), 1);
        ProtocolSchedule s;
        Phase p;
        p.name = "double_transfer";
        p.duration = std::numbers::pi / 100.0;
        DetuningPattern pattern;
        pattern.amplitude = 100.0;
        p.pvd = pattern;
        s.phases.push_back(p);
        RunOptions options;
        for (int xi = 1; xi <= n; ++xi)
            options.projections.singles.push_back(xi);
        const MatrixXc rho = excited_mode(model, n);
        const auto r = run_protocol(s, model, options, rho);
        const VectorXr start = r.series.projections.front(), end = r.series.projections.back();
        const Real p0 = r.series.manifold_populations.front()[1], p1 = r.series.manifold_populations.back()[1];
        MESSAGE("absolute change " << (end - start).cwiseAbs().maxCoeff() << ", population kept " << p1 / p0);
        CHECK((end / p1 - start / p0).cwiseAbs().maxCoeff() < 0.02);
    }

    TEST_CASE("single-mode projections account for the one-excitation population")
    {
        const int n = 20;
        const ChainModel model = ChainModel::build(ChainGeometry::longitudinal(n, 0.35), 2);
        ProtocolParameters params;
        RunOptions options;
        for (int xi = 1; xi <= n; ++xi)
            options.projections.singles.push_back(xi);
        const auto r = run_protocol(ProtocolSchedule::canonical(params, model), model, options);
        for (std::size_t i = 5; i < r.series.size(); i += 5)
        {
            const Real p1 = r.series.manifold_populations[i][1];
            CHECK(std::abs(r.series.projections[i].sum() - p1) < 0.05 * p1);
        }
    }

    TEST_CASE("storage improves with chain length")
    {
        Real previous = -1.0;
        for (int n : {5, 10, 15, 20})
        {
            const ChainModel model = ChainModel::build(ChainGeometry::longitudinal(n, 0.35), 2);
            ProtocolParameters params;
            params.storage_time = 30.0;
            const auto r = run_protocol(ProtocolSchedule::canonical(params, model), model);
            const Real pop = r.series.total_pop.back();
            CAPTURE(n);
            CHECK(pop > previous);
            previous = pop;
        }
    }

    TEST_CASE("transition time extraction")
    {
        std::vector<Real> t, g;
        for (int i = 0; i <= 100; ++i)
        {
            t.push_back(i);
            g.push_back(2.0);
        }
        CHECK(*extract_transition_time(t, g, 2.0, 10.0) == doctest::Approx(10.0));

        std::vector<Real> decaying;
        for (Real ti : t)
            decaying.push_back(1.0 + 5.0 * std::exp(-ti / 10.0));
        const auto tt = extract_transition_time(t, decaying, 1.0, 0.0);
        REQUIRE(tt);
        CHECK(*tt == doctest::Approx(40.0));

        std::vector<Real> never(t.size(), 3.0);
        CHECK_FALSE(extract_transition_time(t, never, 1.0, 0.0));

        std::vector<Real> late(t.size(), 3.0);
        late.back() = 1.0;
        CHECK_THROWS_AS(extract_transition_time(t, late, 1.0, 0.0), Error);
        CHECK_THROWS_AS(extract_transition_time(t, g, 2.0, 100.0), Error);
    }
}
