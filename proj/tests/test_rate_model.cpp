#include <doctest.h>

#include <cmath>

#include "chainqed/rate_model.hpp"

using namespace chainqed;

namespace
{
    RateModelConfig toy(Real b1, Real b2)
    {
        return RateModelConfig::from_pulse(0.6, 0.01, 0.05, 0.1, b1, b2);
    }
}

TEST_SUITE("rate_model")
{
    TEST_CASE("initial populations from the pulse area")
    {
        const RateModelConfig c = toy(0.05, 0.03);
        CHECK(c.first0 == doctest::Approx(0.36));
        CHECK(c.pair0 == doctest::Approx(0.5 * 0.36 * 0.36));
        const RateState s = evolve_rate_model(c, 0.0);
        CHECK(s.pair == c.pair0);
        CHECK(s.first == c.first0);
        CHECK(s.second == c.second0);
        CHECK(s.atomic_population() == doctest::Approx(0.36 + 0.36 * 0.36));
    }

    TEST_CASE("decoupled limit")
    {
        const RateModelConfig c = toy(0.0, 0.0);
        const Real t = 17.0;
        const RateState s = evolve_rate_model(c, t);
        CHECK(s.pair == doctest::Approx(c.pair0 * std::exp(-0.1 * t)).epsilon(1e-14));
        CHECK(s.first == doctest::Approx(c.first0 * std::exp(-0.01 * t)).epsilon(1e-14));
        CHECK(s.second == 0.0);
        CHECK(s.atomic_population() == doctest::Approx(pop_closed_form(0.6, 0.01, 0.1, t)).epsilon(1e-14));
    }

    TEST_CASE("equal rates use the t e^{-a t} limit")
    {
        CHECK(exp_difference(0.3, 0.3, 2.0) == doctest::Approx(2.0 * std::exp(-0.6)).epsilon(1e-15));
        const Real near = exp_difference(0.3, 0.3 + 1e-10, 2.0);
        CHECK(near == doctest::Approx(2.0 * std::exp(-0.6)).epsilon(1e-9));
        const Real far = exp_difference(0.3, 0.5, 2.0);
        CHECK(far == doctest::Approx((std::exp(-0.6) - std::exp(-1.0)) / 0.2).epsilon(1e-14));

        const RateModelConfig c = RateModelConfig::from_pulse(0.6, 0.1, 0.05, 0.1, 0.06, 0.02);
        const RateState s = evolve_rate_model(c, 5.0);
        CHECK(std::isfinite(s.first));
        CHECK(s.first == doctest::Approx(c.first0 * std::exp(-0.5) + 0.06 * c.pair0 * 5.0 * std::exp(-0.5)));
    }

    TEST_CASE("total probability never increases")
    {
        const RateModelConfig c = toy(0.06, 0.04);
        auto total = [&](Real t) {
            const RateState s = evolve_rate_model(c, t);
            return s.pair + s.first + s.second;
        };
        for (Real t = 0.0; t < 400.0; t += 7.5)
            CHECK(total(t + 0.5) <= total(t) + 1e-15);
    }

    TEST_CASE("closed forms")
    {
        CHECK(pop_closed_form(0.6, 0.01, 0.1, 0.0) == doctest::Approx(0.36 + 0.1296));
        CHECK(pop_closed_form(0.6, 0.01, 0.1, 1e5) < 1e-40);
        CHECK(gamma_closed_form(0.6, 0.01, 9.0, 1e5) == doctest::Approx(0.01));
        CHECK(gamma_closed_form(0.0, 0.01, 9.0, 3.0) == doctest::Approx(0.01));
        Real previous = 0.0;
        for (Real pulse : {0.1, 0.2, 0.3, 0.4, 0.5, 0.6})
        {
            const Real g0 = gamma_closed_form(pulse, 0.01, 9.0, 0.0);
            CHECK(g0 > previous);
            previous = g0;
        }
        previous = 1e9;
        for (Real t = 0.0; t < 2000.0; t += 25.0)
        {
            const Real g = gamma_closed_form(0.6, 0.01, 9.0, t);
            CHECK(g <= previous);
            if (g - 0.01 > 1e-12)
                CHECK(g < previous);
            previous = g;
        }
        CHECK_THROWS_AS(pop_closed_form(0.6, 0.01, 0.1, -1.0), Error);
    }

    TEST_CASE("transition time formula")
    {
        CHECK_FALSE(transition_time_formula(1.0 / 3.0 - 1e-9, 9.0, 1.0, 10));
        CHECK(transition_time_formula(1.0 / 3.0 + 1e-6, 9.0, 1.0, 10));
        const auto t = transition_time_formula(0.6, 9.0, 2.0, 10);
        REQUIRE(t);
        CHECK(*t == doctest::Approx(std::log(9.0 * 0.36) * 1000.0 / (8.0 * 2.0)));
        CHECK_THROWS_AS(transition_time_formula(0.6, 0.5, 2.0, 10), Error);
    }

    TEST_CASE("configuration validation")
    {
        CHECK_THROWS_AS(RateModelConfig::from_pulse(0.6, 0.01, 0.05, 0.1, 0.08, 0.05), Error);
        CHECK_THROWS_AS(RateModelConfig::from_pulse(0.6, 0.0, 0.05, 0.1, 0.0, 0.0), Error);
        CHECK_THROWS_AS(evolve_rate_model(toy(0.0, 0.0), -1.0), Error);
    }

    TEST_CASE("two atoms: the pair branches into both single modes")
    {
        const ChainModel model = ChainModel::build(ChainGeometry::longitudinal(2, 0.35), 2);
        const auto& pair = model.pairs.front();
        const Real b1 = pair_decay_rate(model.modes[0], pair, model.couplings, model.basis);
        const Real b2 = pair_decay_rate(model.modes[1], pair, model.couplings, model.basis);
        CHECK(std::abs(b1 + b2 - pair.decay) < 1e-9);
    }

    TEST_CASE("ten atoms: positivity, kappa and branch scaling")
    {
        const ChainModel model = ChainModel::build(ChainGeometry::longitudinal(10, 0.35), 2);
        const auto& pair = find_pair(model.pairs, {1, 2});
        Real all = 0.0;
        for (const auto& m : model.modes)
        {
            const Real b = pair_decay_rate(m, pair, model.couplings, model.basis);
            CHECK(b >= -1e-10);
            all += b;
        }
        for (const auto& p : model.pairs)
            CHECK(pair_decay_rate(model.modes[3], p, model.couplings, model.basis) >= -1e-10);

        CHECK(kappa_ratio(model.geometry, model.basis) > 1.0);
        const RateModelConfig rm = rate_model_for(model, 0.6);
        CHECK(rm.branch_first + rm.branch_second <= rm.decay_pair + 1e-9);
        CHECK_THROWS_AS(pair_decay_rate(model.modes[0], pair, model.couplings, TruncatedBasis(10, 1)), Error);
    }

    TEST_CASE("ten atoms: the pair decays mostly into the two most subradiant modes")
    {
        const ChainModel model = ChainModel::build(ChainGeometry::longitudinal(10, 0.35), 2);
        const auto& pair = find_pair(model.pairs, {1, 2});
        Real all = 0.0;
        for (const auto& m : model.modes)
            all += pair_decay_rate(m, pair, model.couplings, model.basis);
        const Real b1 = pair_decay_rate(model.modes[0], pair, model.couplings, model.basis);
        const Real b2 = pair_decay_rate(model.modes[1], pair, model.couplings, model.basis);
        MESSAGE("dominant branches " << (b1 + b2) / pair.decay << ", all branches " << all / pair.decay);
        CHECK(b1 + b2 > 0.8 * pair.decay);
        CHECK(b1 + b2 > 0.8 * all);
    }
}
