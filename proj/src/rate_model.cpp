#include "chainqed/rate_model.hpp"

#include <cmath>

#include <fmt/format.h>

namespace chainqed
{
    RateModelConfig RateModelConfig::from_pulse(Real pulse_area, Real decay_first, Real decay_second, Real decay_pair,
                                                Real branch_first, Real branch_second)
    {
        RateModelConfig c;
        c.decay_first = decay_first;
        c.decay_second = decay_second;
        c.decay_pair = decay_pair;
        c.branch_first = branch_first;
        c.branch_second = branch_second;
        const Real x = pulse_area * pulse_area;
        c.first0 = x;
        c.pair0 = 0.5 * x * x;
        c.validate();
        return c;
    }

    void RateModelConfig::validate() const
    {
        if (!(decay_first > 0.0) || !(decay_second > 0.0) || !(decay_pair > 0.0))
            fail(ErrorKind::Domain, "rate model needs positive decay rates");
        if (branch_first < 0.0 || branch_second < 0.0)
            fail(ErrorKind::Domain, "rate model branch rates must be non-negative");
        if (branch_first + branch_second > decay_pair + 1e-9)
            fail(ErrorKind::Domain,
                 fmt::format("branch rates {} + {} exceed the pair decay {}", branch_first, branch_second, decay_pair));
        if (pair0 < 0.0 || first0 < 0.0 || second0 < 0.0)
            fail(ErrorKind::Domain, "rate model populations must be non-negative");
    }

    Real exp_difference(Real a, Real b, Real t)
    {
        const Real d = b - a;
        const Real x = d * t;
        if (std::abs(x) < 1e-8)
            return t * std::exp(-a * t) * (1.0 - 0.5 * x);
        // e^{-a t} (1 - e^{-d t}) / d
        return -std::exp(-a * t) * std::expm1(-x) / d;
    }

    RateState evolve_rate_model(const RateModelConfig& cfg, Real t)
    {
        cfg.validate();
        if (!(t >= 0.0))
            fail(ErrorKind::Domain, "rate model time must be non-negative");
        RateState s;
        s.pair = cfg.pair0 * std::exp(-cfg.decay_pair * t);
        s.first = cfg.first0 * std::exp(-cfg.decay_first * t) +
                  cfg.branch_first * cfg.pair0 * exp_difference(cfg.decay_pair, cfg.decay_first, t);
        s.second = cfg.second0 * std::exp(-cfg.decay_second * t) +
                   cfg.branch_second * cfg.pair0 * exp_difference(cfg.decay_pair, cfg.decay_second, t);
        return s;
    }

    Real pop_closed_form(Real pulse_area, Real decay_first, Real decay_pair, Real t)
    {
        if (!(t >= 0.0))
            fail(ErrorKind::Domain, "time must be non-negative");
        const Real x = pulse_area * pulse_area;
        return x * std::exp(-decay_first * t) + x * x * std::exp(-decay_pair * t);
    }

    Real gamma_closed_form(Real pulse_area, Real decay_first, Real kappa, Real t)
    {
        if (!(t >= 0.0) || !(kappa > 0.0))
            fail(ErrorKind::Domain, "gamma_closed_form needs t >= 0 and kappa > 0");
        // divide through by e^{-Gamma_1 t} to stay finite at long times
        const Real x = pulse_area * pulse_area * std::exp(-(kappa - 1.0) * decay_first * t);
        return decay_first * (1.0 + kappa * x) / (1.0 + x);
    }

    std::optional<Real> transition_time_formula(Real pulse_area, Real kappa, Real alpha1, int n_atoms)
    {
        if (!(kappa > 1.0) || !(alpha1 > 0.0))
            fail(ErrorKind::Domain, "transition_time_formula needs kappa > 1 and alpha_1 > 0");
        const Real arg = kappa * pulse_area * pulse_area;
        if (!(arg > 1.0))
            return std::nullopt;
        const Real n3 = std::pow(static_cast<Real>(n_atoms), 3);
        return std::log(arg) * n3 / ((kappa - 1.0) * alpha1);
    }

    Real pair_decay_rate(const CollectiveMode& single, const TwoExcitationMode& pair,
                         const CouplingMatrices& couplings, const TruncatedBasis& basis)
    {
        const int n = basis.n_atoms();
        if (basis.n_max() < 2 || couplings.n_atoms() != n)
            fail(ErrorKind::BasisMismatch, "pair_decay_rate needs a basis with n_max >= 2 for the same chain");
        if (single.amplitudes.size() != n || pair.amplitudes.size() != basis.block_size(2))
            fail(ErrorKind::BasisMismatch, "mode vectors do not match the basis");
        VectorXc v = VectorXc::Zero(n);
        const int p0 = basis.offset(2), s0 = basis.offset(1);
        for (int p = 0; p < basis.block_size(2); ++p)
            for (int m : basis.state(p0 + p))
                v[m] += std::conj(single.amplitudes[basis.lower(p0 + p, m) - s0]) * pair.amplitudes[p];
        return (v.transpose() * couplings.decay * v.conjugate()).value().real();
    }

    Real kappa_ratio(const ChainGeometry& geometry, const TruncatedBasis& basis)
    {
        if (geometry.n_atoms < 3)
            fail(ErrorKind::OutOfRange, "kappa_ratio needs at least three atoms");
        const auto couplings = coupling_matrices(geometry);
        const auto singles = single_modes(couplings);
        const auto pairs = double_modes(couplings, basis, singles);
        return find_pair(pairs, {1, 2}).decay / singles.front().decay;
    }

    RateModelConfig rate_model_for(const ChainModel& model, Real pulse_area)
    {
        if (model.pairs.empty() || model.n_atoms() < 2)
            fail(ErrorKind::BasisMismatch, "rate model needs n_max >= 2");
        const auto& pair = find_pair(model.pairs, {1, 2});
        const Real b1 = pair_decay_rate(model.modes[0], pair, model.couplings, model.basis);
        const Real b2 = pair_decay_rate(model.modes[1], pair, model.couplings, model.basis);
        // branches computed from non-orthogonal modes may overshoot the total slightly
        const Real scale = std::min(1.0, pair.decay / (b1 + b2));
        return RateModelConfig::from_pulse(pulse_area, model.modes[0].decay, model.modes[1].decay, pair.decay,
                                           b1 * scale, b2 * scale);
    }
}
