#pragma once

#include <optional>

#include "chainqed/dynamics.hpp"

namespace chainqed
{
    /// Three-level cascade: the pair mode (1,2) feeding single modes xi = 1 and xi = 2.
    struct RateModelConfig
    {
        Real decay_first = 0.0;  // Gamma_1
        Real decay_second = 0.0; // Gamma_2
        Real decay_pair = 0.0;   // Gamma_(1,2)
        Real branch_first = 0.0; // gamma_{1,(1,2)}
        Real branch_second = 0.0;
        Real pair0 = 0.0;   // mode population of the pair
        Real first0 = 0.0;  // population of xi = 1
        Real second0 = 0.0; // population of xi = 2

        /// Initial populations after a pulse of area Omega t_1: (Omega t_1)^2 in xi = 1 and
        /// (Omega t_1)^4 / 2 in the pair, so the pair carries (Omega t_1)^4 atomic population.
        static RateModelConfig from_pulse(Real pulse_area, Real decay_first, Real decay_second, Real decay_pair,
                                          Real branch_first, Real branch_second);

        void validate() const;
    };

    struct RateState
    {
        Real pair = 0.0;
        Real first = 0.0;
        Real second = 0.0;

        Real atomic_population() const { return 2.0 * pair + first + second; }
    };

    /// (e^{-a t} - e^{-b t}) / (b - a), with the limit t e^{-a t} at a = b.
    Real exp_difference(Real a, Real b, Real t);

    RateState evolve_rate_model(const RateModelConfig& cfg, Real t);

    /// (Omega t_1)^2 e^{-Gamma_1 t} + (Omega t_1)^4 e^{-Gamma_12 t}
    Real pop_closed_form(Real pulse_area, Real decay_first, Real decay_pair, Real t);

    /// Gamma_1 [e^{-Gamma_1 t} + kappa x e^{-kappa Gamma_1 t}] / [e^{-Gamma_1 t} + x e^{-kappa Gamma_1 t}], x = (Omega t_1)^2
    Real gamma_closed_form(Real pulse_area, Real decay_first, Real kappa, Real t);

    /// log(kappa (Omega t_1)^2) N^3 / ((kappa - 1) alpha_1), when kappa (Omega t_1)^2 > 1.
    std::optional<Real> transition_time_formula(Real pulse_area, Real kappa, Real alpha1, int n_atoms);

    /// Branch rate from a double mode into a single mode through the recycling term,
    /// v^T Gamma conj(v) with v_m = <psi_single| sigma_ge^m |psi_pair>.
    Real pair_decay_rate(const CollectiveMode& single, const TwoExcitationMode& pair,
                         const CouplingMatrices& couplings, const TruncatedBasis& basis);

    /// Gamma_(1,2) / Gamma_1.
    Real kappa_ratio(const ChainGeometry& geometry, const TruncatedBasis& basis);

    /// Rate-model configuration with rates taken from the chain's modes.
    RateModelConfig rate_model_for(const ChainModel& model, Real pulse_area);
}
