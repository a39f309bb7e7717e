#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "nanores/errors.hpp"

namespace nanores {

/// How the junction voltage enters the rate exponents. In magnitude mode both
/// rates see |v|; in signed mode the raw signed drop is used, so polarity
/// matters.
enum class VoltageMode { magnitude, signed_drop };

struct DynamicsParams {
    double k_p = 0.001;  ///< potentiation base rate
    double k_d = 0.5;    ///< depression base rate
    double eta_p = 1.0;
    double eta_d = 1.0;
    double g_min = 0.001;  ///< conductance floor, siemens
    double g_max = 1.0;    ///< conductance ceiling, siemens
    double dt = 1.0;
    VoltageMode mode = VoltageMode::magnitude;

    void validate() const {
        if (!(k_p > 0.0)) throw ConfigError("dynamics: k_p must be positive");
        if (!(k_d > 0.0)) throw ConfigError("dynamics: k_d must be positive");
        if (eta_p < 0.0 || eta_d < 0.0) throw ConfigError("dynamics: eta must be non-negative");
        if (!(g_min > 0.0)) throw ConfigError("dynamics: g_min must be positive");
        if (!(g_max > g_min)) throw ConfigError("dynamics: g_max must exceed g_min");
        if (!(dt > 0.0)) throw ConfigError("dynamics: dt must be positive");
    }
};

struct Rates {
    double potentiation = 0.0;
    double depression = 0.0;
};

/// Voltage-dependent transition rates:
///   K_p(v) = k_p * exp(eta_p * u),  K_d(v) = k_d * exp(-eta_d * u)
/// with u = |v| in magnitude mode and u = v in signed mode.
inline Rates rates(double v, const DynamicsParams& p) {
    if (!std::isfinite(v)) throw NumericalError("rates: non-finite voltage");
    const double u = p.mode == VoltageMode::magnitude ? std::abs(v) : v;
    Rates r;
    r.potentiation = p.k_p * std::exp(p.eta_p * u);
    r.depression = p.k_d * std::exp(-p.eta_d * u);
    if (!std::isfinite(r.potentiation) || !std::isfinite(r.depression))
        throw Saturated("rates overflow at v = " + std::to_string(v));
    return r;
}

/// One forward Euler step of
///   dg/dt = K_p(v) (1 - g) - K_d(v) g
/// with the result clamped to [0, 1].
inline double step_state(double g, double v, const DynamicsParams& p) {
    if (!std::isfinite(g)) throw NumericalError("step_state: non-finite state");
    const Rates r = rates(v, p);
    double next = g + p.dt * (r.potentiation * (1.0 - g) - r.depression * g);
    if (!std::isfinite(next)) throw NumericalError("step_state: non-finite update");
    return std::clamp(next, 0.0, 1.0);
}

/// Junction conductance is affine in the state: g_min + g * (g_max - g_min).
inline double junction_conductance(double g, const DynamicsParams& p) {
    return p.g_min + g * (p.g_max - p.g_min);
}

/// Euler stability margin: largest dt * (K_p(v) + K_d(v)) over v in
/// {-v_p, 0, +v_p}. Values >= 1 mean the explicit update can overshoot
/// (the state clamp still keeps it bounded).
inline double stability_margin(const DynamicsParams& p, double v_p) {
    double worst = 0.0;
    for (double v : {-v_p, 0.0, v_p}) {
        const Rates r = rates(v, p);
        worst = std::max(worst, p.dt * (r.potentiation + r.depression));
    }
    return worst;
}

inline bool stable_at(const DynamicsParams& p, double v_p) { return stability_margin(p, v_p) < 1.0; }

}  // namespace nanores
