#pragma once

#include <cmath>

namespace rapm {

/// Market and model inputs of the RAPM call pricing problem.
///
/// Construction validates positivity and both existence conditions
/// (C < sigma^2 M T and C M < pi/8); a violation throws rapm::Error naming
/// the failed condition.
class RapmParams {
public:
    RapmParams(double rate, double sigma, double strike, double expiry,
               double risk_premium, double txn_cost);

    /// Parameter set used throughout the numerical experiments
    /// (r = 0.1, sigma = 0.2, K = 75, T = 1, C = 0.01, M = 2).
    [[nodiscard]] static RapmParams reference();

    [[nodiscard]] double rate() const noexcept { return rate_; }
    [[nodiscard]] double sigma() const noexcept { return sigma_; }
    [[nodiscard]] double strike() const noexcept { return strike_; }
    [[nodiscard]] double expiry() const noexcept { return expiry_; }
    [[nodiscard]] double risk_premium() const noexcept { return risk_premium_; }
    [[nodiscard]] double txn_cost() const noexcept { return txn_cost_; }

private:
    double rate_;
    double sigma_;
    double strike_;
    double expiry_;
    double risk_premium_;
    double txn_cost_;
};

struct DerivedConstants {
    double t_star;    ///< switching time T - C/(M sigma^2), years
    double tau_star;  ///< C/(2M), transformed switching time
    double tau_max;   ///< sigma^2 T / 2, transformed time at t = 0
    double d_coeff;   ///< 2r/sigma^2
    double c_r;       ///< 3 (C^2 M / 2 pi)^(1/3), weight of the v^(4/3) term
};

[[nodiscard]] DerivedConstants derive_constants(const RapmParams& p);

/// Checks only the existence conditions; throws on violation.
void check_existence(double sigma, double expiry, double risk_premium, double txn_cost);

struct TransformedPoint {
    double x;    ///< ln(S/K)
    double tau;  ///< sigma^2 (T - t) / 2
    double u;    ///< e^{-x} V / K
};

struct MarketPoint {
    double spot;
    double time;
    double value;
};

[[nodiscard]] TransformedPoint to_transformed(double spot, double time, double value,
                                              const RapmParams& p);
[[nodiscard]] MarketPoint from_transformed(double x, double tau, double u,
                                           const RapmParams& p) noexcept;

[[nodiscard]] inline double std_normal_cdf(double z) noexcept {
    return 0.5 * std::erfc(-z * M_SQRT1_2);
}

/// Transformed Black-Scholes value at the switching time,
/// Phi(d1) - e^{-(D tau* + x)} Phi(d2). Requires tau* > 0.
[[nodiscard]] double switching_profile(double x, const RapmParams& p);

/// Transformed payoff max(1 - e^{-x}, 0), the tau = 0 data.
[[nodiscard]] inline double transformed_payoff(double x) noexcept {
    return x > 0.0 ? -std::expm1(-x) : 0.0;
}

/// Transformed linear Black-Scholes call u(x, tau) for any tau >= 0.
[[nodiscard]] double transformed_bs_call(double x, double tau, double d_coeff) noexcept;

/// Classical Black-Scholes call price in market variables; payoff at t >= T.
[[nodiscard]] double bs_call_price(double spot, double time, const RapmParams& p);

}  // namespace rapm
