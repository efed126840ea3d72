#include "rapm/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "rapm/error.hpp"

namespace rapm {

namespace {

void require_positive(double value, const char* name) {
    if (!(value > 0.0) || !std::isfinite(value)) {
        std::ostringstream os;
        os << name << " must be positive and finite (got " << value << ")";
        throw Error(ErrorCode::InvalidParameter, os.str());
    }
}

void require_nonnegative(double value, const char* name) {
    if (!(value >= 0.0) || !std::isfinite(value)) {
        std::ostringstream os;
        os << name << " must be non-negative and finite (got " << value << ")";
        throw Error(ErrorCode::InvalidParameter, os.str());
    }
}

}  // namespace

void check_existence(double sigma, double expiry, double risk_premium, double txn_cost) {
    const double bound_a = sigma * sigma * txn_cost * expiry;
    if (!(risk_premium < bound_a)) {
        std::ostringstream os;
        os << "existence condition A violated: C = " << risk_premium
           << " must be below sigma^2 M T = " << bound_a;
        throw Error(ErrorCode::ExistenceViolationA, os.str());
    }
    const double bound_b = std::numbers::pi / 8.0;
    if (!(risk_premium * txn_cost < bound_b)) {
        std::ostringstream os;
        os << "existence condition B violated: C M = " << risk_premium * txn_cost
           << " must be below pi/8 = " << bound_b;
        throw Error(ErrorCode::ExistenceViolationB, os.str());
    }
}

RapmParams::RapmParams(double rate, double sigma, double strike, double expiry,
                       double risk_premium, double txn_cost)
    : rate_(rate),
      sigma_(sigma),
      strike_(strike),
      expiry_(expiry),
      risk_premium_(risk_premium),
      txn_cost_(txn_cost) {
    require_positive(rate, "rate");
    require_positive(sigma, "sigma");
    require_positive(strike, "strike");
    require_positive(expiry, "expiry");
    require_nonnegative(risk_premium, "risk premium");
    require_nonnegative(txn_cost, "transaction cost");
    check_existence(sigma, expiry, risk_premium, txn_cost);
}

RapmParams RapmParams::reference() {
    return RapmParams(0.1, 0.2, 75.0, 1.0, 0.01, 2.0);
}

DerivedConstants derive_constants(const RapmParams& p) {
    const double s2 = p.sigma() * p.sigma();
    const double c = p.risk_premium();
    const double m = p.txn_cost();
    DerivedConstants d{};
    // Existence condition A forces M > 0 here.
    d.t_star = p.expiry() - c / (m * s2);
    d.tau_star = c / (2.0 * m);
    d.tau_max = 0.5 * s2 * p.expiry();
    d.d_coeff = 2.0 * p.rate() / s2;
    d.c_r = 3.0 * std::cbrt(c * c * m / (2.0 * std::numbers::pi));
    return d;
}

TransformedPoint to_transformed(double spot, double time, double value, const RapmParams& p) {
    if (!(spot > 0.0)) {
        std::ostringstream os;
        os << "spot must be positive (got " << spot << ")";
        throw Error(ErrorCode::NonpositiveSpot, os.str());
    }
    const double x = std::log(spot / p.strike());
    const double tau = 0.5 * p.sigma() * p.sigma() * (p.expiry() - time);
    return {x, tau, value / spot};
}

MarketPoint from_transformed(double x, double tau, double u, const RapmParams& p) noexcept {
    const double spot = p.strike() * std::exp(x);
    const double time = p.expiry() - 2.0 * tau / (p.sigma() * p.sigma());
    return {spot, time, spot * u};
}

double transformed_bs_call(double x, double tau, double d_coeff) noexcept {
    if (tau <= 0.0) {
        return transformed_payoff(x);
    }
    const double root = std::sqrt(2.0 * tau);
    const double d1 = (x + (d_coeff + 1.0) * tau) / root;
    const double d2 = d1 - root;
    // round-off can leave a tiny negative far out of the money
    return std::max(0.0,
                    std_normal_cdf(d1) - std::exp(-(d_coeff * tau + x)) * std_normal_cdf(d2));
}

double switching_profile(double x, const RapmParams& p) {
    const DerivedConstants d = derive_constants(p);
    if (!(d.tau_star > 0.0)) {
        throw Error(ErrorCode::DegenerateSwitch,
                    "switching time coincides with expiry (tau* = 0); use the payoff");
    }
    return transformed_bs_call(x, d.tau_star, d.d_coeff);
}

double bs_call_price(double spot, double time, const RapmParams& p) {
    const double k = p.strike();
    const double remaining = p.expiry() - time;
    if (remaining <= 0.0) {
        return std::max(spot - k, 0.0);
    }
    if (spot <= 0.0) {
        return 0.0;
    }
    const double vol = p.sigma() * std::sqrt(remaining);
    const double d1 =
        (std::log(spot / k) + (p.rate() + 0.5 * p.sigma() * p.sigma()) * remaining) / vol;
    const double d2 = d1 - vol;
    return std::max(0.0, spot * std_normal_cdf(d1) -
                             k * std::exp(-p.rate() * remaining) * std_normal_cdf(d2));
}

}  // namespace rapm
