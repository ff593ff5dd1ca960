#pragma once

// Pricing rules for constant-product and function-maximizing AMMs.
//
// Conventions: y is the numeraire reserve (DAI-like), x the asset reserve (ETH-like).
// A signed trade `dx > 0` means the AMM sells dx of the asset; `dx < 0` means it buys.
// Prices are numeraire per asset.

#include <cmath>
#include <string>

#include "fmamm/error.hpp"
#include "fmamm/root_finding.hpp"

namespace fmamm {

struct Reserves {
    double y = 0.0; ///< numeraire
    double x = 0.0; ///< asset

    friend bool operator==(const Reserves&, const Reserves&) = default;
};

/// Trading fee as a fraction of the sell amount, 0 <= tau < 1.
class FeeRate {
public:
    constexpr FeeRate() = default;
    explicit FeeRate(double tau) : tau_(tau) {
        if (!(tau >= 0.0 && tau < 1.0)) {
            throw ValidationError("fee rate must lie in [0, 1), got " + std::to_string(tau));
        }
    }
    constexpr double value() const { return tau_; }
    constexpr double keep() const { return 1.0 - tau_; }

    friend constexpr bool operator==(FeeRate, FeeRate) = default;

private:
    double tau_ = 0.0;
};

/// Weighted-power AMM function Psi(Y, X) = Y^(1-alpha) * X^alpha. alpha = 1/2 is the product.
class WeightFunction {
public:
    constexpr WeightFunction() = default;
    explicit WeightFunction(double alpha) : alpha_(alpha) {
        if (!(alpha > 0.0 && alpha < 1.0)) {
            throw ValidationError("weight alpha must lie in (0, 1), got " + std::to_string(alpha));
        }
    }
    static WeightFunction product() { return WeightFunction(0.5); }

    constexpr double alpha() const { return alpha_; }
    /// Ratio alpha / (1 - alpha); the marginal price is this times Y/X.
    constexpr double odds() const { return alpha_ / (1.0 - alpha_); }

    double value(const Reserves& r) const {
        return std::pow(r.y, 1.0 - alpha_) * std::pow(r.x, alpha_);
    }

private:
    double alpha_ = 0.5;
};

enum class Side { buy, sell };

inline Side side_of(double amount) { return amount > 0.0 ? Side::buy : Side::sell; }
inline const char* to_string(Side s) { return s == Side::buy ? "buy" : "sell"; }

/// Trades with x - 2*dx below this fraction of x are rejected as too close to the price pole.
inline constexpr double kPoleMargin = 1e-12;

namespace detail {

inline void require_positive_asset(const Reserves& r, const char* what) {
    if (!(r.x > 0.0) || !(r.y >= 0.0) || !std::isfinite(r.x) || !std::isfinite(r.y)) {
        throw DomainError(std::string(what) + ": reserves must satisfy y >= 0 and x > 0");
    }
}

inline std::string describe(const Reserves& r, double dx) {
    return "(y=" + std::to_string(r.y) + ", x=" + std::to_string(r.x) +
           ", trade=" + std::to_string(dx) + ")";
}

} // namespace detail

/// Average price of a constant-product trade: Y / (X - dx).
inline double cpamm_average_price(const Reserves& r, double dx) {
    detail::require_positive_asset(r, "cpamm_average_price");
    if (!(dx < r.x)) {
        throw DomainError("cpamm_average_price: trade exhausts the asset reserve " +
                          detail::describe(r, dx));
    }
    return r.y / (r.x - dx);
}

inline bool fmamm_feasible(const Reserves& r, double dx) {
    return r.x > 0.0 && (r.x - 2.0 * dx) >= kPoleMargin * r.x;
}

/// Uniform clearing price of a product-function FM-AMM: Y / (X - 2 dx).
inline double fmamm_price(const Reserves& r, double dx) {
    detail::require_positive_asset(r, "fmamm_price");
    if (!fmamm_feasible(r, dx)) {
        throw DomainError("fmamm_price: trade at or beyond the price pole x/2 " +
                          detail::describe(r, dx));
    }
    return r.y / (r.x - 2.0 * dx);
}

/// Supply curve of the product-function FM-AMM: (X - Y/p) / 2.
inline double fmamm_supply(const Reserves& r, double price) {
    if (!(price > 0.0)) throw DomainError("fmamm_supply: price must be positive");
    return 0.5 * (r.x - r.y / price);
}

/// dPsi/dX / dPsi/dY for the weighted-power function.
inline double marginal_price(const WeightFunction& w, const Reserves& r) {
    if (!(r.x > 0.0) || !(r.y > 0.0)) {
        throw DomainError("marginal_price: both reserves must be positive");
    }
    return w.odds() * r.y / r.x;
}

/// Price p with p = marginal_price(Y + p*dx, X - dx), found by bracketed root finding.
///
/// The residual is affine in p with positive slope whenever the post-trade reserves are
/// positive, so a bracket around the pre-trade marginal price always exists for a feasible
/// trade. For alpha = 1/2 the result coincides with fmamm_price().
inline double solve_clearing_price_consistent(const WeightFunction& w, const Reserves& r,
                                              double dx) {
    if (!(r.x > 0.0) || !(r.y > 0.0)) {
        throw DomainError("solve_clearing_price_consistent: both reserves must be positive");
    }
    const double k = w.odds();
    // Generalised pole: the post-trade numeraire reserve Y + p*dx stays positive iff
    // X - (1 + k) dx > 0.
    if (!((r.x - (1.0 + k) * dx) >= kPoleMargin * r.x)) {
        throw DomainError("solve_clearing_price_consistent: infeasible trade " +
                          detail::describe(r, dx));
    }
    if (dx == 0.0) return marginal_price(w, r);

    const double x_after = r.x - dx;
    auto residual = [&](double p) { return p - k * (r.y + p * dx) / x_after; };
    const auto bracket = root::expand_geometric(residual, marginal_price(w, r));
    return root::brent(residual, bracket).x;
}

/// argmax over dx of Psi(Y + p*dx, X - dx), found from the first-order condition
/// (1-alpha) p / (Y + p dx) = alpha / (X - dx) on the open domain (-Y/p, X).
inline double solve_function_maximizing(const WeightFunction& w, const Reserves& r, double price) {
    if (!(price > 0.0)) throw DomainError("solve_function_maximizing: price must be positive");
    if (!(r.x > 0.0) || !(r.y > 0.0)) {
        throw DomainError("solve_function_maximizing: both reserves must be positive");
    }
    const double a = w.alpha();
    auto foc = [&](double dx) { return (1.0 - a) * price / (r.y + price * dx) - a / (r.x - dx); };
    if (foc(0.0) == 0.0) return 0.0;
    const auto bracket = root::shrink_open_interval(foc, -r.y / price, r.x);
    return root::brent(foc, bracket).x;
}

/// Price before fees for a net batch trade: FM price of the full amount when the batch buys,
/// of the post-fee amount dx*(1-tau) when it sells. Y/X at zero.
inline double pre_fee_price(const Reserves& r, double net, FeeRate tau) {
    return net >= 0.0 ? fmamm_price(r, net) : fmamm_price(r, net * tau.keep());
}

/// Effective (after-fee) price faced by an order on `side` in a batch whose net is `net`.
/// Buyers pay pre/(1-tau); sellers receive pre*(1-tau).
inline double effective_price(const Reserves& r, double net, FeeRate tau, Side side) {
    const double pre = pre_fee_price(r, net, tau);
    return side == Side::buy ? pre / tau.keep() : pre * tau.keep();
}

/// Objective maximised by a fee-charging FM-AMM at price p; the fee inflates the reserve of
/// the token the batch sells.
inline double objective_U(double dx, double price, FeeRate tau, const Reserves& r) {
    if (dx >= 0.0) {
        if (!(dx <= r.x)) throw DomainError("objective_U: trade exceeds asset reserve");
        return (r.x - dx) * (r.y / tau.keep() + price * dx);
    }
    if (!(r.y + price * dx >= 0.0)) throw DomainError("objective_U: trade exceeds numeraire reserve");
    return (r.x / tau.keep() - dx) * (r.y + price * dx);
}

struct ObjectiveMax {
    double trade = 0.0;
    double value = 0.0;
};

/// V(p, tau) = max_dx objective_U(dx, p, tau, r), by the closed form of each concave branch.
inline ObjectiveMax max_objective(const Reserves& r, double price, FeeRate tau) {
    if (!(price > 0.0)) throw DomainError("max_objective: price must be positive");
    const double keep = tau.keep();
    const double buy = 0.5 * (r.x - r.y / (keep * price));
    if (buy > 0.0) return {buy, objective_U(buy, price, tau, r)};
    const double sell = 0.5 * (r.x / keep - r.y / price);
    if (sell < 0.0) return {sell, objective_U(sell, price, tau, r)};
    return {0.0, objective_U(0.0, price, tau, r)};
}

/// Full accounting of a single order executed alone against the pool.
struct TradeExecution {
    Reserves after;
    double effective_price = 0.0;
    double pre_fee_price = 0.0;
    double trader_asset = 0.0;     ///< signed asset flow to the trader
    double trader_numeraire = 0.0; ///< signed numeraire flow to the trader
    double fee_asset = 0.0;
    double fee_numeraire = 0.0;
};

inline TradeExecution execute_trade(const Reserves& r, double dx, FeeRate tau) {
    TradeExecution out;
    out.pre_fee_price = pre_fee_price(r, dx, tau);
    if (dx == 0.0) {
        out.after = r;
        out.effective_price = out.pre_fee_price;
        return out;
    }
    const Side side = side_of(dx);
    out.effective_price = effective_price(r, dx, tau, side);
    if (side == Side::buy) {
        const double paid = dx * out.effective_price;
        out.trader_asset = dx;
        out.trader_numeraire = -paid;
        out.fee_numeraire = tau.value() * paid;
    } else {
        const double sold = -dx;
        out.trader_asset = -sold;
        out.trader_numeraire = sold * out.effective_price;
        out.fee_asset = tau.value() * sold;
    }
    out.after = {r.y - out.trader_numeraire, r.x - out.trader_asset};
    return out;
}

/// Reserves after a single trade, fees retained in the pool in the trader's sell token.
inline Reserves apply_trade(const Reserves& r, double dx, FeeRate tau) {
    return execute_trade(r, dx, tau).after;
}

} // namespace fmamm
