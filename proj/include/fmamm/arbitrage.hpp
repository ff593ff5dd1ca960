#pragma once

// Competitive arbitrage against a batched FM-AMM and the malicious-operator bound.

#include <cmath>
#include <utility>

#include "fmamm/amm_core.hpp"
#include "fmamm/error.hpp"

namespace fmamm {

struct PriceBand {
    double low = 0.0;  ///< best price an extra seller can get
    double high = 0.0; ///< best price an extra buyer can get

    bool contains(double p) const { return p >= low && p <= high; }
};

struct RebalanceDecision {
    double order = 0.0;      ///< arbitrageur trade r*, zero when not rebalancing
    double net_after = 0.0;  ///< noise net plus r*
    bool rebalanced = false;
    PriceBand band;
};

/// Prices an infinitesimal buyer and seller would face given noise net `a`.
inline PriceBand no_trade_band(const Reserves& r, double a, FeeRate tau) {
    const double pre = pre_fee_price(r, a, tau);
    return {pre * tau.keep(), pre / tau.keep()};
}

/// Equilibrium arbitrage order: trade until the arbitrageur's own effective price equals p*.
///
/// The buy curve (r* > 0) and sell curve (r* < 0) are each continuous and strictly increasing;
/// each splits into a branch with net >= 0 and net < 0 depending on the noise net. Every
/// branch is linear-fractional in the net, so each inverts in closed form.
inline RebalanceDecision optimal_rebalance(const Reserves& r, double a, FeeRate tau, double p_star) {
    if (!(p_star > 0.0)) throw DomainError("optimal_rebalance: external price must be positive");
    RebalanceDecision d;
    d.band = no_trade_band(r, a, tau);
    d.net_after = a;
    if (d.band.contains(p_star)) return d;

    const double keep = tau.keep();
    double net;
    if (p_star > d.band.high) {
        // buyer pays pre/(1-tau): pre must equal (1-tau) p*
        const double target_pre = keep * p_star;
        net = 0.5 * (r.x - r.y / target_pre);
        if (net < 0.0) net = 0.5 * (r.x - r.y / target_pre) / keep;
    } else {
        // seller receives pre*(1-tau): pre must equal p*/(1-tau)
        const double target_pre = p_star / keep;
        net = 0.5 * (r.x - r.y / target_pre);
        if (net < 0.0) net = 0.5 * (r.x / keep - r.y / p_star);
    }
    d.order = net - a;
    d.net_after = net;
    d.rebalanced = d.order != 0.0;
    return d;
}

/// Profit, marked at p*, of one extra order of size `extra` added to a batch whose net
/// (before the extra order) is `net`.
inline double marginal_order_profit(const Reserves& r, double net, double extra, FeeRate tau,
                                    double p_star) {
    if (extra == 0.0) return 0.0;
    return extra * (p_star - effective_price(r, net + extra, tau, side_of(extra)));
}

struct ExtractionResult {
    double trade = 0.0;
    double profit = 0.0;
};

/// A batch operator that suppresses all other orders and trades alone against the FM-AMM:
/// max_x x p* - x Y/(X - 2x).
inline ExtractionResult malicious_operator_attack(const Reserves& r, double p_star) {
    if (!(p_star > 0.0)) throw DomainError("malicious_operator_attack: price must be positive");
    detail::require_positive_asset(r, "malicious_operator_attack");
    const double root = std::sqrt(r.x * r.y / p_star);
    const double gap = std::sqrt(r.y) - std::sqrt(p_star * r.x);
    // (Y + p* X)/2 - sqrt(X Y p*), written as a square to stay non-negative
    return {0.5 * (r.x - root), 0.5 * (gap * gap)};
}

/// First arbitrageur on a constant-product pool: max_x x p* - x Y/(X - x).
inline ExtractionResult cpamm_arbitrage_profit(const Reserves& r, double p_star) {
    if (!(p_star > 0.0)) throw DomainError("cpamm_arbitrage_profit: price must be positive");
    detail::require_positive_asset(r, "cpamm_arbitrage_profit");
    const double root = std::sqrt(r.x * r.y / p_star);
    const double gap = std::sqrt(r.y) - std::sqrt(p_star * r.x);
    // Y + p* X - 2 sqrt(X Y p*)
    return {r.x - root, gap * gap};
}

} // namespace fmamm
