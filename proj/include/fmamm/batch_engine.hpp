#pragma once

// Per-block batches: orders are netted peer-to-peer and only the excess trades against the
// FM-AMM. Every order in a batch sees the same pre-fee price.

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fmamm/amm_core.hpp"
#include "fmamm/error.hpp"

namespace fmamm {

enum class TraderKind { noise, arbitrageur };

inline const char* to_string(TraderKind k) { return k == TraderKind::noise ? "noise" : "arbitrageur"; }

struct Order {
    std::string id;
    TraderKind trader_kind = TraderKind::noise;
    double amount = 0.0; ///< asset units; positive buys from the pool
};

struct Batch {
    std::int64_t block_index = 1;
    std::vector<Order> orders;
};

struct NetFlow {
    double net = 0.0;       ///< a+ + a-
    double matched = 0.0;   ///< min(a+, -a-)
    double buy_total = 0.0; ///< a+ >= 0
    double sell_total = 0.0; ///< a- <= 0
};

namespace detail {

// Sum in sorted order so the result does not depend on the order of the input.
inline double stable_sum(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

} // namespace detail

inline NetFlow net_amounts(std::span<const double> amounts) {
    std::vector<double> buys, sells;
    for (double a : amounts) (a > 0.0 ? buys : sells).push_back(a);
    NetFlow f;
    f.buy_total = detail::stable_sum(std::move(buys));
    f.sell_total = detail::stable_sum(std::move(sells));
    f.net = f.buy_total + f.sell_total;
    f.matched = std::min(f.buy_total, -f.sell_total);
    return f;
}

inline NetFlow net_orders(std::span<const Order> orders) {
    std::vector<double> amounts;
    amounts.reserve(orders.size());
    for (const auto& o : orders) amounts.push_back(o.amount);
    return net_amounts(amounts);
}

struct Fill {
    std::string id;
    TraderKind trader_kind = TraderKind::noise;
    double amount = 0.0;
    double effective_price = 0.0;
    double fee_paid = 0.0;         ///< in the order's sell token
    double numeraire_flow = 0.0;   ///< signed numeraire received by the trader
};

struct SettlementReport {
    std::int64_t block_index = 0;
    double net_trade = 0.0;
    double matched_volume = 0.0;
    double buy_total = 0.0;
    double sell_total = 0.0;
    double pre_fee_price = 0.0;
    double buy_price = 0.0;
    double sell_price = 0.0;
    std::vector<Fill> per_order_fills;
    double fee_numeraire = 0.0;
    double fee_asset = 0.0;
    Reserves before;
    Reserves after;
};

/// Settles a whole batch at one pre-fee price, or throws without touching anything.
///
/// Buyers pay pre/(1-tau) per unit and the fee stays in the pool as numeraire; sellers
/// receive pre*(1-tau) per unit and the fee stays as asset. Fees on the peer-to-peer
/// matched volume are credited to the pool as well.
inline std::pair<Reserves, SettlementReport> settle_batch(const Reserves& r, const Batch& b,
                                                          FeeRate tau) {
    for (const auto& o : b.orders) {
        if (!(o.amount != 0.0) || !std::isfinite(o.amount)) {
            throw ValidationError("settle_batch: order '" + o.id + "' in block " +
                                  std::to_string(b.block_index) + " has zero or non-finite amount");
        }
    }
    const NetFlow flow = net_orders(b.orders);

    SettlementReport rep;
    rep.block_index = b.block_index;
    rep.net_trade = flow.net;
    rep.matched_volume = flow.matched;
    rep.buy_total = flow.buy_total;
    rep.sell_total = flow.sell_total;
    rep.before = r;
    try {
        rep.pre_fee_price = pre_fee_price(r, flow.net, tau);
    } catch (const DomainError& e) {
        throw DomainError("settle_batch: batch for block " + std::to_string(b.block_index) +
                          " rejected: " + e.what());
    }
    rep.buy_price = rep.pre_fee_price / tau.keep();
    rep.sell_price = rep.pre_fee_price * tau.keep();

    std::vector<double> numeraire_in, fee_num, fee_ast;
    rep.per_order_fills.reserve(b.orders.size());
    for (const auto& o : b.orders) {
        Fill f{o.id, o.trader_kind, o.amount, 0.0, 0.0, 0.0};
        if (o.amount > 0.0) {
            f.effective_price = rep.buy_price;
            const double paid = o.amount * rep.buy_price;
            f.numeraire_flow = -paid;
            f.fee_paid = tau.value() * paid;
            fee_num.push_back(f.fee_paid);
        } else {
            f.effective_price = rep.sell_price;
            f.numeraire_flow = -o.amount * rep.sell_price;
            f.fee_paid = -tau.value() * o.amount;
            fee_ast.push_back(f.fee_paid);
        }
        numeraire_in.push_back(-f.numeraire_flow);
        rep.per_order_fills.push_back(std::move(f));
    }
    rep.fee_numeraire = detail::stable_sum(std::move(fee_num));
    rep.fee_asset = detail::stable_sum(std::move(fee_ast));

    const double dy = detail::stable_sum(std::move(numeraire_in));
    rep.after = {r.y + dy, r.x - flow.net};
    return {rep.after, std::move(rep)};
}

/// Executes `total / n` n times as separate batches and returns the reserve path (n + 1
/// entries). Splitting lets a trader approach the constant-product price.
inline std::vector<Reserves> split_trade_experiment(const Reserves& r, double total, std::int64_t n) {
    if (n < 1) throw ValidationError("split_trade_experiment: n must be >= 1");
    std::vector<Reserves> path;
    path.reserve(static_cast<std::size_t>(n) + 1);
    path.push_back(r);
    const double step = total / static_cast<double>(n);
    Reserves cur = r;
    for (std::int64_t i = 1; i <= n; ++i) {
        if (step != 0.0 && !fmamm_feasible(cur, step)) {
            throw DomainError("split_trade_experiment: step " + std::to_string(i) + " of " +
                              std::to_string(n) + " is infeasible " + detail::describe(cur, step));
        }
        cur = apply_trade(cur, step, FeeRate{});
        path.push_back(cur);
    }
    return path;
}

} // namespace fmamm
