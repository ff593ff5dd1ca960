#pragma once

// Counterfactual FM-AMM replayed against an external price path, with competitive
// arbitrageurs rebalancing every block and optional noise flow.

#include <cmath>
#include <cstdint>
#include <future>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fmamm/amm_core.hpp"
#include "fmamm/arbitrage.hpp"
#include "fmamm/batch_engine.hpp"
#include "fmamm/error.hpp"
#include "fmamm/market_data.hpp"
#include "fmamm/series.hpp"

namespace fmamm {

enum class NoiseMode { none, fraction_of_baseline_volume };
enum class NoiseDirection { balanced, random_sign };

struct NoiseScenario {
    NoiseMode mode = NoiseMode::none;
    double fraction = 0.0;
    NoiseDirection direction = NoiseDirection::balanced;
    std::uint64_t seed = 0;

    static NoiseScenario none() { return {}; }
    static NoiseScenario of_volume(double fraction, NoiseDirection dir = NoiseDirection::balanced,
                                   std::uint64_t seed = 0) {
        if (!(fraction >= 0.0)) throw ValidationError("noise fraction must be >= 0");
        return {NoiseMode::fraction_of_baseline_volume, fraction, dir, seed};
    }
};

struct BlockLog {
    std::int64_t index = 0;
    std::int64_t timestamp = 0;
    double p_star = 0.0;
    double noise_net = 0.0;
    double noise_volume = 0.0;
    double arb_order = 0.0;
    bool rebalanced = false;
    Reserves before;
    Reserves after;
    double fee_numeraire = 0.0;
    double fee_asset = 0.0;
};

struct BacktestRun {
    LpReturnSeries returns;
    std::vector<BlockLog> blocks;
    std::vector<DataGap> gap_warnings;
    std::size_t rebalances = 0;

    Reserves final_reserves() const { return blocks.empty() ? Reserves{} : blocks.back().after; }
};

/// Reserves worth the same in both tokens at `price`.
inline Reserves balanced_reserves(double price, double asset) { return {price * asset, asset}; }

inline BlockClock clock_for(const PriceSeries& prices, std::int64_t mu = 12, std::int64_t gamma = 0) {
    if (prices.empty()) throw ValidationError("price series is empty");
    return {mu, gamma, prices.start(), prices.end()};
}

inline void check_coverage(const PriceSeries& prices, const BlockClock& clock) {
    clock.validate();
    if (prices.empty() || clock.start < prices.start() || clock.end > prices.end()) {
        throw ValidationError("price series '" + prices.pair + "' does not cover [" +
                              std::to_string(clock.start) + ", " + std::to_string(clock.end) + "]");
    }
}

/// Runs the counterfactual. Per block i: sample p* at the batch close, generate noise, let
/// arbitrageurs respond, settle, and mark the pool at the external price at the boundary.
/// `turnover` (per block, see baseline_turnover) is needed only for volume-based noise.
inline BacktestRun run_fmamm_backtest(const PriceSeries& prices, const BlockClock& clock, FeeRate tau,
                                      const NoiseScenario& noise, const Reserves& initial,
                                      std::span<const double> turnover = {}) {
    check_coverage(prices, clock);
    if (!(initial.x > 0.0) || !(initial.y > 0.0)) {
        throw ValidationError("initial reserves must be positive");
    }
    const std::int64_t n = clock.blocks();
    const bool with_noise = noise.mode == NoiseMode::fraction_of_baseline_volume;
    if (with_noise && turnover.size() != static_cast<std::size_t>(n)) {
        throw ValidationError("noise volume series has " + std::to_string(turnover.size()) +
                              " entries but the clock has " + std::to_string(n) + " blocks");
    }

    BacktestRun run;
    run.returns.venue = "fm-amm";
    run.gap_warnings = find_gaps(prices);
    run.returns.points.reserve(static_cast<std::size_t>(n) + 1);
    run.blocks.reserve(static_cast<std::size_t>(n));

    Reserves res = initial;
    const double v0 = res.y + price_at(prices, clock.start) * res.x;
    run.returns.points.push_back({clock.start, v0, 0.0});
    std::mt19937_64 rng(noise.seed);

    for (std::int64_t i = 1; i <= n; ++i) {
        BlockLog log;
        log.index = i;
        log.timestamp = clock.boundary(i);
        log.p_star = price_at(prices, clock.batch_close(i));
        log.before = res;

        Batch batch{i, {}};
        if (with_noise) {
            log.noise_volume = noise.fraction * turnover[static_cast<std::size_t>(i - 1)] * res.x;
            if (log.noise_volume > 0.0) {
                if (noise.direction == NoiseDirection::balanced) {
                    batch.orders.push_back({"noise-buy", TraderKind::noise, 0.5 * log.noise_volume});
                    batch.orders.push_back({"noise-sell", TraderKind::noise, -0.5 * log.noise_volume});
                } else {
                    const double sign = (rng() >> 63) ? 1.0 : -1.0;
                    batch.orders.push_back({"noise", TraderKind::noise, sign * log.noise_volume});
                }
            }
        }
        log.noise_net = net_orders(batch.orders).net;

        const auto decision = optimal_rebalance(res, log.noise_net, tau, log.p_star);
        if (decision.rebalanced) {
            batch.orders.push_back({"arb", TraderKind::arbitrageur, decision.order});
            log.arb_order = decision.order;
            log.rebalanced = true;
            ++run.rebalances;
        }
        if (!batch.orders.empty()) {
            auto [after, report] = settle_batch(res, batch, tau);
            res = after;
            log.fee_numeraire = report.fee_numeraire;
            log.fee_asset = report.fee_asset;
        }
        log.after = res;

        const double mark = price_at(prices, log.timestamp);
        const double v = res.y + mark * res.x;
        run.returns.points.push_back({log.timestamp, v, v / v0 - 1.0});
        run.blocks.push_back(log);
    }
    return run;
}

struct ComparisonPoint {
    std::int64_t timestamp = 0;
    double roi_a = 0.0;
    double roi_b = 0.0;
    double difference = 0.0;
};

struct ReturnComparison {
    std::string label;
    std::vector<ComparisonPoint> points;
    double terminal_difference_pp = 0.0; ///< percentage points
};

/// Pointwise ROI difference a - b on the shared timestamps.
inline ReturnComparison compare_returns(const LpReturnSeries& a, const LpReturnSeries& b) {
    ReturnComparison out;
    out.label = a.venue + " - " + b.venue;
    auto ia = a.points.begin();
    auto ib = b.points.begin();
    while (ia != a.points.end() && ib != b.points.end()) {
        if (ia->timestamp < ib->timestamp) {
            ++ia;
        } else if (ib->timestamp < ia->timestamp) {
            ++ib;
        } else {
            out.points.push_back({ia->timestamp, ia->cumulative_roi, ib->cumulative_roi,
                                  ia->cumulative_roi - ib->cumulative_roi});
            ++ia;
            ++ib;
        }
    }
    if (out.points.empty()) throw ValidationError("compare_returns: series share no timestamps");
    out.terminal_difference_pp = 100.0 * out.points.back().difference;
    return out;
}

inline const std::vector<double>& default_fee_grid() {
    static const std::vector<double> grid{0.0, 0.0005, 0.003, 0.01};
    return grid;
}

struct FeeSweepRow {
    double fee = 0.0;
    double terminal_roi = 0.0;
    std::size_t rebalances = 0;
    LpReturnSeries returns;
};

/// One zero-noise backtest per fee, run concurrently; rows come back in `fees` order.
inline std::vector<FeeSweepRow> fee_sweep(const PriceSeries& prices, const BlockClock& clock,
                                          std::span<const double> fees, const Reserves& initial) {
    std::vector<FeeRate> rates;
    for (double f : fees) rates.emplace_back(f);
    check_coverage(prices, clock);

    std::vector<std::future<BacktestRun>> jobs;
    for (FeeRate tau : rates) {
        jobs.push_back(std::async(std::launch::async, [&prices, &clock, tau, &initial] {
            return run_fmamm_backtest(prices, clock, tau, NoiseScenario::none(), initial);
        }));
    }
    std::vector<FeeSweepRow> rows;
    for (std::size_t k = 0; k < jobs.size(); ++k) {
        auto run = jobs[k].get();
        run.returns.venue = "fm-amm-fee-" + format_double(rates[k].value());
        rows.push_back({rates[k].value(), run.returns.terminal_roi(), run.rebalances,
                        std::move(run.returns)});
    }
    return rows;
}

struct NoiseSweepRow {
    double fraction = 0.0;
    double terminal_roi = 0.0;
    double difference_vs_zero_pp = 0.0;
    std::size_t rebalances = 0;
    LpReturnSeries returns;
};

/// Terminal ROI for each noise fraction, and its gain over the zero-noise run.
inline std::vector<NoiseSweepRow> noise_volume_sweep(const PriceSeries& prices, const BlockClock& clock,
                                                     FeeRate tau, std::span<const double> fractions,
                                                     std::span<const double> turnover,
                                                     const Reserves& initial,
                                                     NoiseDirection direction = NoiseDirection::balanced,
                                                     std::uint64_t seed = 0) {
    check_coverage(prices, clock);
    if (turnover.size() != static_cast<std::size_t>(clock.blocks())) {
        throw ValidationError("noise volume series misaligned with the block clock: " +
                              std::to_string(turnover.size()) + " entries for " +
                              std::to_string(clock.blocks()) + " blocks");
    }
    std::vector<NoiseScenario> scenarios;
    for (double f : fractions) scenarios.push_back(NoiseScenario::of_volume(f, direction, seed));

    auto zero = std::async(std::launch::async, [&] {
        return run_fmamm_backtest(prices, clock, tau, NoiseScenario::none(), initial);
    });
    std::vector<std::future<BacktestRun>> jobs;
    for (const auto& sc : scenarios) {
        jobs.push_back(std::async(std::launch::async, [&prices, &clock, tau, sc, &initial, turnover] {
            return run_fmamm_backtest(prices, clock, tau, sc, initial, turnover);
        }));
    }
    const double base = zero.get().returns.terminal_roi();
    std::vector<NoiseSweepRow> rows;
    for (std::size_t k = 0; k < jobs.size(); ++k) {
        auto run = jobs[k].get();
        run.returns.venue = "fm-amm-noise-" + format_double(scenarios[k].fraction);
        const double roi = run.returns.terminal_roi();
        rows.push_back({scenarios[k].fraction, roi, 100.0 * (roi - base), run.rebalances,
                        std::move(run.returns)});
    }
    return rows;
}

struct RiskLovingResult {
    std::size_t draws = 0;
    double mean_v_g = 0.0;
    double mean_v_f = 0.0;
    double difference = 0.0;     ///< E_F[V] - E_G[V]
    double standard_error = 0.0; ///< of the paired differences
    double z_score = 0.0;        ///< difference / standard_error, 0 when both vanish
};

inline constexpr std::size_t kMinRiskDraws = 10'000;

/// Compares the expected pool objective V(p) = max_x U(x, p, tau) when next-block prices are
/// drawn from G (`base_draws`) versus a mean-preserving spread F of G.
inline RiskLovingResult risk_loving_monte_carlo(std::span<const double> base_draws, double epsilon_sd,
                                                const Reserves& r, FeeRate tau, std::uint64_t seed) {
    if (base_draws.size() < kMinRiskDraws) {
        throw ValidationError("risk_loving_monte_carlo: need at least 10000 draws");
    }
    const auto spread = mean_preserving_spread(base_draws, epsilon_sd, seed);
    const double n = static_cast<double>(base_draws.size());

    double sum_g = 0.0, sum_f = 0.0, sum_d = 0.0, sum_d2 = 0.0;
    for (std::size_t k = 0; k < base_draws.size(); ++k) {
        const double vg = max_objective(r, base_draws[k], tau).value;
        const double vf = max_objective(r, spread[k], tau).value;
        const double d = vf - vg;
        sum_g += vg;
        sum_f += vf;
        sum_d += d;
        sum_d2 += d * d;
    }
    RiskLovingResult out;
    out.draws = base_draws.size();
    out.mean_v_g = sum_g / n;
    out.mean_v_f = sum_f / n;
    out.difference = sum_d / n;
    const double var = std::max(0.0, (sum_d2 - n * out.difference * out.difference) / (n - 1.0));
    out.standard_error = std::sqrt(var / n);
    out.z_score = out.standard_error > 0.0 ? out.difference / out.standard_error : 0.0;
    return out;
}

struct SandwichScenario {
    Reserves reserves;
    FeeRate tau;
    double p_star = 0.0;
    double victim = 0.0;             ///< victim order in the first batch
    std::vector<double> bystanders;  ///< other noise orders in the first batch
    double attack = 0.0;             ///< front-run size; the back-run reverses it next block
};

struct SandwichOutcome {
    double victim_price_clean = 0.0;    ///< victim's price with no attacker present
    double victim_price_attacked = 0.0;
    double net_clean = 0.0;             ///< batch net including the arbitrageur
    double net_attacked = 0.0;
    double front_run_price = 0.0;       ///< attacker's effective price in block 1
    double back_run_price = 0.0;        ///< attacker's effective price in block 2
    double attacker_profit = 0.0;       ///< numeraire, round trip over two blocks
};

/// Front-run in block 1 alongside the victim, back-run in block 2, with competitive
/// arbitrageurs rebalancing each block to p*.
inline SandwichOutcome sandwich_round_trip(const SandwichScenario& s) {
    if (s.victim == 0.0 || s.attack == 0.0) throw ValidationError("sandwich: zero victim or attack");
    auto settle_with_arb = [&](const Reserves& r, std::int64_t block, std::vector<Order> orders) {
        const double a = net_orders(orders).net;
        const auto d = optimal_rebalance(r, a, s.tau, s.p_star);
        if (d.rebalanced) orders.push_back({"arb", TraderKind::arbitrageur, d.order});
        return settle_batch(r, Batch{block, std::move(orders)}, s.tau);
    };
    auto first_batch = [&](bool attacked) {
        std::vector<Order> orders;
        for (std::size_t k = 0; k < s.bystanders.size(); ++k) {
            orders.push_back({"noise-" + std::to_string(k), TraderKind::noise, s.bystanders[k]});
        }
        orders.push_back({"victim", TraderKind::noise, s.victim});
        if (attacked) orders.push_back({"attacker", TraderKind::noise, s.attack});
        return settle_with_arb(s.reserves, 1, std::move(orders));
    };
    auto price_of = [](const SettlementReport& rep, const std::string& id) {
        for (const auto& f : rep.per_order_fills) {
            if (f.id == id) return f.effective_price;
        }
        throw ValidationError("sandwich: missing fill for " + id);
    };

    SandwichOutcome out;
    const SettlementReport clean = first_batch(false).second;
    const auto [r1, attacked] = first_batch(true);
    out.victim_price_clean = price_of(clean, "victim");
    out.victim_price_attacked = price_of(attacked, "victim");
    out.net_clean = clean.net_trade;
    out.net_attacked = attacked.net_trade;
    out.front_run_price = price_of(attacked, "attacker");

    const SettlementReport back =
        settle_with_arb(r1, 2, {{"attacker", TraderKind::noise, -s.attack}}).second;
    out.back_run_price = price_of(back, "attacker");
    out.attacker_profit = s.attack * (out.back_run_price - out.front_run_price);
    return out;
}

} // namespace fmamm
