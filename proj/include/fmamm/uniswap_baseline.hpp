#pragma once

// Return of an arbitrarily small full-range liquidity position on a Uniswap-v3-style pool,
// rebuilt from per-swap fee and liquidity records.
//
// A full-range position with liquidity L at price p (token1 per token0) holds L/sqrt(p) of
// token0 and L*sqrt(p) of token1, worth 2*L*sqrt(p) in token1. Fees earned by a swap are
// shared pro rata with the liquidity active just after it.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fmamm/error.hpp"
#include "fmamm/market_data.hpp"
#include "fmamm/series.hpp"

namespace fmamm {

enum class FeeToken { token0, token1 };

struct SwapRecord {
    std::int64_t block = 0;
    std::int64_t timestamp = 0;
    double fee_amount = 0.0;
    FeeToken fee_token = FeeToken::token1;
    double active_liquidity = 0.0;
    double post_price = 0.0; ///< token1 per token0
};

struct SimPosition {
    double liquidity = 0.0;
    double pending0 = 0.0;
    double pending1 = 0.0;
};

enum class CompoundCadence { per_swap, per_block, per_day };

inline void validate_record(const SwapRecord& rec) {
    if (!(rec.active_liquidity > 0.0)) {
        throw ValidationError("swap record in block " + std::to_string(rec.block) +
                              ": active liquidity must be positive");
    }
    if (!(rec.fee_amount >= 0.0)) {
        throw ValidationError("swap record in block " + std::to_string(rec.block) +
                              ": negative fee amount");
    }
    if (!(rec.post_price > 0.0)) {
        throw ValidationError("swap record in block " + std::to_string(rec.block) +
                              ": post-swap price must be positive");
    }
}

/// Adds the position's pro-rata share fee * L / L_active to the pending fees.
inline SimPosition accrue_swap_fees(SimPosition pos, const SwapRecord& rec) {
    validate_record(rec);
    if (!(pos.liquidity > 0.0) || !(pos.liquidity < rec.active_liquidity)) {
        throw ValidationError("simulated liquidity must be positive and below the pool's active "
                              "liquidity (block " + std::to_string(rec.block) + ")");
    }
    const double share = rec.fee_amount * (pos.liquidity / rec.active_liquidity);
    (rec.fee_token == FeeToken::token0 ? pos.pending0 : pos.pending1) += share;
    return pos;
}

/// Reinvests pending fees as full-range liquidity at `price` with no cost or slippage.
inline SimPosition compound_fees(SimPosition pos, double price) {
    if (!(price > 0.0)) throw DomainError("compound_fees: price must be positive");
    const double pending_value = pos.pending1 + pos.pending0 * price;
    if (pending_value == 0.0) return pos;
    pos.liquidity += pending_value / (2.0 * std::sqrt(price));
    pos.pending0 = 0.0;
    pos.pending1 = 0.0;
    return pos;
}

/// Value in token1: 2 L sqrt(p) plus pending fees marked at p.
inline double position_value(const SimPosition& pos, double price) {
    if (!(price > 0.0)) throw DomainError("position_value: price must be positive");
    return 2.0 * pos.liquidity * std::sqrt(price) + pos.pending1 + pos.pending0 * price;
}

inline void check_sorted(std::span<const SwapRecord> records) {
    for (std::size_t i = 1; i < records.size(); ++i) {
        const auto& a = records[i - 1];
        const auto& b = records[i];
        if (b.block < a.block || (b.block == a.block && b.timestamp < a.timestamp) ||
            b.timestamp < a.timestamp) {
            throw ValidationError("swap records not sorted by block at record " + std::to_string(i));
        }
    }
}

struct BaselineOptions {
    double initial_liquidity = 1.0;
    CompoundCadence cadence = CompoundCadence::per_block;
};

/// Replays swap records on the block grid of `clock`. Records with timestamps in
/// (t_{i-1}, t_i] belong to block i; the position is marked at the external price at t_i.
inline LpReturnSeries run_baseline(std::span<const SwapRecord> records, const PriceSeries& prices,
                                   const BlockClock& clock, const BaselineOptions& opt = {}) {
    clock.validate();
    check_sorted(records);
    if (!(opt.initial_liquidity > 0.0)) throw ValidationError("initial liquidity must be positive");

    LpReturnSeries out{"uniswap-v3-full-range", {}};
    const std::int64_t n = clock.blocks();
    out.points.reserve(static_cast<std::size_t>(n) + 1);

    SimPosition pos{opt.initial_liquidity, 0.0, 0.0};
    const double p0 = price_at(prices, clock.start);
    const double v0 = position_value(pos, p0);
    out.points.push_back({clock.start, v0, 0.0});

    std::size_t k = 0;
    while (k < records.size() && records[k].timestamp <= clock.start) ++k;
    std::int64_t day = 0;
    for (std::int64_t i = 1; i <= n; ++i) {
        const std::int64_t t = clock.boundary(i);
        for (; k < records.size() && records[k].timestamp <= t; ++k) {
            pos = accrue_swap_fees(pos, records[k]);
            if (opt.cadence == CompoundCadence::per_swap) {
                pos = compound_fees(pos, price_at(prices, records[k].timestamp));
            }
        }
        const double p = price_at(prices, t);
        if (opt.cadence == CompoundCadence::per_block) {
            pos = compound_fees(pos, p);
        } else if (opt.cadence == CompoundCadence::per_day) {
            const std::int64_t d = (t - clock.start) / 86400;
            if (d != day || i == n) {
                pos = compound_fees(pos, p);
                day = d;
            }
        }
        const double v = position_value(pos, p);
        out.points.push_back({t, v, v / v0 - 1.0});
    }
    return out;
}

/// Per-block traded volume divided by the pool's virtual asset reserve L_active/sqrt(p),
/// i.e. the turnover a pool of equal liquidity would see. `pool_fee` converts fees to volume.
inline std::vector<double> baseline_turnover(std::span<const SwapRecord> records,
                                             const BlockClock& clock, double pool_fee) {
    clock.validate();
    check_sorted(records);
    if (!(pool_fee > 0.0 && pool_fee < 1.0)) throw ValidationError("pool fee must lie in (0, 1)");
    std::vector<double> turnover(static_cast<std::size_t>(clock.blocks()), 0.0);
    std::size_t k = 0;
    while (k < records.size() && records[k].timestamp <= clock.start) ++k;
    for (std::int64_t i = 1; i <= clock.blocks(); ++i) {
        const std::int64_t t = clock.boundary(i);
        for (; k < records.size() && records[k].timestamp <= t; ++k) {
            const auto& rec = records[k];
            validate_record(rec);
            const double volume_asset = rec.fee_token == FeeToken::token0
                                            ? rec.fee_amount / pool_fee
                                            : rec.fee_amount / pool_fee / rec.post_price;
            const double virtual_asset = rec.active_liquidity / std::sqrt(rec.post_price);
            turnover[static_cast<std::size_t>(i - 1)] += volume_asset / virtual_asset;
        }
    }
    return turnover;
}

/// Reads `block,timestamp,fee_amount,fee_token,active_liquidity,post_price`. fee_token is
/// `token0`/`token1` (or 0/1).
inline std::vector<SwapRecord> load_swap_records(const std::filesystem::path& path) {
    auto in = detail::open_input(path);
    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(in, line)) throw ValidationError(path.string() + ": empty file");
    const auto header = detail::split_csv(line);
    const std::vector<std::string_view> expected{"block", "timestamp", "fee_amount",
                                                 "fee_token", "active_liquidity", "post_price"};
    if (header != expected) {
        throw ValidationError(path.string() + ":1: expected header "
                              "'block,timestamp,fee_amount,fee_token,active_liquidity,post_price'");
    }
    std::vector<SwapRecord> out;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        const auto c = detail::split_csv(line);
        SwapRecord r;
        const bool ok = c.size() == 6 && detail::parse_number(c[0], r.block) &&
                        detail::parse_number(c[1], r.timestamp) &&
                        detail::parse_number(c[2], r.fee_amount) &&
                        detail::parse_number(c[4], r.active_liquidity) &&
                        detail::parse_number(c[5], r.post_price);
        if (!ok || !(c[3] == "token0" || c[3] == "token1" || c[3] == "0" || c[3] == "1")) {
            throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": malformed row '" +
                                  line + "'");
        }
        r.fee_token = (c[3] == "token0" || c[3] == "0") ? FeeToken::token0 : FeeToken::token1;
        try {
            validate_record(r);
        } catch (const ValidationError& e) {
            throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
        out.push_back(r);
    }
    check_sorted(out);
    return out;
}

} // namespace fmamm
