#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "fmamm/uniswap_baseline.hpp"

using namespace fmamm;
namespace fs = std::filesystem;

namespace {

SwapRecord swap(std::int64_t block, std::int64_t ts, double fee, double active, double price,
                FeeToken token = FeeToken::token1) {
    return {block, ts, fee, token, active, price};
}

PriceSeries flat(double p, std::int64_t end) { return {"ETH-USDT", {{0, p}, {end, p}}}; }

} // namespace

TEST(AccrueSwapFees, ProRataShare) {
    auto pos = accrue_swap_fees({1.0, 0.0, 0.0}, swap(1, 1, 100.0, 1e6, 2000.0));
    EXPECT_DOUBLE_EQ(pos.pending1, 1e-4);
    EXPECT_EQ(pos.pending0, 0.0);

    pos = accrue_swap_fees({1.0, 0.0, 0.0}, swap(1, 1, 0.0, 1e6, 2000.0));
    EXPECT_EQ(pos.pending1, 0.0);

    pos = accrue_swap_fees({1.0, 0.0, 0.0}, swap(1, 1, 7.0, 1e12, 2000.0, FeeToken::token0));
    EXPECT_DOUBLE_EQ(pos.pending0, 7e-12);
    EXPECT_GT(pos.pending0, 0.0);
}

TEST(AccrueSwapFees, RejectsInvalidLiquidity) {
    EXPECT_THROW(accrue_swap_fees({0.0, 0, 0}, swap(1, 1, 1.0, 10.0, 1.0)), ValidationError);
    EXPECT_THROW(accrue_swap_fees({10.0, 0, 0}, swap(1, 1, 1.0, 10.0, 1.0)), ValidationError);
    EXPECT_THROW(accrue_swap_fees({1.0, 0, 0}, swap(1, 1, 1.0, 0.0, 1.0)), ValidationError);
    EXPECT_THROW(accrue_swap_fees({1.0, 0, 0}, swap(1, 1, -1.0, 10.0, 1.0)), ValidationError);
}

TEST(CompoundFees, Examples) {
    const SimPosition none{3.0, 0.0, 0.0};
    const auto same = compound_fees(none, 4.0);
    EXPECT_EQ(same.liquidity, 3.0);

    const auto grown = compound_fees({1.0, 0.0, 2.0}, 4.0);
    EXPECT_DOUBLE_EQ(grown.liquidity, 1.5);
    EXPECT_EQ(grown.pending1, 0.0);

    // token0 fees are converted at the price
    EXPECT_DOUBLE_EQ(compound_fees({1.0, 0.5, 0.0}, 4.0).liquidity, 1.5);
}

TEST(CompoundFees, SequentialEqualsCombinedAtFixedPrice) {
    auto twice = compound_fees({1.0, 0.0, 0.3}, 9.0);
    twice.pending1 = 0.9;
    twice = compound_fees(twice, 9.0);
    const auto once = compound_fees({1.0, 0.0, 1.2}, 9.0);
    EXPECT_NEAR(twice.liquidity, once.liquidity, 1e-15);
}

TEST(PositionValue, FullRangeIdentity) {
    EXPECT_DOUBLE_EQ(position_value({1.0, 0.0, 0.0}, 4.0), 4.0);
    EXPECT_DOUBLE_EQ(position_value({1.0, 1.0, 1.0}, 4.0), 9.0);
    double prev = 0.0;
    for (double p = 0.5; p < 100.0; p *= 1.3) {
        const double v = position_value({2.0, 0.0, 0.0}, p);
        EXPECT_GT(v, prev);
        prev = v;
    }
    EXPECT_THROW(position_value({1.0, 0, 0}, 0.0), DomainError);
}

TEST(RunBaseline, NoSwapsFlatPriceIsZero) {
    const BlockClock clock{12, 0, 0, 120};
    const auto s = run_baseline({}, flat(2000.0, 120), clock);
    ASSERT_EQ(s.points.size(), 11u);
    for (const auto& p : s.points) EXPECT_EQ(p.cumulative_roi, 0.0);
    EXPECT_EQ(s.points[3].timestamp, 36);
}

TEST(RunBaseline, DivergenceLossIdentity) {
    const PriceSeries prices{"ETH-USDT", {{0, 2000.0}, {12, 2500.0}}};
    const BlockClock clock{12, 0, 0, 12};
    for (double l0 : {1.0, 1e6}) {
        const auto s = run_baseline({}, prices, clock, {l0, CompoundCadence::per_block});
        EXPECT_NEAR(s.terminal_roi(), std::sqrt(2500.0 / 2000.0) - 1.0, 1e-12);
    }
}

TEST(RunBaseline, SingleSwapFeeReturn) {
    const double p = 2000.0, fee = 50.0, active = 1e9, l0 = 10.0;
    const std::vector<SwapRecord> recs{swap(1, 5, fee, active, p)};
    const auto s = run_baseline(recs, flat(p, 24), BlockClock{12, 0, 0, 24}, {l0});
    const double share = l0 / active;
    EXPECT_NEAR(s.terminal_roi(), share * fee / (2.0 * l0 * std::sqrt(p)), 1e-15);
    EXPECT_NEAR(s.points[1].cumulative_roi, s.terminal_roi(), 1e-18);
}

TEST(RunBaseline, RoiInvariantToInitialLiquidity) {
    const PriceSeries prices{"ETH-USDT", {{0, 2000.0}, {12, 2100.0}, {24, 1900.0}, {36, 2050.0}}};
    const std::vector<SwapRecord> recs{swap(1, 3, 10.0, 1e10, 2010.0), swap(2, 20, 0.01, 1e10, 2080.0, FeeToken::token0),
                                       swap(3, 30, 4.0, 2e10, 1950.0)};
    const BlockClock clock{12, 0, 0, 36};
    for (auto cadence : {CompoundCadence::per_swap, CompoundCadence::per_block, CompoundCadence::per_day}) {
        const auto a = run_baseline(recs, prices, clock, {1.0, cadence});
        const auto b = run_baseline(recs, prices, clock, {1e6, cadence});
        EXPECT_NEAR(a.terminal_roi(), b.terminal_roi(), 1e-12);
    }
}

TEST(RunBaseline, MoreFeesMoreReturn) {
    const BlockClock clock{12, 0, 0, 24};
    const auto lo = run_baseline(std::vector{swap(1, 5, 1.0, 1e6, 2000.0)}, flat(2000.0, 24), clock);
    const auto hi = run_baseline(std::vector{swap(1, 5, 2.0, 1e6, 2000.0)}, flat(2000.0, 24), clock);
    EXPECT_GT(hi.terminal_roi(), lo.terminal_roi());
}

TEST(RunBaseline, RejectsUnsortedRecords) {
    const std::vector<SwapRecord> recs{swap(2, 20, 1.0, 1e6, 2000.0), swap(1, 10, 1.0, 1e6, 2000.0)};
    EXPECT_THROW(run_baseline(recs, flat(2000.0, 24), BlockClock{12, 0, 0, 24}), ValidationError);
}

TEST(BaselineTurnover, VolumeOverVirtualReserve) {
    // fee 3 token1 at 0.3% -> volume 1000 token1 = 0.5 token0; virtual reserve 1e4/sqrt(2000)
    const std::vector<SwapRecord> recs{swap(1, 5, 3.0, 1e4, 2000.0)};
    const auto t = baseline_turnover(recs, BlockClock{12, 0, 0, 24}, 0.003);
    ASSERT_EQ(t.size(), 2u);
    EXPECT_NEAR(t[0], 0.5 / (1e4 / std::sqrt(2000.0)), 1e-15);
    EXPECT_EQ(t[1], 0.0);
}

TEST(LoadSwapRecords, ParsesAndValidates) {
    const auto dir = fs::temp_directory_path() / "fmamm_uniswap_test";
    fs::create_directories(dir);
    const auto good = dir / "swaps.csv";
    std::ofstream(good) << "block,timestamp,fee_amount,fee_token,active_liquidity,post_price\n"
                           "1,10,0.5,token1,1e9,2000\n"
                           "2,22,0.001,0,1e9,2001\n";
    const auto recs = load_swap_records(good);
    ASSERT_EQ(recs.size(), 2u);
    EXPECT_EQ(recs[1].fee_token, FeeToken::token0);
    EXPECT_DOUBLE_EQ(recs[0].active_liquidity, 1e9);

    const auto bad = dir / "bad.csv";
    std::ofstream(bad) << "block,timestamp,fee_amount,fee_token,active_liquidity,post_price\n"
                          "1,10,0.5,token2,1e9,2000\n";
    EXPECT_THROW(load_swap_records(bad), ValidationError);
    EXPECT_THROW(load_swap_records(dir / "missing.csv"), ValidationError);
}
