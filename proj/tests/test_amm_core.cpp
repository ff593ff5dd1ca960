#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "fmamm/amm_core.hpp"

using namespace fmamm;

namespace {

const Reserves kPool{20000.0, 10.0};

void expect_rel(double actual, double expected, double rel) {
    EXPECT_NEAR(actual, expected, rel * std::abs(expected)) << "expected " << expected;
}

// Independent closed form for the weighted-power clearing price: solving
// p (X - dx) = k (Y + p dx) by hand gives p = k Y / (X - (1 + k) dx).
double weighted_clearing_price_oracle(double alpha, const Reserves& r, double dx) {
    const double k = alpha / (1.0 - alpha);
    return k * r.y / (r.x - (1.0 + k) * dx);
}

struct RandomPool {
    Reserves r;
    double dx;
};

// Reserves spanning several orders of magnitude and a trade strictly inside (-X, X/2).
RandomPool random_pool(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> log_mag(-2.0, 6.0), frac(-0.95, 0.45);
    const double x = std::pow(10.0, log_mag(rng));
    const double y = std::pow(10.0, log_mag(rng));
    return {{y, x}, frac(rng) * x};
}

} // namespace

TEST(CpammAveragePrice, WorkedExamples) {
    expect_rel(cpamm_average_price(kPool, 1.0), 20000.0 / 9.0, 1e-12);
    expect_rel(cpamm_average_price(kPool, -1.0), 20000.0 / 11.0, 1e-12);
    expect_rel(cpamm_average_price(kPool, 1e-12), 2000.0, 1e-9);
}

TEST(CpammAveragePrice, KeepsProductConstant) {
    for (double dx : {1.0, -1.0, 5.0, -7.5}) {
        const double p = cpamm_average_price(kPool, dx);
        expect_rel((kPool.y + p * dx) * (kPool.x - dx), kPool.y * kPool.x, 1e-12);
    }
}

TEST(CpammAveragePrice, RejectsExhaustingTrade) {
    EXPECT_THROW(cpamm_average_price(kPool, 10.0), DomainError);
    EXPECT_THROW(cpamm_average_price(kPool, 11.0), DomainError);
}

TEST(FmammPrice, WorkedExamples) {
    EXPECT_DOUBLE_EQ(fmamm_price(kPool, 1.0), 2500.0);
    EXPECT_DOUBLE_EQ(fmamm_price(kPool, 0.0), 2000.0);
    expect_rel(fmamm_price(kPool, -1.0), 20000.0 / 12.0, 1e-12);
}

TEST(FmammPrice, EqualsPostTradeMarginalPrice) {
    for (double dx : {1.0, -1.0, 4.0}) {
        const double p = fmamm_price(kPool, dx);
        const Reserves after{kPool.y + p * dx, kPool.x - dx};
        expect_rel(p, after.y / after.x, 1e-12);
    }
}

TEST(FmammPrice, RejectsPole) {
    EXPECT_THROW(fmamm_price(kPool, 5.0), DomainError);
    EXPECT_THROW(fmamm_price(kPool, 6.0), DomainError);
    EXPECT_THROW(fmamm_price(kPool, 5.0 - 1e-14), DomainError); // inside the 1e-12 margin
    EXPECT_NO_THROW(fmamm_price(kPool, 4.999));
}

TEST(FmammSupply, InvertsPrice) {
    EXPECT_NEAR(fmamm_supply(kPool, 2500.0), 1.0, 1e-12);
    EXPECT_EQ(fmamm_supply(kPool, 2000.0), 0.0);
    EXPECT_NEAR(fmamm_supply(kPool, 20000.0 / 12.0), -1.0, 1e-12);
    EXPECT_THROW(fmamm_supply(kPool, 0.0), DomainError);
}

TEST(MarginalPrice, WeightedFunction) {
    EXPECT_DOUBLE_EQ(marginal_price(WeightFunction::product(), kPool), 2000.0);
    EXPECT_DOUBLE_EQ(marginal_price(WeightFunction::product(), {1.0, 1.0}), 1.0);
    expect_rel(marginal_price(WeightFunction(0.3), kPool), (0.3 / 0.7) * 2000.0, 1e-14);
    EXPECT_NEAR(marginal_price(WeightFunction(0.3), kPool), 857.142857142857, 1e-9);
    EXPECT_THROW(marginal_price(WeightFunction(0.3), {0.0, 10.0}), DomainError);
}

TEST(MarginalPrice, MatchesFiniteDifferenceOfPsi) {
    const WeightFunction w(0.3);
    const double hx = 1e-5 * kPool.x, hy = 1e-5 * kPool.y;
    const double dpsi_dx = (w.value({kPool.y, kPool.x + hx}) - w.value({kPool.y, kPool.x - hx})) / (2 * hx);
    const double dpsi_dy = (w.value({kPool.y + hy, kPool.x}) - w.value({kPool.y - hy, kPool.x})) / (2 * hy);
    expect_rel(marginal_price(w, kPool), dpsi_dx / dpsi_dy, 1e-7);
}

TEST(WeightFunction, RejectsOutOfRangeAlpha) {
    EXPECT_THROW(WeightFunction(0.0), ValidationError);
    EXPECT_THROW(WeightFunction(1.0), ValidationError);
}

TEST(FeeRate, RejectsOutOfRange) {
    EXPECT_THROW(FeeRate(-0.01), ValidationError);
    EXPECT_THROW(FeeRate(1.0), ValidationError);
    EXPECT_NO_THROW(FeeRate(0.999));
}

TEST(SolveClearingPriceConsistent, ProductMatchesClosedForm) {
    const auto w = WeightFunction::product();
    expect_rel(solve_clearing_price_consistent(w, kPool, 1.0), 2500.0, 1e-12);
    EXPECT_DOUBLE_EQ(solve_clearing_price_consistent(w, kPool, 0.0), 2000.0);
    EXPECT_DOUBLE_EQ(solve_clearing_price_consistent(w, {3.0, 7.0}, 0.0), 3.0 / 7.0);
}

TEST(SolveClearingPriceConsistent, WeightedSelfConsistent) {
    const WeightFunction w(0.3);
    const double p = solve_clearing_price_consistent(w, kPool, 1.0);
    const double post = marginal_price(w, {kPool.y + p * 1.0, kPool.x - 1.0});
    EXPECT_LT(std::abs(p - post), 1e-9 * p);
    expect_rel(p, weighted_clearing_price_oracle(0.3, kPool, 1.0), 1e-12);
}

TEST(SolveClearingPriceConsistent, RejectsInfeasibleTrade) {
    // alpha = 0.3: pole at X / (1 + 3/7) = 7
    EXPECT_THROW(solve_clearing_price_consistent(WeightFunction(0.3), kPool, 7.0), DomainError);
    EXPECT_NO_THROW(solve_clearing_price_consistent(WeightFunction(0.3), kPool, 6.9));
}

TEST(SolveClearingPriceConsistent, RandomAgreementWithOracle) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> alpha(0.1, 0.9);
    for (int i = 0; i < 500; ++i) {
        const double a = alpha(rng);
        const double k = a / (1 - a);
        auto [r, dx] = random_pool(rng);
        dx = std::min(dx, 0.9 * r.x / (1 + k));
        const double p = solve_clearing_price_consistent(WeightFunction(a), r, dx);
        expect_rel(p, weighted_clearing_price_oracle(a, r, dx), 1e-10);
    }
}

TEST(SolveFunctionMaximizing, ProductMatchesSupply) {
    const auto w = WeightFunction::product();
    EXPECT_NEAR(solve_function_maximizing(w, kPool, 2500.0), 1.0, 1e-12);
    EXPECT_EQ(solve_function_maximizing(w, kPool, 2000.0), 0.0);
}

TEST(SolveFunctionMaximizing, WeightedRoundTripsThroughClearingPrice) {
    const WeightFunction w(0.3);
    const double dx = solve_function_maximizing(w, kPool, 2000.0);
    EXPECT_NEAR(solve_clearing_price_consistent(w, kPool, dx), 2000.0, 1e-9 * 2000.0);
}

TEST(SolveFunctionMaximizing, FirstOrderConditionAndMaximum) {
    const WeightFunction w(0.7);
    const double p = 1500.0;
    const double dx = solve_function_maximizing(w, kPool, p);
    auto log_psi = [&](double t) { return std::log(w.value({kPool.y + p * t, kPool.x - t})); };
    const double h = 1e-6;
    EXPECT_NEAR((log_psi(dx + h) - log_psi(dx - h)) / (2 * h), 0.0, 1e-8);
    // brute-force scan of the feasible domain never beats the solver
    const double lo = -kPool.y / p, hi = kPool.x;
    for (int i = 1; i < 2000; ++i) {
        const double t = lo + (hi - lo) * i / 2000.0;
        EXPECT_LE(log_psi(t), log_psi(dx) + 1e-12);
    }
}

TEST(SolveFunctionMaximizing, RejectsNonPositivePrice) {
    EXPECT_THROW(solve_function_maximizing(WeightFunction(0.3), kPool, 0.0), DomainError);
}

TEST(EffectivePrice, FourBranches) {
    const FeeRate tau(0.1);
    expect_rel(effective_price(kPool, 1.0, tau, Side::buy), 20000.0 / (0.9 * 8.0), 1e-12);
    EXPECT_NEAR(effective_price(kPool, 1.0, tau, Side::buy), 2777.7777777, 1e-6);
    expect_rel(effective_price(kPool, 1.0, tau, Side::sell), 0.9 * 2500.0, 1e-12);
    // net < 0: pre-fee price is p_FM(x (1 - tau))
    const double pre = 20000.0 / (10.0 + 2.0 * 0.9);
    expect_rel(effective_price(kPool, -1.0, tau, Side::buy), pre / 0.9, 1e-12);
    expect_rel(effective_price(kPool, -1.0, tau, Side::sell), 0.9 * pre, 1e-12);
    // same-sign sell equals the two-branch form Y / (X/(1-tau) - 2x)
    expect_rel(effective_price(kPool, -1.0, tau, Side::sell), 20000.0 / (10.0 / 0.9 + 2.0), 1e-12);
}

TEST(EffectivePrice, ZeroNetUsesReserveRatio) {
    expect_rel(effective_price(kPool, 0.0, FeeRate(0.003), Side::buy), 2000.0 / 0.997, 1e-12);
    EXPECT_NEAR(effective_price(kPool, 0.0, FeeRate(0.003), Side::buy), 2006.018054, 1e-6);
    expect_rel(effective_price(kPool, 0.0, FeeRate(0.003), Side::sell), 2000.0 * 0.997, 1e-12);
}

TEST(EffectivePrice, ZeroFeeCollapsesToFmPrice) {
    expect_rel(effective_price(kPool, -1.0, FeeRate(0.0), Side::sell), 20000.0 / 12.0, 1e-12);
    EXPECT_THROW(effective_price(kPool, 5.0, FeeRate(0.0), Side::buy), DomainError);
}

TEST(ObjectiveU, WorkedExamples) {
    EXPECT_DOUBLE_EQ(objective_U(0.0, 1234.0, FeeRate(0.0), kPool), 200000.0);
    EXPECT_DOUBLE_EQ(objective_U(1.0, 2500.0, FeeRate(0.0), kPool), 202500.0);
    // sell branch by hand: (10/0.9 + 1) * (20000 - 20000/12) = (109/9) * (55000/3)
    expect_rel(objective_U(-1.0, 20000.0 / 12.0, FeeRate(0.1), kPool), 5995000.0 / 27.0, 1e-12);
}

TEST(ObjectiveU, BranchesAgreeAtZero) {
    const FeeRate tau(0.25);
    const double at_zero = objective_U(0.0, 1.0, tau, kPool);
    expect_rel(at_zero, kPool.x * kPool.y / tau.keep(), 1e-15);
    expect_rel(objective_U(-1e-12, 2000.0, tau, kPool), at_zero, 1e-12);
    expect_rel(objective_U(1e-12, 2000.0, tau, kPool), at_zero, 1e-12);
}

TEST(MaxObjective, MatchesGridSearch) {
    for (double tau_v : {0.0, 0.003, 0.1}) {
        for (double p : {1500.0, 1999.0, 2000.0, 2010.0, 3000.0}) {
            const FeeRate tau(tau_v);
            const auto best = max_objective(kPool, p, tau);
            double grid_best = -1.0;
            for (int i = 0; i <= 200000; ++i) {
                const double t = -8.0 + 16.0 * i / 200000.0;
                if (t > kPool.x || kPool.y + p * t < 0) continue;
                grid_best = std::max(grid_best, objective_U(t, p, tau, kPool));
            }
            EXPECT_GE(best.value, grid_best * (1 - 1e-12)) << "tau " << tau_v << " p " << p;
            EXPECT_LE(best.value - grid_best, 1e-6 * best.value);
            EXPECT_GE(best.value, objective_U(0.0, p, tau, kPool));
        }
    }
}

TEST(ApplyTrade, WorkedExamples) {
    const Reserves a = apply_trade(kPool, 1.0, FeeRate(0.0));
    EXPECT_DOUBLE_EQ(a.y, 22500.0);
    EXPECT_DOUBLE_EQ(a.x, 9.0);
    EXPECT_DOUBLE_EQ(2500.0 * a.x, a.y);
    EXPECT_EQ(apply_trade(kPool, 0.0, FeeRate(0.3)), kPool);
}

TEST(ApplyTrade, SellWithFeeBalancesByHand) {
    // Trader sells 1 ETH with tau = 0.1: 0.1 ETH stays as fee, 0.9 ETH trades at
    // p_FM(-0.9) = 20000 / 11.8, trader receives 0.9 * 20000 / 11.8 DAI.
    const auto ex = execute_trade(kPool, -1.0, FeeRate(0.1));
    const double received = 0.9 * 20000.0 / 11.8;
    EXPECT_DOUBLE_EQ(ex.after.x, 11.0);
    expect_rel(ex.after.y, 20000.0 - received, 1e-14);
    EXPECT_NEAR(ex.after.y, 18474.576271186, 1e-6);
    EXPECT_DOUBLE_EQ(ex.fee_asset, 0.1);
    EXPECT_EQ(ex.fee_numeraire, 0.0);
    // trader outflow = fee retained + amount traded into the pool
    EXPECT_DOUBLE_EQ(-ex.trader_asset, ex.fee_asset + 0.9);
}

TEST(ApplyTrade, RejectsInfeasible) {
    EXPECT_THROW(apply_trade(kPool, 5.0, FeeRate(0.0)), DomainError);
}

// Property checks over random pools and trades.

TEST(AmmProperties, ClearingPriceConsistency) {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 2000; ++i) {
        const auto [r, dx] = random_pool(rng);
        const double p = fmamm_price(r, dx);
        const Reserves after = apply_trade(r, dx, FeeRate(0.0));
        expect_rel(p, marginal_price(WeightFunction::product(), after), 1e-9);
    }
}

TEST(AmmProperties, EquivalenceOfMaximizingAndClearing) {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> alpha(0.1, 0.9), log_mag(-2.0, 6.0), log_ratio(-1.0, 1.0);
    for (int i = 0; i < 2000; ++i) {
        const WeightFunction w(alpha(rng));
        const Reserves r{std::pow(10.0, log_mag(rng)), std::pow(10.0, log_mag(rng))};
        const double p = marginal_price(w, r) * std::pow(10.0, log_ratio(rng));
        const double dx = solve_function_maximizing(w, r, p);
        expect_rel(solve_clearing_price_consistent(w, r, dx), p, 1e-7);
    }
}

TEST(AmmProperties, DoublePriceImpact) {
    std::mt19937_64 rng(13);
    for (int i = 0; i < 2000; ++i) {
        const auto [r, dx] = random_pool(rng);
        const double mid = r.y / r.x;
        EXPECT_GE(std::abs(fmamm_price(r, dx) - mid), std::abs(cpamm_average_price(r, dx) - mid));
        // FM-AMM at dx is the CPAMM at 2 dx
        if (2 * dx < r.x) expect_rel(fmamm_price(r, dx), cpamm_average_price(r, 2 * dx), 1e-14);
    }
}

TEST(AmmProperties, RebalancingStrategyEquivalence) {
    std::mt19937_64 rng(14);
    for (int i = 0; i < 2000; ++i) {
        const auto [r, dx] = random_pool(rng);
        const double p = fmamm_price(r, dx);
        const Reserves after = apply_trade(r, dx, FeeRate(0.0));
        expect_rel(p * after.x, after.y, 1e-12);
    }
}

TEST(AmmProperties, TradesMoveUpTheCurve) {
    std::mt19937_64 rng(15);
    std::uniform_real_distribution<double> fee(0.0, 0.05), ratio(0.5, 2.0);
    for (int i = 0; i < 2000; ++i) {
        const auto [r, dx] = random_pool(rng);
        const FeeRate tau(fee(rng));
        const double p = r.y / r.x * ratio(rng);
        const auto best = max_objective(r, p, tau);
        const double at_zero = objective_U(0.0, p, tau, r);
        if (best.trade != 0.0) {
            EXPECT_GT(best.value, at_zero);
        } else {
            EXPECT_EQ(best.value, at_zero);
        }
        // the executed product-function trade never lowers Psi
        const Reserves after = apply_trade(r, dx, tau);
        EXPECT_GE(after.x * after.y, r.x * r.y * (1 - 1e-12));
    }
}

TEST(AmmProperties, ConservationPerToken) {
    std::mt19937_64 rng(16);
    std::uniform_real_distribution<double> fee(0.0, 0.3);
    for (int i = 0; i < 2000; ++i) {
        const auto [r, dx] = random_pool(rng);
        const FeeRate tau(fee(rng));
        const auto ex = execute_trade(r, dx, tau);
        // whatever the trader gives up ends in the pool, fee included
        EXPECT_NEAR(ex.after.x - r.x, -ex.trader_asset, 1e-12 * std::max(r.x, std::abs(ex.trader_asset)));
        EXPECT_NEAR(ex.after.y - r.y, -ex.trader_numeraire, 1e-12 * std::max(r.y, std::abs(ex.trader_numeraire)));
        if (dx > 0) {
            expect_rel(-ex.trader_numeraire, ex.fee_numeraire + dx * fmamm_price(r, dx), 1e-12);
        } else if (dx < 0) {
            expect_rel(-ex.trader_asset, ex.fee_asset + (-dx) * tau.keep(), 1e-12);
        }
    }
}
