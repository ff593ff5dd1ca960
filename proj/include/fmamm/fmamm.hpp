#pragma once

#include "fmamm/amm_core.hpp"
#include "fmamm/arbitrage.hpp"
#include "fmamm/backtest.hpp"
#include "fmamm/batch_engine.hpp"
#include "fmamm/error.hpp"
#include "fmamm/market_data.hpp"
#include "fmamm/root_finding.hpp"
#include "fmamm/series.hpp"
#include "fmamm/uniswap_baseline.hpp"
