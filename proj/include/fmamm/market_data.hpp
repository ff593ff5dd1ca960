#pragma once

// External price series: CSV ingestion, cross rates, synthetic martingale paths.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fmamm/error.hpp"

namespace fmamm {

struct PricePoint {
    std::int64_t timestamp = 0; ///< epoch seconds
    double price = 0.0;

    friend bool operator==(const PricePoint&, const PricePoint&) = default;
};

struct PriceSeries {
    std::string pair; ///< BASE-QUOTE
    std::vector<PricePoint> points;

    bool empty() const { return points.empty(); }
    std::int64_t start() const { return points.front().timestamp; }
    std::int64_t end() const { return points.back().timestamp; }
};

/// Gaps between consecutive observations longer than this are reported.
inline constexpr std::int64_t kMaxQuietGapSeconds = 300;

struct DataGap {
    std::int64_t from = 0;
    std::int64_t to = 0;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        const auto comma = line.find(',', pos);
        out.push_back(trim(line.substr(pos, comma == std::string_view::npos ? line.npos : comma - pos)));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

inline std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open input file: " + path.string());
    return in;
}

} // namespace detail

/// Checks strictly increasing timestamps and positive prices; throws naming the first bad point.
inline void validate_series(const PriceSeries& s) {
    if (s.points.empty()) throw ValidationError("price series '" + s.pair + "' is empty");
    for (std::size_t i = 0; i < s.points.size(); ++i) {
        const auto& p = s.points[i];
        if (!(p.price > 0.0) || !std::isfinite(p.price)) {
            throw ValidationError("price series '" + s.pair + "': non-positive price at index " +
                                  std::to_string(i));
        }
        if (i > 0 && p.timestamp <= s.points[i - 1].timestamp) {
            throw ValidationError("price series '" + s.pair +
                                  "': timestamps not strictly increasing at index " + std::to_string(i));
        }
    }
}

/// Reads a `timestamp,price` CSV (header required). Errors cite 1-based file line numbers.
inline PriceSeries load_price_series(const std::filesystem::path& path, std::string pair) {
    auto in = detail::open_input(path);
    PriceSeries s{std::move(pair), {}};
    std::string line;
    std::size_t lineno = 0;
    const auto where = [&] { return path.string() + ":" + std::to_string(lineno) + ": "; };

    if (!std::getline(in, line)) throw ValidationError(path.string() + ": empty file");
    ++lineno;
    const auto header = detail::split_csv(line);
    if (header.size() != 2 || header[0] != "timestamp" || header[1] != "price") {
        throw ValidationError(where() + "expected header 'timestamp,price'");
    }
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        const auto cols = detail::split_csv(line);
        PricePoint p;
        if (cols.size() != 2 || !detail::parse_number(cols[0], p.timestamp) ||
            !detail::parse_number(cols[1], p.price)) {
            throw ValidationError(where() + "malformed row '" + line + "'");
        }
        if (!(p.price > 0.0) || !std::isfinite(p.price)) {
            throw ValidationError(where() + "non-positive price in row '" + line + "'");
        }
        if (!s.points.empty() && p.timestamp <= s.points.back().timestamp) {
            throw ValidationError(where() + "timestamp " + std::to_string(p.timestamp) +
                                  " does not increase");
        }
        s.points.push_back(p);
    }
    if (s.points.empty()) throw ValidationError(path.string() + ": no data rows");
    return s;
}

inline void save_price_series(const PriceSeries& s, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << "timestamp,price\n";
    char buf[64];
    for (const auto& p : s.points) {
        std::snprintf(buf, sizeof buf, "%.17g", p.price);
        out << p.timestamp << ',' << buf << '\n';
    }
}

/// Gaps longer than `threshold` seconds; these are forward-filled but worth flagging.
inline std::vector<DataGap> find_gaps(const PriceSeries& s,
                                      std::int64_t threshold = kMaxQuietGapSeconds) {
    std::vector<DataGap> gaps;
    for (std::size_t i = 1; i < s.points.size(); ++i) {
        if (s.points[i].timestamp - s.points[i - 1].timestamp > threshold) {
            gaps.push_back({s.points[i - 1].timestamp, s.points[i].timestamp});
        }
    }
    return gaps;
}

/// Last observed price at or before t (forward fill).
inline double price_at(const PriceSeries& s, std::int64_t t) {
    auto it = std::upper_bound(s.points.begin(), s.points.end(), t,
                               [](std::int64_t v, const PricePoint& p) { return v < p.timestamp; });
    if (it == s.points.begin()) {
        throw ValidationError("price series '" + s.pair + "' has no observation at or before t=" +
                              std::to_string(t));
    }
    return std::prev(it)->price;
}

namespace detail {
inline std::string base_of(const std::string& pair) { return pair.substr(0, pair.find('-')); }
} // namespace detail

/// Price of A in units of B from two series quoted in a common currency, on shared timestamps.
/// LDO-USDT and ETH-USDT give LDO-ETH unless `pair` names it otherwise.
inline PriceSeries cross_rate(const PriceSeries& a, const PriceSeries& b, std::string pair = {}) {
    PriceSeries out;
    out.pair = pair.empty() ? detail::base_of(a.pair) + "-" + detail::base_of(b.pair) : std::move(pair);
    auto ia = a.points.begin();
    auto ib = b.points.begin();
    while (ia != a.points.end() && ib != b.points.end()) {
        if (ia->timestamp < ib->timestamp) {
            ++ia;
        } else if (ib->timestamp < ia->timestamp) {
            ++ib;
        } else {
            out.points.push_back({ia->timestamp, ia->price / ib->price});
            ++ia;
            ++ib;
        }
    }
    if (out.points.empty()) {
        throw ValidationError("cross_rate: series '" + a.pair + "' and '" + b.pair +
                              "' share no timestamps");
    }
    return out;
}

struct GbmParams {
    double initial_price = 1.0;
    double drift = 0.0;      ///< per second
    double volatility = 0.0; ///< per sqrt(second)
    std::int64_t step_seconds = 1;
    std::int64_t horizon_seconds = 0;
    std::int64_t start_timestamp = 0;
    std::uint64_t seed = 0;
    std::string pair = "SYN-USD";
};

/// Geometric Brownian motion sampled with exact log-Euler steps. With zero drift the
/// discrete path is a martingale. Bit-reproducible for a given seed on a given toolchain.
inline PriceSeries sample_gbm_path(const GbmParams& g) {
    if (!(g.initial_price > 0.0)) throw ValidationError("gbm: initial price must be positive");
    if (!(g.volatility >= 0.0)) throw ValidationError("gbm: volatility must be non-negative");
    if (g.step_seconds <= 0) throw ValidationError("gbm: step must be positive");
    if (g.horizon_seconds < 0) throw ValidationError("gbm: horizon must be non-negative");

    const std::int64_t steps = g.horizon_seconds / g.step_seconds;
    const double dt = static_cast<double>(g.step_seconds);
    const double mean_step = (g.drift - 0.5 * g.volatility * g.volatility) * dt;
    const double sd_step = g.volatility * std::sqrt(dt);

    std::mt19937_64 rng(g.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    PriceSeries s{g.pair, {}};
    s.points.reserve(static_cast<std::size_t>(steps) + 1);
    double log_price = std::log(g.initial_price);
    s.points.push_back({g.start_timestamp, g.initial_price});
    const bool frozen = sd_step == 0.0 && mean_step == 0.0;
    for (std::int64_t k = 1; k <= steps; ++k) {
        if (!frozen) log_price += mean_step + sd_step * normal(rng);
        const double price = frozen ? g.initial_price : std::exp(log_price);
        s.points.push_back({g.start_timestamp + k * g.step_seconds, price});
    }
    return s;
}

/// Adds symmetric two-point noise +/-delta, delta = min(epsilon_sd, p/2), to each draw. The
/// conditional mean of each output given its input is exactly the input.
inline std::vector<double> mean_preserving_spread(std::span<const double> base, double epsilon_sd,
                                                  std::uint64_t seed) {
    if (!(epsilon_sd >= 0.0)) throw ValidationError("mean_preserving_spread: epsilon_sd must be >= 0");
    std::vector<double> out(base.begin(), base.end());
    if (epsilon_sd == 0.0) return out;
    std::mt19937_64 rng(seed);
    for (double& p : out) {
        const double delta = std::min(epsilon_sd, 0.5 * p);
        p += (rng() >> 63) ? delta : -delta;
    }
    return out;
}

} // namespace fmamm
