#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fmamm/error.hpp"

namespace fmamm {

/// Block grid: block i is added at start + mu*i; its batch closes gamma seconds earlier.
struct BlockClock {
    std::int64_t mu = 12;
    std::int64_t gamma = 0;
    std::int64_t start = 0;
    std::int64_t end = 0;

    void validate() const {
        if (mu <= 0) throw ValidationError("block clock: mu must be positive");
        if (gamma < 0 || gamma >= mu) throw ValidationError("block clock: need 0 <= gamma < mu");
        if (end < start) throw ValidationError("block clock: end precedes start");
    }
    /// Number of blocks after the initial boundary.
    std::int64_t blocks() const { return (end - start) / mu; }
    std::int64_t boundary(std::int64_t i) const { return start + mu * i; }
    std::int64_t batch_close(std::int64_t i) const { return boundary(i) - gamma; }
};

struct ReturnPoint {
    std::int64_t timestamp = 0;
    double value = 0.0;
    double cumulative_roi = 0.0;

    friend bool operator==(const ReturnPoint&, const ReturnPoint&) = default;
};

struct LpReturnSeries {
    std::string venue;
    std::vector<ReturnPoint> points;

    double terminal_roi() const { return points.empty() ? 0.0 : points.back().cumulative_roi; }
};

/// 17 significant digits: round-trips exactly, and the same double always prints the same bytes.
inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_return_series_csv(const LpReturnSeries& s, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << "timestamp,value,cumulative_roi\n";
    for (const auto& p : s.points) {
        out << p.timestamp << ',' << format_double(p.value) << ',' << format_double(p.cumulative_roi)
            << '\n';
    }
}

} // namespace fmamm
