// fmamm-cli: quotes, batch settlement, backtests, sweeps and attack analysis.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "fmamm/fmamm.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace fmamm;

namespace {

constexpr const char* kVersion = FMAMM_VERSION;

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
    std::string out;
    char hex[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(hex, sizeof hex, "%02x", md[i]);
        out += hex;
    }
    return out;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ValidationError("cannot open input file: " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Human-readable number for terminal tables.
std::string human(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

/// Collects output files and writes the manifest last, with digests of everything.
class Report {
public:
    Report(fs::path dir, std::string command) : dir_(std::move(dir)), command_(std::move(command)) {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) throw ValidationError("cannot create output directory " + dir_.string() + ": " + ec.message());
    }

    const fs::path& dir() const { return dir_; }

    void add_input(const fs::path& p) {
        inputs_.push_back({{"path", p.string()}, {"sha256", sha256_hex(read_file(p))}});
    }

    void write(const std::string& name, const std::string& body) {
        std::ofstream out(dir_ / name, std::ios::binary);
        if (!out) throw ValidationError("cannot write " + (dir_ / name).string());
        out << body;
        outputs_.push_back({{"file", name}, {"sha256", sha256_hex(body)}});
    }

    void write_series(const std::string& name, const LpReturnSeries& s) {
        write_return_series_csv(s, dir_ / name);
        outputs_.push_back({{"file", name}, {"sha256", sha256_hex(read_file(dir_ / name))}});
    }

    void long_row(const std::string& run, std::int64_t t, const std::string& metric, double v) {
        long_ << run << ',' << t << ',' << metric << ',' << format_double(v) << '\n';
    }

    void long_series(const LpReturnSeries& s) {
        for (const auto& p : s.points) {
            long_row(s.venue, p.timestamp, "value", p.value);
            long_row(s.venue, p.timestamp, "cumulative_roi", p.cumulative_roi);
        }
    }

    void finish(const std::string& config, const json& params, const json& summary,
                std::optional<std::uint64_t> seed) {
        if (long_.tellp() > 0) write("long.csv", "run_id,timestamp,metric,value\n" + long_.str());
        write("summary.json", summary.dump(2) + "\n");
        json m{{"command", command_},
               {"config", config},
               {"parameters", params},
               {"inputs", inputs_},
               {"outputs", outputs_},
               {"seed", seed ? json(*seed) : json(nullptr)},
               {"version", kVersion}};
        std::ofstream out(dir_ / "manifest.json", std::ios::binary);
        out << m.dump(2) << "\n";
    }

private:
    fs::path dir_;
    std::string command_;
    json inputs_ = json::array();
    json outputs_ = json::array();
    std::ostringstream long_;
};

// ---- scenario config ----

struct Scenario {
    fs::path config_path;
    std::string pair;
    PriceSeries prices;
    std::vector<fs::path> inputs;
    std::vector<SwapRecord> swaps;
    bool has_swaps = false;
    BlockClock clock;
    double fee = 0.003;
    std::vector<double> fees;
    double noise_fraction = 0.0;
    std::vector<double> noise_fractions;
    NoiseDirection direction = NoiseDirection::balanced;
    std::uint64_t seed = 0;
    fs::path output_dir;
    Reserves initial;
    double pool_fee = 0.003;
    std::optional<double> turnover_per_block;
    BaselineOptions baseline;
    json params;
};

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ValidationError(std::string("config key '") + key + "' has the wrong type");
    }
}

CompoundCadence parse_cadence(const std::string& s) {
    if (s == "per_swap") return CompoundCadence::per_swap;
    if (s == "per_block") return CompoundCadence::per_block;
    if (s == "per_day") return CompoundCadence::per_day;
    throw ValidationError("unknown cadence '" + s + "' (per_swap, per_block, per_day)");
}

NoiseDirection parse_direction(const std::string& s) {
    if (s == "balanced") return NoiseDirection::balanced;
    if (s == "random_sign") return NoiseDirection::random_sign;
    throw ValidationError("unknown noise direction '" + s + "' (balanced, random_sign)");
}

Scenario load_scenario(const fs::path& config_path, std::optional<std::uint64_t> seed_override,
                       const std::string& output_override) {
    json cfg;
    try {
        cfg = json::parse(read_file(config_path));
    } catch (const json::parse_error& e) {
        throw ValidationError(config_path.string() + ": " + e.what());
    }
    if (!cfg.is_object()) throw ValidationError(config_path.string() + ": config must be a JSON object");
    const fs::path base = config_path.parent_path();
    auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };

    Scenario s;
    s.config_path = config_path;
    s.pair = get_or<std::string>(cfg, "pair", "ETH-USDT");
    s.seed = seed_override ? *seed_override : get_or<std::uint64_t>(cfg, "seed", 0);

    if (cfg.contains("price_csv") && cfg["price_csv"].is_array()) {
        const auto paths = get_or<std::vector<std::string>>(cfg, "price_csv", {});
        if (paths.size() != 2) throw ValidationError("price_csv as a list needs exactly two files");
        const auto dash = s.pair.find('-');
        const std::string b = s.pair.substr(0, dash), q = dash == std::string::npos ? "" : s.pair.substr(dash + 1);
        const auto a = load_price_series(resolve(paths[0]), b + "-USD");
        const auto c = load_price_series(resolve(paths[1]), q + "-USD");
        s.prices = cross_rate(a, c, s.pair);
        s.inputs = {resolve(paths[0]), resolve(paths[1])};
    } else if (cfg.contains("price_csv")) {
        const auto p = resolve(get_or<std::string>(cfg, "price_csv", ""));
        s.prices = load_price_series(p, s.pair);
        s.inputs.push_back(p);
    } else if (cfg.contains("synthetic")) {
        const json& g = cfg["synthetic"];
        GbmParams gp;
        gp.initial_price = get_or(g, "initial_price", gp.initial_price);
        gp.drift = get_or(g, "drift", gp.drift);
        gp.volatility = get_or(g, "volatility", gp.volatility);
        gp.step_seconds = get_or<std::int64_t>(g, "step_seconds", gp.step_seconds);
        gp.horizon_seconds = get_or<std::int64_t>(g, "horizon_seconds", gp.horizon_seconds);
        gp.start_timestamp = get_or<std::int64_t>(g, "start_timestamp", gp.start_timestamp);
        gp.seed = get_or<std::uint64_t>(g, "seed", s.seed);
        gp.pair = s.pair;
        s.prices = sample_gbm_path(gp);
    } else {
        throw ValidationError(config_path.string() + ": need 'price_csv' or 'synthetic'");
    }

    if (cfg.contains("swap_csv")) {
        const auto p = resolve(get_or<std::string>(cfg, "swap_csv", ""));
        s.swaps = load_swap_records(p);
        s.has_swaps = true;
        s.inputs.push_back(p);
    }

    s.clock = clock_for(s.prices, get_or<std::int64_t>(cfg, "mu", 12), get_or<std::int64_t>(cfg, "gamma", 0));
    s.clock.start = get_or<std::int64_t>(cfg, "start", s.clock.start);
    s.clock.end = get_or<std::int64_t>(cfg, "end", s.clock.end);
    s.clock.validate();

    s.fee = FeeRate(get_or(cfg, "fee", s.fee)).value();
    s.fees = get_or(cfg, "fees", default_fee_grid());
    s.noise_fraction = get_or(cfg, "noise_fraction", 0.0);
    s.noise_fractions = get_or(cfg, "noise_fractions", std::vector<double>{0.0, 0.1, 0.3, 0.5});
    s.direction = parse_direction(get_or<std::string>(cfg, "noise_direction", "balanced"));
    s.pool_fee = get_or(cfg, "pool_fee", s.pool_fee);
    if (cfg.contains("turnover_per_block")) s.turnover_per_block = get_or(cfg, "turnover_per_block", 0.0);
    s.baseline.initial_liquidity = get_or(cfg, "L0", 1.0);
    s.baseline.cadence = parse_cadence(get_or<std::string>(cfg, "cadence", "per_block"));

    const double initial_x = get_or(cfg, "initial_x", 1.0);
    if (!(initial_x > 0.0)) throw ValidationError("initial_x must be positive");
    check_coverage(s.prices, s.clock);
    s.initial = balanced_reserves(price_at(s.prices, s.clock.start), initial_x);

    if (!output_override.empty()) {
        s.output_dir = output_override;
    } else if (cfg.contains("output_dir")) {
        s.output_dir = resolve(get_or<std::string>(cfg, "output_dir", ""));
    } else {
        throw ValidationError(config_path.string() + ": need 'output_dir' (or --output-dir)");
    }

    s.params = {{"pair", s.pair},
                {"mu", s.clock.mu},
                {"gamma", s.clock.gamma},
                {"start", s.clock.start},
                {"end", s.clock.end},
                {"blocks", s.clock.blocks()},
                {"fee", s.fee},
                {"fees", s.fees},
                {"noise_fraction", s.noise_fraction},
                {"noise_fractions", s.noise_fractions},
                {"noise_direction", s.direction == NoiseDirection::balanced ? "balanced" : "random_sign"},
                {"initial_y", s.initial.y},
                {"initial_x", s.initial.x},
                {"pool_fee", s.pool_fee},
                {"L0", s.baseline.initial_liquidity},
                {"cadence", get_or<std::string>(cfg, "cadence", "per_block")},
                {"synthetic", cfg.contains("synthetic") ? cfg["synthetic"] : json(nullptr)}};
    return s;
}

std::vector<double> turnover_for(const Scenario& s) {
    if (s.has_swaps) return baseline_turnover(s.swaps, s.clock, s.pool_fee);
    if (s.turnover_per_block) {
        return std::vector<double>(static_cast<std::size_t>(s.clock.blocks()), *s.turnover_per_block);
    }
    throw ValidationError("noise needs 'swap_csv' or 'turnover_per_block' in the config");
}

void warn_gaps(const PriceSeries& prices) {
    const auto gaps = find_gaps(prices);
    if (gaps.empty()) return;
    std::cerr << "warning: " << gaps.size() << " gap(s) longer than " << kMaxQuietGapSeconds
              << "s in " << prices.pair << ", first at " << gaps.front().from << ".." << gaps.front().to
              << " (forward-filled)\n";
}

void open_report(Report& rep, const Scenario& s) {
    for (const auto& p : s.inputs) rep.add_input(p);
}

std::string blocks_csv(const BacktestRun& run) {
    std::ostringstream out;
    out << "block,timestamp,p_star,noise_net,noise_volume,arb_order,y,x,fee_numeraire,fee_asset\n";
    for (const auto& b : run.blocks) {
        out << b.index << ',' << b.timestamp << ',' << format_double(b.p_star) << ','
            << format_double(b.noise_net) << ',' << format_double(b.noise_volume) << ','
            << format_double(b.arb_order) << ',' << format_double(b.after.y) << ','
            << format_double(b.after.x) << ',' << format_double(b.fee_numeraire) << ','
            << format_double(b.fee_asset) << '\n';
    }
    return out.str();
}

std::string comparison_csv(const ReturnComparison& c) {
    std::ostringstream out;
    out << "timestamp,roi_a,roi_b,difference\n";
    for (const auto& p : c.points) {
        out << p.timestamp << ',' << format_double(p.roi_a) << ',' << format_double(p.roi_b) << ','
            << format_double(p.difference) << '\n';
    }
    return out.str();
}

// ---- commands ----

struct ConfigArgs {
    std::string config;
    std::string output_dir;
    std::optional<std::uint64_t> seed;
};

int cmd_backtest(const ConfigArgs& a) {
    const auto s = load_scenario(a.config, a.seed, a.output_dir);
    warn_gaps(s.prices);
    Report rep(s.output_dir, "backtest");
    open_report(rep, s);

    NoiseScenario noise = NoiseScenario::none();
    std::vector<double> turnover;
    if (s.noise_fraction > 0.0) {
        noise = NoiseScenario::of_volume(s.noise_fraction, s.direction, s.seed);
        turnover = turnover_for(s);
    }
    const auto run = run_fmamm_backtest(s.prices, s.clock, FeeRate(s.fee), noise, s.initial, turnover);
    rep.write_series("fmamm_returns.csv", run.returns);
    rep.write("blocks.csv", blocks_csv(run));
    rep.long_series(run.returns);

    json summary{{"pair", s.pair},
                 {"blocks", s.clock.blocks()},
                 {"fee", s.fee},
                 {"noise_fraction", s.noise_fraction},
                 {"fmamm_terminal_roi", run.returns.terminal_roi()},
                 {"rebalances", run.rebalances},
                 {"gap_warnings", run.gap_warnings.size()}};
    std::cout << "pair " << s.pair << "\nblocks " << s.clock.blocks() << "\nrebalances " << run.rebalances
              << "\nfmamm_terminal_roi " << human(run.returns.terminal_roi()) << "\n";

    if (s.has_swaps) {
        const auto base = run_baseline(s.swaps, s.prices, s.clock, s.baseline);
        const auto cmp = compare_returns(run.returns, base);
        rep.write_series("baseline_returns.csv", base);
        rep.write("comparison.csv", comparison_csv(cmp));
        rep.long_series(base);
        summary["baseline_terminal_roi"] = base.terminal_roi();
        summary["terminal_difference_pp"] = cmp.terminal_difference_pp;
        std::cout << "baseline_terminal_roi " << human(base.terminal_roi()) << "\nterminal_difference_pp "
                  << human(cmp.terminal_difference_pp) << "\n";
    }
    rep.finish(a.config, s.params, summary, s.seed);
    return 0;
}

int cmd_sweep_fees(const ConfigArgs& a) {
    const auto s = load_scenario(a.config, a.seed, a.output_dir);
    warn_gaps(s.prices);
    Report rep(s.output_dir, "sweep-fees");
    open_report(rep, s);

    const auto rows = fee_sweep(s.prices, s.clock, s.fees, s.initial);
    std::optional<LpReturnSeries> base;
    if (s.has_swaps) base = run_baseline(s.swaps, s.prices, s.clock, s.baseline);

    std::ostringstream table;
    table << "fee,terminal_roi,rebalances" << (base ? ",difference_vs_baseline_pp" : "") << "\n";
    json summary{{"pair", s.pair}, {"rows", json::array()}};
    std::cout << "fee terminal_roi rebalances" << (base ? " diff_vs_baseline_pp" : "") << "\n";
    for (const auto& r : rows) {
        table << format_double(r.fee) << ',' << format_double(r.terminal_roi) << ',' << r.rebalances;
        json row{{"fee", r.fee}, {"terminal_roi", r.terminal_roi}, {"rebalances", r.rebalances}};
        std::cout << human(r.fee) << ' ' << human(r.terminal_roi) << ' ' << r.rebalances;
        if (base) {
            const double d = compare_returns(r.returns, *base).terminal_difference_pp;
            table << ',' << format_double(d);
            row["difference_vs_baseline_pp"] = d;
            std::cout << ' ' << human(d);
        }
        table << '\n';
        std::cout << '\n';
        summary["rows"].push_back(row);
        rep.long_series(r.returns);
    }
    if (base) {
        rep.long_series(*base);
        summary["baseline_terminal_roi"] = base->terminal_roi();
    }
    rep.write("fee_sweep.csv", table.str());
    rep.finish(a.config, s.params, summary, s.seed);
    return 0;
}

int cmd_sweep_noise(const ConfigArgs& a) {
    const auto s = load_scenario(a.config, a.seed, a.output_dir);
    warn_gaps(s.prices);
    Report rep(s.output_dir, "sweep-noise");
    open_report(rep, s);

    const auto turnover = turnover_for(s);
    const auto rows = noise_volume_sweep(s.prices, s.clock, FeeRate(s.fee), s.noise_fractions, turnover,
                                         s.initial, s.direction, s.seed);
    std::optional<LpReturnSeries> base;
    if (s.has_swaps) base = run_baseline(s.swaps, s.prices, s.clock, s.baseline);

    std::ostringstream table;
    table << "fraction,terminal_roi,difference_vs_zero_pp,rebalances"
          << (base ? ",difference_vs_baseline_pp" : "") << "\n";
    json summary{{"pair", s.pair}, {"fee", s.fee}, {"rows", json::array()}};
    std::cout << "fraction terminal_roi diff_vs_zero_pp" << (base ? " diff_vs_baseline_pp" : "") << "\n";
    for (const auto& r : rows) {
        table << format_double(r.fraction) << ',' << format_double(r.terminal_roi) << ','
              << format_double(r.difference_vs_zero_pp) << ',' << r.rebalances;
        json row{{"fraction", r.fraction},
                 {"terminal_roi", r.terminal_roi},
                 {"difference_vs_zero_pp", r.difference_vs_zero_pp},
                 {"rebalances", r.rebalances}};
        std::cout << human(r.fraction) << ' ' << human(r.terminal_roi) << ' ' << human(r.difference_vs_zero_pp);
        if (base) {
            const double d = compare_returns(r.returns, *base).terminal_difference_pp;
            table << ',' << format_double(d);
            row["difference_vs_baseline_pp"] = d;
            std::cout << ' ' << human(d);
        }
        table << '\n';
        std::cout << '\n';
        summary["rows"].push_back(row);
        rep.long_series(r.returns);
    }
    rep.write("noise_sweep.csv", table.str());
    rep.finish(a.config, s.params, summary, s.seed);
    return 0;
}

struct PoolArgs {
    double y = 0.0;
    double x = 0.0;
    double fee = 0.0;
    std::string output_dir;
};

void add_pool_options(CLI::App* cmd, PoolArgs& p, bool with_fee) {
    cmd->add_option("--y", p.y, "numeraire reserve")->required();
    cmd->add_option("--x-reserve", p.x, "asset reserve")->required();
    if (with_fee) cmd->add_option("--fee", p.fee, "fee rate in [0, 1)")->capture_default_str();
    cmd->add_option("--output-dir", p.output_dir, "also write summary.json and manifest.json here");
}

Reserves pool_of(const PoolArgs& p) {
    if (!(p.y > 0.0) || !(p.x > 0.0)) throw ValidationError("reserves must be positive");
    return {p.y, p.x};
}

json pool_params(const PoolArgs& p) { return {{"y", p.y}, {"x", p.x}, {"fee", p.fee}}; }

void maybe_report(const PoolArgs& p, const std::string& command, json params, const json& summary,
                  std::optional<std::uint64_t> seed = std::nullopt) {
    if (p.output_dir.empty()) return;
    Report rep(p.output_dir, command);
    rep.finish("", params, summary, seed);
}

int cmd_quote(const PoolArgs& p, double trade) {
    const Reserves r = pool_of(p);
    const FeeRate tau(p.fee);
    json summary{{"trade", trade}};
    if (trade == 0.0) {
        const double m = pre_fee_price(r, 0.0, tau);
        std::cout << "marginal_price " << human(m) << "\nbuy_price " << human(m / tau.keep())
                  << "\nsell_price " << human(m * tau.keep()) << "\n";
        summary["marginal_price"] = m;
    } else {
        const auto ex = execute_trade(r, trade, tau);
        std::cout << "side " << to_string(side_of(trade)) << "\npre_fee_price " << human(ex.pre_fee_price)
                  << "\neffective_price " << human(ex.effective_price) << "\ncpamm_price "
                  << (trade < r.x ? human(cpamm_average_price(r, trade)) : std::string("n/a"))
                  << "\nreserves_after " << human(ex.after.y) << ' ' << human(ex.after.x) << "\n";
        summary["side"] = to_string(side_of(trade));
        summary["pre_fee_price"] = ex.pre_fee_price;
        summary["effective_price"] = ex.effective_price;
        summary["reserves_after"] = {ex.after.y, ex.after.x};
    }
    auto params = pool_params(p);
    params["trade"] = trade;
    maybe_report(p, "quote", params, summary);
    return 0;
}

int cmd_attack(const PoolArgs& p, double p_star) {
    const Reserves r = pool_of(p);
    if (!(p_star > 0.0)) throw ValidationError("p* must be positive");
    const auto op = malicious_operator_attack(r, p_star);
    const auto cp = cpamm_arbitrage_profit(r, p_star);
    std::cout << "operator_profit " << human(op.profit) << "\noperator_trade " << human(op.trade)
              << "\ncpamm_arbitrage_profit " << human(cp.profit) << "\ncpamm_arbitrage_trade "
              << human(cp.trade) << "\n";
    json summary{{"operator_profit", op.profit}, {"cpamm_arbitrage_profit", cp.profit}};
    if (cp.profit > 0.0) {
        std::cout << "ratio " << human(op.profit / cp.profit) << "\n";
        summary["ratio"] = op.profit / cp.profit;
    } else {
        std::cout << "ratio undefined (p* equals the pool price)\n";
    }
    auto params = pool_params(p);
    params["p_star"] = p_star;
    maybe_report(p, "attack", params, summary);
    return 0;
}

struct McArgs {
    double price = 0.0;
    double epsilon = 0.0;
    double base_sd = 0.0;
    std::size_t draws = 100000;
    std::uint64_t seed = 0;
};

int cmd_mc_risk(const PoolArgs& p, const McArgs& m) {
    const Reserves r = pool_of(p);
    const double centre = m.price > 0.0 ? m.price : r.y / r.x;
    const double eps = m.epsilon > 0.0 ? m.epsilon : 0.1 * centre;
    std::vector<double> draws(m.draws, centre);
    if (m.base_sd > 0.0) {
        std::mt19937_64 rng(m.seed);
        std::lognormal_distribution<double> g(std::log(centre) - 0.5 * m.base_sd * m.base_sd, m.base_sd);
        for (auto& d : draws) d = g(rng);
    }
    const auto res = risk_loving_monte_carlo(draws, eps, r, FeeRate(p.fee), m.seed + 1);
    std::cout << "draws " << res.draws << "\nmean_v_g " << human(res.mean_v_g) << "\nmean_v_f "
              << human(res.mean_v_f) << "\ndifference " << human(res.difference) << "\nstandard_error "
              << human(res.standard_error) << "\nz_score " << human(res.z_score) << "\n";
    auto params = pool_params(p);
    params.update({{"price", centre}, {"epsilon", eps}, {"base_sd", m.base_sd}, {"draws", m.draws}});
    maybe_report(p, "mc-risk", params,
                 {{"mean_v_g", res.mean_v_g},
                  {"mean_v_f", res.mean_v_f},
                  {"difference", res.difference},
                  {"standard_error", res.standard_error},
                  {"z_score", res.z_score}},
                 m.seed);
    return 0;
}

int cmd_split_demo(const PoolArgs& p, double trade, const std::vector<std::int64_t>& splits) {
    const Reserves r = pool_of(p);
    json rows = json::array();
    std::cout << "splits final_y final_x\n";
    for (auto n : splits) {
        const auto path = split_trade_experiment(r, trade, n);
        std::cout << n << ' ' << human(path.back().y) << ' ' << human(path.back().x) << "\n";
        rows.push_back({{"splits", n}, {"final_y", path.back().y}});
    }
    json summary{{"rows", rows}};
    if (trade < r.x) {
        const double limit = r.y * r.x / (r.x - trade);
        std::cout << "constant_product_limit " << human(limit) << "\n";
        summary["constant_product_limit"] = limit;
    }
    auto params = pool_params(p);
    params.update({{"trade", trade}, {"splits", splits}});
    maybe_report(p, "split-demo", params, summary);
    return 0;
}

TraderKind parse_kind(const std::string& s) {
    if (s == "noise") return TraderKind::noise;
    if (s == "arbitrageur") return TraderKind::arbitrageur;
    throw ValidationError("unknown trader_kind '" + s + "'");
}

int cmd_settle(const PoolArgs& p, const std::string& orders_path) {
    Reserves r = pool_of(p);
    const FeeRate tau(p.fee);
    std::istringstream in(read_file(orders_path));
    std::map<std::int64_t, Batch> batches;
    std::string line;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
        if (detail::trim(line).empty()) continue;
        try {
            const auto j = json::parse(line);
            const auto block = j.at("block").get<std::int64_t>();
            Order o{get_or<std::string>(j, "id", "line" + std::to_string(lineno)),
                    parse_kind(get_or<std::string>(j, "trader_kind", "noise")), j.at("amount").get<double>()};
            auto& b = batches[block];
            b.block_index = block;
            b.orders.push_back(std::move(o));
        } catch (const json::exception& e) {
            throw ValidationError(orders_path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }

    std::ostringstream fills;
    fills << "block,id,trader_kind,amount,effective_price,fee_paid,numeraire_flow\n";
    json summary = json::array();
    for (const auto& [block, batch] : batches) {
        auto [after, rep] = settle_batch(r, batch, tau);
        std::cout << "block " << block << " net " << human(rep.net_trade) << " pre_fee_price "
                  << human(rep.pre_fee_price) << " reserves " << human(after.y) << ' ' << human(after.x) << "\n";
        for (const auto& f : rep.per_order_fills) {
            std::cout << "  " << f.id << ' ' << to_string(f.trader_kind) << ' ' << human(f.amount) << " @ "
                      << human(f.effective_price) << "\n";
            fills << block << ',' << f.id << ',' << to_string(f.trader_kind) << ',' << format_double(f.amount)
                  << ',' << format_double(f.effective_price) << ',' << format_double(f.fee_paid) << ','
                  << format_double(f.numeraire_flow) << '\n';
        }
        summary.push_back({{"block", block},
                           {"net_trade", rep.net_trade},
                           {"pre_fee_price", rep.pre_fee_price},
                           {"reserves_after", {after.y, after.x}}});
        r = after;
    }
    if (!p.output_dir.empty()) {
        Report out(p.output_dir, "settle");
        out.add_input(orders_path);
        out.write("fills.csv", fills.str());
        auto params = pool_params(p);
        params["orders"] = orders_path;
        out.finish("", params, summary, std::nullopt);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"FM-AMM batch pricing, backtests and attack analysis"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    PoolArgs pool;
    double trade = 0.0, p_star = 0.0;
    std::string orders;
    McArgs mc;
    std::vector<std::int64_t> splits{1, 2, 10, 100, 1000, 100000};
    ConfigArgs cfg;
    std::uint64_t seed = 0;

    auto* quote = app.add_subcommand("quote", "price a single FM-AMM trade");
    add_pool_options(quote, pool, true);
    quote->add_option("--trade", trade, "asset amount, > 0 buys from the pool, < 0 sells")->required();

    auto* settle = app.add_subcommand("settle", "settle JSON-lines orders batch by batch");
    add_pool_options(settle, pool, true);
    settle->add_option("--orders", orders, "JSON lines {block, trader_kind, amount[, id]}")->required();

    auto* attack = app.add_subcommand("attack", "malicious operator vs CPAMM arbitrage profit");
    add_pool_options(attack, pool, false);
    attack->add_option("--p-star", p_star, "external price")->required();

    auto* mcrisk = app.add_subcommand("mc-risk", "Monte Carlo of pool value under a mean-preserving spread");
    add_pool_options(mcrisk, pool, true);
    mcrisk->add_option("--price", mc.price, "centre of G (default Y/X)");
    mcrisk->add_option("--epsilon", mc.epsilon, "two-point spread size (default 10% of the centre)");
    mcrisk->add_option("--base-sd", mc.base_sd, "log-sd of G; 0 means degenerate")->capture_default_str();
    mcrisk->add_option("--draws", mc.draws)->capture_default_str();
    mcrisk->add_option("--seed", mc.seed)->capture_default_str();

    auto* split = app.add_subcommand("split-demo", "split one buy into n equal batches");
    add_pool_options(split, pool, false);
    split->add_option("--trade", trade, "total asset bought")->required();
    split->add_option("--splits", splits, "split counts")->capture_default_str();

    std::vector<CLI::App*> config_cmds;
    for (auto [name, desc] : {std::pair{"backtest", "FM-AMM counterfactual against a price path"},
                              std::pair{"sweep-fees", "zero-noise backtest per fee"},
                              std::pair{"sweep-noise", "backtest per noise-volume fraction"}}) {
        auto* c = app.add_subcommand(name, desc);
        c->add_option("config", cfg.config, "scenario JSON")->required();
        c->add_option("--output-dir", cfg.output_dir, "override output_dir from the config");
        c->add_option("--seed", seed, "override seed from the config");
        config_cmds.push_back(c);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        for (auto* c : config_cmds) {
            if (c->count("--seed") > 0) cfg.seed = seed;
        }
        if (*quote) return cmd_quote(pool, trade);
        if (*settle) return cmd_settle(pool, orders);
        if (*attack) return cmd_attack(pool, p_star);
        if (*mcrisk) return cmd_mc_risk(pool, mc);
        if (*split) return cmd_split_demo(pool, trade, splits);
        if (*config_cmds[0]) return cmd_backtest(cfg);
        if (*config_cmds[1]) return cmd_sweep_fees(cfg);
        if (*config_cmds[2]) return cmd_sweep_noise(cfg);
    } catch (const ConvergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
