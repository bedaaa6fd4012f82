#include "evlab/scenario.hpp"

#include "evlab/evl.hpp"
#include "evlab/rng.hpp"
#include "evlab/subshift.hpp"
#include "evlab/transfer.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace evlab {

namespace {

using nlohmann::json;

constexpr int kSchemaVersion = 1;

json default_config(const std::string& name) {
    json ei = {
        {"kind", "ei"},
        {"beta", "2"},
        {"schedule", {{"kind", "constant"}, {"amplitude", 0.0}, {"exponent", 2.0}, {"sign", 1}}},
        {"zeta", "1/3"},
        {"g", {{"kind", "neglog"}, {"alpha", 1.0}, {"D", 1.0}}},
        {"tau", 1.0},
        {"n", 5000},
        {"replicates", 20000},
        {"gamma_burn", 0.6},
        {"k_n", 0},
        {"t_star", 0},
        {"q_horizon", 10000},
        {"q_override", nullptr},
        {"sample_from_invariant", false},
        {"per_index_thresholds", false},
        {"d_t_values", json::array({1, 2, 3, 4, 5, 6, 7, 8, 9, 10})},
    };
    if (name == "periodic") return ei;
    if (name == "aperiodic") {
        ei["zeta"] = "sqrt(1/2)";
        return ei;
    }
    if (name == "boundary-nonperiodic") {
        ei["beta"] = "5/2";
        ei["zeta"] = "boundary";
        ei["n"] = 2000;
        return ei;
    }
    if (name == "boundary-periodic") {
        ei["beta"] = "golden";
        ei["zeta"] = "boundary";
        return ei;
    }
    if (name == "counterexample-slow") {
        ei["beta"] = "5/2";
        ei["zeta"] = "2/3";
        ei["n"] = 2000;
        ei["schedule"] = {{"kind", "slow"}, {"amplitude", 1.0}, {"exponent", 0.5}, {"sign", 1}};
        ei["q_override"] = 0;
        // the slope drifts too slowly for one fixed level; normalize each
        // index against its own map's invariant measure
        ei["per_index_thresholds"] = true;
        return ei;
    }
    if (name == "counterexample-fast") {
        ei["beta"] = "5/2";
        ei["zeta"] = "2/3";
        ei["n"] = 2000;
        ei["schedule"] = {{"kind", "fast"}, {"amplitude", 0.5}, {"exponent", 2.0}, {"sign", 1}};
        return ei;
    }
    if (name == "subshift-degenerate") {
        return json{
            {"kind", "subshift"},
            {"alphabet", 2},
            {"matrices", json::array({json::array({0.3, 0.7, 0.4, 0.6})})},
            {"weights", json::array({1.0})},
            {"zeta_word", json::array({0})},
            {"n", 8},
            {"tau", 1.0},
            {"replicates", 20000},
            {"omegas", 1},
        };
    }
    if (name == "subshift-random") {
        return json{
            {"kind", "subshift"},
            {"alphabet", 2},
            {"matrices",
             json::array({json::array({0.3, 0.7, 0.4, 0.6}), json::array({0.8, 0.2, 0.5, 0.5})})},
            {"weights", json::array({0.5, 0.5})},
            {"zeta_word", json::array({0})},
            {"n", 8},
            {"tau", 1.0},
            {"replicates", 20000},
            {"omegas", 10},
        };
    }
    if (name == "blocks-audit") {
        return json{{"kind", "blocks"}, {"tail_arrays", 1000}, {"enum_spaces", 500},
                    {"enum_max_n", 12},  {"enum_max_q", 3}};
    }
    if (name == "operator-audit") {
        return json{{"kind", "operator"}, {"n_bins", 4096}, {"t_max", 10},
                    {"memory_short", 20}, {"memory_long", 200}};
    }
    throw std::invalid_argument("unknown scenario: " + name);
}

MapSequenceSpec maps_from_json(const json& cfg) {
    MapSequenceSpec maps;
    const json& sched = cfg.at("schedule");
    const std::string kind = sched.at("kind").get<std::string>();
    double beta;
    std::optional<Rat> beta_exact;
    if (cfg.at("beta").is_string()) {
        const std::string text = cfg.at("beta").get<std::string>();
        if (text == "golden") {
            beta = (1.0 + std::sqrt(5.0)) / 2.0;
        } else {
            auto slash = text.find('/');
            long long num = std::stoll(text.substr(0, slash));
            long long den = slash == std::string::npos ? 1 : std::stoll(text.substr(slash + 1));
            beta_exact = rat_from_ll(num, den);
            beta = rat_to_double(*beta_exact);
        }
    } else {
        beta = cfg.at("beta").get<double>();
        if (beta == std::round(beta)) beta_exact = rat_from_ll(static_cast<long long>(beta), 1);
    }
    maps.limit_beta = beta;
    maps.limit_beta_exact = beta_exact;
    if (kind == "constant") {
        maps.kind = ScheduleKind::Constant;
    } else if (kind == "fast") {
        maps.kind = ScheduleKind::Fast;
    } else if (kind == "slow") {
        maps.kind = ScheduleKind::Slow;
    } else {
        throw std::invalid_argument("schedule kind must be constant|fast|slow");
    }
    maps.amplitude = sched.at("amplitude").get<double>();
    maps.exponent = sched.at("exponent").get<double>();
    maps.sign = sched.at("sign").get<int>();
    maps.validate();
    return maps;
}

Observable observable_from_json(const json& cfg, double zeta_value) {
    const json& g = cfg.at("g");
    const std::string kind = g.at("kind").get<std::string>();
    if (kind == "neglog") return Observable::neg_log(zeta_value);
    if (kind == "power") return Observable::power(zeta_value, g.at("alpha").get<double>());
    if (kind == "bounded")
        return Observable::bounded(zeta_value, g.at("D").get<double>(), g.at("alpha").get<double>());
    throw std::invalid_argument("g kind must be neglog|power|bounded");
}

ExperimentSpec experiment_from_json(const json& cfg, const RunOptions& opts, std::uint64_t seed) {
    ExperimentSpec spec;
    spec.maps = maps_from_json(cfg);
    spec.target = Target::parse(cfg.at("zeta").get<std::string>());
    spec.observable = observable_from_json(cfg, spec.target.value());
    spec.tau = cfg.at("tau").get<double>();
    spec.n = cfg.at("n").get<long long>();
    spec.replicates = cfg.at("replicates").get<int>();
    spec.seed = seed;
    spec.gamma_burn = cfg.at("gamma_burn").get<double>();
    spec.k_n = cfg.at("k_n").get<int>();
    spec.t_star = cfg.at("t_star").get<long long>();
    spec.q_horizon = cfg.at("q_horizon").get<long long>();
    if (!cfg.at("q_override").is_null()) spec.q_override = cfg.at("q_override").get<int>();
    spec.sample_from_invariant = cfg.at("sample_from_invariant").get<bool>();
    spec.per_index_thresholds = cfg.at("per_index_thresholds").get<bool>();
    spec.threads = opts.threads;
    if (opts.precision == "exact")
        spec.precision = PrecisionMode::Exact;
    else if (opts.precision == "float")
        spec.precision = PrecisionMode::Float64;
    else if (opts.precision == "auto")
        spec.precision = PrecisionMode::Auto;
    else
        throw std::invalid_argument("precision must be auto|exact|float");
    return spec;
}

json ci_json(const BinomialCI& ci) { return json::array({ci.lo, ci.hi}); }

json nan_safe(double v) {
    if (std::isnan(v)) return nullptr;
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

json report_from_ei(const EIReport& rep) {
    json d_stat = json::array();
    for (const auto& pt : rep.d_stat)
        d_stat.push_back({{"t", pt.t},
                          {"gamma_hat", nan_safe(pt.gamma_hat)},
                          {"std_error", nan_safe(pt.std_error)},
                          {"i_count", pt.i_count}});
    return json{
        {"n", rep.n},
        {"replicates", rep.replicates},
        {"tau", rep.tau},
        {"map", rep.map_desc},
        {"zeta", rep.zeta_desc},
        {"precision", rep.precision},
        {"q", rep.q},
        {"theta_case", rep.theta_case},
        {"period", rep.period},
        {"certified_horizon", rep.certified_horizon},
        {"u_n", nan_safe(rep.u_n)},
        {"delta_n", rep.delta_n},
        {"per_index_thresholds", rep.per_index_thresholds},
        {"delta_range", json::array({rep.delta_min, rep.delta_max})},
        {"theta_theoretical", nan_safe(rep.theta_theoretical)},
        {"p_hat", rep.pn.p_hat},
        {"p_ci", ci_json(rep.pn.ci)},
        {"p_no_escape", rep.no_escape.p_hat},
        {"theta_hat", nan_safe(rep.theta_log.theta)},
        {"theta_hat_log", nan_safe(rep.theta_log.theta)},
        {"theta_log_ci", json::array({nan_safe(rep.theta_log.lo), nan_safe(rep.theta_log.hi)})},
        {"theta_hat_ratio", nan_safe(rep.theta_ratio.theta)},
        {"theta_ratio_ci",
         json::array({nan_safe(rep.theta_ratio.lo), nan_safe(rep.theta_ratio.hi)})},
        {"exceedances_post_burn", rep.exceedances_post_burn},
        {"escapes_post_burn", rep.escapes_post_burn},
        {"mean_exceedances", rep.mean_exceedances},
        {"s_prime", rep.s_prime},
        {"s_prime_reference", rep.s_prime_reference},
        {"k_n", rep.k_n},
        {"t_star", rep.t_star},
        {"burn_in", rep.burn_in},
        {"d_stat", d_stat},
        {"min_escape_gap", rep.min_gap},
        {"downgrades", rep.downgrades},
        {"theta_within_sanity", rep.theta_within_sanity},
    };
}

void dump_replicates_csv(const std::filesystem::path& path,
                         const std::vector<ReplicateRecord>& records) {
    std::ofstream out(path);
    out << "replicate,m_n,min_dist,n_exceedances,n_escapes,no_escape,first_exceedance\n";
    for (std::size_t r = 0; r < records.size(); ++r) {
        const auto& rec = records[r];
        out << r << ',';
        if (std::isinf(rec.m_n))
            out << "inf";
        else
            out << rec.m_n;
        out << ',' << rec.min_dist << ',' << rec.exceedance_times.size() << ','
            << rec.escape_times.size() << ',' << (rec.no_escape_flag ? 1 : 0) << ','
            << (rec.exceedance_times.empty() ? -1 : rec.exceedance_times.front()) << '\n';
    }
}

json run_ei(const json& cfg, const RunOptions& opts, std::uint64_t seed,
            const std::filesystem::path& out_dir) {
    ExperimentSpec spec = experiment_from_json(cfg, opts, seed);
    SimulationResult sim = simulate_max_process(spec);
    std::vector<int> t_values = cfg.at("d_t_values").get<std::vector<int>>();
    EIReport rep = build_ei_report(spec, sim, t_values);
    if (opts.dump) dump_replicates_csv(out_dir / "replicates.csv", sim.records);
    return report_from_ei(rep);
}

json run_subshift(const json& cfg, std::uint64_t seed) {
    SubshiftSpec spec;
    spec.alphabet = cfg.at("alphabet").get<int>();
    for (const auto& mat : cfg.at("matrices")) spec.matrices.push_back(mat.get<std::vector<double>>());
    spec.driver_weights = cfg.at("weights").get<std::vector<double>>();
    spec.validate();
    const std::vector<int> zeta = cfg.at("zeta_word").get<std::vector<int>>();
    const int n = cfg.at("n").get<int>();
    const double tau = cfg.at("tau").get<double>();
    const int replicates = cfg.at("replicates").get<int>();
    const int omegas = cfg.at("omegas").get<int>();

    json runs = json::array();
    double mean_half_width = 0.0;
    std::vector<double> p_hats;
    for (int w = 0; w < omegas; ++w) {
        QuenchedResult res = quenched_evl_experiment(spec, zeta, n, tau, replicates,
                                                     derive_stream(seed, 0xabc000ull + w));
        runs.push_back({{"p_hat", res.p_hat},
                        {"ci", ci_json(res.ci)},
                        {"w_n", res.w_n},
                        {"mu_cylinder", res.mu_cylinder}});
        p_hats.push_back(res.p_hat);
        mean_half_width += 0.5 * (res.ci.hi - res.ci.lo);
    }
    mean_half_width /= omegas;
    double mean = 0.0;
    for (double p : p_hats) mean += p;
    mean /= static_cast<double>(p_hats.size());
    double sd = 0.0;
    for (double p : p_hats) sd += (p - mean) * (p - mean);
    sd = p_hats.size() > 1 ? std::sqrt(sd / static_cast<double>(p_hats.size() - 1)) : 0.0;

    const double theta = subshift_theta(spec, zeta);
    return json{
        {"alphabet", spec.alphabet},
        {"m_floor", spec.m_floor()},
        {"theta", theta},
        {"target", std::exp(-theta * tau)},
        {"tau", tau},
        {"n", n},
        {"replicates", replicates},
        {"omega_runs", runs},
        {"p_hat_mean", mean},
        {"p_hat_sample_sd", sd},
        {"mean_ci_half_width", mean_half_width},
    };
}

json run_blocks(const json& cfg, std::uint64_t seed) {
    BlockAuditViolations v =
        audit_blocks_random(cfg.at("tail_arrays").get<int>(), seed);
    SetAlgebraAudit sa = audit_set_algebra_random(cfg.at("enum_spaces").get<int>(),
                                                  cfg.at("enum_max_n").get<int>(),
                                                  cfg.at("enum_max_q").get<int>(), seed);
    long long ln_violations = audit_constant_tail_block_sizes();
    // one concrete partition dump for inspection
    std::vector<double> tails(1000, 0.001);
    BlockPartition sample = build_blocks(tails, 10, 5);
    return json{
        {"tail_arrays", v.arrays},
        {"builder_errors", v.builder_errors},
        {"violations",
         {{"block_mass_upper", v.block_mass_upper},
          {"block_mass_lower", v.block_mass_lower},
          {"gap_order", v.gap_order},
          {"gap_mass", v.gap_mass},
          {"leftover", v.leftover},
          {"constant_tail_L_n", ln_violations}}},
        {"violations_total", v.total() + ln_violations},
        {"enum_spaces", sa.spaces},
        {"enum_checks", sa.checks},
        {"enum_violations", sa.violations},
        {"sample_partition", json::parse(sample.to_json())},
    };
}

json run_operator(const json& cfg, const RunOptions& opts, const std::filesystem::path& out_dir) {
    const int n_bins = cfg.at("n_bins").get<int>();
    const double golden = (1.0 + std::sqrt(5.0)) / 2.0;

    // invariant density two ways
    ParryDensity parry = ParryDensity::build(BetaMap(golden), 60);
    UlamOperator op = ulam_discretize(golden, n_bins);
    StationaryResult stat = ulam_stationary(op);
    const std::vector<double> exact_grid = parry_on_grid(parry, n_bins);
    const double l1 = grid_l1_distance(stat.density, exact_grid);

    // correlation decay of the doubling map on a non-dyadic interval
    MapSequenceSpec doubling = MapSequenceSpec::constant_rational(2, 1);
    DecayCurve curve = correlation_decay_estimate(doubling, 0.0, 1.0 / 3.0, 0.0, 1.0 / 3.0, 0,
                                                  cfg.at("t_max").get<int>(), n_bins);
    DecayCurve quarter = correlation_decay_estimate(doubling, 0.0, 0.25, 0.0, 0.25, 0, 1, n_bins);

    // memory loss along a fast schedule into the golden slope
    MapSequenceSpec fast = MapSequenceSpec::fast(golden, 0.5, 2.0);
    const int short_n = cfg.at("memory_short").get<int>();
    const int long_n = cfg.at("memory_long").get<int>();
    const double err_short = loss_of_memory_error(fast, short_n, n_bins);
    const double err_long = loss_of_memory_error(fast, long_n, n_bins);

    if (opts.dump) {
        std::ofstream density(out_dir / "density.csv");
        density << "bin_center,ulam,exact\n";
        for (int j = 0; j < n_bins; ++j)
            density << (j + 0.5) / n_bins << ',' << stat.density[j] << ',' << exact_grid[j] << '\n';
        std::ofstream decay(out_dir / "decay.csv");
        decay << "t,dc\n";
        for (std::size_t i = 0; i < curve.t.size(); ++i)
            decay << curve.t[i] << ',' << curve.dc[i] << '\n';
        std::ofstream fitjson(out_dir / "decay_fit.json");
        fitjson << json{{"lambda_hat", nan_safe(curve.fit.lambda_hat)},
                        {"b_hat", nan_safe(curve.fit.b_hat)},
                        {"noise_floor", curve.noise_floor},
                        {"below_resolution", curve.fit.below_resolution},
                        {"max_residual_decades", curve.fit.max_residual_decades}}
                       .dump(2)
                << '\n';
    }

    json dc_points = json::array();
    for (std::size_t i = 0; i < curve.t.size(); ++i)
        dc_points.push_back({{"t", curve.t[i]}, {"dc", curve.dc[i]}});
    return json{
        {"n_bins", n_bins},
        {"density_l1_error", l1},
        {"plateau_low", parry.eval(0.3)},
        {"plateau_high", parry.eval(0.8)},
        {"ulam_iterations", stat.iterations},
        {"decay", dc_points},
        {"lambda_hat", nan_safe(curve.fit.lambda_hat)},
        {"noise_floor", curve.noise_floor},
        {"dc1_quarter_interval", quarter.dc.at(0)},
        {"memory_error_short", err_short},
        {"memory_error_long", err_long},
    };
}

}  // namespace

const std::vector<ScenarioInfo>& scenario_table() {
    static const std::vector<ScenarioInfo> table = {
        {"periodic",
         "constant integer slope, period-2 rational center: clustered exceedances, EI 1-beta^-p"},
        {"aperiodic", "constant integer slope, sqrt-irrational center: no clustering, EI 1"},
        {"boundary-nonperiodic",
         "constant slope 5/2, center at the cut point 0~1 with non-recurrent orbit of 1"},
        {"boundary-periodic",
         "golden-mean slope, center at 0~1; orbit of 1 returns to the cut point"},
        {"counterexample-slow",
         "slowly decaying slope schedule at a fixed point: clustering destroyed, EI 1"},
        {"counterexample-fast",
         "fast slope schedule at the same fixed point: EI of the limit map, 3/5"},
        {"subshift-degenerate", "single-matrix subshift, periodic symbol target: EI 1 - p00"},
        {"subshift-random", "two-matrix i.i.d. driver, 10 quenched realizations: concentration"},
        {"blocks-audit", "randomized audit of the block construction and set-algebra bounds"},
        {"operator-audit", "density, correlation-decay and memory-loss oracles on the Ulam grid"},
    };
    return table;
}

std::string list_scenarios_text(const std::string& filter) {
    std::string out;
    for (const auto& info : scenario_table()) {
        if (!filter.empty() && info.name.find(filter) == std::string::npos) continue;
        out += info.name;
        out.append(info.name.size() < 22 ? 22 - info.name.size() : 2, ' ');
        out += info.summary;
        out += '\n';
    }
    return out;
}

std::string list_scenarios_json(const std::string& filter) {
    json arr = json::array();
    for (const auto& info : scenario_table()) {
        if (!filter.empty() && info.name.find(filter) == std::string::npos) continue;
        arr.push_back({{"name", info.name}, {"summary", info.summary}});
    }
    return arr.dump(2);
}

int run_scenario(const RunOptions& opts, std::ostream& log) {
    json cfg;
    std::uint64_t seed = opts.seed.value_or(20201209ull);
    try {
        bool known = false;
        for (const auto& info : scenario_table()) known = known || info.name == opts.scenario;
        if (!known) {
            log << "unknown scenario '" << opts.scenario << "'; valid names:\n"
                << list_scenarios_text();
            return 2;
        }
        cfg = default_config(opts.scenario);
        if (!opts.config_path.empty()) {
            std::ifstream in(opts.config_path);
            if (!in) {
                log << "cannot open config file " << opts.config_path << "\n";
                return 2;
            }
            json overrides = json::parse(in);
            cfg.update(overrides);
        }
        if (cfg.contains("seed") && !cfg.at("seed").is_null() && !opts.seed)
            seed = cfg.at("seed").get<std::uint64_t>();
    } catch (const std::exception& e) {
        log << "configuration error: " << e.what() << "\n";
        return 2;
    }

    try {
        const std::filesystem::path out_dir(opts.out_dir);
        std::filesystem::create_directories(out_dir);
        const std::string kind = cfg.at("kind").get<std::string>();
        json results;
        if (kind == "ei") {
            results = run_ei(cfg, opts, seed, out_dir);
        } else if (kind == "subshift") {
            results = run_subshift(cfg, seed);
        } else if (kind == "blocks") {
            results = run_blocks(cfg, seed);
        } else if (kind == "operator") {
            results = run_operator(cfg, opts, out_dir);
        } else {
            log << "config kind must be ei|subshift|blocks|operator\n";
            return 2;
        }
        json report = {
            {"schema_version", kSchemaVersion},
            {"scenario", opts.scenario},
            {"seed", seed},
            {"config", cfg},
            {"results", results},
        };
        std::ofstream out(out_dir / "report.json");
        out << report.dump(2) << '\n';
        log << "report written to " << (out_dir / "report.json").string() << "\n";
        return 0;
    } catch (const std::invalid_argument& e) {
        log << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        log << "runtime failure: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace evlab
