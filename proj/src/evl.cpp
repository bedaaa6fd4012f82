#include "evlab/evl.hpp"

#include "evlab/rng.hpp"

#include <boost/multiprecision/integer.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <thread>

namespace evlab {

std::string precision_mode_name(PrecisionMode mode) {
    switch (mode) {
        case PrecisionMode::Auto:
            return "auto";
        case PrecisionMode::Exact:
            return "exact";
        case PrecisionMode::Float64:
            return "float";
    }
    return "?";
}

void ExperimentSpec::validate() const {
    maps.validate();
    if (tau < 0.0) throw std::invalid_argument("ExperimentSpec: tau must be >= 0");
    if (n < 1) throw std::invalid_argument("ExperimentSpec: n must be >= 1");
    if (replicates < 1) throw std::invalid_argument("ExperimentSpec: replicates must be >= 1");
    if (!(gamma_burn > 0.0 && gamma_burn < 1.0))
        throw std::invalid_argument("ExperimentSpec: gamma_burn must lie in (0,1)");
    if (maps.kind == ScheduleKind::Fast && maps.amplitude > 0.0 &&
        !(gamma_burn * maps.exponent > 1.0))
        throw std::invalid_argument("ExperimentSpec: fast schedule needs gamma * xi > 1");
    if (q_override && *q_override < 0)
        throw std::invalid_argument("ExperimentSpec: q override must be >= 0");
    if (k_n < 0 || t_star < 0 || threads < 0)
        throw std::invalid_argument("ExperimentSpec: negative k_n/t_star/threads");
    if (q_horizon < 1) throw std::invalid_argument("ExperimentSpec: q_horizon must be >= 1");
}

bool escape_indicator(std::span<const double> window, double u) {
    if (window.empty()) throw std::invalid_argument("escape_indicator: empty window");
    if (!(window[0] > u)) return false;
    for (std::size_t j = 1; j < window.size(); ++j)
        if (window[j] > u) return false;
    return true;
}

namespace {

// ---- orbit engines -------------------------------------------------------

// integer slope, exact state k/p under a 61-bit prime p
struct ModularEngine {
    std::uint64_t p = 0;
    std::uint64_t b = 2;
    double inv_p = 0.0;
    std::uint64_t k = 0;

    void seed(Xoshiro256pp& rng) { k = rng.below(p); }
    void advance(long long) { k = mulmod_u64(k, b, p); }
    double x() const { return static_cast<double>(k) * inv_p; }
    bool downgraded() const { return false; }
};

struct FloatEngine {
    const double* betas = nullptr;            // betas[i-1] is the slope of T_i
    const ParryDensity* invariant = nullptr;  // sample x0 from mu when set
    double xv = 0.0;

    void seed(Xoshiro256pp& rng) {
        double u = rng.uniform01();
        if (!invariant) {
            xv = u;
            return;
        }
        double lo = 0.0, hi = 1.0;
        for (int it = 0; it < 60; ++it) {
            double mid = 0.5 * (lo + hi);
            (invariant->cumulative(mid) < u ? lo : hi) = mid;
        }
        xv = 0.5 * (lo + hi);
    }
    void advance(long long i) { xv = mod1(betas[i - 1] * xv); }
    double x() const { return xv; }
    bool downgraded() const { return false; }
};

// constant rational slope bn/bd, exact state over denominators p * bd^m with
// a bit-size cap; past the cap the orbit continues in floats
struct RationalEngine {
    BigInt bn, bd;
    long long bd_small = 1;
    double beta_double = 2.0;
    std::uint64_t p = 0;
    unsigned cap_bits = BetaMap::kMaxDenominatorBits;

    BigInt num, den;
    bool down = false;
    double xv = 0.0;

    void seed(Xoshiro256pp& rng) {
        num = rng.below(p);
        den = p;
        down = false;
    }
    void advance(long long) {
        if (down) {
            xv = mod1(beta_double * xv);
            return;
        }
        num *= bn;
        den *= bd;
        num %= den;
        while (bd_small > 1 && num % bd_small == 0 && den % bd_small == 0) {
            num /= bd_small;
            den /= bd_small;
        }
        if (boost::multiprecision::msb(den) + 1 > cap_bits) {
            xv = ratio_double();
            down = true;
        }
    }
    double x() const { return down ? xv : ratio_double(); }
    double ratio_double() const { return static_cast<double>(Quad(num) / Quad(den)); }
    bool downgraded() const { return down; }
};

struct SimContext {
    const ExperimentSpec* spec = nullptr;
    double delta = 0.0;
    const double* deltas = nullptr;  // per-index radii, length horizon, optional
    double zeta = 0.0;
    long long n = 0;
    long long horizon = 0;
    int q = 0;
};

template <class Engine>
void run_replicates(const SimContext& ctx, const Engine& proto, long long r0, long long r1,
                    std::vector<ReplicateRecord>* out) {
    std::vector<std::int32_t> exceed_all;
    for (long long r = r0; r < r1; ++r) {
        Xoshiro256pp rng(
            derive_stream(ctx.spec->seed, 0x7265706cull + static_cast<std::uint64_t>(r)));
        Engine eng = proto;
        eng.seed(rng);
        exceed_all.clear();
        double min_dist = 1.0;
        for (long long i = 0; i < ctx.horizon; ++i) {
            if (i > 0) eng.advance(i);
            const double d = circle_distance(eng.x(), ctx.zeta);
            if (i < ctx.n && d < min_dist) min_dist = d;
            const double level = ctx.deltas ? ctx.deltas[i] : ctx.delta;
            if (d < level) exceed_all.push_back(static_cast<std::int32_t>(i));
        }
        ReplicateRecord rec;
        rec.min_dist = min_dist;
        rec.downgraded = eng.downgraded();
        for (std::size_t idx = 0; idx < exceed_all.size(); ++idx) {
            const std::int32_t e = exceed_all[idx];
            if (e >= ctx.n) break;
            rec.exceedance_times.push_back(e);
            // the list is sorted, so the immediately following exceedance
            // decides whether the cluster continues within q steps
            const bool followed = idx + 1 < exceed_all.size() &&
                                  exceed_all[idx + 1] <= e + static_cast<std::int32_t>(ctx.q);
            if (!followed) rec.escape_times.push_back(e);
        }
        rec.no_escape_flag = rec.escape_times.empty();
        (*out)[static_cast<std::size_t>(r)] = std::move(rec);
    }
}

template <class Engine>
void dispatch(const SimContext& ctx, const Engine& proto, std::vector<ReplicateRecord>* out) {
    const long long R = ctx.spec->replicates;
    int threads = ctx.spec->threads;
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    threads = static_cast<int>(std::max<long long>(1, std::min<long long>(threads, R)));
    if (threads == 1) {
        run_replicates(ctx, proto, 0, R, out);
        return;
    }
    std::vector<std::thread> pool;
    const long long chunk = (R + threads - 1) / threads;
    for (int w = 0; w < threads; ++w) {
        const long long r0 = w * chunk;
        const long long r1 = std::min(R, r0 + chunk);
        if (r0 >= r1) break;
        pool.emplace_back([&ctx, &proto, r0, r1, out] { run_replicates(ctx, proto, r0, r1, out); });
    }
    for (auto& th : pool) th.join();
}

}  // namespace

SimulationResult simulate_max_process(const ExperimentSpec& spec) {
    spec.validate();
    const BetaMap limit_map = spec.maps.limit_beta_exact ? BetaMap(*spec.maps.limit_beta_exact)
                                                         : BetaMap(spec.maps.limit_beta);
    const ParryDensity parry = ParryDensity::build(limit_map, 120);

    Observable obs = spec.observable;
    obs.zeta = spec.target.value();

    SimulationResult result;
    result.n = spec.n;
    result.tau = spec.tau;
    result.threshold = threshold_schedule(parry, obs, spec.tau, spec.n);

    try {
        result.detection = detect_q(limit_map, spec.target, spec.q_horizon);
        result.theta_theoretical = theoretical_theta(limit_map, result.detection, parry);
    } catch (const UnsupportedTargetError&) {
        if (!spec.q_override) throw;
        result.detection_supported = false;
    }
    result.q = spec.q_override ? *spec.q_override : result.detection.q;

    result.k_n = spec.k_n > 0 ? spec.k_n
                              : static_cast<int>(std::ceil(std::cbrt(static_cast<double>(spec.n))));
    result.t_star = spec.t_star > 0 ? spec.t_star
                                    : static_cast<long long>(std::ceil(
                                          std::pow(std::log(static_cast<double>(spec.n)), 2)));
    result.burn_in =
        std::min<long long>(spec.n - 1, static_cast<long long>(std::ceil(
                                            std::pow(static_cast<double>(spec.n), spec.gamma_burn))));

    SimContext ctx;
    ctx.spec = &spec;
    ctx.delta = result.threshold.delta_n;
    ctx.zeta = obs.zeta;
    ctx.n = spec.n;
    ctx.q = result.q;
    ctx.horizon = spec.n + result.q;

    // exact orbits whenever the whole run is a single rational map
    const bool want_exact = spec.precision != PrecisionMode::Float64 &&
                            spec.maps.constant_exact() && !spec.sample_from_invariant;
    if (spec.precision == PrecisionMode::Exact && !spec.maps.constant_exact())
        throw std::invalid_argument(
            "simulate_max_process: exact precision requires a constant rational slope");
    if (spec.precision == PrecisionMode::Exact && spec.sample_from_invariant)
        throw std::invalid_argument(
            "simulate_max_process: exact precision cannot sample from the invariant measure");

    result.records.assign(static_cast<std::size_t>(spec.replicates), ReplicateRecord{});

    std::vector<double> betas;
    if (want_exact && spec.maps.limit_beta_exact->denominator() == 1) {
        ModularEngine eng;
        eng.p = random_prime_61(spec.seed);
        eng.b = spec.maps.limit_beta_exact->numerator().convert_to<std::uint64_t>();
        eng.inv_p = 1.0 / static_cast<double>(eng.p);
        result.precision_used = "exact-modular";
        dispatch(ctx, eng, &result.records);
    } else if (want_exact) {
        RationalEngine eng;
        eng.bn = spec.maps.limit_beta_exact->numerator();
        eng.bd = spec.maps.limit_beta_exact->denominator();
        eng.bd_small = eng.bd.convert_to<long long>();
        eng.beta_double = spec.maps.limit_beta;
        eng.p = random_prime_61(spec.seed);
        result.precision_used = "exact-rational";
        dispatch(ctx, eng, &result.records);
    } else {
        betas.resize(static_cast<std::size_t>(ctx.horizon));
        for (long long k = 1; k <= ctx.horizon; ++k)
            betas[static_cast<std::size_t>(k - 1)] = spec.maps.beta_at(k);
        if (spec.per_index_thresholds && spec.tau > 0.0) {
            // u_{n,i} from the invariant measure of T_i; slot 0 (no map applied
            // yet, Lebesgue marginal) keeps the plain ball of mass tau/n
            const double target = spec.tau / static_cast<double>(spec.n);
            auto& radii = result.threshold.per_index_delta;
            radii.resize(static_cast<std::size_t>(ctx.horizon));
            radii[0] = std::min(0.5, 0.5 * target);
            for (long long i = 1; i < ctx.horizon; ++i) {
                ParryDensity local =
                    ParryDensity::build(BetaMap(betas[static_cast<std::size_t>(i - 1)]), 60);
                radii[static_cast<std::size_t>(i)] = solve_ball_radius(local, obs.zeta, target);
            }
            ctx.deltas = radii.data();
        }
        FloatEngine eng;
        eng.betas = betas.data();
        if (spec.sample_from_invariant) eng.invariant = &parry;
        result.precision_used = "float64";
        dispatch(ctx, eng, &result.records);
    }

    for (auto& rec : result.records) {
        rec.m_n = obs.g(rec.min_dist);
        if (rec.downgraded) ++result.downgrade_count;
    }
    return result;
}

BinomialCI wilson_ci(long long successes, long long total, double z) {
    if (total <= 0) return {0.0, 1.0};
    const double nD = static_cast<double>(total);
    const double p = static_cast<double>(successes) / nD;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nD;
    const double center = (p + z2 / (2.0 * nD)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / nD + z2 / (4.0 * nD * nD)) / denom;
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

namespace {

PnEstimate fraction(const std::vector<ReplicateRecord>& records,
                    const std::function<bool(const ReplicateRecord&)>& pred) {
    if (records.empty()) throw std::invalid_argument("empty record set");
    PnEstimate est;
    est.total = static_cast<long long>(records.size());
    for (const auto& r : records)
        if (pred(r)) ++est.count;
    est.p_hat = static_cast<double>(est.count) / static_cast<double>(est.total);
    est.ci = wilson_ci(est.count, est.total);
    return est;
}

}  // namespace

PnEstimate empirical_Pn(const std::vector<ReplicateRecord>& records) {
    return fraction(records, [](const ReplicateRecord& r) { return r.exceedance_times.empty(); });
}

PnEstimate empirical_Pn_from(const std::vector<ReplicateRecord>& records, long long from_index) {
    return fraction(records, [from_index](const ReplicateRecord& r) {
        return std::none_of(r.exceedance_times.begin(), r.exceedance_times.end(),
                            [from_index](std::int32_t e) { return e >= from_index; });
    });
}

PnEstimate empirical_no_escape(const std::vector<ReplicateRecord>& records) {
    return fraction(records, [](const ReplicateRecord& r) { return r.no_escape_flag; });
}

ThetaEstimate theta_hat_log(const PnEstimate& pn, double tau) {
    if (tau <= 0.0) throw std::domain_error("theta_hat_log: needs tau > 0");
    if (pn.p_hat <= 0.0) throw std::domain_error("theta_hat_log: P_n estimate is zero");
    ThetaEstimate est;
    est.theta = -std::log(pn.p_hat) / tau;
    est.lo = pn.ci.hi < 1.0 ? -std::log(pn.ci.hi) / tau : 0.0;
    est.hi = pn.ci.lo > 0.0 ? -std::log(pn.ci.lo) / tau : std::numeric_limits<double>::infinity();
    return est;
}

long long total_exceedances(const std::vector<ReplicateRecord>& records, long long from_index) {
    long long c = 0;
    for (const auto& r : records)
        for (std::int32_t e : r.exceedance_times)
            if (e >= from_index) ++c;
    return c;
}

long long total_escapes(const std::vector<ReplicateRecord>& records, long long from_index) {
    long long c = 0;
    for (const auto& r : records)
        for (std::int32_t e : r.escape_times)
            if (e >= from_index) ++c;
    return c;
}

ThetaEstimate theta_hat_ratio(const std::vector<ReplicateRecord>& records, long long burn_in) {
    const long long exceed = total_exceedances(records, burn_in);
    const long long escape = total_escapes(records, burn_in);
    if (exceed == 0) throw std::domain_error("theta_hat_ratio: no exceedances past the burn-in");
    ThetaEstimate est;
    est.theta = static_cast<double>(escape) / static_cast<double>(exceed);
    BinomialCI ci = wilson_ci(escape, exceed);
    est.lo = ci.lo;
    est.hi = ci.hi;
    return est;
}

DPrimeStat d_prime_statistic(const std::vector<ReplicateRecord>& records, long long n,
                             long long burn_in, int k_n, long long t_star, double tau) {
    if (records.empty()) throw std::invalid_argument("d_prime_statistic: empty record set");
    if (burn_in >= n) throw std::invalid_argument("d_prime_statistic: burn_in >= n");
    const std::vector<double> tails(static_cast<std::size_t>(n - burn_in),
                                    tau / static_cast<double>(n));
    DPrimeStat stat;
    stat.blocks = build_blocks(tails, k_n, t_star);
    stat.reference = 1.0 / static_cast<double>(k_n);

    long long pair_count = 0;
    std::vector<int> per_block(stat.blocks.block_len.size());
    for (const auto& rec : records) {
        std::fill(per_block.begin(), per_block.end(), 0);
        bool any = false;
        for (std::int32_t e : rec.escape_times) {
            if (e < burn_in) continue;
            int b = stat.blocks.block_of(e - burn_in);
            if (b >= 0) {
                ++per_block[static_cast<std::size_t>(b)];
                any = true;
            }
        }
        if (!any) continue;
        for (int c : per_block) pair_count += static_cast<long long>(c) * (c - 1) / 2;
    }
    stat.s_prime = static_cast<double>(pair_count) / static_cast<double>(records.size());
    return stat;
}

std::vector<DStatPoint> d_statistic(const std::vector<ReplicateRecord>& records, long long n,
                                    long long burn_in, int k_n, std::span<const int> t_values) {
    if (records.empty()) throw std::invalid_argument("d_statistic: empty record set");
    const long long ell = n / std::max(1, k_n);
    const long long R = static_cast<long long>(records.size());
    constexpr int kBatches = 10;

    std::vector<DStatPoint> out;
    for (int t : t_values) {
        DStatPoint pt;
        pt.t = t;
        const long long i_lo = burn_in;
        const long long i_hi = n - t - ell;  // last i whose window stays inside [0, n)
        if (i_hi < i_lo) {
            out.push_back(pt);
            continue;
        }
        const long long m = i_hi - i_lo + 1;
        pt.i_count = m;

        std::vector<double> batch_cov;
        const long long per_batch = (R + kBatches - 1) / kBatches;
        std::vector<long long> cntA(static_cast<std::size_t>(m));
        std::vector<long long> cntAW(static_cast<std::size_t>(m));
        std::vector<long long> wdiff(static_cast<std::size_t>(m) + 1);
        for (long long b0 = 0; b0 < R; b0 += per_batch) {
            const long long b1 = std::min(R, b0 + per_batch);
            const double Rb = static_cast<double>(b1 - b0);
            std::fill(cntA.begin(), cntA.end(), 0);
            std::fill(cntAW.begin(), cntAW.end(), 0);
            std::fill(wdiff.begin(), wdiff.end(), 0);
            for (long long r = b0; r < b1; ++r) {
                const auto& esc = records[static_cast<std::size_t>(r)].escape_times;
                for (std::int32_t e : esc) {
                    if (e >= i_lo && e <= i_hi) {
                        ++cntA[static_cast<std::size_t>(e - i_lo)];
                        auto it = std::lower_bound(esc.begin(), esc.end(),
                                                   static_cast<std::int32_t>(e + t));
                        if (it == esc.end() || *it >= e + t + ell)
                            ++cntAW[static_cast<std::size_t>(e - i_lo)];
                    }
                }
                // indices i whose window [i+t, i+t+ell) contains an escape,
                // as merged intervals so each replicate counts once
                long long cur_lo = 1, cur_hi = 0;
                for (std::int32_t e : esc) {
                    long long lo = std::max<long long>(i_lo, e - t - ell + 1);
                    long long hi = std::min<long long>(i_hi, e - t);
                    if (lo > hi) continue;
                    if (cur_lo > cur_hi) {
                        cur_lo = lo;
                        cur_hi = hi;
                    } else if (lo <= cur_hi + 1) {
                        cur_hi = std::max(cur_hi, hi);
                    } else {
                        ++wdiff[static_cast<std::size_t>(cur_lo - i_lo)];
                        --wdiff[static_cast<std::size_t>(cur_hi - i_lo) + 1];
                        cur_lo = lo;
                        cur_hi = hi;
                    }
                }
                if (cur_lo <= cur_hi) {
                    ++wdiff[static_cast<std::size_t>(cur_lo - i_lo)];
                    --wdiff[static_cast<std::size_t>(cur_hi - i_lo) + 1];
                }
            }
            long double acc = 0.0L;
            long long bad = 0;
            for (long long i = 0; i < m; ++i) {
                bad += wdiff[static_cast<std::size_t>(i)];
                const double pA = static_cast<double>(cntA[static_cast<std::size_t>(i)]) / Rb;
                const double pAW = static_cast<double>(cntAW[static_cast<std::size_t>(i)]) / Rb;
                const double pW = 1.0 - static_cast<double>(bad) / Rb;
                acc += pAW - pA * pW;
            }
            batch_cov.push_back(static_cast<double>(acc / m));
        }
        double mean = 0.0;
        for (double c : batch_cov) mean += c;
        mean /= static_cast<double>(batch_cov.size());
        double var = 0.0;
        for (double c : batch_cov) var += (c - mean) * (c - mean);
        if (batch_cov.size() > 1) var /= static_cast<double>(batch_cov.size() - 1);
        pt.gamma_hat = std::fabs(mean);
        pt.std_error = std::sqrt(var / static_cast<double>(batch_cov.size()));
        out.push_back(pt);
    }
    return out;
}

long long min_escape_gap(const std::vector<ReplicateRecord>& records) {
    long long best = -1;
    for (const auto& rec : records) {
        for (std::size_t i = 1; i < rec.escape_times.size(); ++i) {
            const long long gap = rec.escape_times[i] - rec.escape_times[i - 1];
            if (best < 0 || gap < best) best = gap;
        }
    }
    return best;
}

EIReport build_ei_report(const ExperimentSpec& spec, const SimulationResult& sim,
                         std::span<const int> d_t_values) {
    EIReport rep;
    rep.n = sim.n;
    rep.replicates = static_cast<int>(sim.records.size());
    rep.tau = sim.tau;
    rep.seed = spec.seed;
    rep.map_desc = spec.maps.describe();
    rep.zeta_desc = spec.target.describe();
    rep.precision = sim.precision_used;
    rep.q = sim.q;
    rep.theta_case = sim.detection_supported ? theta_case_name(sim.detection.kind) : "unsupported";
    rep.period = sim.detection.period;
    rep.certified_horizon = sim.detection.certified_horizon;
    rep.u_n = sim.threshold.u_n;
    rep.delta_n = sim.threshold.delta_n;
    rep.per_index_thresholds = !sim.threshold.per_index_delta.empty();
    if (rep.per_index_thresholds) {
        auto [lo, hi] = std::minmax_element(sim.threshold.per_index_delta.begin(),
                                            sim.threshold.per_index_delta.end());
        rep.delta_min = *lo;
        rep.delta_max = *hi;
    } else {
        rep.delta_min = rep.delta_max = sim.threshold.delta_n;
    }
    rep.theta_theoretical = sim.theta_theoretical;
    rep.pn = empirical_Pn(sim.records);
    rep.no_escape = empirical_no_escape(sim.records);
    rep.k_n = sim.k_n;
    rep.t_star = sim.t_star;
    rep.burn_in = sim.burn_in;
    rep.downgrades = sim.downgrade_count;
    rep.exceedances_post_burn = total_exceedances(sim.records, sim.burn_in);
    rep.escapes_post_burn = total_escapes(sim.records, sim.burn_in);
    rep.mean_exceedances = static_cast<double>(total_exceedances(sim.records, 0)) /
                           static_cast<double>(sim.records.size());
    rep.min_gap = min_escape_gap(sim.records);
    try {
        rep.theta_log = theta_hat_log(rep.pn, sim.tau);
    } catch (const std::domain_error&) {
    }
    try {
        rep.theta_ratio = theta_hat_ratio(sim.records, sim.burn_in);
    } catch (const std::domain_error&) {
    }
    if (sim.tau > 0.0 && sim.burn_in < sim.n) {
        DPrimeStat dp =
            d_prime_statistic(sim.records, sim.n, sim.burn_in, sim.k_n, sim.t_star, sim.tau);
        rep.s_prime = dp.s_prime;
        rep.s_prime_reference = dp.reference;
        rep.d_stat = d_statistic(sim.records, sim.n, sim.burn_in, sim.k_n, d_t_values);
    }
    auto sane = [](double v) { return std::isnan(v) || (v >= 0.0 && v <= 1.2); };
    rep.theta_within_sanity = sane(rep.theta_log.theta) && sane(rep.theta_ratio.theta);
    return rep;
}

}  // namespace evlab
