#pragma once

#include "evlab/blocking.hpp"
#include "evlab/circle_map.hpp"
#include "evlab/observable.hpp"
#include "evlab/parry.hpp"
#include "evlab/q_detect.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace evlab {

enum class PrecisionMode { Auto, Exact, Float64 };

std::string precision_mode_name(PrecisionMode mode);

// One extreme-value experiment: simulate X_i = phi(T_i ... T_1 x0) from
// Lebesgue-random starts, with the threshold u_n solved so that
// n mu(X_0 > u_n) = tau on the unperturbed invariant measure.
struct ExperimentSpec {
    MapSequenceSpec maps;
    Observable observable;  // the center is taken from target
    Target target;
    double tau = 1.0;
    long long n = 1000;
    int replicates = 1000;
    std::uint64_t seed = 1;
    double gamma_burn = 0.6;   // burn-in exponent, indices < n^gamma are discarded by estimators
    int k_n = 0;               // 0 resolves to ceil(n^{1/3})
    long long t_star = 0;      // 0 resolves to ceil(log(n)^2)
    long long q_horizon = 10000;
    std::optional<int> q_override;
    PrecisionMode precision = PrecisionMode::Auto;
    bool sample_from_invariant = false;  // stationary baseline instead of Lebesgue starts
    // Solve u_{n,i} per index against the invariant measure of the i-th map
    // instead of one u_n from the limit map. Only meaningful for genuinely
    // varying schedules; constant runs ignore it.
    bool per_index_thresholds = false;
    int threads = 1;

    void validate() const;
};

struct ReplicateRecord {
    double min_dist = 1.0;  // min over i < n of dist(x_i, zeta)
    double m_n = 0.0;       // running maximum M_n = g(min_dist)
    std::vector<std::int32_t> exceedance_times;
    std::vector<std::int32_t> escape_times;
    bool no_escape_flag = true;
    bool downgraded = false;
};

struct SimulationResult {
    ThresholdSchedule threshold;
    QDetection detection;
    bool detection_supported = true;
    int q = 0;
    double theta_theoretical = std::nan("");
    long long n = 0;
    double tau = 0.0;
    long long burn_in = 0;
    int k_n = 0;
    long long t_star = 0;
    std::string precision_used;
    long long downgrade_count = 0;
    std::vector<ReplicateRecord> records;
};

SimulationResult simulate_max_process(const ExperimentSpec& spec);

// window = (X_i, ..., X_{i+q}); true iff the first value exceeds u and the
// remaining q do not (an escape: the last exceedance of its cluster)
bool escape_indicator(std::span<const double> window, double u);

struct BinomialCI {
    double lo = 0.0, hi = 1.0;
};

// 95% score interval; behaves sensibly at 0 and 1 counts
BinomialCI wilson_ci(long long successes, long long total, double z = 1.959964);

struct PnEstimate {
    double p_hat = 1.0;
    BinomialCI ci;
    long long count = 0;
    long long total = 0;
};

// fraction of replicates with no exceedance before n (that is, M_n <= u_n)
PnEstimate empirical_Pn(const std::vector<ReplicateRecord>& records);
// same but only counting indices >= from_index
PnEstimate empirical_Pn_from(const std::vector<ReplicateRecord>& records, long long from_index);
// fraction with no escape, the annuli-side law
PnEstimate empirical_no_escape(const std::vector<ReplicateRecord>& records);

struct ThetaEstimate {
    double theta = std::nan("");
    double lo = std::nan("");
    double hi = std::nan("");
};

// -log(P_n)/tau; throws std::domain_error when tau == 0 or P_n == 0
ThetaEstimate theta_hat_log(const PnEstimate& pn, double tau);
// pooled escapes / exceedances past the burn-in; throws on zero exceedances
ThetaEstimate theta_hat_ratio(const std::vector<ReplicateRecord>& records, long long burn_in);

long long total_exceedances(const std::vector<ReplicateRecord>& records, long long from_index);
long long total_escapes(const std::vector<ReplicateRecord>& records, long long from_index);

struct DPrimeStat {
    double s_prime = 0.0;     // empirical triple sum of same-block escape pairs
    double reference = 0.0;   // 1/k_n comparison scale
    BlockPartition blocks;    // the partition used (offset by burn_in externally)
};

DPrimeStat d_prime_statistic(const std::vector<ReplicateRecord>& records, long long n,
                             long long burn_in, int k_n, long long t_star, double tau);

struct DStatPoint {
    int t = 0;
    double gamma_hat = std::nan("");
    double std_error = std::nan("");
    long long i_count = 0;
};

// gamma_hat(t): |covariance| of an escape at i against an escape-free window
// of length floor(n/k_n) starting at i+t, averaged over i past the burn-in.
// Standard errors from replicate batching.
std::vector<DStatPoint> d_statistic(const std::vector<ReplicateRecord>& records, long long n,
                                    long long burn_in, int k_n, std::span<const int> t_values);

// minimal observed gap between escapes within a replicate; -1 when no
// replicate has two escapes (data-driven recurrence diagnostic)
long long min_escape_gap(const std::vector<ReplicateRecord>& records);

struct EIReport {
    long long n = 0;
    int replicates = 0;
    double tau = 0.0;
    std::uint64_t seed = 0;
    std::string map_desc, zeta_desc, precision;
    int q = 0;
    std::string theta_case;
    long long period = 0;
    long long certified_horizon = 0;
    double u_n = 0.0, delta_n = 0.0;
    bool per_index_thresholds = false;
    double delta_min = 0.0, delta_max = 0.0;
    double theta_theoretical = std::nan("");
    PnEstimate pn, no_escape;
    ThetaEstimate theta_log, theta_ratio;
    long long exceedances_post_burn = 0, escapes_post_burn = 0;
    double mean_exceedances = 0.0;
    double s_prime = 0.0, s_prime_reference = 0.0;
    int k_n = 0;
    long long t_star = 0, burn_in = 0;
    std::vector<DStatPoint> d_stat;
    long long min_gap = -1;
    long long downgrades = 0;
    bool theta_within_sanity = true;  // estimators inside the [0, 1.2] band
};

EIReport build_ei_report(const ExperimentSpec& spec, const SimulationResult& sim,
                         std::span<const int> d_t_values);

}  // namespace evlab
