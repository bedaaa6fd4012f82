#pragma once

#include "evlab/evl.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace evlab {

// Random subshift at finite alphabet: the driver picks a row-stochastic
// transition matrix per time step (a single fixed matrix, or i.i.d. choices
// from a finite list); sample measures are the driven Markov measures with
// the stationary law of the average matrix at time zero.
struct SubshiftSpec {
    int alphabet = 2;
    std::vector<std::vector<double>> matrices;  // each row-major alphabet x alphabet
    std::vector<double> driver_weights;         // selection probabilities, one per matrix

    static SubshiftSpec degenerate(int alphabet, std::vector<double> matrix);

    bool degenerate_driver() const { return matrices.size() == 1; }
    double m_floor() const;  // smallest matrix entry
    std::vector<double> average_matrix() const;
    std::vector<double> initial_law() const;  // stationary vector of the average matrix

    // rows sum to 1 within 1e-12, all entries strictly positive, weights form
    // a distribution; throws std::invalid_argument otherwise
    void validate() const;
};

struct QuenchedRealization {
    const SubshiftSpec* spec = nullptr;
    std::vector<int> omega;  // matrix index per time step
};

QuenchedRealization sample_omega(const SubshiftSpec& spec, long long horizon, std::uint64_t seed);

// mu^omega of the cylinder fixed by `word` starting at time 0:
// pi(w0) * prod A(omega_i)[w_i, w_{i+1}]
double sample_measure_cylinder(const QuenchedRealization& real, std::span<const int> word);

// Same on the fiber theta^k omega, with the time-zero law pushed forward
// through the first k matrices; this makes the quasi-invariance identity
// exact for the Markov construction.
double cylinder_measure_at(const QuenchedRealization& real, long long k, std::span<const int> word);

// marginal measure (driver averaged) of the cylinder of `word`
double marginal_cylinder(const SubshiftSpec& spec, std::span<const int> word);

// Extremal index of a shift-periodic target: closed form
// 1 - prod_{i<p} A[zeta_i, zeta_{i+1 mod p}] for the degenerate driver, and
// the limit of the cylinder mass ratios otherwise. Throws std::runtime_error
// when the ratio fails to settle within 1000 depths.
double subshift_theta(const SubshiftSpec& spec, std::span<const int> zeta_period,
                      double rel_tol = 1e-8);

struct QuenchedResult {
    double p_hat = 1.0;
    BinomialCI ci;
    double theta = 1.0;
    double target = 1.0;  // e^{-theta tau}
    long long w_n = 0;    // time horizon floor(tau / mu(C_n(zeta)))
    double mu_cylinder = 0.0;
    int replicates = 0;
};

// Quenched law experiment: one omega realization, replicates sample x ~
// mu^omega by sequential conditional sampling; an exceedance is the rolling
// n-symbol window matching zeta. tau = 0 returns 1 exactly.
QuenchedResult quenched_evl_experiment(const SubshiftSpec& spec, std::span<const int> zeta_period,
                                       int n, double tau, int replicates, std::uint64_t seed);

}  // namespace evlab
