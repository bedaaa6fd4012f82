#pragma once

#include "evlab/circle_map.hpp"
#include "evlab/observable.hpp"

#include <vector>

namespace evlab {

// Forward orbit of the point 1 (taken as the limit from the left, so the
// first step is beta - floor(beta)). values[0] = 1 by convention.
struct OrbitOfOne {
    std::vector<double> values;
    bool hits_zero = false;
    long long zero_index = -1;  // minimal p >= 1 with T^p(1) = 0 ~ 1
    bool exact = false;
    long long cycle_start = -1;  // exact mode: first index of a detected cycle
    long long cycle_len = 0;
    long long horizon = 0;  // certified number of steps actually analyzed
};

OrbitOfOne orbit_of_one(const BetaMap& map, long long max_steps);

// The absolutely continuous invariant density of a slope-beta circle map:
// piecewise constant with breakpoints along the orbit of 1. Exact when the
// orbit terminates at 0 or cycles (rational slopes); otherwise truncated at
// n_terms with a geometric tail bound.
class ParryDensity {
  public:
    static ParryDensity build(const BetaMap& map, int n_terms = 60);

    double beta() const { return beta_; }
    double normalizer() const { return M_; }
    const std::vector<double>& breakpoints() const { return y_; }
    const OrbitOfOne& orbit() const { return orbit_; }
    bool exact() const { return exact_; }
    double truncation_error_bound() const { return tail_bound_; }

    double eval(double x) const;        // h(x), 0 <= x < 1
    double density_at_zero() const;     // h(0+)
    double density_at_one() const;      // h(1-)

    double cumulative(double x) const;              // mu([0, x])
    double measure_interval(double a, double b) const;  // mu([a, b]); throws if a > b
    double measure_ball(double zeta, double delta) const;  // two-sided, wraps around 0 ~ 1

  private:
    double beta_ = 2.0;
    double M_ = 1.0;
    bool exact_ = false;
    double tail_bound_ = 0.0;
    OrbitOfOne orbit_;
    // breakpoints sorted ascending with aggregated weights; prefix/suffix sums
    // make eval and cumulative O(log n)
    std::vector<double> y_;
    std::vector<double> w_;
    std::vector<double> suffix_w_;   // suffix_w_[k] = sum_{j >= k} w_j
    std::vector<double> prefix_wy_;  // prefix_wy_[k] = sum_{j < k} w_j * y_j
};

double parry_density_eval(double beta, double x, int n_terms = 60);
double parry_measure_interval(double beta, double a, double b, int n_terms = 60);

// Threshold level u_n with n * mu(B_delta(zeta)) = tau, solved on the
// invariant measure of the unperturbed map. per_index_delta, when filled,
// holds index-dependent radii delta_{n,i} (slot i for time i); the constant
// delta_n applies otherwise.
struct ThresholdSchedule {
    double tau = 0.0;
    long long n = 1;
    double u_n = 0.0;
    double delta_n = 0.0;
    std::vector<double> per_index_delta;
};

ThresholdSchedule threshold_schedule(const ParryDensity& density, const Observable& obs, double tau,
                                     long long n);

// Radius with mu(B_delta(zeta)) = mass on the given density (bisection on the
// piecewise-linear cumulative measure).
double solve_ball_radius(const ParryDensity& density, double zeta, double mass);

}  // namespace evlab
