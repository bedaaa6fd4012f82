#include "evlab/parry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace evlab {

namespace {

// Quad arithmetic keeps ~113 mantissa bits; one multiply by beta loses
// log2(beta) of them per step. Keep at least 40 good bits.
long long precision_horizon(double beta) {
    return std::max<long long>(8, static_cast<long long>(73.0 / std::log2(beta)));
}

constexpr double kSnapZero = 0x1.0p-56;

OrbitOfOne orbit_exact(const Rat& beta, long long max_steps) {
    OrbitOfOne out;
    out.exact = true;
    out.values.push_back(1.0);
    std::map<Rat, long long> seen;
    Rat y = rat_mod1(beta);  // image of 1 from the left; 0 for integer slopes
    long long j = 1;
    for (; j <= max_steps; ++j) {
        if (y.numerator() == 0) {
            out.hits_zero = true;
            out.zero_index = j;
            break;
        }
        auto [it, fresh] = seen.emplace(y, j);
        if (!fresh) {
            out.cycle_start = it->second;
            out.cycle_len = j - it->second;
            break;
        }
        out.values.push_back(rat_to_double(y));
        y = rat_mod1(y * beta);
    }
    out.horizon = j;
    return out;
}

OrbitOfOne orbit_float(double beta, long long max_steps) {
    OrbitOfOne out;
    out.exact = false;
    out.values.push_back(1.0);
    const long long cap = std::min(max_steps, precision_horizon(beta));
    Quad b(beta);
    Quad y = b - Quad(std::floor(beta));
    long long j = 1;
    for (; j <= cap; ++j) {
        double yd = static_cast<double>(y);
        if (yd < kSnapZero || yd > 1.0 - kSnapZero) {
            out.hits_zero = true;
            out.zero_index = j;
            break;
        }
        out.values.push_back(yd);
        y = y * b;
        y -= floor(y);
    }
    out.horizon = std::min(j, cap);
    return out;
}

}  // namespace

OrbitOfOne orbit_of_one(const BetaMap& map, long long max_steps) {
    if (map.beta_exact()) return orbit_exact(*map.beta_exact(), max_steps);
    return orbit_float(map.beta(), max_steps);
}

ParryDensity ParryDensity::build(const BetaMap& map, int n_terms) {
    if (n_terms < 1) throw std::invalid_argument("ParryDensity: n_terms must be >= 1");
    ParryDensity d;
    d.beta_ = map.beta();
    d.orbit_ = orbit_of_one(map, n_terms);
    d.exact_ = d.orbit_.exact && (d.orbit_.hits_zero || d.orbit_.cycle_len > 0);

    const Quad b(map.beta());
    const Quad binv = Quad(1) / b;
    // weight of orbit index j is beta^-j; indices inside a detected cycle pick
    // up the geometric factor 1/(1 - beta^-L) since the orbit repeats forever
    Quad cycle_factor(1);
    if (d.orbit_.cycle_len > 0) {
        Quad bl = pow(binv, static_cast<unsigned>(d.orbit_.cycle_len));
        cycle_factor = Quad(1) / (Quad(1) - bl);
    }
    std::map<double, double> agg;
    Quad wq(1);
    for (std::size_t j = 0; j < d.orbit_.values.size(); ++j) {
        Quad w = wq;
        if (d.orbit_.cycle_start >= 0 && static_cast<long long>(j) >= d.orbit_.cycle_start)
            w *= cycle_factor;
        agg[d.orbit_.values[j]] += static_cast<double>(w);
        wq *= binv;
    }
    d.y_.reserve(agg.size());
    d.w_.reserve(agg.size());
    for (const auto& [y, w] : agg) {
        d.y_.push_back(y);
        d.w_.push_back(w);
    }
    const std::size_t m = d.y_.size();
    d.suffix_w_.assign(m + 1, 0.0);
    d.prefix_wy_.assign(m + 1, 0.0);
    for (std::size_t k = m; k-- > 0;) d.suffix_w_[k] = d.suffix_w_[k + 1] + d.w_[k];
    long double acc = 0.0L;
    for (std::size_t k = 0; k < m; ++k) {
        acc += static_cast<long double>(d.w_[k]) * d.y_[k];
        d.prefix_wy_[k + 1] = static_cast<double>(acc);
    }
    d.M_ = d.prefix_wy_[m];

    if (d.exact_) {
        d.tail_bound_ = 0.0;
    } else {
        double tail = std::pow(map.beta(), -static_cast<double>(d.orbit_.horizon));
        d.tail_bound_ = tail / (1.0 - 1.0 / map.beta()) / d.M_;
    }
    return d;
}

double ParryDensity::eval(double x) const {
    if (!(x >= 0.0 && x < 1.0)) throw std::invalid_argument("ParryDensity::eval: x outside [0,1)");
    // sum of weights of breakpoints strictly above x
    auto it = std::upper_bound(y_.begin(), y_.end(), x);
    return suffix_w_[static_cast<std::size_t>(it - y_.begin())] / M_;
}

double ParryDensity::density_at_zero() const { return eval(0.0); }

double ParryDensity::density_at_one() const { return 1.0 / M_; }

double ParryDensity::cumulative(double x) const {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    auto it = std::upper_bound(y_.begin(), y_.end(), x);
    std::size_t k = static_cast<std::size_t>(it - y_.begin());
    return (prefix_wy_[k] + x * suffix_w_[k]) / M_;
}

double ParryDensity::measure_interval(double a, double b) const {
    if (a > b) throw std::invalid_argument("measure_interval: a > b");
    return cumulative(b) - cumulative(a);
}

double ParryDensity::measure_ball(double zeta, double delta) const {
    if (delta <= 0.0) return 0.0;
    if (delta >= 0.5) return 1.0;
    double lo = zeta - delta;
    double hi = zeta + delta;
    double mass = 0.0;
    if (lo < 0.0) {
        mass += cumulative(hi) + (1.0 - cumulative(lo + 1.0));
    } else if (hi > 1.0) {
        mass += (1.0 - cumulative(lo)) + cumulative(hi - 1.0);
    } else {
        mass += cumulative(hi) - cumulative(lo);
    }
    return mass;
}

double parry_density_eval(double beta, double x, int n_terms) {
    return ParryDensity::build(BetaMap(beta), n_terms).eval(x);
}

double parry_measure_interval(double beta, double a, double b, int n_terms) {
    return ParryDensity::build(BetaMap(beta), n_terms).measure_interval(a, b);
}

double solve_ball_radius(const ParryDensity& density, double zeta, double mass) {
    if (mass <= 0.0) return 0.0;
    double lo = 0.0, hi = 0.5;
    for (int iter = 0; iter < 200 && hi - lo > 1e-18; ++iter) {
        double mid = 0.5 * (lo + hi);
        if (density.measure_ball(zeta, mid) < mass)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

ThresholdSchedule threshold_schedule(const ParryDensity& density, const Observable& obs, double tau,
                                     long long n) {
    if (tau < 0.0) throw std::invalid_argument("threshold_schedule: tau must be >= 0");
    if (n < 1) throw std::invalid_argument("threshold_schedule: n must be >= 1");
    const double target = tau / static_cast<double>(n);
    if (target > 1.0) throw std::invalid_argument("threshold_schedule: tau/n > 1 is impossible mass");

    ThresholdSchedule sched;
    sched.tau = tau;
    sched.n = n;
    if (tau == 0.0) {
        sched.delta_n = 0.0;
        sched.u_n = obs.g(0.0);
        return sched;
    }
    sched.delta_n = solve_ball_radius(density, obs.zeta, target);
    sched.u_n = obs.g(sched.delta_n);
    return sched;
}

}  // namespace evlab
