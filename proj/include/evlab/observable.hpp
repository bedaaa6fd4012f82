#pragma once

#include "evlab/circle_map.hpp"
#include "evlab/numeric.hpp"

#include <functional>
#include <string>

namespace evlab {

// arc-length distance on the circle [0,1] with 0 ~ 1, in [0, 1/2]
double circle_distance(double x, double y);
Rat circle_distance(const Rat& x, const Rat& y);

// The center zeta of an observable, kept in a form that orbit analysis can
// work with exactly: a rational, the square root of a rational (reduced mod 1),
// the boundary point 0 ~ 1, or a plain double.
struct Target {
    enum class Kind { Rational, SqrtRational, Boundary, Real };

    Kind kind = Kind::Real;
    Rat r;          // Rational: the value; SqrtRational: the radicand
    double x = 0.0; // Real

    static Target rational(long long num, long long den);
    static Target rational(Rat v);
    static Target sqrt_rational(long long num, long long den);
    static Target boundary();
    static Target real(double v);
    static Target parse(const std::string& text);  // "a/b", "sqrt(a/b)", "boundary", decimal

    bool is_boundary() const { return kind == Kind::Boundary; }
    double value() const;  // double view in [0,1); boundary -> 0
    std::string describe() const;
};

enum class GKind { NegLog, Power, Bounded };

// phi(x) = g(dist(x, zeta)). NegLog: g(s) = -log s. Power: g(s) = s^(-1/alpha).
// Bounded: g(s) = D - s^(1/alpha), maximum D at s = 0.
struct Observable {
    GKind kind = GKind::NegLog;
    double zeta = 0.0;
    double alpha = 1.0;  // Power/Bounded shape
    double D = 1.0;      // Bounded maximum
    std::function<double(double)> aux_scaling;  // NegLog normalizer h(s); unset means h == 1

    static Observable neg_log(double zeta);
    static Observable power(double zeta, double alpha);
    static Observable bounded(double zeta, double D, double alpha);

    double g(double s) const;          // +inf allowed at s = 0
    double observe(double x) const;    // g(circle_distance(x, zeta))

    // The radius delta with {phi > u} = B_delta(zeta). Returns 0 when u is at
    // or above sup g; throws std::domain_error when u is below the bijective
    // range (radius would exceed 1/2).
    double exceedance_radius(double u) const;
};

}  // namespace evlab
