#pragma once

#include "evlab/numeric.hpp"

#include <optional>
#include <string>
#include <vector>

namespace evlab {

// A point on the circle [0,1) with 0 ~ 1. Either a plain double or an exact
// rational; the double view is always maintained so reads stay cheap.
class CirclePoint {
  public:
    CirclePoint() = default;

    static CirclePoint from_value(double v);
    static CirclePoint from_rational(Rat r);
    static CirclePoint from_rational(long long num, long long den);

    bool exact() const { return exact_; }
    double value() const { return value_; }
    const Rat& rational() const { return r_; }  // only meaningful when exact()

    bool operator==(const CirclePoint& o) const;

  private:
    bool exact_ = false;
    double value_ = 0.0;
    Rat r_;
};

// x -> beta x mod 1, slope beta > 1. Carries an exact rational slope when one
// is known, so exact points can stay exact.
class BetaMap {
  public:
    explicit BetaMap(double beta);
    BetaMap(long long num, long long den);
    explicit BetaMap(Rat beta);

    double beta() const { return beta_; }
    const std::optional<Rat>& beta_exact() const { return beta_exact_; }

    // Applies the map. When the exact result would exceed the denominator
    // budget, or the slope has no exact form, the result is returned as a
    // float and *downgraded is set.
    CirclePoint apply(const CirclePoint& x, bool* downgraded = nullptr) const;

    // Image of the point 1 taken as the limit from the left: beta - floor(beta)
    // for non-integer slopes, 0 for integer ones.
    CirclePoint image_of_one() const;

    // Denominator budget for exact arithmetic, in bits.
    static constexpr unsigned kMaxDenominatorBits = 4352;

  private:
    double beta_;
    std::optional<Rat> beta_exact_;
};

enum class ScheduleKind { Constant, Fast, Slow };

// A parametrized sequence of slopes beta_1, beta_2, ... converging to
// limit_beta. Fast schedules decay like c * k^-exponent with exponent > 1;
// slow schedules like c * k^-exponent with exponent in (0,1).
struct MapSequenceSpec {
    double limit_beta = 2.0;
    std::optional<Rat> limit_beta_exact;
    ScheduleKind kind = ScheduleKind::Constant;
    double amplitude = 0.0;  // c >= 0
    double exponent = 2.0;   // xi (fast) or alpha (slow)
    int sign = +1;

    static MapSequenceSpec constant(double beta);
    static MapSequenceSpec constant_rational(long long num, long long den);
    static MapSequenceSpec fast(double beta, double c, double xi, int sign = +1);
    static MapSequenceSpec slow(double beta, double alpha, double c = 1.0, int sign = +1);

    // slope of the k-th map, k >= 1
    double beta_at(long long k) const;
    BetaMap map_at(long long k) const;

    // true when every map in the sequence is the same exact rational
    bool constant_exact() const;

    void validate() const;  // throws std::invalid_argument
    std::string describe() const;
};

// (x0, T_1 x0, T_2 T_1 x0, ..., T_n ... T_1 x0), length n+1.
std::vector<CirclePoint> sequential_orbit(const MapSequenceSpec& spec, const CirclePoint& x0,
                                          long long n, long long* downgrades = nullptr);

// Streaming variant: yields the orbit one point at a time.
class OrbitStream {
  public:
    OrbitStream(const MapSequenceSpec& spec, CirclePoint x0);

    const CirclePoint& current() const { return x_; }
    long long step_index() const { return k_; }
    bool downgraded() const { return downgraded_; }

    // advance to T_{k+1}(current)
    void advance();

  private:
    const MapSequenceSpec& spec_;
    CirclePoint x_;
    long long k_ = 0;
    bool downgraded_ = false;
};

}  // namespace evlab
