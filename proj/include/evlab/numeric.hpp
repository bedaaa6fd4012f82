#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>
#include <boost/rational.hpp>

#include <cmath>
#include <cstdint>

namespace evlab {

using BigInt = boost::multiprecision::cpp_int;
using Rat = boost::rational<BigInt>;
// 113-bit mantissa float, used where double precision is not enough
// (orbit of 1 for irrational slopes, fixed-point seeds).
using Quad = boost::multiprecision::cpp_bin_float_quad;

inline double rat_to_double(const Rat& r) {
    return static_cast<double>(Quad(r.numerator()) / Quad(r.denominator()));
}

inline Quad rat_to_quad(const Rat& r) { return Quad(r.numerator()) / Quad(r.denominator()); }

// reduce into [0,1)
inline Rat rat_mod1(const Rat& r) {
    BigInt fl = r.numerator() / r.denominator();
    if (r.numerator() < 0 && fl * r.denominator() != r.numerator()) fl -= 1;
    Rat out = r - Rat(fl, BigInt(1));
    return out;
}

inline double mod1(double x) {
    double y = x - std::floor(x);
    if (y >= 1.0) y = 0.0;  // floor rounding at the top edge
    return y;
}

inline Rat rat_from_ll(long long num, long long den) { return Rat(BigInt(num), BigInt(den)); }

}  // namespace evlab
