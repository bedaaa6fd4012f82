#include "evlab/q_detect.hpp"

#include <boost/multiprecision/integer.hpp>

#include <cmath>

namespace evlab {

namespace {

QDetection detect_boundary(const BetaMap& map, long long horizon) {
    OrbitOfOne orbit = orbit_of_one(map, horizon);
    QDetection det;
    det.certified_horizon = orbit.horizon;
    det.exact = orbit.exact;
    if (orbit.hits_zero) {
        det.kind = ThetaCase::BoundaryPeriodic;
        det.period = orbit.zero_index;
        det.q = static_cast<int>(orbit.zero_index);
    } else {
        det.kind = ThetaCase::BoundaryNonperiodic;
        det.period = 0;
        det.q = 1;
    }
    return det;
}

// exact rational orbit; gives up (aperiodic-to-horizon) if denominators blow
// past the budget
QDetection detect_rational(const Rat& beta, const Rat& zeta, long long horizon) {
    constexpr unsigned kDenBits = 1u << 20;
    QDetection det;
    det.exact = true;
    Rat y = zeta;
    for (long long j = 1; j <= horizon; ++j) {
        y = rat_mod1(y * beta);
        if (y.numerator() == 0)
            throw UnsupportedTargetError("detect_q: orbit of zeta hits 0~1 at step " +
                                         std::to_string(j));
        if (y == zeta) {
            det.kind = ThetaCase::Periodic;
            det.period = j;
            det.q = static_cast<int>(j);
            det.certified_horizon = j;
            return det;
        }
        if (boost::multiprecision::msb(y.denominator()) + 1 > kDenBits) {
            det.certified_horizon = j;
            det.kind = ThetaCase::Aperiodic;
            det.q = 0;
            det.exact = false;  // gave up before the requested horizon
            return det;
        }
    }
    det.kind = ThetaCase::Aperiodic;
    det.q = 0;
    det.certified_horizon = horizon;
    return det;
}

// Fixed-point certification for sqrt targets (and literal reals) under a
// rational slope: G bits chosen so that truncation error stays below the
// 2^-64 decision margin for the whole horizon.
QDetection detect_fixed_point(const Rat& beta, const Target& zeta, long long horizon) {
    const double log2beta = std::log2(rat_to_double(beta));
    const unsigned G =
        static_cast<unsigned>(std::ceil(static_cast<double>(horizon) * log2beta)) + 128;
    const BigInt one = BigInt(1) << G;

    BigInt Z;
    if (zeta.kind == Target::Kind::SqrtRational) {
        BigInt scaled = zeta.r.numerator() * (BigInt(1) << (2 * G)) / zeta.r.denominator();
        Z = boost::multiprecision::sqrt(scaled);
    } else if (zeta.kind == Target::Kind::Rational) {
        Z = zeta.r.numerator() * one / zeta.r.denominator();
    } else {
        Rat r = rat_mod1(Rat(BigInt(std::llround(zeta.value() * 0x1p53)), BigInt(1) << 53));
        Z = r.numerator() * one / r.denominator();
    }
    Z %= one;

    const BigInt margin = BigInt(1) << (G - 64);
    const BigInt& bn = beta.numerator();
    const BigInt& bd = beta.denominator();

    auto circ_dist = [&](const BigInt& a, const BigInt& b) {
        BigInt d = a > b ? a - b : b - a;
        BigInt alt = one - d;
        return d < alt ? d : alt;
    };

    QDetection det;
    det.exact = false;
    BigInt x = Z;
    for (long long j = 1; j <= horizon; ++j) {
        x = x * bn / bd;
        x &= one - 1;  // mod 2^G
        if (circ_dist(x, BigInt(0)) < margin)
            throw UnsupportedTargetError("detect_q: orbit of zeta reaches 0~1 at step " +
                                         std::to_string(j) + " (within resolution)");
        if (circ_dist(x, Z) < margin) {
            det.kind = ThetaCase::Periodic;
            det.period = j;
            det.q = static_cast<int>(j);
            det.certified_horizon = j;
            return det;
        }
    }
    det.kind = ThetaCase::Aperiodic;
    det.q = 0;
    det.certified_horizon = horizon;
    return det;
}

// quad-float fallback for irrational slopes: short certified horizon
QDetection detect_float(double beta, double zeta, long long horizon) {
    const long long cap =
        std::min(horizon, std::max<long long>(8, static_cast<long long>(73.0 / std::log2(beta))));
    const double margin = 0x1.0p-40;
    Quad b(beta);
    Quad y(zeta);
    QDetection det;
    det.exact = false;
    for (long long j = 1; j <= cap; ++j) {
        y = y * b;
        y -= floor(y);
        double yd = static_cast<double>(y);
        if (circle_distance(yd, 0.0) < margin)
            throw UnsupportedTargetError("detect_q: orbit of zeta reaches 0~1 at step " +
                                         std::to_string(j) + " (within resolution)");
        if (circle_distance(yd, zeta) < margin) {
            det.kind = ThetaCase::Periodic;
            det.period = j;
            det.q = static_cast<int>(j);
            det.certified_horizon = j;
            return det;
        }
    }
    det.kind = ThetaCase::Aperiodic;
    det.q = 0;
    det.certified_horizon = cap;
    return det;
}

}  // namespace

std::string theta_case_name(ThetaCase c) {
    switch (c) {
        case ThetaCase::Periodic:
            return "periodic";
        case ThetaCase::Aperiodic:
            return "aperiodic";
        case ThetaCase::BoundaryNonperiodic:
            return "boundary-nonperiodic";
        case ThetaCase::BoundaryPeriodic:
            return "boundary-periodic";
    }
    return "?";
}

QDetection detect_q(const BetaMap& map, const Target& zeta, long long horizon) {
    if (horizon < 1) throw std::invalid_argument("detect_q: horizon must be >= 1");
    if (zeta.is_boundary()) return detect_boundary(map, horizon);
    if (map.beta_exact()) {
        if (zeta.kind == Target::Kind::Rational)
            return detect_rational(*map.beta_exact(), zeta.r, horizon);
        return detect_fixed_point(*map.beta_exact(), zeta, horizon);
    }
    return detect_float(map.beta(), zeta.value(), horizon);
}

double theoretical_theta(const BetaMap& map, const QDetection& det, const ParryDensity& density) {
    const double beta = map.beta();
    switch (det.kind) {
        case ThetaCase::Periodic:
            return 1.0 - std::pow(beta, -static_cast<double>(det.period));
        case ThetaCase::Aperiodic:
            return 1.0;
        case ThetaCase::BoundaryNonperiodic:
            return density.density_at_zero() * (1.0 - 1.0 / beta) + density.density_at_one();
        case ThetaCase::BoundaryPeriodic:
            return density.density_at_zero() * (1.0 - 1.0 / beta) +
                   density.density_at_one() *
                       (1.0 - std::pow(beta, -static_cast<double>(det.period)));
    }
    return 1.0;
}

double theoretical_theta(const BetaMap& map, const Target& zeta, long long horizon) {
    QDetection det = detect_q(map, zeta, horizon);
    ParryDensity density = ParryDensity::build(map, 60);
    return theoretical_theta(map, det, density);
}

}  // namespace evlab
