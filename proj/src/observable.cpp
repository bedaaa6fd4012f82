#include "evlab/observable.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace evlab {

double circle_distance(double x, double y) {
    double d = std::fabs(x - y);
    return d <= 0.5 ? d : 1.0 - d;
}

Rat circle_distance(const Rat& x, const Rat& y) {
    Rat d = x < y ? y - x : x - y;
    Rat half(BigInt(1), BigInt(2));
    return d <= half ? d : Rat(BigInt(1), BigInt(1)) - d;
}

Target Target::rational(long long num, long long den) { return rational(rat_from_ll(num, den)); }

Target Target::rational(Rat v) {
    Target t;
    t.kind = Kind::Rational;
    t.r = rat_mod1(std::move(v));
    t.x = rat_to_double(t.r);
    return t;
}

Target Target::sqrt_rational(long long num, long long den) {
    if (num < 0 || den <= 0) throw std::invalid_argument("sqrt target needs a nonnegative radicand");
    Target t;
    t.kind = Kind::SqrtRational;
    t.r = rat_from_ll(num, den);
    t.x = mod1(std::sqrt(rat_to_double(t.r)));
    return t;
}

Target Target::boundary() {
    Target t;
    t.kind = Kind::Boundary;
    t.x = 0.0;
    return t;
}

Target Target::real(double v) {
    Target t;
    t.kind = Kind::Real;
    t.x = mod1(v);
    return t;
}

Target Target::parse(const std::string& text) {
    if (text == "boundary" || text == "0~1" || text == "1~0") return boundary();
    if (text.rfind("sqrt(", 0) == 0 && text.back() == ')') {
        std::string inner = text.substr(5, text.size() - 6);
        auto slash = inner.find('/');
        long long num = std::stoll(inner.substr(0, slash));
        long long den = slash == std::string::npos ? 1 : std::stoll(inner.substr(slash + 1));
        return sqrt_rational(num, den);
    }
    auto slash = text.find('/');
    if (slash != std::string::npos) {
        return rational(std::stoll(text.substr(0, slash)), std::stoll(text.substr(slash + 1)));
    }
    auto dot = text.find('.');
    if (dot != std::string::npos) {
        // decimals are exact rationals over a power of ten
        std::string digits = text.substr(0, dot) + text.substr(dot + 1);
        BigInt den = 1;
        for (std::size_t i = dot + 1; i < text.size(); ++i) den *= 10;
        return rational(Rat(BigInt(digits), den));
    }
    return rational(std::stoll(text), 1);
}

double Target::value() const { return kind == Kind::Boundary ? 0.0 : x; }

std::string Target::describe() const {
    std::ostringstream os;
    switch (kind) {
        case Kind::Rational:
            os << r.numerator() << "/" << r.denominator();
            break;
        case Kind::SqrtRational:
            os << "sqrt(" << r.numerator() << "/" << r.denominator() << ")";
            break;
        case Kind::Boundary:
            os << "0~1";
            break;
        case Kind::Real:
            os << x;
            break;
    }
    return os.str();
}

Observable Observable::neg_log(double zeta) {
    Observable o;
    o.kind = GKind::NegLog;
    o.zeta = mod1(zeta);
    return o;
}

Observable Observable::power(double zeta, double alpha) {
    if (!(alpha > 0)) throw std::invalid_argument("Observable: alpha must be > 0");
    Observable o;
    o.kind = GKind::Power;
    o.zeta = mod1(zeta);
    o.alpha = alpha;
    return o;
}

Observable Observable::bounded(double zeta, double D, double alpha) {
    if (!(alpha > 0)) throw std::invalid_argument("Observable: alpha must be > 0");
    Observable o;
    o.kind = GKind::Bounded;
    o.zeta = mod1(zeta);
    o.alpha = alpha;
    o.D = D;
    return o;
}

double Observable::g(double s) const {
    const double inf = std::numeric_limits<double>::infinity();
    switch (kind) {
        case GKind::NegLog:
            return s == 0.0 ? inf : -std::log(s);
        case GKind::Power:
            return s == 0.0 ? inf : std::pow(s, -1.0 / alpha);
        case GKind::Bounded:
            return D - std::pow(s, 1.0 / alpha);
    }
    return 0.0;
}

double Observable::observe(double x) const { return g(circle_distance(x, zeta)); }

double Observable::exceedance_radius(double u) const {
    double delta = 0.0;
    switch (kind) {
        case GKind::NegLog:
            delta = std::exp(-u);
            break;
        case GKind::Power:
            if (u <= 0.0) throw std::domain_error("exceedance_radius: level below the range of g");
            delta = std::pow(u, -alpha);
            break;
        case GKind::Bounded:
            if (u >= D) return 0.0;
            delta = std::pow(D - u, alpha);
            break;
    }
    if (delta > 0.5) throw std::domain_error("exceedance_radius: level below the bijective range");
    return delta;
}

}  // namespace evlab
