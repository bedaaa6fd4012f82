#include "evlab/circle_map.hpp"

#include <boost/multiprecision/integer.hpp>

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace evlab {

namespace {

constexpr double kMinBeta = 1.0 + 1e-6;

unsigned bit_size(const BigInt& v) {
    if (v == 0) return 0;
    return boost::multiprecision::msb(v < 0 ? BigInt(-v) : v) + 1;
}

}  // namespace

CirclePoint CirclePoint::from_value(double v) {
    CirclePoint p;
    p.exact_ = false;
    p.value_ = mod1(v);
    return p;
}

CirclePoint CirclePoint::from_rational(Rat r) {
    CirclePoint p;
    p.exact_ = true;
    p.r_ = rat_mod1(r);
    p.value_ = rat_to_double(p.r_);
    return p;
}

CirclePoint CirclePoint::from_rational(long long num, long long den) {
    return from_rational(rat_from_ll(num, den));
}

bool CirclePoint::operator==(const CirclePoint& o) const {
    if (exact_ && o.exact_) return r_ == o.r_;
    return value_ == o.value_;
}

BetaMap::BetaMap(double beta) : beta_(beta) {
    if (!(beta >= kMinBeta)) throw std::invalid_argument("BetaMap: slope must be >= 1 + 1e-6");
    // recognize integers given as doubles; anything else stays float-only
    double r = std::round(beta);
    if (r == beta && r < 9.0e15) beta_exact_ = Rat(BigInt(static_cast<long long>(r)), BigInt(1));
}

BetaMap::BetaMap(long long num, long long den) : BetaMap(Rat(BigInt(num), BigInt(den))) {}

BetaMap::BetaMap(Rat beta) {
    beta_ = rat_to_double(beta);
    if (!(beta_ >= kMinBeta)) throw std::invalid_argument("BetaMap: slope must be >= 1 + 1e-6");
    beta_exact_ = std::move(beta);
}

CirclePoint BetaMap::apply(const CirclePoint& x, bool* downgraded) const {
    if (x.exact() && beta_exact_) {
        Rat y = rat_mod1(x.rational() * *beta_exact_);
        if (bit_size(y.denominator()) <= kMaxDenominatorBits) return CirclePoint::from_rational(y);
        if (downgraded) *downgraded = true;
        return CirclePoint::from_value(rat_to_double(y));
    }
    if (x.exact() && !beta_exact_ && downgraded) *downgraded = true;
    return CirclePoint::from_value(beta_ * x.value());
}

CirclePoint BetaMap::image_of_one() const {
    if (beta_exact_) {
        const Rat& b = *beta_exact_;
        if (b.denominator() == 1) return CirclePoint::from_rational(Rat(BigInt(0), BigInt(1)));
        return CirclePoint::from_rational(rat_mod1(b));
    }
    double f = beta_ - std::floor(beta_);
    return CirclePoint::from_value(f);
}

MapSequenceSpec MapSequenceSpec::constant(double beta) {
    MapSequenceSpec s;
    s.limit_beta = beta;
    double r = std::round(beta);
    if (r == beta && r < 9.0e15) s.limit_beta_exact = Rat(BigInt(static_cast<long long>(r)), BigInt(1));
    s.kind = ScheduleKind::Constant;
    s.validate();
    return s;
}

MapSequenceSpec MapSequenceSpec::constant_rational(long long num, long long den) {
    MapSequenceSpec s;
    s.limit_beta_exact = rat_from_ll(num, den);
    s.limit_beta = rat_to_double(*s.limit_beta_exact);
    s.kind = ScheduleKind::Constant;
    s.validate();
    return s;
}

MapSequenceSpec MapSequenceSpec::fast(double beta, double c, double xi, int sign) {
    MapSequenceSpec s;
    s.limit_beta = beta;
    double r = std::round(beta);
    if (r == beta && r < 9.0e15) s.limit_beta_exact = Rat(BigInt(static_cast<long long>(r)), BigInt(1));
    s.kind = ScheduleKind::Fast;
    s.amplitude = c;
    s.exponent = xi;
    s.sign = sign;
    s.validate();
    return s;
}

MapSequenceSpec MapSequenceSpec::slow(double beta, double alpha, double c, int sign) {
    MapSequenceSpec s;
    s.limit_beta = beta;
    s.kind = ScheduleKind::Slow;
    s.amplitude = c;
    s.exponent = alpha;
    s.sign = sign;
    s.validate();
    return s;
}

void MapSequenceSpec::validate() const {
    if (!(limit_beta >= kMinBeta))
        throw std::invalid_argument("MapSequenceSpec: limit slope must be >= 1 + 1e-6");
    if (sign != 1 && sign != -1) throw std::invalid_argument("MapSequenceSpec: sign must be +-1");
    if (amplitude < 0) throw std::invalid_argument("MapSequenceSpec: amplitude must be >= 0");
    switch (kind) {
        case ScheduleKind::Constant:
            break;
        case ScheduleKind::Fast:
            if (!(exponent > 1.0))
                throw std::invalid_argument("MapSequenceSpec: fast schedule needs exponent > 1");
            break;
        case ScheduleKind::Slow:
            if (!(exponent > 0.0 && exponent < 1.0))
                throw std::invalid_argument("MapSequenceSpec: slow schedule needs exponent in (0,1)");
            break;
    }
    // worst deviation is at k = 1
    if (kind != ScheduleKind::Constant && !(limit_beta + sign * amplitude >= kMinBeta))
        throw std::invalid_argument("MapSequenceSpec: schedule produces a slope <= 1");
}

double MapSequenceSpec::beta_at(long long k) const {
    if (k < 1) throw std::invalid_argument("beta_at: k must be >= 1");
    if (kind == ScheduleKind::Constant || amplitude == 0.0) return limit_beta;
    return limit_beta + sign * amplitude * std::pow(static_cast<double>(k), -exponent);
}

bool MapSequenceSpec::constant_exact() const {
    return (kind == ScheduleKind::Constant || amplitude == 0.0) && limit_beta_exact.has_value();
}

BetaMap MapSequenceSpec::map_at(long long k) const {
    if (constant_exact()) return BetaMap(*limit_beta_exact);
    return BetaMap(beta_at(k));
}

std::string MapSequenceSpec::describe() const {
    std::ostringstream os;
    switch (kind) {
        case ScheduleKind::Constant:
            os << "constant beta=" << limit_beta;
            break;
        case ScheduleKind::Fast:
            os << "fast beta=" << limit_beta << (sign > 0 ? "+" : "-") << amplitude << "*k^-"
               << exponent;
            break;
        case ScheduleKind::Slow:
            os << "slow beta=" << limit_beta << (sign > 0 ? "+" : "-") << amplitude << "*k^-"
               << exponent;
            break;
    }
    return os.str();
}

std::vector<CirclePoint> sequential_orbit(const MapSequenceSpec& spec, const CirclePoint& x0,
                                          long long n, long long* downgrades) {
    std::vector<CirclePoint> orbit;
    orbit.reserve(static_cast<std::size_t>(n) + 1);
    OrbitStream stream(spec, x0);
    orbit.push_back(stream.current());
    for (long long i = 0; i < n; ++i) {
        stream.advance();
        orbit.push_back(stream.current());
    }
    if (downgrades) *downgrades += stream.downgraded() ? 1 : 0;
    return orbit;
}

OrbitStream::OrbitStream(const MapSequenceSpec& spec, CirclePoint x0) : spec_(spec), x_(std::move(x0)) {
    spec_.validate();
}

void OrbitStream::advance() {
    ++k_;
    bool down = false;
    x_ = spec_.map_at(k_).apply(x_, &down);
    downgraded_ = downgraded_ || down;
}

}  // namespace evlab
