#pragma once

#include "evlab/circle_map.hpp"
#include "evlab/observable.hpp"
#include "evlab/parry.hpp"

#include <stdexcept>
#include <string>

namespace evlab {

// The theorem's hypotheses exclude interior targets whose orbit lands on the
// cut point 0 ~ 1 at positive time.
struct UnsupportedTargetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class ThetaCase { Periodic, Aperiodic, BoundaryNonperiodic, BoundaryPeriodic };

std::string theta_case_name(ThetaCase c);

struct QDetection {
    int q = 0;
    ThetaCase kind = ThetaCase::Aperiodic;
    long long period = 0;            // prime period when periodic
    long long certified_horizon = 0; // orbit steps actually analyzed
    bool exact = false;              // exact arithmetic all the way
};

// Orbit analysis of zeta under the unperturbed map. Exact for rational zeta
// and rational slope; square-root targets under a rational slope are certified
// through a fixed-point expansion; irrational slopes fall back to quad floats
// with a reduced certified horizon.
QDetection detect_q(const BetaMap& map, const Target& zeta, long long horizon);

// Extremal index of the four theorem cases, boundary cases using the Parry
// density at 0 and 1.
double theoretical_theta(const BetaMap& map, const QDetection& det, const ParryDensity& density);
double theoretical_theta(const BetaMap& map, const Target& zeta, long long horizon = 10000);

}  // namespace evlab
