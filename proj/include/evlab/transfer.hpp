#pragma once

#include "evlab/circle_map.hpp"
#include "evlab/fit.hpp"
#include "evlab/ulam.hpp"

#include <functional>
#include <vector>

namespace evlab {

// (Pf)(x) = (1/beta) sum over preimages (x+k)/beta in [0,1) of f, the
// Perron-Frobenius operator of a single slope-beta map against Lebesgue.
double transfer_pointwise(double beta, const std::function<double(double)>& f, double x);

// Composition Pi_n = P_n ... P_1 on the Ulam grid. Ulam matrices are built
// per distinct slope; constant schedules reuse one matrix.
class SequentialTransfer {
  public:
    SequentialTransfer(MapSequenceSpec spec, int n_bins);

    int n_bins() const { return n_bins_; }
    const MapSequenceSpec& spec() const { return spec_; }

    // applies P_k for k = from+1 .. to on the grid function f
    std::vector<double> apply_range(long long from, long long to, std::vector<double> f) const;
    // Pi_n f; n = 0 returns f unchanged
    std::vector<double> compose(long long n, std::vector<double> f) const;

  private:
    const UlamOperator& op_at(long long k) const;
    MapSequenceSpec spec_;
    int n_bins_;
    mutable std::vector<UlamOperator> cache_;  // grows with k for varying schedules
    mutable bool constant_ = false;
};

// || Pi_n(1) - h ||_1 on the Ulam grid, h the invariant density of the limit map.
double loss_of_memory_error(const MapSequenceSpec& spec, long long n, int n_bins);

struct DecayCurve {
    std::vector<int> t;
    std::vector<double> dc;
    double noise_floor = 0.0;  // declared grid noise floor 2 / n_bins
    GeometricFit fit;
};

// DC(phi, psi, i, t) = | int phi.T_i psi.T_{i+t} dm - int phi.T_i dm int psi.T_{i+t} dm |
// for indicator observables of the two intervals, t = 1..t_max, by Ulam
// quadrature; includes the fitted geometric decay rate over the points above
// the noise floor.
DecayCurve correlation_decay_estimate(const MapSequenceSpec& spec, double phi_a, double phi_b,
                                      double psi_a, double psi_b, long long i, int t_max,
                                      int n_bins);

}  // namespace evlab
