#include "evlab/transfer.hpp"

#include <cmath>
#include <stdexcept>

namespace evlab {

double transfer_pointwise(double beta, const std::function<double(double)>& f, double x) {
    if (!(x >= 0.0 && x < 1.0)) throw std::invalid_argument("transfer_pointwise: x outside [0,1)");
    const int branches = static_cast<int>(std::ceil(beta));
    double sum = 0.0;
    for (int k = 0; k < branches; ++k) {
        double pre = (x + k) / beta;
        if (pre < 1.0) sum += f(pre);
    }
    return sum / beta;
}

SequentialTransfer::SequentialTransfer(MapSequenceSpec spec, int n_bins)
    : spec_(std::move(spec)), n_bins_(n_bins) {
    spec_.validate();
    constant_ = spec_.kind == ScheduleKind::Constant || spec_.amplitude == 0.0;
    if (constant_) cache_.push_back(ulam_discretize(spec_.limit_beta, n_bins_));
}

const UlamOperator& SequentialTransfer::op_at(long long k) const {
    if (constant_) return cache_[0];
    // schedule index k >= 1 maps to cache slot k-1
    while (static_cast<long long>(cache_.size()) < k)
        cache_.push_back(ulam_discretize(spec_.beta_at(cache_.size() + 1), n_bins_));
    return cache_[static_cast<std::size_t>(k - 1)];
}

std::vector<double> SequentialTransfer::apply_range(long long from, long long to,
                                                    std::vector<double> f) const {
    for (long long k = from + 1; k <= to; ++k) f = op_at(k).apply_left(f);
    return f;
}

std::vector<double> SequentialTransfer::compose(long long n, std::vector<double> f) const {
    return apply_range(0, n, std::move(f));
}

double loss_of_memory_error(const MapSequenceSpec& spec, long long n, int n_bins) {
    SequentialTransfer transfer(spec, n_bins);
    std::vector<double> f(n_bins, 1.0);
    f = transfer.compose(n, std::move(f));
    ParryDensity h = ParryDensity::build(BetaMap(spec.limit_beta), 60);
    return grid_l1_distance(f, parry_on_grid(h, n_bins));
}

DecayCurve correlation_decay_estimate(const MapSequenceSpec& spec, double phi_a, double phi_b,
                                      double psi_a, double psi_b, long long i, int t_max,
                                      int n_bins) {
    if (t_max < 1) throw std::invalid_argument("correlation_decay_estimate: t_max must be >= 1");
    SequentialTransfer transfer(spec, n_bins);
    const std::vector<double> phi = indicator_on_grid(phi_a, phi_b, n_bins);
    const std::vector<double> psi = indicator_on_grid(psi_a, psi_b, n_bins);

    // int phi.T_i psi.T_{i+t} dm = int psi * (P_{i+t}..P_{i+1})(phi * Pi_i(1)) dm
    std::vector<double> pi_i(n_bins, 1.0);
    pi_i = transfer.compose(i, std::move(pi_i));
    double int_phi = 0.0;
    std::vector<double> g(n_bins);
    for (int b = 0; b < n_bins; ++b) {
        g[b] = phi[b] * pi_i[b];
        int_phi += g[b];
    }
    int_phi /= n_bins;

    std::vector<double> d = pi_i;  // Pi_{i+t}(1), advanced incrementally
    DecayCurve curve;
    curve.noise_floor = 2.0 / n_bins;
    for (int t = 1; t <= t_max; ++t) {
        g = transfer.apply_range(i + t - 1, i + t, std::move(g));
        d = transfer.apply_range(i + t - 1, i + t, std::move(d));
        long double joint = 0.0L, int_psi = 0.0L;
        for (int b = 0; b < n_bins; ++b) {
            joint += psi[b] * g[b];
            int_psi += psi[b] * d[b];
        }
        double dc = std::fabs(static_cast<double>(joint) / n_bins -
                              int_phi * static_cast<double>(int_psi) / n_bins);
        curve.t.push_back(t);
        curve.dc.push_back(dc);
    }
    curve.fit = fit_geometric_decay(curve.t, curve.dc, curve.noise_floor);
    return curve;
}

}  // namespace evlab
