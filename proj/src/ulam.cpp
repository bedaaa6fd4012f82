#include "evlab/ulam.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace evlab {

double UlamOperator::entry(int i, int j) const {
    for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
        if (col_[k] == j) return val_[k];
    return 0.0;
}

double UlamOperator::row_sum(int i) const {
    double s = 0.0;
    for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) s += val_[k];
    return s;
}

std::vector<double> UlamOperator::apply_left(const std::vector<double>& f) const {
    if (static_cast<int>(f.size()) != n_bins_)
        throw std::invalid_argument("UlamOperator::apply_left: size mismatch");
    std::vector<double> out(f.size(), 0.0);
    for (int i = 0; i < n_bins_; ++i) {
        const double fi = f[i];
        if (fi == 0.0) continue;
        for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) out[col_[k]] += fi * val_[k];
    }
    return out;
}

UlamOperator UlamOperator::from_dense(int n_bins, const std::vector<double>& dense) {
    if (static_cast<int>(dense.size()) != n_bins * n_bins)
        throw std::invalid_argument("from_dense: size mismatch");
    UlamOperator op;
    op.n_bins_ = n_bins;
    op.row_ptr_.assign(n_bins + 1, 0);
    for (int i = 0; i < n_bins; ++i) {
        for (int j = 0; j < n_bins; ++j) {
            double v = dense[i * n_bins + j];
            if (v != 0.0) {
                op.col_.push_back(j);
                op.val_.push_back(v);
            }
        }
        op.row_ptr_[i + 1] = static_cast<int>(op.col_.size());
    }
    return op;
}

UlamOperator ulam_discretize(double beta, int n_bins) {
    if (n_bins < 2) throw std::invalid_argument("ulam_discretize: need n_bins >= 2");
    if (!(beta > 1.0)) throw std::invalid_argument("ulam_discretize: need beta > 1");
    UlamOperator op;
    op.n_bins_ = n_bins;
    op.row_ptr_.assign(n_bins + 1, 0);
    const double width = 1.0 / n_bins;
    const int branches = static_cast<int>(std::ceil(beta));
    std::vector<std::pair<int, double>> row;
    for (int i = 0; i < n_bins; ++i) {
        row.clear();
        const double x0 = i * width, x1 = (i + 1) * width;
        for (int k = 0; k < branches; ++k) {
            // branch k lives on [k/beta, (k+1)/beta)
            double u = std::max(x0, k / beta);
            double v = std::min(x1, std::min((k + 1) / beta, 1.0));
            if (v <= u) continue;
            // its image is [beta u - k, beta v - k)
            double a = beta * u - k, b = beta * v - k;
            int j0 = std::clamp(static_cast<int>(a * n_bins), 0, n_bins - 1);
            int j1 = std::clamp(static_cast<int>(b * n_bins), 0, n_bins - 1);
            for (int j = j0; j <= j1; ++j) {
                double o = std::min(b, (j + 1) * width) - std::max(a, j * width);
                if (o > 0.0) row.emplace_back(j, o / beta * n_bins);
            }
        }
        std::sort(row.begin(), row.end());
        // merge duplicate columns from adjacent branch pieces
        for (const auto& [j, w] : row) {
            if (static_cast<int>(op.col_.size()) > op.row_ptr_[i] && op.col_.back() == j) {
                op.val_.back() += w;
            } else {
                op.col_.push_back(j);
                op.val_.push_back(w);
            }
        }
        op.row_ptr_[i + 1] = static_cast<int>(op.col_.size());
    }
    return op;
}

StationaryResult ulam_stationary(const UlamOperator& op) {
    const int n = op.n_bins();
    auto iterate = [&](std::vector<double> f, int max_iter, double tol, int& iters,
                       double& residual) {
        for (iters = 0; iters < max_iter; ++iters) {
            std::vector<double> g = op.apply_left(f);
            double mean = grid_integral(g);
            if (mean <= 0.0) throw std::runtime_error("ulam_stationary: mass vanished");
            for (auto& v : g) v /= mean;
            residual = grid_l1_distance(f, g);
            f = std::move(g);
            if (residual < tol) break;
        }
        return f;
    };

    StationaryResult res;
    int iters = 0;
    double residual = 0.0;
    std::vector<double> f(n, 1.0);
    f = iterate(std::move(f), 100000, 1e-12, iters, residual);
    res.iterations = iters;
    res.residual = residual;
    if (residual >= 1e-12) {
        std::ostringstream os;
        os << "ulam_stationary: no convergence after 100000 iterations, residual " << residual;
        throw std::runtime_error(os.str());
    }
    // uniqueness probe: restart from a perturbed density
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) g[i] = 1.0 + 0.5 * std::cos(2.0 * std::numbers::pi * (i + 0.5) / n);
    int it2 = 0;
    double r2 = 0.0;
    g = iterate(std::move(g), 100000, 1e-12, it2, r2);
    res.unique = grid_l1_distance(f, g) < 1e-8;
    res.density = std::move(f);
    return res;
}

double grid_integral(const std::vector<double>& f) {
    long double s = 0.0L;
    for (double v : f) s += v;
    return static_cast<double>(s / f.size());
}

double grid_l1_distance(const std::vector<double>& f, const std::vector<double>& g) {
    if (f.size() != g.size()) throw std::invalid_argument("grid_l1_distance: size mismatch");
    long double s = 0.0L;
    for (std::size_t i = 0; i < f.size(); ++i) s += std::fabs(f[i] - g[i]);
    return static_cast<double>(s / f.size());
}

std::vector<double> parry_on_grid(const ParryDensity& density, int n_bins) {
    std::vector<double> f(n_bins);
    for (int j = 0; j < n_bins; ++j) {
        double a = static_cast<double>(j) / n_bins;
        double b = static_cast<double>(j + 1) / n_bins;
        f[j] = density.measure_interval(a, b) * n_bins;
    }
    return f;
}

std::vector<double> indicator_on_grid(double a, double b, int n_bins) {
    if (!(0.0 <= a && a <= b && b <= 1.0))
        throw std::invalid_argument("indicator_on_grid: need 0 <= a <= b <= 1");
    std::vector<double> f(n_bins, 0.0);
    const double width = 1.0 / n_bins;
    for (int j = 0; j < n_bins; ++j) {
        double lo = std::max(a, j * width);
        double hi = std::min(b, (j + 1) * width);
        if (hi > lo) f[j] = (hi - lo) / width;
    }
    return f;
}

}  // namespace evlab
