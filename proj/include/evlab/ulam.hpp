#pragma once

#include "evlab/parry.hpp"

#include <vector>

namespace evlab {

// Row-stochastic Ulam matrix P[i][j] = m(bin_i cap T^-1 bin_j) / m(bin_i) on
// the uniform grid, assembled from the exact affine branch geometry. Rows are
// sparse (a bin meets at most a couple of branch images), stored CSR.
class UlamOperator {
  public:
    int n_bins() const { return n_bins_; }
    double entry(int i, int j) const;
    double row_sum(int i) const;

    // density push-forward: f'_j = sum_i f_i P[i][j]
    std::vector<double> apply_left(const std::vector<double>& f) const;

    static UlamOperator from_dense(int n_bins, const std::vector<double>& dense);

    friend UlamOperator ulam_discretize(double beta, int n_bins);

  private:
    int n_bins_ = 0;
    std::vector<int> row_ptr_;
    std::vector<int> col_;
    std::vector<double> val_;
};

UlamOperator ulam_discretize(double beta, int n_bins);

struct StationaryResult {
    std::vector<double> density;  // bin values, mean 1
    int iterations = 0;
    double residual = 0.0;
    bool unique = true;  // false when a perturbed start converges elsewhere
};

// Left fixed vector by power iteration from the uniform density; throws
// std::runtime_error (with the final residual) if 1e5 iterations do not reach
// an L1 step change below 1e-12.
StationaryResult ulam_stationary(const UlamOperator& op);

// Grid conventions: a grid function holds bin-averaged density values, so the
// Lebesgue integral is the plain mean.
double grid_integral(const std::vector<double>& f);
double grid_l1_distance(const std::vector<double>& f, const std::vector<double>& g);

// Exact bin averages of the Parry density on the uniform grid.
std::vector<double> parry_on_grid(const ParryDensity& density, int n_bins);

// Bin-averaged indicator of [a, b).
std::vector<double> indicator_on_grid(double a, double b, int n_bins);

}  // namespace evlab
