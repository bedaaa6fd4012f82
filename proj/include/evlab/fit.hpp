#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace evlab {

// Least-squares fit of log|y| = log b + t log lambda over the points with
// |y| above the floor. Used for decay curves.
struct GeometricFit {
    double lambda_hat = std::nan("");
    double b_hat = std::nan("");
    bool below_resolution = true;
    std::vector<int> used_t;
    double max_residual_decades = 0.0;  // max |log10(y) - log10(fit)| over used points
};

inline GeometricFit fit_geometric_decay(const std::vector<int>& t, const std::vector<double>& y,
                                        double floor_value) {
    GeometricFit fit;
    std::vector<double> lt, ly;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (std::fabs(y[i]) > floor_value) {
            lt.push_back(static_cast<double>(t[i]));
            ly.push_back(std::log(std::fabs(y[i])));
            fit.used_t.push_back(t[i]);
        }
    }
    if (lt.size() < 2) return fit;
    double n = static_cast<double>(lt.size());
    double st = 0, sy = 0, stt = 0, sty = 0;
    for (std::size_t i = 0; i < lt.size(); ++i) {
        st += lt[i];
        sy += ly[i];
        stt += lt[i] * lt[i];
        sty += lt[i] * ly[i];
    }
    double denom = n * stt - st * st;
    if (denom == 0.0) return fit;
    double slope = (n * sty - st * sy) / denom;
    double intercept = (sy - slope * st) / n;
    fit.lambda_hat = std::exp(slope);
    fit.b_hat = std::exp(intercept);
    fit.below_resolution = false;
    for (std::size_t i = 0; i < lt.size(); ++i) {
        double pred = intercept + slope * lt[i];
        double resid = std::fabs(ly[i] - pred) / std::log(10.0);
        fit.max_residual_decades = std::max(fit.max_residual_decades, resid);
    }
    return fit;
}

}  // namespace evlab
