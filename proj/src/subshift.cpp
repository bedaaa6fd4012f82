#include "evlab/subshift.hpp"

#include "evlab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace evlab {

SubshiftSpec SubshiftSpec::degenerate(int alphabet, std::vector<double> matrix) {
    SubshiftSpec s;
    s.alphabet = alphabet;
    s.matrices.push_back(std::move(matrix));
    s.driver_weights = {1.0};
    s.validate();
    return s;
}

double SubshiftSpec::m_floor() const {
    double m = 1.0;
    for (const auto& mat : matrices)
        for (double v : mat) m = std::min(m, v);
    return m;
}

std::vector<double> SubshiftSpec::average_matrix() const {
    std::vector<double> avg(static_cast<std::size_t>(alphabet) * alphabet, 0.0);
    for (std::size_t k = 0; k < matrices.size(); ++k)
        for (std::size_t e = 0; e < avg.size(); ++e) avg[e] += driver_weights[k] * matrices[k][e];
    return avg;
}

std::vector<double> SubshiftSpec::initial_law() const {
    const std::vector<double> avg = average_matrix();
    const int s = alphabet;
    std::vector<double> pi(static_cast<std::size_t>(s), 1.0 / s);
    for (int iter = 0; iter < 100000; ++iter) {
        std::vector<double> next(static_cast<std::size_t>(s), 0.0);
        for (int i = 0; i < s; ++i)
            for (int j = 0; j < s; ++j) next[j] += pi[i] * avg[static_cast<std::size_t>(i) * s + j];
        double diff = 0.0;
        for (int j = 0; j < s; ++j) diff += std::fabs(next[j] - pi[j]);
        pi = std::move(next);
        if (diff < 1e-15) break;
    }
    return pi;
}

void SubshiftSpec::validate() const {
    if (alphabet < 2) throw std::invalid_argument("SubshiftSpec: alphabet must have >= 2 symbols");
    if (matrices.empty()) throw std::invalid_argument("SubshiftSpec: no matrices");
    if (driver_weights.size() != matrices.size())
        throw std::invalid_argument("SubshiftSpec: one driver weight per matrix required");
    double wsum = 0.0;
    for (double w : driver_weights) {
        if (w < 0.0) throw std::invalid_argument("SubshiftSpec: negative driver weight");
        wsum += w;
    }
    if (std::fabs(wsum - 1.0) > 1e-12)
        throw std::invalid_argument("SubshiftSpec: driver weights must sum to 1");
    for (const auto& mat : matrices) {
        if (static_cast<int>(mat.size()) != alphabet * alphabet)
            throw std::invalid_argument("SubshiftSpec: matrix size mismatch");
        for (int i = 0; i < alphabet; ++i) {
            double row = 0.0;
            for (int j = 0; j < alphabet; ++j) {
                double v = mat[static_cast<std::size_t>(i) * alphabet + j];
                if (!(v > 0.0))
                    throw std::invalid_argument(
                        "SubshiftSpec: matrix entries must be strictly positive");
                row += v;
            }
            if (std::fabs(row - 1.0) > 1e-12)
                throw std::invalid_argument("SubshiftSpec: matrix rows must sum to 1");
        }
    }
}

QuenchedRealization sample_omega(const SubshiftSpec& spec, long long horizon, std::uint64_t seed) {
    spec.validate();
    if (horizon < 1) throw std::invalid_argument("sample_omega: horizon must be >= 1");
    QuenchedRealization real;
    real.spec = &spec;
    real.omega.resize(static_cast<std::size_t>(horizon), 0);
    if (spec.degenerate_driver()) return real;
    Xoshiro256pp rng(derive_stream(seed, 0x03e6aull));
    for (auto& idx : real.omega) {
        double u = rng.uniform01();
        double acc = 0.0;
        idx = static_cast<int>(spec.matrices.size()) - 1;
        for (std::size_t k = 0; k < spec.driver_weights.size(); ++k) {
            acc += spec.driver_weights[k];
            if (u < acc) {
                idx = static_cast<int>(k);
                break;
            }
        }
    }
    return real;
}

namespace {

void check_word(const SubshiftSpec& spec, std::span<const int> word) {
    if (word.empty()) throw std::invalid_argument("empty symbol word");
    for (int s : word)
        if (s < 0 || s >= spec.alphabet)
            throw std::invalid_argument("symbol out of alphabet range");
}

}  // namespace

double cylinder_measure_at(const QuenchedRealization& real, long long k,
                           std::span<const int> word) {
    const SubshiftSpec& spec = *real.spec;
    check_word(spec, word);
    if (k + static_cast<long long>(word.size()) - 1 > static_cast<long long>(real.omega.size()))
        throw std::invalid_argument("cylinder_measure_at: word runs past the realization horizon");
    const int s = spec.alphabet;
    // law at time k: initial law pushed through the first k matrices
    std::vector<double> law = spec.initial_law();
    for (long long i = 0; i < k; ++i) {
        const auto& A = spec.matrices[static_cast<std::size_t>(real.omega[i])];
        std::vector<double> next(static_cast<std::size_t>(s), 0.0);
        for (int a = 0; a < s; ++a)
            for (int b = 0; b < s; ++b) next[b] += law[a] * A[static_cast<std::size_t>(a) * s + b];
        law = std::move(next);
    }
    double mass = law[static_cast<std::size_t>(word[0])];
    for (std::size_t i = 0; i + 1 < word.size(); ++i) {
        const auto& A = spec.matrices[static_cast<std::size_t>(real.omega[k + i])];
        mass *= A[static_cast<std::size_t>(word[i]) * s + word[i + 1]];
    }
    return mass;
}

double sample_measure_cylinder(const QuenchedRealization& real, std::span<const int> word) {
    return cylinder_measure_at(real, 0, word);
}

double marginal_cylinder(const SubshiftSpec& spec, std::span<const int> word) {
    check_word(spec, word);
    const int s = spec.alphabet;
    const std::vector<double> avg = spec.average_matrix();
    const std::vector<double> pi = spec.initial_law();
    double mass = pi[static_cast<std::size_t>(word[0])];
    for (std::size_t i = 0; i + 1 < word.size(); ++i)
        mass *= avg[static_cast<std::size_t>(word[i]) * s + word[i + 1]];
    return mass;
}

double subshift_theta(const SubshiftSpec& spec, std::span<const int> zeta_period, double rel_tol) {
    spec.validate();
    check_word(spec, zeta_period);
    const int p = static_cast<int>(zeta_period.size());
    if (spec.degenerate_driver()) {
        const auto& A = spec.matrices[0];
        double loop = 1.0;
        for (int i = 0; i < p; ++i)
            loop *= A[static_cast<std::size_t>(zeta_period[i]) * spec.alphabet +
                      zeta_period[(i + 1) % p]];
        return 1.0 - loop;
    }
    // general driver: ratio of marginal cylinder masses at increasing depth
    auto word_of = [&](int len) {
        std::vector<int> w(static_cast<std::size_t>(len));
        for (int i = 0; i < len; ++i) w[static_cast<std::size_t>(i)] = zeta_period[i % p];
        return w;
    };
    double prev = std::nan("");
    for (int steps = 1; steps <= 1000; ++steps) {
        const int depth = steps * p;
        double mn = marginal_cylinder(spec, word_of(depth));
        double mnp = marginal_cylinder(spec, word_of(depth + p));
        double theta = 1.0 - mnp / mn;
        if (!std::isnan(prev) && std::fabs(theta - prev) <= rel_tol * std::fabs(theta))
            return theta;
        prev = theta;
    }
    std::ostringstream os;
    os << "subshift_theta: ratio did not settle within 1000 depths (last value " << prev << ")";
    throw std::runtime_error(os.str());
}

QuenchedResult quenched_evl_experiment(const SubshiftSpec& spec, std::span<const int> zeta_period,
                                       int n, double tau, int replicates, std::uint64_t seed) {
    spec.validate();
    check_word(spec, zeta_period);
    if (n < 1) throw std::invalid_argument("quenched_evl_experiment: n must be >= 1");
    if (replicates < 1) throw std::invalid_argument("quenched_evl_experiment: replicates >= 1");
    if (tau < 0.0) throw std::invalid_argument("quenched_evl_experiment: tau must be >= 0");

    const int p = static_cast<int>(zeta_period.size());
    std::vector<int> pattern(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) pattern[static_cast<std::size_t>(i)] = zeta_period[i % p];

    QuenchedResult res;
    res.replicates = replicates;
    res.theta = subshift_theta(spec, zeta_period);
    res.target = std::exp(-res.theta * tau);
    res.mu_cylinder = marginal_cylinder(spec, pattern);
    res.w_n = static_cast<long long>(std::floor(tau / res.mu_cylinder));
    if (tau == 0.0 || res.w_n == 0) {
        res.p_hat = 1.0;
        res.ci = {1.0, 1.0};
        res.w_n = 0;
        return res;
    }

    // KMP automaton over the pattern: O(1) amortized per symbol
    std::vector<int> fail(static_cast<std::size_t>(n), 0);
    for (int i = 1; i < n; ++i) {
        int k = fail[static_cast<std::size_t>(i - 1)];
        while (k > 0 && pattern[static_cast<std::size_t>(i)] != pattern[static_cast<std::size_t>(k)])
            k = fail[static_cast<std::size_t>(k - 1)];
        if (pattern[static_cast<std::size_t>(i)] == pattern[static_cast<std::size_t>(k)]) ++k;
        fail[static_cast<std::size_t>(i)] = k;
    }

    const long long total_symbols = res.w_n + n - 1;
    const QuenchedRealization real = sample_omega(spec, total_symbols, seed);
    const std::vector<double> pi = spec.initial_law();
    const int s = spec.alphabet;

    long long no_hit = 0;
    for (int r = 0; r < replicates; ++r) {
        Xoshiro256pp rng(derive_stream(seed, 0x71e0000ull + static_cast<std::uint64_t>(r)));
        // x0 ~ pi, then x_{i+1} ~ row A(omega_i)[x_i, .]
        int sym = s - 1;
        double u = rng.uniform01();
        double acc = 0.0;
        for (int a = 0; a < s; ++a) {
            acc += pi[static_cast<std::size_t>(a)];
            if (u < acc) {
                sym = a;
                break;
            }
        }
        int state = sym == pattern[0] ? 1 : 0;
        bool hit = (state == n);  // n == 1 can match immediately
        for (long long i = 1; i < total_symbols && !hit; ++i) {
            const auto& A = spec.matrices[static_cast<std::size_t>(real.omega[i - 1])];
            const double* row = A.data() + static_cast<std::size_t>(sym) * s;
            u = rng.uniform01();
            acc = 0.0;
            int next = s - 1;
            for (int a = 0; a < s; ++a) {
                acc += row[a];
                if (u < acc) {
                    next = a;
                    break;
                }
            }
            sym = next;
            while (state > 0 && sym != pattern[static_cast<std::size_t>(state)])
                state = fail[static_cast<std::size_t>(state - 1)];
            if (sym == pattern[static_cast<std::size_t>(state)]) ++state;
            if (state == n) {
                // window start index i-n+1 must be a shift time < w_n
                if (i - n + 1 < res.w_n) hit = true;
                state = fail[static_cast<std::size_t>(n - 1)];
            }
        }
        if (!hit) ++no_hit;
    }
    res.p_hat = static_cast<double>(no_hit) / static_cast<double>(replicates);
    res.ci = wilson_ci(no_hit, replicates);
    return res;
}

}  // namespace evlab
