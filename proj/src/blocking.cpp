#include "evlab/blocking.hpp"

#include "evlab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace evlab {

int BlockPartition::block_of(long long j) const {
    if (j < 0 || cum.empty() || j >= cum.back()) return -1;
    auto it = std::upper_bound(cum.begin(), cum.end(), j);
    return static_cast<int>(it - cum.begin()) - 1;
}

std::string BlockPartition::to_json() const {
    std::ostringstream os;
    auto list = [&os](const std::vector<long long>& v) {
        os << "[";
        for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
        os << "]";
    };
    os << "{\"n\":" << n << ",\"k_n\":" << k_n << ",\"t_star\":" << t_star
       << ",\"F_star\":" << F_star << ",\"F_bar_max\":" << F_bar_max
       << ",\"epsilon_n\":" << epsilon_n << ",\"block_len\":";
    list(block_len);
    os << ",\"gap_len\":";
    list(gap_len);
    os << ",\"cum\":";
    list(cum);
    os << ",\"effective_blocks\":" << effective_blocks << "}";
    return os.str();
}

BlockPartition build_blocks(std::span<const double> tail_probs, int k_n, long long t_star) {
    if (k_n < 1) throw std::invalid_argument("build_blocks: k_n must be >= 1");
    if (t_star < 0) throw std::invalid_argument("build_blocks: t_star must be >= 0");
    const long long n = static_cast<long long>(tail_probs.size());

    BlockPartition part;
    part.n = n;
    part.k_n = k_n;
    part.t_star = t_star;
    long double fs = 0.0L;
    double fmax = 0.0;
    for (double p : tail_probs) {
        if (p < 0.0 || p >= 1.0) throw std::invalid_argument("build_blocks: tails must be in [0,1)");
        fs += p;
        fmax = std::max(fmax, p);
    }
    part.F_star = static_cast<double>(fs);
    part.F_bar_max = fmax;
    if (part.F_star <= 0.0)
        throw std::invalid_argument("build_blocks: all tail probabilities are zero");

    const double block_budget = part.F_star / k_n;
    part.epsilon_n = (static_cast<double>(t_star) + 1.0) * fmax * k_n / part.F_star;
    const double gap_budget = part.epsilon_n * part.F_star / k_n;

    part.cum.push_back(0);
    long long pos = 0;
    for (int i = 0; i < k_n && pos < n; ++i) {
        long double mass = 0.0L;
        long long len = 0;
        while (pos + len < n && mass + tail_probs[pos + len] <= block_budget) {
            mass += tail_probs[pos + len];
            ++len;
        }
        part.end_truncated = (pos + len == n);
        if (len == 0) {
            std::ostringstream os;
            os << "build_blocks: block " << (i + 1) << " is empty; tail " << tail_probs[pos]
               << " at index " << pos << " exceeds the per-block budget " << block_budget
               << " (k_n too large)";
            throw std::invalid_argument(os.str());
        }
        // gap: the largest suffix of the block with mass <= gap budget, always
        // leaving at least one working index
        long double gmass = 0.0L;
        long long gap = 0;
        while (gap < len - 1 && gmass + tail_probs[pos + len - 1 - gap] <= gap_budget) {
            gmass += tail_probs[pos + len - 1 - gap];
            ++gap;
        }
        part.block_len.push_back(len);
        part.gap_len.push_back(gap);
        pos += len;
        part.cum.push_back(pos);
        ++part.effective_blocks;
    }
    return part;
}

void FiniteEventSpace::validate() const {
    if (outcome_masks.size() != weights.size())
        throw std::invalid_argument("FiniteEventSpace: masks/weights size mismatch");
    if (n_events < 1 || n_events > 31)
        throw std::invalid_argument("FiniteEventSpace: need 1 <= n_events <= 31");
    BigInt sum = 0;
    for (const auto& w : weights) {
        if (w < 0) throw std::invalid_argument("FiniteEventSpace: negative weight");
        sum += w;
    }
    if (sum != total || total <= 0)
        throw std::invalid_argument("FiniteEventSpace: weights do not sum to total");
}

namespace {

// mask of events occurring in [s, s+len)
inline std::uint32_t range_mask(int s, long long len) {
    if (len <= 0) return 0;
    return ((len >= 32 ? 0xFFFFFFFFu : ((1u << len) - 1u)) << s);
}

// annulus events: A_r = B_r minus any B_{r+1..r+q}
inline std::uint32_t annuli_mask(std::uint32_t b, int q) {
    std::uint32_t shifted = 0;
    for (int j = 1; j <= q; ++j) shifted |= (b >> j);
    return b & ~shifted;
}

}  // namespace

InequalityCheck annuli_difference_check(const FiniteEventSpace& space, int q) {
    space.validate();
    if (q < 0 || q >= space.n_events)
        throw std::invalid_argument("annuli_difference_check: need 0 <= q < n");
    const int n = space.n_events;
    const std::uint32_t all = range_mask(0, n);
    BigInt w_b = 0, w_a = 0, w_rhs = 0;
    for (std::size_t k = 0; k < space.outcome_masks.size(); ++k) {
        const std::uint32_t b = space.outcome_masks[k];
        const std::uint32_t a = annuli_mask(b, q);
        const bool in_wb = (b & all) == 0;
        const bool in_wa = (a & all) == 0;
        if (in_wb) w_b += space.weights[k];
        if (in_wa) w_a += space.weights[k];
        if (in_wa) {
            for (int j = 1; j <= q; ++j) {
                const std::uint32_t bit = 1u << (n - j);
                if ((b & bit) && !(a & bit)) w_rhs += space.weights[k];
            }
        }
    }
    InequalityCheck out;
    BigInt diff = w_b > w_a ? w_b - w_a : w_a - w_b;
    out.lhs = {diff, space.total};
    out.rhs = {w_rhs, space.total};
    out.holds = diff <= w_rhs;
    return out;
}

InequalityCheck gap_lemma_check(const FiniteEventSpace& space, int a, int s, int t, int m) {
    space.validate();
    if (a < 0 || s < 0 || t < 0 || m < 0 || a + s + t + m > space.n_events)
        throw std::invalid_argument("gap_lemma_check: window leaves the event range");
    const std::uint32_t full = range_mask(a, s + t + m);
    const std::uint32_t left = range_mask(a, s);
    const std::uint32_t right = range_mask(a + s + t, m);
    BigInt w_full = 0, w_split = 0, w_rhs = 0;
    for (std::size_t k = 0; k < space.outcome_masks.size(); ++k) {
        const std::uint32_t b = space.outcome_masks[k];
        if ((b & full) == 0) w_full += space.weights[k];
        if ((b & (left | right)) == 0) w_split += space.weights[k];
        for (int j = s; j < s + t; ++j)
            if (b & (1u << (a + j))) w_rhs += space.weights[k];
    }
    InequalityCheck out;
    BigInt diff = w_full > w_split ? w_full - w_split : w_split - w_full;
    out.lhs = {diff, space.total};
    out.rhs = {w_rhs, space.total};
    out.holds = diff <= w_rhs;
    return out;
}

InequalityCheck inductive_lemma_check(const FiniteEventSpace& space, int a, int s, int t, int m) {
    space.validate();
    if (a < 0 || s < 0 || t < 0 || m < 0 || a + s + t + m > space.n_events)
        throw std::invalid_argument("inductive_lemma_check: window leaves the event range");
    const std::uint32_t left = range_mask(a, s);
    const std::uint32_t right = range_mask(a + s + t, m);
    const BigInt& W = space.total;

    BigInt w_joint = 0, w_right = 0;
    std::vector<BigInt> w_a(static_cast<std::size_t>(s), BigInt(0));
    std::vector<BigInt> w_a_and_right(static_cast<std::size_t>(s), BigInt(0));
    BigInt w_pairs = 0;
    for (std::size_t k = 0; k < space.outcome_masks.size(); ++k) {
        const std::uint32_t b = space.outcome_masks[k];
        const bool in_right = (b & right) == 0;
        if ((b & (left | right)) == 0) w_joint += space.weights[k];
        if (in_right) w_right += space.weights[k];
        int occurs = 0;
        for (int j = 0; j < s; ++j) {
            if (b & (1u << (a + j))) {
                w_a[static_cast<std::size_t>(j)] += space.weights[k];
                if (in_right) w_a_and_right[static_cast<std::size_t>(j)] += space.weights[k];
                ++occurs;
            }
        }
        w_pairs += space.weights[k] * (occurs * (occurs - 1) / 2);
    }
    BigInt sum_a = 0, sum_a_right = 0;
    for (int j = 0; j < s; ++j) {
        sum_a += w_a[static_cast<std::size_t>(j)];
        sum_a_right += w_a_and_right[static_cast<std::size_t>(j)];
    }
    // scale everything by W^2 to stay integer-exact
    BigInt lhs_scaled = w_joint * W - w_right * (W - sum_a);
    if (lhs_scaled < 0) lhs_scaled = -lhs_scaled;
    BigInt term1 = sum_a * w_right - sum_a_right * W;
    if (term1 < 0) term1 = -term1;
    BigInt rhs_scaled = term1 + w_pairs * W;

    InequalityCheck out;
    out.lhs = {lhs_scaled, W * W};
    out.rhs = {rhs_scaled, W * W};
    out.holds = lhs_scaled <= rhs_scaled;
    return out;
}

BlockAuditViolations audit_blocks_random(int arrays, std::uint64_t seed) {
    BlockAuditViolations v;
    Xoshiro256pp rng(derive_stream(seed, 0xb10cull));
    for (int a = 0; a < arrays; ++a) {
        const long long n = 200 + static_cast<long long>(rng.below(1801));
        const double tau = 0.5 + 2.5 * rng.uniform01();
        const int k_n = static_cast<int>(std::ceil(std::cbrt(static_cast<double>(n))));
        std::vector<double> tails(static_cast<std::size_t>(n));
        long double fs = 0.0L;
        double fmax = 0.0;
        for (auto& t : tails) {
            t = (0.2 + 1.6 * rng.uniform01()) * tau / static_cast<double>(n);
            fs += t;
            fmax = std::max(fmax, t);
        }
        const double fstar = static_cast<double>(fs);
        // keep t_star inside the regime (t*+2) Fmax < F*/k_n
        const long long t_cap =
            std::max<long long>(1, static_cast<long long>(fstar / (k_n * fmax)) - 2);
        const long long t_star = static_cast<long long>(rng.below(static_cast<std::uint64_t>(t_cap)));

        BlockPartition part;
        try {
            part = build_blocks(tails, k_n, t_star);
        } catch (const std::invalid_argument&) {
            ++v.builder_errors;
            continue;
        }
        ++v.arrays;
        const double budget = part.F_star / k_n;
        const double pad = 1e-9 * fmax;
        long double gap_total = 0.0L;
        for (int i = 0; i < part.effective_blocks; ++i) {
            const bool interior = !(part.end_truncated && i == part.effective_blocks - 1);
            long double mass = 0.0L;
            for (long long j = part.cum[i]; j < part.cum[i + 1]; ++j)
                mass += tails[static_cast<std::size_t>(j)];
            if (static_cast<double>(mass) > budget + pad) ++v.block_mass_upper;
            if (interior && static_cast<double>(mass) < budget - fmax - pad) ++v.block_mass_lower;
            if (interior && !(t_star <= part.gap_len[i] && part.gap_len[i] < part.block_len[i]))
                ++v.gap_order;
            for (long long j = part.cum[i + 1] - part.gap_len[i]; j < part.cum[i + 1]; ++j)
                gap_total += tails[static_cast<std::size_t>(j)];
        }
        if (static_cast<double>(gap_total) > part.epsilon_n * part.F_star + pad * k_n) ++v.gap_mass;
        if (part.effective_blocks == k_n) {
            long double leftover = 0.0L;
            for (long long j = part.cum[k_n]; j < n; ++j)
                leftover += tails[static_cast<std::size_t>(j)];
            if (static_cast<double>(leftover) > k_n * fmax + pad) ++v.leftover;
        }
    }
    return v;
}

long long audit_constant_tail_block_sizes() {
    long long violations = 0;
    for (long long n : {100, 1000, 5000, 10000}) {
        for (int k : {3, 7, 10, 17}) {
            std::vector<double> tails(static_cast<std::size_t>(n), 7.3e-4);
            BlockPartition part = build_blocks(tails, k, 0);
            long long biggest = 0;
            for (long long len : part.block_len) biggest = std::max(biggest, len);
            const double ratio = static_cast<double>(n) / k;
            if (!(biggest >= ratio - 2.0 && biggest <= ratio)) ++violations;
        }
    }
    return violations;
}

SetAlgebraAudit audit_set_algebra_random(int spaces, int max_n, int max_q, std::uint64_t seed) {
    SetAlgebraAudit audit;
    Xoshiro256pp rng(derive_stream(seed, 0x5e7a16ull));
    for (int s_i = 0; s_i < spaces; ++s_i) {
        const int n = 3 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_n - 2)));
        FiniteEventSpace space;
        space.n_events = n;
        if (rng.next() & 1) {
            // explicit outcome list
            const int K = 1 + static_cast<int>(rng.below(40));
            for (int k = 0; k < K; ++k) {
                space.outcome_masks.push_back(
                    static_cast<std::uint32_t>(rng.below(1ull << n)));
                space.weights.emplace_back(rng.below(1u << 16));
            }
            space.weights[0] += 1;  // keep the total positive
        } else {
            // i.i.d. product space with small rational marginals
            std::vector<long long> num(static_cast<std::size_t>(n)), den(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) {
                den[static_cast<std::size_t>(i)] = 1 + static_cast<long long>(rng.below(8));
                num[static_cast<std::size_t>(i)] =
                    static_cast<long long>(rng.below(den[static_cast<std::size_t>(i)] + 1));
            }
            for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
                BigInt w = 1;
                for (int i = 0; i < n; ++i) {
                    const auto idx = static_cast<std::size_t>(i);
                    w *= (mask >> i) & 1 ? num[idx] : den[idx] - num[idx];
                }
                space.outcome_masks.push_back(mask);
                space.weights.push_back(std::move(w));
            }
            bool all_zero = true;
            for (const auto& w : space.weights)
                if (w != 0) all_zero = false;
            if (all_zero) space.weights[0] = 1;
        }
        space.total = 0;
        for (const auto& w : space.weights) space.total += w;

        const int q = static_cast<int>(rng.below(static_cast<std::uint64_t>(
            std::min(max_q, n - 1) + 1)));
        ++audit.spaces;
        if (!annuli_difference_check(space, q).holds) ++audit.violations;
        ++audit.checks;

        const int a = static_cast<int>(rng.below(static_cast<std::uint64_t>(std::min(3, n - 2))));
        const int s = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - a - 1)));
        const int t = static_cast<int>(rng.below(static_cast<std::uint64_t>(n - a - s + 1)));
        const int m = n - a - s - t > 0
                          ? 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - a - s - t)))
                          : 0;
        if (m >= 1) {
            if (!gap_lemma_check(space, a, s, t, m).holds) ++audit.violations;
            ++audit.checks;
            if (!inductive_lemma_check(space, a, s, t, m).holds) ++audit.violations;
            ++audit.checks;
        }
    }
    return audit;
}

}  // namespace evlab
