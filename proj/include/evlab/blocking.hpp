#pragma once

#include "evlab/numeric.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace evlab {

// Partition of indices 0..n-1 into k_n blocks of unequal sizes, each block
// sized greedily so that its tail mass stays within F*/k_n, with a gap of
// t_i >= t_star disregarded indices at the end of each block.
struct BlockPartition {
    long long n = 0;  // number of indices covered by the tail array
    int k_n = 0;
    long long t_star = 0;
    double F_star = 0.0;
    double F_bar_max = 0.0;
    double epsilon_n = 0.0;
    std::vector<long long> block_len;  // ell_i, one per block actually placed
    std::vector<long long> gap_len;    // t_i
    std::vector<long long> cum;        // L_0 = 0, L_i = L_{i-1} + ell_i
    int effective_blocks = 0;          // blocks with ell_i > 0
    bool end_truncated = false;        // last block stopped at the array end, not at budget

    // block index (0-based) containing global index j, or -1 when j falls past L_{k}
    int block_of(long long j) const;
    std::string to_json() const;
};

// Greedy construction: ell_i is the largest integer keeping the block mass
// <= F*/k_n, then t_i the largest integer (< ell_i) keeping the gap mass
// <= eps(n) F*/k_n with eps(n) = (t_star+1) Fmax k_n / F*.
// Throws std::invalid_argument when all tails vanish or some ell_i would be 0.
BlockPartition build_blocks(std::span<const double> tail_probs, int k_n, long long t_star);

// ---- exact enumeration of the set-algebra inequalities ----

// A finite probability space over event indicators B_0..B_{n-1}: outcome k
// has indicator mask outcome_masks[k] (bit i set means B_i occurs) and
// probability weights[k] / total. All checks below are integer-exact.
struct FiniteEventSpace {
    int n_events = 0;
    std::vector<std::uint32_t> outcome_masks;
    std::vector<BigInt> weights;
    BigInt total = 0;

    void validate() const;  // throws on inconsistent sizes / nonpositive total
};

struct ExactValue {
    BigInt num;
    BigInt den;
    double to_double() const { return rat_to_double(Rat(num, den)); }
};

struct InequalityCheck {
    ExactValue lhs;
    ExactValue rhs;
    bool holds = false;
};

// |P(W_{0,n}(B)) - P(W_{0,n}(A))| <= sum_{j=1..q} P(W_{0,n}(A) cap (B_{n-j} \ A_{n-j}))
// with A_r = B_r \ union_{j=1..q} B_{r+j} (events past n-1 are empty).
InequalityCheck annuli_difference_check(const FiniteEventSpace& space, int q);

// |P(W_{a,s+t+m}) - P(W_{a,s} cap W_{a+s+t,m})| <= sum_{j=s..s+t-1} P(A_{a+j})
InequalityCheck gap_lemma_check(const FiniteEventSpace& space, int a, int s, int t, int m);

// |P(W_{a,s} cap W_{a+s+t,m}) - P(W_{a+s+t,m}) (1 - sum_{j<s} P(A_{a+j}))|
//   <= |sum_j (P(A_{a+j}) P(W) - P(A_{a+j} cap W))| + sum_{j<i<s} P(A_{a+i} cap A_{a+j})
InequalityCheck inductive_lemma_check(const FiniteEventSpace& space, int a, int s, int t, int m);

// ---- randomized audits ----

struct BlockAuditViolations {
    long long arrays = 0;
    long long block_mass_upper = 0;
    long long block_mass_lower = 0;  // interior blocks only
    long long gap_order = 0;         // t_star <= t_i < ell_i, interior blocks
    long long gap_mass = 0;          // total gap mass <= eps(n) F*
    long long leftover = 0;          // mass past L_{k_n} <= k_n Fmax
    long long builder_errors = 0;    // degenerate draws rejected by the builder
    long long total() const {
        return block_mass_upper + block_mass_lower + gap_order + gap_mass + leftover;
    }
};

// Random tail arrays in the intended regime (positive tails, (t*+2) Fmax
// below the per-block budget); counts violations of the displayed bounds.
BlockAuditViolations audit_blocks_random(int arrays, std::uint64_t seed);

// Constant tails over a grid of (n, k): the largest block must fall within
// [n/k - 2, n/k]. Returns the number of violations.
long long audit_constant_tail_block_sizes();

struct SetAlgebraAudit {
    long long spaces = 0;
    long long checks = 0;
    long long violations = 0;
};

// Random finite spaces (explicit outcome lists and i.i.d. products mixed):
// the annuli-difference, gap and inductive inequalities, all integer-exact.
SetAlgebraAudit audit_set_algebra_random(int spaces, int max_n, int max_q, std::uint64_t seed);

}  // namespace evlab
