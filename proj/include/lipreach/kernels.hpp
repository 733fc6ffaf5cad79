#pragma once

// Data-parallel inner loops. Each kernel exists twice: `serial` is the
// reference the tests compare against, `parallel` uses OpenMP.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace lipreach::kernels {

/// Structure-of-arrays view over bound-store records.
struct RecordView {
    std::size_t n = 0;
    std::size_t state_dim = 0;
    std::size_t action_dim = 0;
    const double* state_coords = nullptr;   // n * state_dim
    const double* action_coords = nullptr;  // n * action_dim
    const int* state_tag = nullptr;
    const int* action_tag = nullptr;
    const int* region = nullptr;
    const double* lower = nullptr;
    const double* upper = nullptr;
};

struct PairQuery {
    const double* state = nullptr;
    int state_tag = 0;
    const double* action = nullptr;
    int action_tag = 0;
    int region = -1;
    double lipschitz = 1;
};

/// Compressed finite MDP for Bellman sweeps. Actions of state s are
/// action_begin[s] .. action_begin[s+1]; successors of action k are
/// row_begin[k] .. row_begin[k+1].
struct CsrMdp {
    std::vector<std::size_t> action_begin;
    std::vector<std::size_t> row_begin;
    std::vector<std::uint32_t> successor;
    std::vector<double> probability;
    std::vector<char> target;
    std::vector<char> sink;
    std::size_t states() const { return target.size(); }
};

namespace serial {
/// max over records in the query's region of lower - C * d; -inf when none.
double scan_lower(const RecordView& r, const PairQuery& q);
/// min over records in the query's region of upper + C * d; +inf when none.
double scan_upper(const RecordView& r, const PairQuery& q);
/// Jacobi backup; returns the sup-norm change.
double bellman_sweep(const CsrMdp& m, std::span<const double> in, std::span<double> out);
/// sum over the index box of prod_j weights[j][i_j] * values[i]; row-major
/// layout with `shape`, axis ranges starting at `first[j]`.
double weighted_box_sum(std::span<const double> values, std::span<const std::size_t> shape,
                        std::span<const std::size_t> first, const std::vector<std::vector<double>>& weights);
}  // namespace serial

namespace parallel {
double scan_lower(const RecordView& r, const PairQuery& q);
double scan_upper(const RecordView& r, const PairQuery& q);
double bellman_sweep(const CsrMdp& m, std::span<const double> in, std::span<double> out);
double weighted_box_sum(std::span<const double> values, std::span<const std::size_t> shape,
                        std::span<const std::size_t> first, const std::vector<std::vector<double>>& weights);
}  // namespace parallel

/// Number of OpenMP threads available (1 without OpenMP).
int max_threads();

}  // namespace lipreach::kernels
