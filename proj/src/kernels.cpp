#include "lipreach/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace lipreach::kernels {

namespace {

inline double pair_distance(const RecordView& r, std::size_t i, const PairQuery& q) {
    double ds = 0, da = 0;
    const double* sc = r.state_coords + i * r.state_dim;
    for (std::size_t j = 0; j < r.state_dim; ++j) ds += (sc[j] - q.state[j]) * (sc[j] - q.state[j]);
    const double* ac = r.action_coords + i * r.action_dim;
    for (std::size_t j = 0; j < r.action_dim; ++j) da += (ac[j] - q.action[j]) * (ac[j] - q.action[j]);
    return std::sqrt(ds) + std::sqrt(da) + (r.state_tag[i] != q.state_tag) + (r.action_tag[i] != q.action_tag);
}

inline double backup(const CsrMdp& m, std::span<const double> in, std::size_t s) {
    if (m.target[s]) return 1.0;
    if (m.sink[s]) return 0.0;
    double best = 0;
    for (std::size_t a = m.action_begin[s]; a < m.action_begin[s + 1]; ++a) {
        double v = 0;
        for (std::size_t k = m.row_begin[a]; k < m.row_begin[a + 1]; ++k) v += m.probability[k] * in[m.successor[k]];
        best = std::max(best, v);
    }
    return best;
}

// Sum over axes >= 1 for a fixed index on axis 0.
double box_slice(std::span<const double> values, std::span<const std::size_t> shape, std::span<const std::size_t> first,
                 const std::vector<std::vector<double>>& weights, std::size_t i0) {
    const std::size_t d = shape.size();
    std::vector<std::size_t> idx(d, 0);
    std::vector<std::size_t> stride(d, 1);
    for (std::size_t j = d - 1; j > 0; --j) stride[j - 1] = stride[j] * shape[j];
    double total = 0;
    while (true) {
        std::size_t flat = (first[0] + i0) * stride[0];
        double w = weights[0][i0];
        for (std::size_t j = 1; j < d; ++j) {
            flat += (first[j] + idx[j]) * stride[j];
            w *= weights[j][idx[j]];
        }
        total += w * values[flat];
        std::size_t j = d - 1;
        while (j >= 1 && ++idx[j] == weights[j].size()) {
            idx[j] = 0;
            --j;
        }
        if (j == 0) break;
    }
    return total;
}

}  // namespace

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

namespace serial {

double scan_lower(const RecordView& r, const PairQuery& q) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < r.n; ++i) {
        if (r.region[i] != q.region) continue;
        best = std::max(best, r.lower[i] - q.lipschitz * pair_distance(r, i, q));
    }
    return best;
}

double scan_upper(const RecordView& r, const PairQuery& q) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < r.n; ++i) {
        if (r.region[i] != q.region) continue;
        best = std::min(best, r.upper[i] + q.lipschitz * pair_distance(r, i, q));
    }
    return best;
}

double bellman_sweep(const CsrMdp& m, std::span<const double> in, std::span<double> out) {
    double change = 0;
    for (std::size_t s = 0; s < m.states(); ++s) {
        out[s] = backup(m, in, s);
        change = std::max(change, std::abs(out[s] - in[s]));
    }
    return change;
}

double weighted_box_sum(std::span<const double> values, std::span<const std::size_t> shape,
                        std::span<const std::size_t> first, const std::vector<std::vector<double>>& weights) {
    double total = 0;
    for (std::size_t i0 = 0; i0 < weights[0].size(); ++i0) total += box_slice(values, shape, first, weights, i0);
    return total;
}

}  // namespace serial

namespace parallel {

double scan_lower(const RecordView& r, const PairQuery& q) {
    double best = -std::numeric_limits<double>::infinity();
    const auto n = static_cast<std::ptrdiff_t>(r.n);
#pragma omp parallel for reduction(max : best) schedule(static) if (n > 4096)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        auto k = static_cast<std::size_t>(i);
        if (r.region[k] != q.region) continue;
        best = std::max(best, r.lower[k] - q.lipschitz * pair_distance(r, k, q));
    }
    return best;
}

double scan_upper(const RecordView& r, const PairQuery& q) {
    double best = std::numeric_limits<double>::infinity();
    const auto n = static_cast<std::ptrdiff_t>(r.n);
#pragma omp parallel for reduction(min : best) schedule(static) if (n > 4096)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        auto k = static_cast<std::size_t>(i);
        if (r.region[k] != q.region) continue;
        best = std::min(best, r.upper[k] + q.lipschitz * pair_distance(r, k, q));
    }
    return best;
}

double bellman_sweep(const CsrMdp& m, std::span<const double> in, std::span<double> out) {
    double change = 0;
    const auto n = static_cast<std::ptrdiff_t>(m.states());
#pragma omp parallel for reduction(max : change) schedule(static) if (n > 1024)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        auto s = static_cast<std::size_t>(i);
        out[s] = backup(m, in, s);
        change = std::max(change, std::abs(out[s] - in[s]));
    }
    return change;
}

double weighted_box_sum(std::span<const double> values, std::span<const std::size_t> shape,
                        std::span<const std::size_t> first, const std::vector<std::vector<double>>& weights) {
    // Per-slice partial sums are combined in index order, so the result does
    // not depend on the thread count.
    const auto n = static_cast<std::ptrdiff_t>(weights[0].size());
    std::vector<double> partial(weights[0].size(), 0.0);
#pragma omp parallel for schedule(static) if (n > 64)
    for (std::ptrdiff_t i = 0; i < n; ++i)
        partial[static_cast<std::size_t>(i)] = box_slice(values, shape, first, weights, static_cast<std::size_t>(i));
    double total = 0;
    for (double p : partial) total += p;
    return total;
}

}  // namespace parallel

}  // namespace lipreach::kernels
