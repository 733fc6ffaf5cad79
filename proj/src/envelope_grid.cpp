#include "lipreach/envelope_grid.hpp"

#include <algorithm>
#include <cmath>

#include "lipreach/errors.hpp"
#include "lipreach/kernels.hpp"

namespace lipreach {

namespace {

constexpr double kScale = 1099511627776.0;  // 2^40

// Stored values stay within [-C*diam, 1 + C*diam]; the clamp only guards the
// integer range.
std::int64_t fixed_down(double v) { return static_cast<std::int64_t>(std::floor(std::clamp(v, -1e6, 1e6) * kScale)); }
std::int64_t fixed_up(double v) { return static_cast<std::int64_t>(std::ceil(std::clamp(v, -1e6, 1e6) * kScale)); }

}  // namespace

bool EnvelopeGrid::supports(const MdpModel& model) {
    if (!model.uniform_actions || model.partition) return false;
    if (!model.actions(model.initial).is_finite()) return false;
    for (const auto& c : model.components)
        if (c.box.nondegenerate_axes() > 0) return true;
    return false;
}

EnvelopeGrid::EnvelopeGrid(const MdpModel& model, Options options) {
    if (!supports(model)) throw UnsupportedModel("envelope grid needs uniform finite actions and no partition");
    lipschitz_ = model.lipschitz_pair;
    const auto acts = model.actions(model.initial).points();
    n_actions_ = acts.size();
    for (std::size_t i = 0; i < acts.size(); ++i) {
        if (acts[i].tag < 0) throw UnsupportedModel("negative action tag");
        auto t = static_cast<std::size_t>(acts[i].tag);
        if (action_index_.size() <= t) action_index_.resize(t + 1, -1);
        action_index_[t] = static_cast<int>(i);
    }
    // Split the cell budget between components by measure.
    double total_measure = 0;
    for (const auto& c : model.components)
        if (c.box.nondegenerate_axes() > 0) total_measure += c.box.measure();

    double worst_diam = 0;
    for (const auto& comp : model.components) {
        const std::size_t nd = comp.box.nondegenerate_axes();
        if (nd == 0) continue;
        Grid g;
        g.tag = comp.tag;
        g.box = comp.box;
        const std::size_t d = comp.box.dim();
        double budget = static_cast<double>(options.max_cells) * comp.box.measure() / total_measure;
        double want_diam = lipschitz_ > 0 ? options.cell_precision / lipschitz_ : comp.box.diameter();
        double h = want_diam / std::sqrt(static_cast<double>(nd));
        auto count = [&](double edge) {
            double c = 1;
            for (std::size_t j = 0; j < d; ++j)
                if (!comp.box.degenerate(j)) c *= std::ceil(comp.box.extent(j) / edge - 1e-9);
            return c;
        };
        while (count(h) > budget) h *= 1.01;
        g.n.assign(d, 1);
        g.edge.assign(d, 0.0);
        for (std::size_t j = 0; j < d; ++j) {
            if (comp.box.degenerate(j)) continue;
            g.n[j] = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(comp.box.extent(j) / h - 1e-9)));
            g.edge[j] = comp.box.extent(j) / static_cast<double>(g.n[j]);
        }
        g.stride.assign(d, 1);
        for (std::size_t j = d; j-- > 1;) g.stride[j - 1] = g.stride[j] * g.n[j];
        g.total = g.stride[0] * g.n[0];
        g.row_len = g.n[d - 1];
        double diam = 0;
        for (double e : g.edge) diam += e * e;
        worst_diam = std::max(worst_diam, std::sqrt(diam));
        // E|x - c| <= sqrt(E|x - c|^2) = sqrt(sum e_j^2 / 12) for a uniform cell.
        g.rms = lipschitz_ * std::sqrt(diam / 12.0);
        g.half_diam = lipschitz_ * 0.5 * std::sqrt(diam);

        g.lower.assign(g.total, 0.0);
        g.upper.assign(g.total * n_actions_, 1.0);
        g.kind.assign(g.total, 0);
        g.stamp.assign(g.total, 0);
        g.fen_lower.assign(g.total, 0);
        g.fen_upper.assign(g.total, 0);
        for (std::size_t c = 0; c < g.total; ++c) {
            Box cb = cell_box(g, c);
            Overlap t = model.target.classify(g.tag, cb), s = model.sink.classify(g.tag, cb);
            std::uint8_t k = 0;
            if (t == Overlap::full) k |= kFullTarget;
            else if (t == Overlap::partial) k |= kPartTarget;
            if (s == Overlap::full) k |= kFullSink;
            else if (s == Overlap::partial) k |= kPartSink;
            g.kind[c] = k;
        }
        for (std::size_t c = 0; c < g.total; ++c) {
            std::size_t row = c / g.row_len, col = c % g.row_len;
            fenwick_add(g.fen_lower, row * g.row_len, g.row_len, col, eff_lower(g, c));
            fenwick_add(g.fen_upper, row * g.row_len, g.row_len, col, eff_upper(g, c));
        }
        grids_.push_back(std::move(g));
    }
    precision_ = lipschitz_ * worst_diam + 4.0 / kScale;
}

std::size_t EnvelopeGrid::cells() const {
    std::size_t n = 0;
    for (const auto& g : grids_) n += g.total;
    return n;
}

const EnvelopeGrid::Grid* EnvelopeGrid::grid_for(int tag) const {
    for (const auto& g : grids_)
        if (g.tag == tag) return &g;
    return nullptr;
}

EnvelopeGrid::Grid* EnvelopeGrid::grid_for(int tag) {
    for (auto& g : grids_)
        if (g.tag == tag) return &g;
    return nullptr;
}

Box EnvelopeGrid::cell_box(const Grid& g, std::size_t flat) const {
    Box b{g.box.lo, g.box.hi};
    for (std::size_t j = 0; j < g.n.size(); ++j) {
        std::size_t i = (flat / g.stride[j]) % g.n[j];
        if (g.box.degenerate(j)) continue;
        b.lo[j] = g.box.lo[j] + g.edge[j] * static_cast<double>(i);
        b.hi[j] = i + 1 == g.n[j] ? g.box.hi[j] : g.box.lo[j] + g.edge[j] * static_cast<double>(i + 1);
    }
    return b;
}

std::size_t EnvelopeGrid::cell_of(const Grid& g, std::span<const double> x) const {
    std::size_t flat = 0;
    for (std::size_t j = 0; j < g.n.size(); ++j) {
        std::size_t i = 0;
        if (!g.box.degenerate(j)) {
            double t = std::floor((x[j] - g.box.lo[j]) / g.edge[j]);
            i = static_cast<std::size_t>(std::clamp(t, 0.0, static_cast<double>(g.n[j] - 1)));
        }
        flat += i * g.stride[j];
    }
    return flat;
}

double EnvelopeGrid::dist_to_centre(const Grid& g, std::size_t c, std::span<const double> x) const {
    double s = 0;
    for (std::size_t j = 0; j < g.n.size(); ++j) {
        double mid = g.box.lo[j];
        if (!g.box.degenerate(j)) {
            std::size_t i = (c / g.stride[j]) % g.n[j];
            double lo = g.box.lo[j] + g.edge[j] * static_cast<double>(i);
            double hi = i + 1 == g.n[j] ? g.box.hi[j] : lo + g.edge[j];
            mid = 0.5 * (lo + hi);
        }
        double t = x[j] - mid;
        s += t * t;
    }
    return std::sqrt(s);
}

// The trees hold values pre-shifted by the full-cell correction, chosen so
// that a fully covered cell reproduces the exact 0 or 1 of the target and
// sink and never leaves [0, 1]. Partially covered cells then receive the
// larger half-diameter correction, which stays sound.
std::int64_t EnvelopeGrid::eff_lower(const Grid& g, std::size_t c) const {
    std::uint8_t k = g.kind[c];
    if (k & kFullTarget) return fixed_down(1.0 + g.rms);
    if (k & (kFullSink | kPartSink)) return fixed_down(g.rms);
    return fixed_down(std::max(g.lower[c], g.rms));
}

std::int64_t EnvelopeGrid::eff_upper(const Grid& g, std::size_t c) const {
    std::uint8_t k = g.kind[c];
    if (k & kFullSink) return fixed_up(-g.rms);
    if (k & (kFullTarget | kPartTarget)) return fixed_up(1.0 - g.rms);
    double u = 0;
    for (std::size_t a = 0; a < n_actions_; ++a) u = std::max(u, g.upper[a * g.total + c]);
    return fixed_up(std::min(u, 1.0 - g.rms));
}

void EnvelopeGrid::fenwick_add(std::vector<std::int64_t>& f, std::size_t row_start, std::size_t len, std::size_t i,
                               std::int64_t delta) {
    for (std::size_t k = i + 1; k <= len; k += k & (~k + 1)) f[row_start + k - 1] += delta;
}

std::int64_t EnvelopeGrid::fenwick_prefix(const std::vector<std::int64_t>& f, std::size_t row_start, std::size_t i) {
    // Sum of entries 0..i-1.
    std::int64_t s = 0;
    for (std::size_t k = i; k > 0; k -= k & (~k + 1)) s += f[row_start + k - 1];
    return s;
}

void EnvelopeGrid::absorb(const SampleRecord& r) {
    if (r.region != kFreeRegion) return;
    Grid* gp = grid_for(r.state.tag);
    if (!gp) return;
    Grid& g = *gp;
    if (r.action.tag < 0 || static_cast<std::size_t>(r.action.tag) >= action_index_.size() ||
        action_index_[static_cast<std::size_t>(r.action.tag)] < 0)
        return;
    const auto ai = static_cast<std::size_t>(action_index_[static_cast<std::size_t>(r.action.tag)]);
    const std::span<const double> x = r.state.coords;
    const std::size_t d = g.n.size();
    const std::size_t start = cell_of(g, x);
    std::vector<std::size_t> queue;

    auto flood = [&](auto&& improve) {
        if (++g.epoch == 0) {
            std::fill(g.stamp.begin(), g.stamp.end(), 0);
            g.epoch = 1;
        }
        queue.clear();
        queue.push_back(start);
        g.stamp[start] = g.epoch;
        for (std::size_t head = 0; head < queue.size(); ++head) {
            std::size_t c = queue[head];
            if (!improve(c) && c != start) continue;
            for (std::size_t j = 0; j < d; ++j) {
                if (g.n[j] == 1) continue;
                std::size_t i = (c / g.stride[j]) % g.n[j];
                if (i > 0 && g.stamp[c - g.stride[j]] != g.epoch) {
                    g.stamp[c - g.stride[j]] = g.epoch;
                    queue.push_back(c - g.stride[j]);
                }
                if (i + 1 < g.n[j] && g.stamp[c + g.stride[j]] != g.epoch) {
                    g.stamp[c + g.stride[j]] = g.epoch;
                    queue.push_back(c + g.stride[j]);
                }
            }
        }
    };

    if (r.lower > 0) {
        flood([&](std::size_t c) {
            double v = r.lower - lipschitz_ * dist_to_centre(g, c, x);
            if (!(v > g.lower[c])) return false;
            std::int64_t before = eff_lower(g, c);
            g.lower[c] = v;
            std::int64_t delta = eff_lower(g, c) - before;
            if (delta) fenwick_add(g.fen_lower, (c / g.row_len) * g.row_len, g.row_len, c % g.row_len, delta);
            return true;
        });
    }
    if (r.upper < 1) {
        flood([&](std::size_t c) {
            double v = r.upper + lipschitz_ * dist_to_centre(g, c, x);
            double& slot = g.upper[ai * g.total + c];
            if (!(v < slot)) return false;
            std::int64_t before = eff_upper(g, c);
            slot = v;
            std::int64_t delta = eff_upper(g, c) - before;
            if (delta) fenwick_add(g.fen_upper, (c / g.row_len) * g.row_len, g.row_len, c % g.row_len, delta);
            return true;
        });
    }
}

bool EnvelopeGrid::spans(const Grid& g, const Box& box, std::vector<AxisSpan>& out) const {
    const std::size_t d = g.n.size();
    out.assign(d, {});
    for (std::size_t j = 0; j < d; ++j) {
        AxisSpan& s = out[j];
        if (g.box.degenerate(j)) {
            s.first = 0;
            s.weight = {1.0};
            s.full = {1};
            continue;
        }
        double lo = std::clamp(box.lo[j], g.box.lo[j], g.box.hi[j]);
        double hi = std::clamp(box.hi[j], g.box.lo[j], g.box.hi[j]);
        auto index = [&](double v) {
            double t = std::floor((v - g.box.lo[j]) / g.edge[j]);
            return static_cast<std::size_t>(std::clamp(t, 0.0, static_cast<double>(g.n[j] - 1)));
        };
        if (!(hi > lo)) {
            s.first = index(lo);
            s.weight = {1.0};
            s.full = {0};
            continue;
        }
        std::size_t first = index(lo), last = index(hi);
        // A box ending exactly on a cell edge does not touch the next cell.
        if (last > first && g.box.lo[j] + g.edge[j] * static_cast<double>(last) >= hi) --last;
        s.first = first;
        s.weight.resize(last - first + 1);
        s.full.resize(last - first + 1);
        double ext = hi - lo;
        for (std::size_t i = first; i <= last; ++i) {
            double clo = g.box.lo[j] + g.edge[j] * static_cast<double>(i);
            double chi = i + 1 == g.n[j] ? g.box.hi[j] : clo + g.edge[j];
            s.weight[i - first] = std::max(0.0, std::min(chi, hi) - std::max(clo, lo)) / ext;
            s.full[i - first] = clo >= lo && chi <= hi;
        }
    }
    return true;
}

double EnvelopeGrid::full_weight(const Grid& g, const std::vector<AxisSpan>& sp) const {
    double w = 1;
    for (std::size_t j = 0; j < sp.size(); ++j) {
        if (g.box.degenerate(j)) continue;
        double axis = 0;
        for (std::size_t k = 0; k < sp[j].weight.size(); ++k)
            if (sp[j].full[k]) axis += sp[j].weight[k];
        w *= axis;
    }
    return w;
}

double EnvelopeGrid::finish(const Grid& g, const std::vector<AxisSpan>& sp, double total, Direction dir) const {
    double shift = g.half_diam - (g.half_diam - g.rms) * full_weight(g, sp);
    double v = total / kScale;
    return dir == Direction::under ? std::max(0.0, v - shift - kRoundingMargin)
                                   : std::min(1.0, v + shift + kRoundingMargin);
}

std::optional<double> EnvelopeGrid::mean(int tag, const Box& box, Direction dir) const {
    const Grid* gp = grid_for(tag);
    if (!gp) return std::nullopt;
    const Grid& g = *gp;
    std::vector<AxisSpan> sp;
    spans(g, box, sp);
    const std::size_t d = g.n.size();
    const auto& fen = dir == Direction::under ? g.fen_lower : g.fen_upper;
    const AxisSpan& last = sp[d - 1];
    const std::size_t len = last.weight.size();

    auto point_value = [&](std::size_t c) -> double {
        std::size_t row_start = (c / g.row_len) * g.row_len, col = c % g.row_len;
        return static_cast<double>(fenwick_prefix(fen, row_start, col + 1) - fenwick_prefix(fen, row_start, col));
    };

    double total = 0;
    std::vector<std::size_t> idx(d, 0);
    while (true) {
        double w = 1;
        std::size_t base = 0;
        for (std::size_t j = 0; j + 1 < d; ++j) {
            w *= sp[j].weight[idx[j]];
            base += (sp[j].first + idx[j]) * g.stride[j];
        }
        if (w > 0) {
            std::size_t row_start = base;  // last axis has stride 1
            double row = 0;
            if (len == 1) {
                row = last.weight[0] * point_value(base + last.first);
            } else {
                row += last.weight.front() * point_value(base + last.first);
                row += last.weight.back() * point_value(base + last.first + len - 1);
                if (len > 2) {
                    // Interior cells all carry the same weight.
                    std::int64_t s = fenwick_prefix(fen, row_start, last.first + len - 1) -
                                     fenwick_prefix(fen, row_start, last.first + 1);
                    row += last.weight[1] * static_cast<double>(s);
                }
            }
            total += w * row;
        }
        std::size_t j = 0;
        while (j + 1 < d && ++idx[j] == sp[j].weight.size()) idx[j++] = 0;
        if (j + 1 >= d) break;
    }
    return finish(g, sp, total, dir);
}

std::optional<double> EnvelopeGrid::mean_direct(int tag, const Box& box, Direction dir, bool parallel) const {
    const Grid* gp = grid_for(tag);
    if (!gp) return std::nullopt;
    const Grid& g = *gp;
    std::vector<AxisSpan> sp;
    spans(g, box, sp);
    std::vector<double> values(g.total);
    for (std::size_t c = 0; c < g.total; ++c)
        values[c] = static_cast<double>(dir == Direction::under ? eff_lower(g, c) : eff_upper(g, c));
    std::vector<std::size_t> first;
    std::vector<std::vector<double>> weights;
    for (const auto& s : sp) {
        first.push_back(s.first);
        weights.push_back(s.weight);
    }
    double total = parallel ? kernels::parallel::weighted_box_sum(values, g.n, first, weights)
                            : kernels::serial::weighted_box_sum(values, g.n, first, weights);
    return finish(g, sp, total, dir);
}

double EnvelopeGrid::cell_bound(const StatePoint& s, Direction dir) const {
    const Grid* gp = grid_for(s.tag);
    if (!gp) throw UsageError("no grid for tag " + std::to_string(s.tag));
    const Grid& g = *gp;
    std::size_t c = cell_of(g, s.coords);
    std::uint8_t k = g.kind[c];
    if (dir == Direction::under) {
        if (k & kFullTarget) return 1.0;
        if (k & (kFullSink | kPartSink)) return 0.0;
        return std::max(0.0, g.lower[c] - g.half_diam);
    }
    if (k & kFullSink) return 0.0;
    if (k & (kFullTarget | kPartTarget)) return 1.0;
    double u = 0;
    for (std::size_t a = 0; a < n_actions_; ++a) u = std::max(u, g.upper[a * g.total + c]);
    return std::min(1.0, u + g.half_diam);
}

}  // namespace lipreach
