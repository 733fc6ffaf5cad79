#include "lipreach/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <unordered_map>

#include "lipreach/errors.hpp"

namespace lipreach {

void FiniteMdp::validate() const {
    const std::size_t n = size();
    if (target.size() != n || sink.size() != n) throw UsageError("target/sink flags do not match the state count");
    if (n == 0) throw UsageError("finite MDP has no states");
    if (initial >= n) throw UsageError("initial state out of range");
    for (std::size_t s = 0; s < n; ++s) {
        if (target[s] && sink[s]) throw UsageError("state " + std::to_string(s) + " is both target and sink");
        if (!target[s] && !sink[s] && rows[s].empty())
            throw UsageError("non-terminal state " + std::to_string(s) + " has no actions");
        for (const Row& r : rows[s]) {
            double total = 0;
            for (auto [t, p] : r) {
                if (t >= n) throw UsageError("successor index out of range in state " + std::to_string(s));
                if (!(p >= 0)) throw UsageError("negative probability in state " + std::to_string(s));
                total += p;
            }
            if (std::abs(total - 1.0) > 1e-12)
                throw UsageError("row of state " + std::to_string(s) + " sums to " + std::to_string(total));
        }
    }
}

kernels::CsrMdp FiniteMdp::csr() const {
    kernels::CsrMdp c;
    c.target = target;
    c.sink = sink;
    c.action_begin.push_back(0);
    c.row_begin.push_back(0);
    for (std::size_t s = 0; s < size(); ++s) {
        for (const Row& r : rows[s]) {
            for (auto [t, p] : r) {
                c.successor.push_back(t);
                c.probability.push_back(p);
            }
            c.row_begin.push_back(c.successor.size());
        }
        c.action_begin.push_back(c.row_begin.size() - 1);
    }
    return c;
}

namespace {

// Iterative Tarjan over the states in `alive`, using only actions flagged in `keep`.
std::vector<int> strongly_connected(const FiniteMdp& m, const std::vector<char>& alive,
                                    const std::vector<std::vector<char>>& keep) {
    const std::size_t n = m.size();
    std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
    std::vector<char> on_stack(n, 0);
    std::vector<std::uint32_t> stack;
    int counter = 0, comps = 0;
    struct Frame {
        std::uint32_t v;
        std::size_t action;
        std::size_t succ;
    };
    for (std::uint32_t root = 0; root < n; ++root) {
        if (!alive[root] || index[root] >= 0) continue;
        std::vector<Frame> call{{root, 0, 0}};
        index[root] = low[root] = counter++;
        stack.push_back(root);
        on_stack[root] = 1;
        while (!call.empty()) {
            Frame& f = call.back();
            const auto& rows = m.rows[f.v];
            bool descended = false;
            while (f.action < rows.size()) {
                if (!keep[f.v][f.action]) {
                    ++f.action;
                    f.succ = 0;
                    continue;
                }
                const auto& row = rows[f.action];
                if (f.succ >= row.size()) {
                    ++f.action;
                    f.succ = 0;
                    continue;
                }
                std::uint32_t w = row[f.succ++].first;
                if (!alive[w]) continue;
                if (index[w] < 0) {
                    index[w] = low[w] = counter++;
                    stack.push_back(w);
                    on_stack[w] = 1;
                    call.push_back({w, 0, 0});
                    descended = true;
                    break;
                }
                if (on_stack[w]) low[f.v] = std::min(low[f.v], index[w]);
            }
            if (descended) continue;
            std::uint32_t v = f.v;
            if (low[v] == index[v]) {
                while (true) {
                    std::uint32_t w = stack.back();
                    stack.pop_back();
                    on_stack[w] = 0;
                    comp[w] = comps;
                    if (w == v) break;
                }
                ++comps;
            }
            call.pop_back();
            if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
        }
    }
    return comp;
}

}  // namespace

std::vector<std::vector<std::uint32_t>> maximal_end_components(const FiniteMdp& m) {
    const std::size_t n = m.size();
    std::vector<char> alive(n);
    std::vector<std::vector<char>> keep(n);
    for (std::size_t s = 0; s < n; ++s) {
        alive[s] = !m.target[s] && !m.sink[s];
        keep[s].assign(m.rows[s].size(), alive[s]);
    }
    while (true) {
        std::vector<int> comp = strongly_connected(m, alive, keep);
        bool changed = false;
        for (std::size_t s = 0; s < n; ++s) {
            if (!alive[s]) continue;
            bool any = false;
            for (std::size_t a = 0; a < m.rows[s].size(); ++a) {
                if (!keep[s][a]) continue;
                for (auto [t, p] : m.rows[s][a]) {
                    if (p > 0 && (!alive[t] || comp[t] != comp[s])) {
                        keep[s][a] = 0;
                        changed = true;
                        break;
                    }
                }
                any = any || keep[s][a];
            }
            if (!any) {
                alive[s] = 0;
                changed = true;
            }
        }
        if (!changed) {
            std::unordered_map<int, std::vector<std::uint32_t>> groups;
            for (std::uint32_t s = 0; s < n; ++s)
                if (alive[s]) groups[comp[s]].push_back(s);
            std::vector<std::vector<std::uint32_t>> out;
            for (auto& [c, states] : groups) out.push_back(std::move(states));
            std::sort(out.begin(), out.end());
            return out;
        }
    }
}

bool is_absorbing(const FiniteMdp& m) { return maximal_end_components(m).empty(); }

ViResult exact_value_iteration(const FiniteMdp& m, double tol, bool parallel) {
    m.validate();
    const std::size_t n = m.size();
    const kernels::CsrMdp c = m.csr();
    auto sweep = [&](std::span<const double> in, std::span<double> out) {
        return parallel ? kernels::parallel::bellman_sweep(c, in, out) : kernels::serial::bellman_sweep(c, in, out);
    };
    ViResult r;
    r.absorbing = is_absorbing(m);
    std::vector<double> lo(n), next(n);
    for (std::size_t s = 0; s < n; ++s) lo[s] = m.target[s] ? 1.0 : 0.0;
    if (!r.absorbing) {
        r.warnings.push_back("end component outside T and R: upper iteration skipped");
        while (true) {
            double change = sweep(lo, next);
            lo.swap(next);
            ++r.sweeps;
            if (change < tol * 1e-3) break;
        }
        r.lower = std::move(lo);
        return r;
    }
    std::vector<double> up(n), next_up(n);
    for (std::size_t s = 0; s < n; ++s) up[s] = m.sink[s] ? 0.0 : 1.0;
    while (true) {
        double cl = sweep(lo, next);
        sweep(up, next_up);
        lo.swap(next);
        up.swap(next_up);
        ++r.sweeps;
        double gap = 0;
        for (std::size_t s = 0; s < n; ++s) gap = std::max(gap, up[s] - lo[s]);
        if (gap < tol && cl < tol * 1e-3) break;
    }
    r.lower = std::move(lo);
    r.upper = std::move(up);
    r.bracketed = true;
    return r;
}

std::vector<double> n_step_dp(const FiniteMdp& m, int n) {
    if (n < 0) throw UsageError("horizon must be non-negative");
    m.validate();
    const kernels::CsrMdp c = m.csr();
    std::vector<double> v(m.size()), next(m.size());
    for (std::size_t s = 0; s < m.size(); ++s) v[s] = m.target[s] ? 1.0 : 0.0;
    for (int i = 0; i < n; ++i) {
        kernels::serial::bellman_sweep(c, v, next);
        v.swap(next);
    }
    return v;
}

std::vector<double> max_expected_steps(const FiniteMdp& m, double tol, std::size_t max_sweeps) {
    const std::size_t n = m.size();
    const double inf = std::numeric_limits<double>::infinity();
    if (!is_absorbing(m)) return std::vector<double>(n, inf);
    std::vector<double> t(n, 0.0), next(n, 0.0);
    for (std::size_t it = 0; it < max_sweeps; ++it) {
        double change = 0, top = 0;
        for (std::size_t s = 0; s < n; ++s) {
            if (m.target[s] || m.sink[s]) continue;
            double best = 0;
            for (const auto& row : m.rows[s]) {
                double e = 0;
                for (auto [u, p] : row) e += p * t[u];
                best = std::max(best, e);
            }
            next[s] = 1 + best;
            change = std::max(change, next[s] - t[s]);
            top = std::max(top, next[s]);
        }
        t.swap(next);
        if (change < tol * std::max(1.0, top)) {
            // Geometric tail: the increments shrink at least by the last ratio.
            return t;
        }
    }
    return std::vector<double>(n, inf);
}

FiniteMdp discount(const FiniteMdp& m, double gamma) {
    if (!(gamma > 0 && gamma <= 1)) throw UsageError("gamma must lie in (0, 1]");
    FiniteMdp out = m;
    auto sink = static_cast<std::uint32_t>(m.size());
    out.rows.emplace_back();
    out.target.push_back(0);
    out.sink.push_back(1);
    for (std::size_t s = 0; s < m.size(); ++s) {
        if (m.target[s]) continue;
        for (auto& row : out.rows[s]) {
            for (auto& [t, p] : row) p *= gamma;
            row.emplace_back(sink, 1 - gamma);
        }
    }
    return out;
}

std::size_t Discretization::index_of(const StatePoint& s) const {
    for (const Axis& ax : layout) {
        if (ax.tag != s.tag) continue;
        std::size_t flat = 0, stride = 1;
        for (std::size_t j = ax.n.size(); j-- > 0;) {
            std::size_t i = 0;
            if (ax.n[j] > 1) {
                double t = std::round((s.coords[j] - ax.box.lo[j]) / ax.step[j]);
                i = static_cast<std::size_t>(std::clamp(t, 0.0, static_cast<double>(ax.n[j] - 1)));
            }
            flat += i * stride;
            stride *= ax.n[j];
        }
        return ax.offset + flat;
    }
    throw UsageError("state tag " + std::to_string(s.tag) + " has no grid");
}

std::pair<double, double> Discretization::certified(const std::vector<double>& values, std::size_t i) const {
    double half = delta * tau[i];
    if (!std::isfinite(half)) return {0.0, 1.0};
    return {std::max(0.0, values[i] - half), std::min(1.0, values[i] + half)};
}

Discretization discretize(const MdpModel& model, double h) {
    if (!(h > 0)) throw UsageError("spacing must be positive");
    Discretization out;
    out.spacing = h;
    const std::size_t d = model.state_dim();
    for (const auto& comp : model.components) {
        Discretization::Axis ax;
        ax.tag = comp.tag;
        ax.offset = out.points.size();
        ax.box = comp.box;
        ax.n.assign(d, 1);
        ax.step.assign(d, 0.0);
        for (std::size_t j = 0; j < d; ++j) {
            if (comp.box.degenerate(j)) continue;
            double cells = comp.box.extent(j) / h;
            if (std::abs(cells - std::round(cells)) > 1e-9)
                throw UnsupportedModel("spacing does not divide the extent of component " + std::to_string(comp.tag));
            ax.n[j] = static_cast<std::size_t>(std::round(cells)) + 1;
            ax.step[j] = comp.box.extent(j) / static_cast<double>(ax.n[j] - 1);
        }
        std::size_t total = 1;
        for (auto v : ax.n) total *= v;
        std::vector<std::size_t> idx(d, 0);
        for (std::size_t k = 0; k < total; ++k) {
            StatePoint p{std::vector<double>(d), comp.tag};
            for (std::size_t j = 0; j < d; ++j) p.coords[j] = comp.box.lo[j] + ax.step[j] * static_cast<double>(idx[j]);
            out.points.push_back(std::move(p));
            for (std::size_t j = d; j-- > 0;) {
                if (++idx[j] < ax.n[j]) break;
                idx[j] = 0;
            }
        }
        out.layout.push_back(std::move(ax));
    }
    // Half-diagonal of the largest cell.
    double r2 = 0;
    for (std::size_t j = 0; j < d; ++j) {
        double m = 0;
        for (const auto& ax : out.layout) m = std::max(m, 0.5 * ax.step[j]);
        r2 += m * m;
    }
    out.cell_radius = std::sqrt(r2);

    const std::size_t n = out.points.size();
    auto cell_of_point = [&](std::size_t i) {
        const StatePoint& p = out.points[i];
        Box b{p.coords, p.coords};
        for (const auto& ax : out.layout) {
            if (ax.tag != p.tag) continue;
            for (std::size_t j = 0; j < d; ++j) {
                if (ax.n[j] <= 1) continue;
                b.lo[j] = std::max(ax.box.lo[j], p.coords[j] - 0.5 * ax.step[j]);
                b.hi[j] = std::min(ax.box.hi[j], p.coords[j] + 0.5 * ax.step[j]);
            }
        }
        return b;
    };
    std::vector<char> mixed(n, 0);
    FiniteMdp& m = out.mdp;
    m.rows.resize(n);
    m.target.assign(n, 0);
    m.sink.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        m.target[i] = model.is_target(out.points[i]);
        m.sink[i] = !m.target[i] && model.is_sink(out.points[i]);
        Box cell = cell_of_point(i);
        Overlap t = model.target.classify(out.points[i].tag, cell), s = model.sink.classify(out.points[i].tag, cell);
        mixed[i] = t == Overlap::partial || s == Overlap::partial;
    }
    m.initial = out.index_of(model.initial);

    double action_slack = 0;
    std::vector<double> acc(n, 0.0);
    std::vector<std::uint32_t> touched;
    for (std::size_t i = 0; i < n; ++i) {
        if (m.target[i] || m.sink[i]) continue;
        const StatePoint& s = out.points[i];
        ActionSet acts = model.actions(s);
        std::vector<ActionPoint> as = acts.is_finite() ? acts.points() : acts.net(h);
        if (!acts.is_finite()) action_slack = std::max(action_slack, model.lipschitz_pair * h);
        for (const auto& a : as) {
            TransitionKernel k = model.kernel(s, a);
            touched.clear();
            auto deposit = [&](std::size_t j, double mass) {
                if (mass <= 0) return;
                if (acc[j] == 0) touched.push_back(static_cast<std::uint32_t>(j));
                acc[j] += mass;
            };
            for (const auto& at : k.atoms()) deposit(out.index_of(at.point), at.mass);
            for (const auto& b : k.boxes()) {
                const Discretization::Axis* ax = nullptr;
                for (const auto& cand : out.layout)
                    if (cand.tag == b.tag) ax = &cand;
                if (!ax) throw UnsupportedModel("kernel lands on an unknown component");
                // Per axis: grid indices and the fraction of the box in each cell.
                std::vector<std::size_t> first(d);
                std::vector<std::vector<double>> frac(d);
                for (std::size_t j = 0; j < d; ++j) {
                    if (ax->n[j] <= 1 || b.box.degenerate(j)) {
                        double t = ax->n[j] <= 1 ? 0.0 : std::round((b.box.lo[j] - ax->box.lo[j]) / ax->step[j]);
                        first[j] = static_cast<std::size_t>(std::clamp(t, 0.0, static_cast<double>(ax->n[j] - 1)));
                        frac[j] = {1.0};
                        continue;
                    }
                    double st = ax->step[j], base = ax->box.lo[j];
                    auto lo_i = static_cast<std::size_t>(std::clamp(std::round((b.box.lo[j] - base) / st), 0.0, static_cast<double>(ax->n[j] - 1)));
                    auto hi_i = static_cast<std::size_t>(std::clamp(std::round((b.box.hi[j] - base) / st), 0.0, static_cast<double>(ax->n[j] - 1)));
                    first[j] = lo_i;
                    double ext = b.box.extent(j);
                    for (std::size_t g = lo_i; g <= hi_i; ++g) {
                        double clo = std::max(ax->box.lo[j], base + st * (static_cast<double>(g) - 0.5));
                        double chi = std::min(ax->box.hi[j], base + st * (static_cast<double>(g) + 0.5));
                        frac[j].push_back(std::max(0.0, std::min(chi, b.box.hi[j]) - std::max(clo, b.box.lo[j])) / ext);
                    }
                }
                std::vector<std::size_t> idx(d, 0);
                while (true) {
                    double w = b.mass;
                    std::size_t flat = 0, stride = 1;
                    for (std::size_t j = d; j-- > 0;) {
                        w *= frac[j][idx[j]];
                        flat += (first[j] + idx[j]) * stride;
                        stride *= ax->n[j];
                    }
                    deposit(ax->offset + flat, w);
                    std::size_t j = 0;
                    while (j < d && ++idx[j] == frac[j].size()) idx[j++] = 0;
                    if (j == d) break;
                }
            }
            FiniteMdp::Row row;
            double total = 0, free_mass = 0, mixed_mass = 0;
            std::sort(touched.begin(), touched.end());
            for (auto j : touched) {
                row.emplace_back(j, acc[j]);
                total += acc[j];
                if (mixed[j]) mixed_mass += acc[j];
                else if (!m.target[j] && !m.sink[j]) free_mass += acc[j];
                acc[j] = 0;
            }
            for (auto& [j, p] : row) p /= total;  // removes accumulated rounding
            out.delta = std::max(out.delta, model.lipschitz_state * out.cell_radius * free_mass + mixed_mass);
            m.rows[i].push_back(std::move(row));
        }
    }
    out.delta += action_slack;
    out.tau = max_expected_steps(m);
    return out;
}

namespace closed_form {

double discounted_self_loop(double p, double gamma) {
    // V = gamma p + gamma (1 - p) V
    return gamma * p / (1 - gamma * (1 - p));
}

double n_step_hit(double p, int n) { return 1 - std::pow(1 - p, n); }

double frequency_value(double s, int k, bool sine) {
    double x = s * k;
    x -= std::floor(x);
    if (x == 0 && s > 0) x = 1;
    if (sine) return 0.5 * (1 - std::cos(2 * std::numbers::pi * x));
    return 1 - std::abs(2 * x - 1);
}

}  // namespace closed_form

}  // namespace lipreach
