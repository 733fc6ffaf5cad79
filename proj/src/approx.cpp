#include "lipreach/approx.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lipreach/errors.hpp"

namespace lipreach {

namespace {

// Cell edge so that L * (half diagonal) <= precision / 4.
double cell_edge(double lipschitz, double precision, std::size_t axes) {
    if (lipschitz <= 0 || axes == 0) return std::numeric_limits<double>::infinity();
    double radius = precision / (4 * lipschitz);
    return 2 * radius / std::sqrt(static_cast<double>(axes));
}

std::vector<std::size_t> cells_per_axis(const Box& box, double edge) {
    std::vector<std::size_t> n(box.dim(), 1);
    for (std::size_t j = 0; j < box.dim(); ++j)
        if (!box.degenerate(j) && std::isfinite(edge))
            n[j] = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(box.extent(j) / edge - 1e-9)));
    return n;
}

double count_cells(const TransitionKernel& k, double lipschitz, double precision) {
    double total = 0;
    for (const auto& b : k.boxes()) {
        double edge = cell_edge(lipschitz, precision, b.box.nondegenerate_axes());
        double c = 1;
        for (std::size_t n : cells_per_axis(b.box, edge)) c *= static_cast<double>(n);
        total += c;
    }
    return total;
}

}  // namespace

double approx_max(const ActionSet& actions, const std::function<double(const ActionPoint&)>& f,
                  const ApproxRequest& req) {
    if (actions.is_finite()) {
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& a : actions.points()) best = std::max(best, f(a));
        return best;
    }
    if (!(req.precision > 0)) throw UsageError("approx_max: precision must be positive");
    if (req.lipschitz <= 0) return f(actions.canonical());
    // Covering radius h with L * h <= precision.
    double h = req.precision / req.lipschitz;
    std::vector<ActionPoint> net = actions.net(h);
    if (net.empty()) throw UsageError("approx_max: empty net");
    if (net.size() > req.budget)
        throw BudgetExceeded("approx_max: net of " + std::to_string(net.size()) + " points exceeds the budget",
                             req.precision * std::pow(static_cast<double>(net.size()) / static_cast<double>(req.budget),
                                                      1.0 / static_cast<double>(std::max<std::size_t>(1, actions.box_bounds().nondegenerate_axes()))));
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& a : net) best = std::max(best, f(a));
    return req.direction == Direction::under ? best : best + req.lipschitz * h;
}

LipschitzIntegrand::LipschitzIntegrand(std::function<double(const StatePoint&)> f, double lipschitz, double floor,
                                       double cap)
    : f_(std::move(f)), lipschitz_(lipschitz), floor_(floor), cap_(cap) {}

double LipschitzIntegrand::point(const StatePoint& s, Direction) const { return f_(s); }

double LipschitzIntegrand::cell(int tag, const Box& cell, Direction dir) const {
    StatePoint c{cell.center(), tag};
    double r = 0.5 * cell.diameter();
    double v = f_(c);
    return dir == Direction::under ? std::max(floor_, v - lipschitz_ * r) : std::min(cap_, v + lipschitz_ * r);
}

std::size_t quadrature_cells(const TransitionKernel& kernel, double lipschitz, double precision) {
    double c = count_cells(kernel, lipschitz, precision);
    return c > 1e18 ? std::numeric_limits<std::size_t>::max() : static_cast<std::size_t>(c);
}

double approx_expectation(const TransitionKernel& kernel, const Integrand& g, const ApproxRequest& req) {
    if (!(req.precision > 0)) throw UsageError("approx_expectation: precision must be positive");
    const Direction dir = req.direction;
    const double quad = 0.5 * req.precision;  // half for quadrature, half for g's own evaluation
    const double L = g.lipschitz();

    double total = 0;
    for (const auto& a : kernel.atoms()) total += a.mass * g.point(a.point, dir);

    std::vector<const BoxPiece*> generic;
    for (const auto& b : kernel.boxes()) {
        if (auto mean = g.box_mean(b.tag, b.box, dir, quad)) total += b.mass * *mean;
        else generic.push_back(&b);
    }
    if (!generic.empty()) {
        double cells = 0;
        for (const BoxPiece* b : generic) {
            double edge = cell_edge(L, req.precision, b->box.nondegenerate_axes());
            double c = 1;
            for (std::size_t n : cells_per_axis(b->box, edge)) c *= static_cast<double>(n);
            cells += c;
        }
        if (cells > static_cast<double>(req.budget)) {
            // Smallest precision whose cell count fits, by bisection on a log scale.
            double lo = req.precision, hi = req.precision;
            auto count = [&](double p) {
                double c = 0;
                for (const BoxPiece* b : generic) {
                    double e = cell_edge(L, p, b->box.nondegenerate_axes());
                    double cc = 1;
                    for (std::size_t n : cells_per_axis(b->box, e)) cc *= static_cast<double>(n);
                    c += cc;
                }
                return c;
            };
            while (count(hi) > static_cast<double>(req.budget)) hi *= 2;
            for (int it = 0; it < 60; ++it) {
                double mid = std::sqrt(lo * hi);
                if (count(mid) > static_cast<double>(req.budget)) lo = mid;
                else hi = mid;
            }
            throw BudgetExceeded("approx_expectation: " + std::to_string(static_cast<long long>(cells)) +
                                     " cells exceed the evaluation budget",
                                 hi);
        }
        for (const BoxPiece* b : generic) {
            const Box& box = b->box;
            const std::size_t d = box.dim();
            double edge = cell_edge(L, req.precision, box.nondegenerate_axes());
            std::vector<std::size_t> n = cells_per_axis(box, edge);
            std::size_t count = 1;
            for (std::size_t v : n) count *= v;
            Box cell{box.lo, box.hi};
            std::vector<std::size_t> idx(d, 0);
            double sum = 0;
            for (std::size_t k = 0; k < count; ++k) {
                double frac = 1;
                for (std::size_t j = 0; j < d; ++j) {
                    if (box.degenerate(j)) continue;
                    double step = box.extent(j) / static_cast<double>(n[j]);
                    cell.lo[j] = box.lo[j] + step * static_cast<double>(idx[j]);
                    cell.hi[j] = idx[j] + 1 == n[j] ? box.hi[j] : box.lo[j] + step * static_cast<double>(idx[j] + 1);
                    frac *= (cell.hi[j] - cell.lo[j]) / box.extent(j);
                }
                sum += frac * g.cell(b->tag, cell, dir);
                for (std::size_t j = 0; j < d && ++idx[j] == n[j]; ++j) idx[j] = 0;
            }
            total += b->mass * sum;
        }
    }
    return dir == Direction::under ? std::max(0.0, total - kRoundingMargin) : total + kRoundingMargin;
}

}  // namespace lipreach
