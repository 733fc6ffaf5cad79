#include "lipreach/kernel.hpp"

#include <algorithm>
#include <cmath>

#include "lipreach/errors.hpp"

namespace lipreach {

TransitionKernel TransitionKernel::dirac(StatePoint s) {
    TransitionKernel k;
    k.atoms_.push_back({std::move(s), 1.0});
    return k;
}

TransitionKernel TransitionKernel::discrete(std::vector<Atom> atoms) {
    TransitionKernel k;
    for (auto& a : atoms) {
        if (!(a.mass >= 0)) throw UsageError("negative probability in discrete kernel");
        if (a.mass > 0) k.atoms_.push_back(std::move(a));
    }
    return k;
}

TransitionKernel TransitionKernel::uniform(int tag, Box box) {
    for (std::size_t j = 0; j < box.dim(); ++j)
        if (box.hi[j] < box.lo[j]) throw UsageError("empty box in uniform kernel");
    TransitionKernel k;
    k.boxes_.push_back({tag, std::move(box), 1.0});
    return k;
}

TransitionKernel TransitionKernel::clipped_uniform(int tag, const Box& raw, const Box& bounds) {
    const std::size_t d = raw.dim();
    if (bounds.dim() != d) throw UsageError("clipped_uniform: dimension mismatch");
    // Per axis: up to three pieces (below, inside, above) with their weights.
    struct Part {
        double lo, hi, w;
    };
    std::vector<std::vector<Part>> axes(d);
    for (std::size_t j = 0; j < d; ++j) {
        double a = raw.lo[j], b = raw.hi[j], L = bounds.lo[j], H = bounds.hi[j];
        if (!(b > a)) {
            double x = std::clamp(a, L, H);
            axes[j].push_back({x, x, 1.0});
            continue;
        }
        double w = b - a;
        if (a < L) axes[j].push_back({L, L, (std::min(b, L) - a) / w});
        double ilo = std::max(a, L), ihi = std::min(b, H);
        if (ihi > ilo) axes[j].push_back({ilo, ihi, (ihi - ilo) / w});
        if (b > H) axes[j].push_back({H, H, (b - std::max(a, H)) / w});
    }
    TransitionKernel k;
    std::vector<std::size_t> idx(d, 0);
    while (true) {
        double w = 1;
        BoxPiece piece{tag, Box{std::vector<double>(d), std::vector<double>(d)}, 0};
        for (std::size_t j = 0; j < d; ++j) {
            const Part& p = axes[j][idx[j]];
            w *= p.w;
            piece.box.lo[j] = p.lo;
            piece.box.hi[j] = p.hi;
        }
        if (w > 0) {
            if (piece.box.nondegenerate_axes() == 0) {
                k.atoms_.push_back({StatePoint{piece.box.lo, tag}, w});
            } else {
                piece.mass = w;
                k.boxes_.push_back(std::move(piece));
            }
        }
        std::size_t j = 0;
        while (j < d && ++idx[j] == axes[j].size()) idx[j++] = 0;
        if (j == d) break;
    }
    return k;
}

TransitionKernel TransitionKernel::mixture(const std::vector<std::pair<double, TransitionKernel>>& parts) {
    TransitionKernel k;
    for (const auto& [w, part] : parts) {
        if (!(w >= 0)) throw UsageError("negative mixture weight");
        if (w > 0) k.add(part, w);
    }
    return k;
}

void TransitionKernel::add(const TransitionKernel& other, double weight) {
    for (const auto& a : other.atoms_) atoms_.push_back({a.point, a.mass * weight});
    for (const auto& b : other.boxes_) boxes_.push_back({b.tag, b.box, b.mass * weight});
}

double TransitionKernel::total_mass() const {
    double m = 0;
    for (const auto& a : atoms_) m += a.mass;
    for (const auto& b : boxes_) m += b.mass;
    return m;
}

StatePoint TransitionKernel::sample(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double u = unit(rng) * total_mass();
    for (const auto& a : atoms_) {
        if (u < a.mass) return a.point;
        u -= a.mass;
    }
    const BoxPiece* chosen = nullptr;
    for (const auto& b : boxes_) {
        chosen = &b;
        if (u < b.mass) break;
        u -= b.mass;
    }
    if (!chosen) {
        if (atoms_.empty()) throw UsageError("sampling from an empty kernel");
        return atoms_.back().point;
    }
    StatePoint s{std::vector<double>(chosen->box.dim()), chosen->tag};
    for (std::size_t j = 0; j < chosen->box.dim(); ++j) {
        double lo = chosen->box.lo[j], hi = chosen->box.hi[j];
        s.coords[j] = hi > lo ? lo + (hi - lo) * unit(rng) : lo;
    }
    return s;
}

}  // namespace lipreach
