#include "lipreach/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "lipreach/errors.hpp"

namespace lipreach {

ActionSet ActionSet::finite(std::vector<ActionPoint> points) {
    if (points.empty()) throw UsageError("action set must be non-empty");
    ActionSet s;
    s.finite_ = true;
    s.points_ = std::move(points);
    return s;
}

ActionSet ActionSet::box(Box b, int tag) {
    for (std::size_t j = 0; j < b.dim(); ++j)
        if (b.hi[j] < b.lo[j]) throw UsageError("action box is empty");
    ActionSet s;
    s.finite_ = false;
    s.box_ = std::move(b);
    s.box_tag_ = tag;
    return s;
}

bool ActionSet::contains(const ActionPoint& a) const {
    if (finite_) return std::find(points_.begin(), points_.end(), a) != points_.end();
    return a.tag == box_tag_ && box_.contains(a.coords, 1e-12);
}

std::vector<ActionPoint> ActionSet::net(double h) const {
    if (finite_) return points_;
    if (!(h > 0)) throw UsageError("net spacing must be positive");
    const std::size_t d = box_.dim();
    // Cell centres of a grid whose cells have diameter <= 2h.
    std::vector<std::size_t> n(d);
    double nd = std::max<double>(1.0, static_cast<double>(box_.nondegenerate_axes()));
    double edge = 2 * h / std::sqrt(nd);
    std::size_t total = 1;
    for (std::size_t j = 0; j < d; ++j) {
        n[j] = box_.degenerate(j) ? 1 : static_cast<std::size_t>(std::ceil(box_.extent(j) / edge));
        n[j] = std::max<std::size_t>(n[j], 1);
        total *= n[j];
    }
    std::vector<ActionPoint> out;
    out.reserve(total);
    std::vector<std::size_t> idx(d, 0);
    for (std::size_t k = 0; k < total; ++k) {
        ActionPoint a{std::vector<double>(d), box_tag_};
        for (std::size_t j = 0; j < d; ++j) {
            double step = box_.extent(j) / static_cast<double>(n[j]);
            a.coords[j] = box_.lo[j] + (static_cast<double>(idx[j]) + 0.5) * step;
        }
        out.push_back(std::move(a));
        for (std::size_t j = 0; j < d && ++idx[j] == n[j]; ++j) idx[j] = 0;
    }
    return out;
}

ActionPoint ActionSet::canonical() const {
    if (finite_) return points_.front();
    return ActionPoint{box_.center(), box_tag_};
}

int Partition::region_of(const StatePoint& s) const {
    for (std::size_t i = 0; i < regions.size(); ++i)
        if (regions[i].shape.contains(s)) return static_cast<int>(i);
    return -1;
}

std::size_t MdpModel::state_dim() const { return components.empty() ? 0 : components.front().box.dim(); }

std::size_t MdpModel::action_dim() const {
    ActionSet a = actions(initial);
    return a.is_finite() ? a.points().front().coords.size() : a.box_bounds().dim();
}

const StateComponent* MdpModel::component(int tag) const {
    for (const auto& c : components)
        if (c.tag == tag) return &c;
    return nullptr;
}

bool MdpModel::in_space(const StatePoint& s, double slack) const {
    const StateComponent* c = component(s.tag);
    return c && c->box.contains(s.coords, slack);
}

StatePoint MdpModel::sample_successor(const StatePoint& s, const ActionPoint& a, std::mt19937_64& rng) const {
    if (!actions(s).contains(a)) throw UsageError("action " + action_label(a) + " not available in " + format_point(s.coords, s.tag));
    return kernel(s, a).sample(rng);
}

std::string MdpModel::action_label(const ActionPoint& a) const {
    if (a.coords.empty() && a.tag >= 0 && static_cast<std::size_t>(a.tag) < action_names.size())
        return action_names[static_cast<std::size_t>(a.tag)];
    return format_point(a.coords, a.tag);
}

std::uint64_t fnv1a(const std::string& bytes, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string MdpModel::fingerprint() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(name + "\n" + descriptor)));
    return buf;
}

double MdpModel::max_pair_lipschitz() const {
    double c = lipschitz_pair;
    if (partition)
        for (const auto& r : partition->regions) c = std::max(c, r.lipschitz);
    return c;
}

MdpModel discount_transform(const MdpModel& model, double gamma) {
    if (!(gamma > 0 && gamma <= 1)) throw UsageError("gamma must lie in (0, 1]");
    if (gamma == 1) return model;
    MdpModel out = model;
    StatePoint sink_rep;
    if (model.sink_representative) {
        sink_rep = *model.sink_representative;
    } else {
        int tag = 0;
        for (const auto& c : model.components) tag = std::max(tag, c.tag + 1);
        std::vector<double> zero(model.state_dim(), 0.0);
        out.components.push_back({tag, Box::point(zero)});
        sink_rep = StatePoint{zero, tag};
        out.sink.merge(RegionSet::whole_tag(tag));
        out.sink_representative = sink_rep;
        // The new absorbing state needs an action set and a kernel.
        auto actions = model.actions;
        out.actions = [actions, tag, initial = model.initial](const StatePoint& s) {
            return actions(s.tag == tag ? initial : s);
        };
    }
    auto inner = model.kernel;
    auto target = model.target;
    out.kernel = [inner, target, sink_rep, gamma](const StatePoint& s, const ActionPoint& a) {
        if (s.tag == sink_rep.tag && s.coords == sink_rep.coords) return TransitionKernel::dirac(sink_rep);
        TransitionKernel k = inner(s, a);
        if (target.contains(s)) return k;
        TransitionKernel mixed;
        mixed.add(k, gamma);
        mixed.add(TransitionKernel::dirac(sink_rep), 1 - gamma);
        return mixed;
    };
    char buf[64];
    std::snprintf(buf, sizeof buf, "\ndiscount gamma=%.17g", gamma);
    out.descriptor += buf;
    out.name += "+discount";
    return out;
}

MdpModel with_avoid(const MdpModel& model, const RegionSet& avoid) {
    MdpModel out = model;
    out.sink.merge(avoid);
    std::string shapes;
    for (const auto& s : avoid.shapes()) {
        char buf[160];
        std::snprintf(buf, sizeof buf, " kind=%d tag=%d r=%.17g", static_cast<int>(s.kind), s.tag, s.radius);
        shapes += buf;
        for (double v : s.box.lo) shapes += " " + std::to_string(v);
        for (double v : s.box.hi) shapes += " " + std::to_string(v);
        for (double v : s.center) shapes += " " + std::to_string(v);
    }
    out.descriptor += "\navoid" + shapes;
    out.name += "+avoid";
    return out;
}

StatePoint random_state(const MdpModel& model, std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, model.components.size() - 1);
    const StateComponent& c = model.components[pick(rng)];
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    StatePoint s{std::vector<double>(c.box.dim()), c.tag};
    for (std::size_t j = 0; j < c.box.dim(); ++j) s.coords[j] = c.box.lo[j] + c.box.extent(j) * unit(rng);
    return s;
}

ValidationReport validate_model(const MdpModel& model, std::uint64_t seed, int samples) {
    ValidationReport r;
    if (model.components.empty()) {
        r.errors.push_back("state space has no components");
        return r;
    }
    const std::size_t d = model.state_dim();
    for (const auto& c : model.components)
        if (c.box.dim() != d) r.errors.push_back("component " + std::to_string(c.tag) + " has inconsistent dimension");
    if (!model.in_space(model.initial)) r.errors.push_back("initial state lies outside the state space");
    if (model.lipschitz_state < 0 || model.lipschitz_pair < 0) r.errors.push_back("negative Lipschitz constant");
    if (!r.errors.empty()) return r;

    std::mt19937_64 rng(seed);
    int kernel_failures = 0, overlap = 0, metric_failures = 0;
    for (int i = 0; i < samples; ++i) {
        StatePoint s = random_state(model, rng);
        if (model.is_target(s) && model.is_sink(s)) ++overlap;
        if (model.is_target(s) || model.is_sink(s)) continue;
        ActionSet acts = model.actions(s);
        std::vector<ActionPoint> as = acts.is_finite() ? acts.points() : acts.net(0.25);
        for (const auto& a : as) {
            TransitionKernel k = model.kernel(s, a);
            bool bad = std::abs(k.total_mass() - 1.0) > 1e-12;
            for (const auto& at : k.atoms()) bad = bad || at.mass < 0 || !model.in_space(at.point);
            for (const auto& b : k.boxes()) {
                const StateComponent* c = model.component(b.tag);
                bad = bad || b.mass < 0 || !c || !c->box.contains(b.box.lo, 1e-12) || !c->box.contains(b.box.hi, 1e-12);
            }
            if (bad && kernel_failures++ < 3)
                r.errors.push_back("kernel at " + format_point(s.coords, s.tag) + " under " + model.action_label(a) +
                                   " has mass " + std::to_string(k.total_mass()) + " or leaves the state space");
        }
    }
    for (int i = 0; i < samples; ++i) {
        StatePoint x = random_state(model, rng), y = random_state(model, rng), z = random_state(model, rng);
        double xy = dist_state(x, y), yx = dist_state(y, x), yz = dist_state(y, z), xz = dist_state(x, z);
        if (xy < 0 || xy != yx || xz > xy + yz + 1e-12 || dist_state(x, x) != 0) ++metric_failures;
    }
    if (overlap) r.errors.push_back(std::to_string(overlap) + " sampled states are both target and sink");
    if (metric_failures) r.errors.push_back(std::to_string(metric_failures) + " sampled triples violate the metric axioms");
    r.notes.push_back("lipschitz_state=" + std::to_string(model.lipschitz_state) +
                      " lipschitz_pair=" + std::to_string(model.lipschitz_pair));
    if (!model.constants_note.empty()) r.notes.push_back(model.constants_note);
    return r;
}

}  // namespace lipreach
