#include "lipreach/bound_store.hpp"

#include <algorithm>
#include <cmath>

#include "lipreach/approx.hpp"
#include "lipreach/errors.hpp"

namespace lipreach {

namespace {
constexpr double kCrossingTolerance = 1e-9;
}

std::size_t BoundStore::KeyHash::operator()(const Key& k) const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](std::int32_t v) {
        h ^= static_cast<std::uint32_t>(v);
        h *= 1099511628211ULL;
    };
    for (auto c : k.cell) mix(c);
    mix(k.state_tag);
    mix(k.action_tag);
    mix(k.region);
    return static_cast<std::size_t>(h ^ (h >> 29));
}

BoundStore::BoundStore(std::size_t state_dim, std::size_t action_dim, double pair_lipschitz, StoreOptions options,
                       Classifier classify, std::vector<double> region_lipschitz)
    : state_dim_(state_dim),
      action_dim_(action_dim),
      pair_lipschitz_(pair_lipschitz),
      options_(options),
      classify_(std::move(classify)),
      region_lipschitz_(std::move(region_lipschitz)) {
    if (state_dim + action_dim > kMaxAxes)
        throw UsageError("bound store supports at most " + std::to_string(kMaxAxes) + " coordinates per pair");
    if (pair_lipschitz < 0) throw UsageError("negative Lipschitz constant");
    double c = pair_lipschitz;
    for (double r : region_lipschitz_) c = std::max(c, r);
    bucket_edge_ = options_.bucket_edge > 0 ? options_.bucket_edge : (c > 0 ? 1.0 / (4.0 * c) : 1.0);
    bucket_edge_ = std::max(bucket_edge_, 8 * options_.dedupe_radius);
    cell_min_.fill(std::numeric_limits<std::int32_t>::max());
    cell_max_.fill(std::numeric_limits<std::int32_t>::min());
}

BoundStore BoundStore::for_model(const MdpModel& model, StoreOptions options) {
    std::vector<double> regional;
    std::optional<Partition> partition = model.partition;
    if (partition)
        for (const auto& r : partition->regions) regional.push_back(r.lipschitz);
    RegionSet target = model.target, sink = model.sink;
    Classifier classify = [target, sink, partition](const StatePoint& s) {
        if (target.contains(s)) return kTargetRegion;
        if (sink.contains(s)) return kSinkRegion;
        return partition ? partition->region_of(s) : kFreeRegion;
    };
    return BoundStore(model.state_dim(), model.action_dim(), model.lipschitz_pair, options, std::move(classify),
                      std::move(regional));
}

int BoundStore::region_of(const StatePoint& s) const { return classify_ ? classify_(s) : kFreeRegion; }

double BoundStore::lipschitz_for(int region) const {
    if (region >= 0 && static_cast<std::size_t>(region) < region_lipschitz_.size())
        return region_lipschitz_[static_cast<std::size_t>(region)];
    return pair_lipschitz_;
}

kernels::RecordView BoundStore::view() const {
    kernels::RecordView v;
    v.n = size();
    v.state_dim = state_dim_;
    v.action_dim = action_dim_;
    v.state_coords = state_coords_.data();
    v.action_coords = action_coords_.data();
    v.state_tag = state_tag_.data();
    v.action_tag = action_tag_.data();
    v.region = region_.data();
    v.lower = lower_.data();
    v.upper = upper_.data();
    return v;
}

SampleRecord BoundStore::record(std::size_t i) const {
    SampleRecord r;
    r.state.coords.assign(state_coords_.begin() + static_cast<std::ptrdiff_t>(i * state_dim_),
                          state_coords_.begin() + static_cast<std::ptrdiff_t>((i + 1) * state_dim_));
    r.state.tag = state_tag_[i];
    r.action.coords.assign(action_coords_.begin() + static_cast<std::ptrdiff_t>(i * action_dim_),
                           action_coords_.begin() + static_cast<std::ptrdiff_t>((i + 1) * action_dim_));
    r.action.tag = action_tag_[i];
    r.lower = lower_[i];
    r.upper = upper_[i];
    r.region = region_[i];
    r.step = step_[i];
    return r;
}

BoundStore::Key BoundStore::key_for(std::span<const double> s, int stag, std::span<const double> a, int atag,
                                    int region) const {
    Key k;
    std::size_t j = 0;
    for (double x : s) k.cell[j++] = static_cast<std::int32_t>(std::floor(x / bucket_edge_));
    for (double x : a) k.cell[j++] = static_cast<std::int32_t>(std::floor(x / bucket_edge_));
    k.state_tag = stag;
    k.action_tag = atag;
    k.region = region;
    return k;
}

kernels::PairQuery BoundStore::query_for(const StatePoint& s, const ActionPoint& a, int region) const {
    if (s.coords.size() != state_dim_ || a.coords.size() != action_dim_)
        throw UsageError("query dimension does not match the store");
    kernels::PairQuery q;
    q.state = s.coords.data();
    q.state_tag = s.tag;
    q.action = a.coords.data();
    q.action_tag = a.tag;
    q.region = region;
    q.lipschitz = lipschitz_for(region);
    return q;
}

bool BoundStore::use_scan() const {
    if (size() < options_.scan_below) return true;
    // Records of other tags sit at distance >= 1; with C < 1 they can still
    // matter, and the index only looks at the query's own tags.
    double c = pair_lipschitz_;
    for (double r : region_lipschitz_) c = std::min(c, r);
    return c < 1.0;
}

double BoundStore::record_distance(std::size_t i, const StatePoint& s, const ActionPoint& a) const {
    double ds = 0, da = 0;
    for (std::size_t j = 0; j < state_dim_; ++j) {
        double t = state_coords_[i * state_dim_ + j] - s.coords[j];
        ds += t * t;
    }
    for (std::size_t j = 0; j < action_dim_; ++j) {
        double t = action_coords_[i * action_dim_ + j] - a.coords[j];
        da += t * t;
    }
    return std::sqrt(ds) + std::sqrt(da) + (state_tag_[i] != s.tag) + (action_tag_[i] != a.tag);
}

template <class Visit>
void BoundStore::visit_rings(const Key& center, std::span<const double> q, double lipschitz, Visit&& visit) const {
    const std::size_t D = state_dim_ + action_dim_;
    const double b = bucket_edge_;
    std::int32_t reach = 0;
    for (std::size_t j = 0; j < D; ++j) {
        if (cell_min_[j] > cell_max_[j]) return;  // no records yet
        reach = std::max({reach, center.cell[j] - cell_min_[j], cell_max_[j] - center.cell[j]});
    }
    std::array<std::int32_t, kMaxAxes> off{};
    for (std::int32_t k = 0; k <= reach; ++k) {
        double ring_min = k == 0 ? 0.0 : (k - 1) * b;
        if (!visit.keep_going(lipschitz * ring_min)) return;
        // Enumerate the cube [-k,k]^D, keeping the shell.
        for (std::size_t j = 0; j < D; ++j) off[j] = -k;
        while (true) {
            bool shell = D == 0;
            Key key = center;
            bool inside = true;
            for (std::size_t j = 0; j < D; ++j) {
                shell = shell || off[j] == k || off[j] == -k;
                key.cell[j] = center.cell[j] + off[j];
                inside = inside && key.cell[j] >= cell_min_[j] && key.cell[j] <= cell_max_[j];
            }
            if ((shell || k == 0) && inside) {
                auto it = buckets_.find(key);
                if (it != buckets_.end()) {
                    double gs = 0, ga = 0;
                    for (std::size_t j = 0; j < D; ++j) {
                        double lo = key.cell[j] * b, hi = lo + b, g = 0;
                        if (q[j] < lo) g = lo - q[j];
                        else if (q[j] > hi) g = q[j] - hi;
                        (j < state_dim_ ? gs : ga) += g * g;
                    }
                    visit.bucket(it->second, lipschitz * (std::sqrt(gs) + std::sqrt(ga)));
                }
            }
            std::size_t j = 0;
            while (j < D && ++off[j] > k) off[j++] = -k;
            if (j == D) break;
        }
        if (D == 0) return;
    }
}

double BoundStore::indexed_lower(const StatePoint& s, const ActionPoint& a, int region) const {
    std::array<double, kMaxAxes> q{};
    std::size_t j = 0;
    for (double x : s.coords) q[j++] = x;
    for (double x : a.coords) q[j++] = x;
    const double C = lipschitz_for(region);
    struct {
        const BoundStore* self;
        const StatePoint* s;
        const ActionPoint* a;
        double C;
        double best = 0;  // contributions <= 0 vanish under the floor
        bool keep_going(double penalty) const { return self->max_lower_ - penalty > best; }
        void bucket(const Bucket& bk, double penalty) {
            if (bk.max_lower - penalty <= best) return;
            for (std::uint32_t id : bk.ids) best = std::max(best, self->lower_[id] - C * self->record_distance(id, *s, *a));
        }
    } v{this, &s, &a, C};
    visit_rings(key_for(s.coords, s.tag, a.coords, a.tag, region), std::span<const double>(q.data(), j), C, v);
    return v.best;
}

double BoundStore::indexed_upper(const StatePoint& s, const ActionPoint& a, int region) const {
    std::array<double, kMaxAxes> q{};
    std::size_t j = 0;
    for (double x : s.coords) q[j++] = x;
    for (double x : a.coords) q[j++] = x;
    const double C = lipschitz_for(region);
    struct {
        const BoundStore* self;
        const StatePoint* s;
        const ActionPoint* a;
        double C;
        double best = 1;
        bool keep_going(double penalty) const { return self->min_upper_ + penalty < best; }
        void bucket(const Bucket& bk, double penalty) {
            if (bk.min_upper + penalty >= best) return;
            for (std::uint32_t id : bk.ids) best = std::min(best, self->upper_[id] + C * self->record_distance(id, *s, *a));
        }
    } v{this, &s, &a, C};
    visit_rings(key_for(s.coords, s.tag, a.coords, a.tag, region), std::span<const double>(q.data(), j), C, v);
    return v.best;
}

double BoundStore::lower_at(const StatePoint& s, const ActionPoint& a) const {
    int region = region_of(s);
    if (region == kTargetRegion) return 1.0;
    if (region == kSinkRegion) return 0.0;
    if (use_scan()) return lower_at_scan(s, a);
    return std::clamp(indexed_lower(s, a, region), 0.0, 1.0);
}

double BoundStore::upper_at(const StatePoint& s, const ActionPoint& a) const {
    int region = region_of(s);
    if (region == kTargetRegion) return 1.0;
    if (region == kSinkRegion) return 0.0;
    if (use_scan()) return upper_at_scan(s, a);
    return std::clamp(indexed_upper(s, a, region), 0.0, 1.0);
}

double BoundStore::lower_at_scan(const StatePoint& s, const ActionPoint& a) const {
    int region = region_of(s);
    if (region == kTargetRegion) return 1.0;
    if (region == kSinkRegion) return 0.0;
    auto q = query_for(s, a, region);
    double v = options_.parallel_scan ? kernels::parallel::scan_lower(view(), q) : kernels::serial::scan_lower(view(), q);
    return std::clamp(v, 0.0, 1.0);
}

double BoundStore::upper_at_scan(const StatePoint& s, const ActionPoint& a) const {
    int region = region_of(s);
    if (region == kTargetRegion) return 1.0;
    if (region == kSinkRegion) return 0.0;
    auto q = query_for(s, a, region);
    double v = options_.parallel_scan ? kernels::parallel::scan_upper(view(), q) : kernels::serial::scan_upper(view(), q);
    return std::clamp(v, 0.0, 1.0);
}

long BoundStore::find_duplicate(const StatePoint& s, const ActionPoint& a, int region) const {
    if (options_.dedupe_radius <= 0) {
        // Exact duplicates only.
        auto it = buckets_.find(key_for(s.coords, s.tag, a.coords, a.tag, region));
        if (it == buckets_.end()) return -1;
        for (std::uint32_t id : it->second.ids)
            if (record_distance(id, s, a) == 0) return id;
        return -1;
    }
    std::array<double, kMaxAxes> q{};
    std::size_t j = 0;
    for (double x : s.coords) q[j++] = x;
    for (double x : a.coords) q[j++] = x;
    struct {
        const BoundStore* self;
        const StatePoint* s;
        const ActionPoint* a;
        double radius;
        long found = -1;
        double best = std::numeric_limits<double>::infinity();
        bool keep_going(double dist) const { return found < 0 && dist < radius; }
        void bucket(const Bucket& bk, double dist) {
            if (dist >= radius) return;
            for (std::uint32_t id : bk.ids) {
                double d = self->record_distance(id, *s, *a);
                if (d < radius && d < best) {
                    best = d;
                    found = id;
                }
            }
        }
    } v{this, &s, &a, options_.dedupe_radius};
    // Unit "Lipschitz" so that penalties are plain distances.
    visit_rings(key_for(s.coords, s.tag, a.coords, a.tag, region), std::span<const double>(q.data(), j), 1.0, v);
    return v.found;
}

void BoundStore::refresh_bucket(std::size_t id) {
    Bucket& bk = buckets_[key_of_[id]];
    bk.max_lower = std::max(bk.max_lower, lower_[id]);
    bk.min_upper = std::min(bk.min_upper, upper_[id]);
    max_lower_ = std::max(max_lower_, lower_[id]);
    min_upper_ = std::min(min_upper_, upper_[id]);
}

std::size_t BoundStore::insert(const StatePoint& s, const ActionPoint& a, double lower, double upper, int region,
                               std::int64_t step) {
    std::size_t id = size();
    state_coords_.insert(state_coords_.end(), s.coords.begin(), s.coords.end());
    action_coords_.insert(action_coords_.end(), a.coords.begin(), a.coords.end());
    state_tag_.push_back(s.tag);
    action_tag_.push_back(a.tag);
    region_.push_back(region);
    lower_.push_back(lower);
    upper_.push_back(upper);
    step_.push_back(step);
    Key key = key_for(s.coords, s.tag, a.coords, a.tag, region);
    key_of_.push_back(key);
    buckets_[key].ids.push_back(static_cast<std::uint32_t>(id));
    for (std::size_t j = 0; j < state_dim_ + action_dim_; ++j) {
        cell_min_[j] = std::min(cell_min_[j], key.cell[j]);
        cell_max_[j] = std::max(cell_max_[j], key.cell[j]);
    }
    refresh_bucket(id);
    return id;
}

SampleRecord BoundStore::record_update(const StatePoint& s, const ActionPoint& a, double new_lower, double new_upper,
                                       std::int64_t step) {
    if (s.coords.size() != state_dim_ || a.coords.size() != action_dim_)
        throw UsageError("record dimension does not match the store");
    if (!(new_lower >= 0 && new_lower <= 1 && new_upper >= 0 && new_upper <= 1))
        throw UsageError("record bounds must lie in [0, 1]");
    int region = region_of(s);
    long dup = find_duplicate(s, a, region);
    std::size_t id;
    if (dup >= 0) {
        id = static_cast<std::size_t>(dup);
        lower_[id] = std::max(lower_[id], new_lower);
        upper_[id] = std::min(upper_[id], new_upper);
        step_[id] = step;
        refresh_bucket(id);
    } else {
        id = insert(s, a, new_lower, new_upper, region, step);
    }
    if (lower_[id] > upper_[id] + kCrossingTolerance)
        throw BoundCrossing("bound crossing: merged record has lower " + std::to_string(lower_[id]) + " > upper " +
                                std::to_string(upper_[id]) + " at " + format_point(s.coords, s.tag),
                            s, a, lower_[id], upper_[id]);
    if (region != kTargetRegion && region != kSinkRegion) {
        double l = lower_at(s, a), u = upper_at(s, a);
        if (l > u + kCrossingTolerance)
            throw BoundCrossing("bound crossing: lower envelope " + std::to_string(l) + " exceeds upper envelope " +
                                    std::to_string(u) + " at " + format_point(s.coords, s.tag),
                                s, a, l, u);
    }
    return record(id);
}

void BoundStore::restore(const SampleRecord& r) {
    if (r.state.coords.size() != state_dim_ || r.action.coords.size() != action_dim_)
        throw IntegrityError("snapshot record dimension does not match the store");
    long dup = find_duplicate(r.state, r.action, r.region);
    if (dup >= 0) {
        auto id = static_cast<std::size_t>(dup);
        lower_[id] = std::max(lower_[id], r.lower);
        upper_[id] = std::min(upper_[id], r.upper);
        step_[id] = std::max(step_[id], r.step);
        refresh_bucket(id);
        return;
    }
    insert(r.state, r.action, r.lower, r.upper, r.region, r.step);
}

double BoundStore::lower_state(const StatePoint& s, const ActionSet& actions, double precision) const {
    int region = region_of(s);
    if (region == kTargetRegion) return 1.0;
    if (region == kSinkRegion) return 0.0;
    ApproxRequest req{Direction::under, precision, lipschitz_for(region)};
    return approx_max(actions, [&](const ActionPoint& a) { return lower_at(s, a); }, req);
}

double BoundStore::upper_state(const StatePoint& s, const ActionSet& actions, double precision) const {
    int region = region_of(s);
    if (region == kTargetRegion) return 1.0;
    if (region == kSinkRegion) return 0.0;
    ApproxRequest req{Direction::over, precision, lipschitz_for(region)};
    return std::min(1.0, approx_max(actions, [&](const ActionPoint& a) { return upper_at(s, a); }, req));
}

std::vector<ActionPoint> BoundStore::greedy_actions(const StatePoint& s, const ActionSet& actions,
                                                    double tolerance) const {
    if (!(tolerance > 0)) throw UsageError("greedy_actions: tolerance must be positive");
    std::vector<ActionPoint> candidates;
    double slack = 0;
    if (actions.is_finite()) {
        candidates = actions.points();
    } else {
        double C = lipschitz_for(region_of(s));
        double h = C > 0 ? 0.5 * tolerance / C : 1.0;
        candidates = actions.net(h);
        slack = C > 0 ? 0.5 * tolerance : 0.0;
    }
    std::vector<double> u(candidates.size());
    double best = 0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        u[i] = upper_at(s, candidates[i]);
        best = std::max(best, u[i]);
    }
    std::vector<ActionPoint> out;
    for (std::size_t i = 0; i < candidates.size(); ++i)
        if (u[i] >= best - (tolerance - slack)) out.push_back(candidates[i]);
    return out;
}

}  // namespace lipreach
