#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "gen.hpp"
#include "lipreach/models.hpp"
#include "lipreach/samplers.hpp"

using namespace lipreach;

namespace {

// Deterministic walk on [0,1]: "step" adds 0.25; the target is [0.99, 1].
MdpModel ladder() {
    MdpModel m;
    m.name = "ladder";
    m.descriptor = "ladder";
    m.components = {{0, Box{{0.0}, {1.0}}}};
    ActionSet set = ActionSet::finite({ActionPoint{{}, 0}});
    m.actions = [set](const StatePoint&) { return set; };
    m.uniform_actions = true;
    m.action_names = {"step"};
    m.kernel = [](const StatePoint& s, const ActionPoint&) {
        return TransitionKernel::dirac(StatePoint{{std::min(1.0, s.coords[0] + 0.25)}, 0});
    };
    m.target = RegionSet::box(0, Box{{0.99}, {1.0}});
    m.initial = StatePoint{{0.0}, 0};
    m.path_length_hint = 4;
    return m;
}

// 2D states with a box action set [0,1], kernel irrelevant.
MdpModel plane_with_box_actions() {
    MdpModel m;
    m.name = "plane";
    m.descriptor = "plane";
    m.components = {{0, Box{{0.0, 0.0}, {1.0, 2.0}}}};
    ActionSet set = ActionSet::box(Box{{0.0}, {1.0}});
    m.actions = [set](const StatePoint&) { return set; };
    m.kernel = [](const StatePoint& s, const ActionPoint&) { return TransitionKernel::dirac(s); };
    m.initial = StatePoint{{0.5, 0.5}, 0};
    return m;
}

std::vector<PairSample> draw(Sampler& s, const SamplerContext& ctx, int n) {
    std::vector<PairSample> out;
    for (int i = 0; i < n; ++i) out.push_back(s.next(ctx));
    return out;
}

bool same(const std::vector<PairSample>& a, const std::vector<PairSample>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!(a[i].state == b[i].state && a[i].action == b[i].action)) return false;
    return true;
}

}  // namespace

TEST_SUITE("samplers") {

TEST_CASE("grid level 1 on gravity-1d emits the 12 pairs once before level 2") {
    MdpModel m = models::gravity_1d();
    BoundStore st = BoundStore::for_model(m);
    SamplerContext ctx{m, st, 1.0, {}};
    GridSampler g(1);
    std::set<std::pair<double, int>> seen;
    for (int i = 0; i < 12; ++i) {
        PairSample p = g.next(ctx);
        CHECK(seen.insert({p.state.coords[0], p.action.tag}).second);
    }
    CHECK(seen.size() == 12);
    for (auto [x, a] : seen) CHECK((x == -1.0 || x == 0.0 || x == 1.0));
    CHECK(g.level() == 2);
    PairSample p = g.next(ctx);
    CHECK(p.state.coords[0] == -1.0);
}

TEST_CASE("grid coverage: after level l every pair is within diam * 2^-l") {
    MdpModel m = plane_with_box_actions();
    BoundStore st(2, 1, 1.0);
    SamplerContext ctx{m, st, 1.0, {}};
    for (int level = 1; level <= 3; ++level) {
        GridSampler g(1);
        std::vector<PairSample> emitted;
        while (g.level() <= level) emitted.push_back(g.next(ctx));
        const double diam = std::sqrt(1.0 + 4.0 + 1.0);
        const double radius = diam * std::pow(2.0, -level);
        gen::Rng r(51 + level);
        for (int i = 0; i < 300; ++i) {
            StatePoint s{{gen::uniform(r), gen::uniform(r, 0, 2)}, 0};
            ActionPoint a{{gen::uniform(r)}, 0};
            double best = 1e9;
            for (const auto& p : emitted) best = std::min(best, dist_pair(s, a, p.state, p.action));
            CHECK(best <= radius);
        }
    }
}

TEST_CASE("random sampler stays in the space and replays from its seed") {
    MdpModel m = models::navigation_2d();
    BoundStore st = BoundStore::for_model(m);
    SamplerContext ctx{m, st, 1.0, {}};
    RandomSampler a(9), b(9), c(10);
    auto xa = draw(a, ctx, 500), xb = draw(b, ctx, 500), xc = draw(c, ctx, 500);
    CHECK(same(xa, xb));
    CHECK_FALSE(same(xa, xc));
    for (const auto& p : xa) {
        CHECK(m.in_space(p.state));
        CHECK(m.actions(p.state).contains(p.action));
    }
}

TEST_CASE("guided paths are emitted terminal first, then in reverse order") {
    MdpModel m = ladder();
    BoundStore st = BoundStore::for_model(m);
    SamplerContext ctx{m, st, 1.0, {}};
    SamplerConfig cfg;
    cfg.kind = SamplerKind::guided;
    GuidedPathSampler g(3, cfg);
    auto xs = draw(g, ctx, 10);
    const double expect[] = {1.0, 0.75, 0.5, 0.25, 0.0};
    for (int rep = 0; rep < 2; ++rep)
        for (int i = 0; i < 5; ++i) CHECK(xs[static_cast<std::size_t>(rep * 5 + i)].state.coords[0] == expect[i]);
    CHECK(g.paths() == 2);
}

TEST_CASE("guided paths respect the length cap") {
    MdpModel m = ladder();
    m.target = RegionSet{};
    BoundStore st = BoundStore::for_model(m);
    SamplerContext ctx{m, st, 1.0, {}};
    SamplerConfig cfg;
    cfg.max_path_len = 7;
    GuidedPathSampler g(3, cfg);
    draw(g, ctx, 7);
    CHECK(g.paths() == 1);
    draw(g, ctx, 1);
    CHECK(g.paths() == 2);
    CHECK(effective_path_cap(SamplerConfig{}, m) == 256);
    m.path_length_hint = 40;
    CHECK(effective_path_cap(SamplerConfig{}, m) == 400);
}

TEST_CASE("guided paths on an empty store pick actions uniformly") {
    MdpModel m = models::gravity_1d();
    BoundStore st = BoundStore::for_model(m);
    SamplerContext ctx{m, st, 1.0, {}};
    GuidedPathSampler g(4, SamplerConfig{});
    std::vector<int> counts(4, 0);
    for (const auto& p : draw(g, ctx, 20000))
        if (!m.is_target(p.state) && !m.is_sink(p.state)) ++counts[static_cast<std::size_t>(p.action.tag)];
    int total = counts[0] + counts[1] + counts[2] + counts[3];
    for (int c : counts) CHECK(std::abs(c / double(total) - 0.25) < 0.03);
}

TEST_CASE("forced first action is played at the start of every path") {
    MdpModel m = models::gravity_1d();
    BoundStore st = BoundStore::for_model(m);
    SamplerContext ctx{m, st, 1.0, {}};
    SamplerConfig cfg;
    cfg.first_action = ActionPoint{{}, 3};
    GuidedPathSampler g(5, cfg);
    std::optional<PairSample> prev;
    for (const auto& p : draw(g, ctx, 3000)) {
        // The pair right before a terminal restart is the path's first pair.
        if (prev && (m.is_target(p.state) || m.is_sink(p.state)) && !(m.is_target(prev->state) || m.is_sink(prev->state)))
            CHECK(prev->action.tag == 3);
        prev = p;
    }
}

TEST_CASE("mixture with nu = 0 replays the safe sampler, nu = 1 the guided one") {
    MdpModel m = models::navigation_2d();
    BoundStore st = BoundStore::for_model(m);
    SamplerContext ctx{m, st, 1.0, {}};
    SamplerConfig cfg;
    cfg.nu = 0.0;
    auto mix = make_sampler(cfg, m, 77);
    RandomSampler safe(77);
    CHECK(same(draw(*mix, ctx, 300), draw(safe, ctx, 300)));

    cfg.nu = 1.0;
    auto all_guided = make_sampler(cfg, m, 77);
    SamplerConfig gcfg = cfg;
    gcfg.kind = SamplerKind::guided;
    auto guided = make_sampler(gcfg, m, 77);
    CHECK(same(draw(*all_guided, ctx, 300), draw(*guided, ctx, 300)));
}

TEST_CASE("mixture draws the guided component with probability nu") {
    MdpModel m = ladder();
    BoundStore st = BoundStore::for_model(m);
    SamplerContext ctx{m, st, 1.0, {}};
    SamplerConfig cfg;
    cfg.nu = 0.3;
    cfg.safe = SamplerKind::grid;
    cfg.grid_start_level = 20;
    auto mix = make_sampler(cfg, m, 8);
    // Guided pairs sit on multiples of 0.25; level-20 grid pairs almost never do.
    int guided = 0;
    const int n = 20000;
    for (const auto& p : draw(*mix, ctx, n)) {
        double x = p.state.coords[0] * 4;
        guided += std::abs(x - std::round(x)) < 1e-12;
    }
    CHECK(std::abs(guided / double(n) - 0.3) < 0.02);
}

TEST_CASE("identical seeds give identical mixtures") {
    MdpModel m = models::gravity_1d();
    BoundStore st = BoundStore::for_model(m);
    SamplerContext ctx{m, st, 0.5, {}};
    auto a = make_sampler(SamplerConfig{}, m, 123), b = make_sampler(SamplerConfig{}, m, 123);
    CHECK(same(draw(*a, ctx, 2000), draw(*b, ctx, 2000)));
}

}  // TEST_SUITE
