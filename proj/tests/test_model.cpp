#include <doctest.h>

#include <cmath>

#include "gen.hpp"
#include "lipreach/errors.hpp"
#include "lipreach/model.hpp"
#include "lipreach/models.hpp"

using namespace lipreach;

TEST_SUITE("mdp-model") {

TEST_CASE("state distance is a metric, tags at distance >= 1") {
    gen::Rng r(11);
    for (int i = 0; i < 2000; ++i) {
        StatePoint x{gen::point(r, 2), gen::integer(r, 0, 2)};
        StatePoint y{gen::point(r, 2), gen::integer(r, 0, 2)};
        StatePoint z{gen::point(r, 2), gen::integer(r, 0, 2)};
        CHECK(dist_state(x, x) == 0.0);
        CHECK(dist_state(x, y) == dist_state(y, x));
        CHECK(dist_state(x, z) <= dist_state(x, y) + dist_state(y, z) + 1e-12);
        if (x.tag != y.tag) CHECK(dist_state(x, y) >= 1.0);
    }
}

TEST_CASE("pair distance is the sum of state and action distances") {
    gen::Rng r(12);
    for (int i = 0; i < 500; ++i) {
        StatePoint s1{gen::point(r, 2), 0}, s2{gen::point(r, 2), 0};
        ActionPoint a1{gen::point(r, 1), gen::integer(r, 0, 1)}, a2{gen::point(r, 1), gen::integer(r, 0, 1)};
        CHECK(dist_pair(s1, a1, s2, a2) == doctest::Approx(dist_state(s1, s2) + dist_action(a1, a2)));
    }
}

TEST_CASE("region classification never claims more than it sees") {
    gen::Rng r(13);
    for (int i = 0; i < 300; ++i) {
        RegionSet set;
        if (gen::uniform(r) < 0.5) set = RegionSet::ball(0, gen::point(r, 2), gen::uniform(r, 0.05, 0.5));
        else set = RegionSet::box(0, gen::box(r, 2));
        Box cell = gen::box(r, 2, 0.0, 1.0);
        Overlap o = set.classify(0, cell);
        int inside = 0;
        for (int k = 0; k < 200; ++k) {
            std::vector<double> x(2);
            for (int j = 0; j < 2; ++j) x[static_cast<std::size_t>(j)] = gen::uniform(r, cell.lo[static_cast<std::size_t>(j)], cell.hi[static_cast<std::size_t>(j)]);
            inside += set.contains({x, 0});
        }
        if (o == Overlap::full) CHECK(inside == 200);
        if (o == Overlap::none) CHECK(inside == 0);
        CHECK(set.classify(1, cell) == Overlap::none);
    }
}

TEST_CASE("navigation disks are open balls of radius 0.05") {
    MdpModel m = models::navigation_2d();
    CHECK(m.is_target({{0.97, 0.97}, 0}));
    CHECK_FALSE(m.is_target({{0.95, 1.0}, 0}));
    CHECK(m.is_sink({{0.5, 0.46}, 0}));
    CHECK_FALSE(m.is_sink({{0.5, 0.44}, 0}));
    CHECK_FALSE(m.is_target({{0.5, 0.5}, 0}));
}

TEST_CASE("kernels carry unit mass and samples stay in their support") {
    gen::Rng r(14);
    for (int i = 0; i < 200; ++i) {
        TransitionKernel k = gen::kernel(r, 2);
        CHECK(k.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
        for (int s = 0; s < 20; ++s) {
            StatePoint x = k.sample(r);
            bool hit = false;
            for (const auto& a : k.atoms()) hit = hit || a.point == x;
            for (const auto& b : k.boxes()) hit = hit || b.box.contains(x.coords, 1e-12);
            CHECK(hit);
        }
    }
}

TEST_CASE("clipped uniform piles the outside mass on the faces") {
    TransitionKernel k = TransitionKernel::clipped_uniform(0, Box{{-0.2}, {0.6}}, Box{{0.0}, {1.0}});
    double at_zero = 0, inside = 0;
    // In 1D the face is a single point, so its mass becomes an atom.
    for (const auto& a : k.atoms()) {
        CHECK(a.point.coords[0] == 0.0);
        at_zero += a.mass;
    }
    for (const auto& b : k.boxes()) {
        CHECK(b.box.lo[0] == 0.0);
        CHECK(b.box.hi[0] == 0.6);
        inside += b.mass;
    }
    CHECK(at_zero == doctest::Approx(0.25));
    CHECK(inside == doctest::Approx(0.75));
}

TEST_CASE("successor frequencies follow the kernel") {
    MdpModel m = models::finite(models::two_state_chain(0.3), "chain");
    std::mt19937_64 rng(5);
    int hits = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) hits += m.is_target(m.sample_successor(m.initial, ActionPoint{{}, 0}, rng));
    CHECK(std::abs(hits / double(n) - 0.3) < 0.02);
    CHECK_THROWS_AS(m.sample_successor(m.initial, ActionPoint{{}, 7}, rng), UsageError);
}

TEST_CASE("discount transform leaks 1 - gamma to the sink outside the target") {
    MdpModel base = models::gravity_1d();
    MdpModel d = discount_transform(base, 0.9);
    gen::Rng r(15);
    for (int i = 0; i < 100; ++i) {
        StatePoint s{{gen::uniform(r, -0.9, 0.9)}, 0};
        for (const auto& a : d.actions(s).points()) {
            auto mass_in_sink = [&](const TransitionKernel& k) {
                double m = 0;
                for (const auto& at : k.atoms()) m += d.is_sink(at.point) ? at.mass : 0;
                return m;
            };
            double before = mass_in_sink(base.kernel(s, a));
            CHECK(mass_in_sink(d.kernel(s, a)) == doctest::Approx(0.1 + 0.9 * before));
            CHECK(d.kernel(s, a).total_mass() == doctest::Approx(1.0));
        }
    }
    CHECK(discount_transform(base, 1.0).fingerprint() == base.fingerprint());
    CHECK(d.fingerprint() != base.fingerprint());
    CHECK_THROWS_AS(discount_transform(base, 0.0), UsageError);
}

TEST_CASE("discount transform synthesizes an absorbing sink when needed") {
    MdpModel base = models::frequency_chain(2);
    base.sink_representative.reset();
    MdpModel d = discount_transform(base, 0.5);
    REQUIRE(d.sink_representative);
    CHECK(d.is_sink(*d.sink_representative));
    TransitionKernel k = d.kernel(*d.sink_representative, d.actions(*d.sink_representative).canonical());
    CHECK(k.atoms().size() == 1);
    CHECK(k.atoms()[0].point == *d.sink_representative);
}

TEST_CASE("reach-avoid merges the avoid set into the sink") {
    MdpModel m = with_avoid(models::navigation_2d(), RegionSet::box(0, Box{{0.0, 0.8}, {0.2, 1.0}}));
    CHECK(m.is_sink({{0.1, 0.9}, 0}));
    CHECK(m.is_sink({{0.5, 0.5}, 0}));
    CHECK_FALSE(m.is_sink({{0.3, 0.9}, 0}));
}

TEST_CASE("catalog models pass the validity checks") {
    for (const char* name : {"gravity-1d", "navigation-2d", "frequency-chain", "random-finite", "two-state", "self-loop"}) {
        CAPTURE(name);
        ValidationReport rep = validate_model(models::catalog(name), 3, 300);
        CHECK(rep.ok());
    }
}

TEST_CASE("a kernel with missing mass is reported") {
    MdpModel m = models::gravity_1d();
    auto inner = m.kernel;
    m.kernel = [inner](const StatePoint& s, const ActionPoint& a) {
        TransitionKernel k;
        k.add(inner(s, a), 0.9);
        return k;
    };
    CHECK_FALSE(validate_model(m, 1, 50).ok());
}

TEST_CASE("fingerprints depend on the parameters only") {
    CHECK(models::gravity_1d().fingerprint() == models::gravity_1d().fingerprint());
    models::GravityParams p;
    p.explode = 0.3;
    CHECK(models::gravity_1d(p).fingerprint() != models::gravity_1d().fingerprint());
    CHECK(models::gravity_1d().fingerprint().size() == 16);
}

}  // TEST_SUITE
