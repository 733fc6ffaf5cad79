#include <doctest.h>

#include <cmath>

#include "gen.hpp"
#include "lipreach/errors.hpp"
#include "lipreach/kernels.hpp"
#include "lipreach/models.hpp"
#include "lipreach/oracle.hpp"

using namespace lipreach;

namespace {

// s0: p to T, q to R, the rest back to s0.
FiniteMdp leak(double p, double q) {
    FiniteMdp m;
    m.rows = {{{{1, p}, {2, q}, {0, 1 - p - q}}}, {}, {}};
    m.target = {0, 1, 0};
    m.sink = {0, 0, 1};
    return m;
}

}  // namespace

TEST_SUITE("oracle") {

TEST_CASE("two-state chain: V = p, and the trap is flagged") {
    for (double p : {0.1, 0.5, 0.9}) {
        ViResult r = exact_value_iteration(models::two_state_chain(p), 1e-12);
        CHECK(r.lower[0] == doctest::Approx(closed_form::two_state(p)).epsilon(1e-10));
        CHECK_FALSE(r.absorbing);
        CHECK_FALSE(r.warnings.empty());
    }
    auto mecs = maximal_end_components(models::two_state_chain());
    REQUIRE(mecs.size() == 1);
    CHECK(mecs[0] == std::vector<std::uint32_t>{2});
    CHECK(std::isinf(max_expected_steps(models::two_state_chain())[0]));
}

TEST_CASE("self-loop chain: V = 1, expected time 1/p, n-step and discounted forms") {
    const double p = 0.3;
    FiniteMdp m = models::self_loop_chain(p);
    ViResult r = exact_value_iteration(m, 1e-12);
    CHECK(r.absorbing);
    CHECK(r.bracketed);
    CHECK(r.lower[0] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(max_expected_steps(m, 1e-12)[0] == doctest::Approx(1 / p).epsilon(1e-8));
    for (int n : {0, 1, 2, 5, 10}) CHECK(n_step_dp(m, n)[0] == doctest::Approx(closed_form::n_step_hit(p, n)).epsilon(1e-12));
    for (double g : {0.5, 0.9}) {
        ViResult d = exact_value_iteration(discount(m, g), 1e-12);
        CHECK(d.lower[0] == doctest::Approx(closed_form::discounted_self_loop(p, g)).epsilon(1e-10));
    }
}

TEST_CASE("escape with leak: V = p / (p + q)") {
    gen::Rng r(61);
    for (int i = 0; i < 50; ++i) {
        double p = gen::uniform(r, 0.01, 0.5), q = gen::uniform(r, 0.01, 0.49);
        ViResult v = exact_value_iteration(leak(p, q), 1e-13);
        CHECK(v.lower[0] == doctest::Approx(closed_form::escape_with_leak(p, q)).epsilon(1e-9));
        CHECK(v.upper[0] - v.lower[0] <= 1e-12);
    }
}

TEST_CASE("random finite models are absorbing on 50 seeds") {
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        FiniteMdp m = models::random_finite_mdp(seed, 15, 3);
        CHECK_NOTHROW(m.validate());
        CHECK(is_absorbing(m));
        CHECK(maximal_end_components(m).empty());
    }
}

TEST_CASE("finite validation rejects broken tables") {
    FiniteMdp m = models::self_loop_chain(0.5);
    m.rows[0][0][0].second = 0.6;
    CHECK_THROWS_AS(m.validate(), UsageError);
    m = models::self_loop_chain(0.5);
    m.rows[0][0][0].first = 9;
    CHECK_THROWS_AS(m.validate(), UsageError);
    m = models::self_loop_chain(0.5);
    m.target[0] = 1;
    m.sink[0] = 1;
    CHECK_THROWS_AS(m.validate(), UsageError);
}

TEST_CASE("Bellman sweeps agree between the serial and parallel kernels") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        FiniteMdp m = models::random_finite_mdp(seed, 40, 4);
        auto csr = m.csr();
        gen::Rng r(seed);
        std::vector<double> in(m.size()), a(m.size()), b(m.size());
        for (auto& v : in) v = gen::uniform(r);
        double da = kernels::serial::bellman_sweep(csr, in, a);
        double db = kernels::parallel::bellman_sweep(csr, in, b);
        CHECK(da == db);
        CHECK(a == b);
    }
}

TEST_CASE("frequency chain: closed form equals the oracle on grid points") {
    for (int k : {1, 2, 4}) {
        for (bool sine : {false, true}) {
            MdpModel m = models::frequency_chain(k, sine ? models::Wave::sine : models::Wave::triangle);
            const double h = 1.0 / (8.0 * k);
            Discretization d = discretize(m, h);
            ViResult v = exact_value_iteration(d.mdp, 1e-12);
            for (std::size_t i = 0; i < d.points.size(); ++i) {
                const StatePoint& s = d.points[i];
                if (s.tag != 0) continue;
                CAPTURE(s.coords[0]);
                CHECK(std::abs(v.lower[i] - closed_form::frequency_value(s.coords[0], k, sine)) <= 1e-6);
            }
        }
    }
}

TEST_CASE("discretization of a finite model is the model itself") {
    FiniteMdp f = models::random_finite_mdp(7, 8, 2);
    FiniteMdp g = models::to_finite(models::finite(f, "rf"));
    REQUIRE(g.size() == f.size());
    auto vf = exact_value_iteration(f, 1e-12), vg = exact_value_iteration(g, 1e-12);
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(vf.lower[i] == doctest::Approx(vg.lower[i]).epsilon(1e-12));
}

TEST_CASE("discretization certificate is well formed on gravity-1d") {
    MdpModel m = models::gravity_1d();
    Discretization d = discretize(m, 1.0 / 64);
    CHECK(d.delta > 0);
    ViResult v = exact_value_iteration(d.mdp, 1e-10);
    CHECK(v.absorbing);
    std::size_t i0 = d.index_of(m.initial);
    CHECK(d.points[i0] == m.initial);
    CHECK(std::isfinite(d.tau[i0]));
    auto [lo, hi] = d.certified(v.lower, i0);
    CHECK(lo <= v.lower[i0]);
    CHECK(hi >= v.lower[i0]);
    CHECK_THROWS_AS(discretize(m, 0.3), UnsupportedModel);
}

TEST_CASE("discretized rows are exact cell integrals") {
    MdpModel m = models::navigation_2d();
    Discretization d = discretize(m, 1.0 / 16);
    CHECK_NOTHROW(d.mdp.validate());
    for (std::size_t i = 0; i < d.mdp.size(); ++i)
        for (const auto& row : d.mdp.rows[i]) {
            double s = 0;
            for (auto [t, p] : row) s += p;
            CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
        }
}

}  // TEST_SUITE
