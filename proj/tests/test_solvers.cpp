#include <doctest.h>

#include <cmath>

#include "gen.hpp"
#include "lipreach/errors.hpp"
#include "lipreach/models.hpp"
#include "lipreach/oracle.hpp"
#include "lipreach/solvers.hpp"

using namespace lipreach;

namespace {

SolverConfig brtdp(double eps, std::uint64_t seed) {
    SolverConfig c;
    c.mode = Mode::brtdp;
    c.epsilon = eps;
    c.seed = seed;
    c.max_steps = 200'000;
    return c;
}

// Lower bounds never drop and upper bounds never rise, up to the probes' slack.
void check_monotone(const std::vector<TraceRow>& trace) {
    for (std::size_t i = 1; i < trace.size(); ++i) {
        const double slack = trace[i - 1].slack + trace[i].slack + 1e-12;
        CHECK(trace[i].lower >= trace[i - 1].lower - slack);
        CHECK(trace[i].upper <= trace[i - 1].upper + slack);
        CHECK(trace[i].step >= trace[i - 1].step);
    }
}

}  // namespace

TEST_SUITE("solvers") {

TEST_CASE("brtdp brackets the oracle on random finite models") {
    for (std::uint64_t seed = 1; seed <= 12; ++seed) {
        FiniteMdp f = models::random_finite_mdp(seed, 8, 3);
        const double v = exact_value_iteration(f, 1e-12).lower[f.initial];
        Solver s(models::finite(f, "rf"), brtdp(0.01, seed));
        SolverResult r = s.run();
        CAPTURE(seed);
        CHECK(r.outcome == Outcome::bounds);
        CHECK(r.upper - r.lower < 0.01);
        CHECK(r.lower <= v + 1e-9);
        CHECK(r.upper >= v - 1e-9);
        check_monotone(s.trace());
    }
}

TEST_CASE("vi-lower answers yes above the threshold and runs out below it") {
    MdpModel m = models::finite(models::two_state_chain(0.5), "chain");
    SolverConfig c;
    c.mode = Mode::vi_lower;
    c.xi = 0.4;
    c.max_steps = 10'000;
    SolverResult yes = solve_vi_lower(m, c);
    CHECK(yes.outcome == Outcome::yes);
    CHECK(yes.lower > 0.4);
    CHECK(yes.lower <= 0.5 + 1e-9);
    c.xi = 0.6;
    SolverResult no = solve_vi_lower(m, c);
    CHECK(no.outcome == Outcome::budget_exhausted);
    CHECK(no.lower <= 0.5 + 1e-9);
}

TEST_CASE("step-bounded runs match the exact n-step values") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        FiniteMdp f = models::random_finite_mdp(seed, 6, 2);
        for (int n : {0, 1, 2, 5}) {
            const double v = n_step_dp(f, n)[f.initial];
            SolverConfig c = brtdp(0.01, seed);
            c.mode = Mode::step_bounded;
            c.horizon = n;
            SolverResult r = solve_step_bounded(models::finite(f, "rf"), n, c);
            CAPTURE(seed);
            CAPTURE(n);
            CHECK(r.lower <= v + 1e-9);
            CHECK(r.upper >= v - 1e-9);
            CHECK(r.upper - r.lower < 0.01);
        }
    }
}

TEST_CASE("reach-avoid equals reachability with the avoid states made sinks") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        FiniteMdp f = models::random_finite_mdp(seed, 8, 2);
        const std::size_t avoided = (f.initial + 3) % 8;
        FiniteMdp g = f;
        g.sink[avoided] = 1;
        g.rows[avoided].clear();
        const double v = exact_value_iteration(g, 1e-12).lower[g.initial];
        SolverConfig c = brtdp(0.01, seed);
        c.mode = Mode::reach_avoid;
        SolverResult r = solve_reach_avoid(models::finite(f, "rf"), RegionSet::whole_tag(static_cast<int>(avoided)), c);
        CAPTURE(seed);
        CHECK(r.lower <= v + 1e-9);
        CHECK(r.upper >= v - 1e-9);
        CHECK(r.upper - r.lower < 0.01);
    }
}

TEST_CASE("a frequency chain run brackets the closed form") {
    MdpModel m = models::frequency_chain(2);
    const double v = closed_form::frequency_value(0.3, 2, false);
    Solver s(m, brtdp(0.02, 3));
    SolverResult r = s.run();
    CHECK(r.outcome == Outcome::bounds);
    CHECK(r.lower <= v + 1e-9);
    CHECK(r.upper >= v - 1e-9);
    check_monotone(s.trace());
}

TEST_CASE("an understated constant is caught as a bound crossing or excludes the truth") {
    MdpModel m = models::frequency_chain(4, models::Wave::triangle, 0.3, 0.5);
    const double v = closed_form::frequency_value(0.3, 4, false);
    try {
        SolverResult r = solve_brtdp(m, brtdp(0.01, 5));
        CHECK((r.lower > v || r.upper < v));
    } catch (const BoundCrossing&) {
        CHECK(true);
    }
}

TEST_CASE("warm start from converged records finishes at the first probe") {
    FiniteMdp f = models::random_finite_mdp(4, 10, 3);
    MdpModel m = models::finite(f, "rf");
    Solver first(m, brtdp(0.01, 1));
    REQUIRE(first.run().outcome == Outcome::bounds);
    std::vector<SampleRecord> recs;
    for (std::size_t i = 0; i < first.store().size(); ++i) recs.push_back(first.store().record(i));
    Solver second(m, brtdp(0.01, 2));
    second.warm_start(recs);
    SolverResult r = second.run();
    CHECK(r.outcome == Outcome::bounds);
    CHECK(r.steps <= second.config().probe_every);
}

TEST_CASE("doubling the constant only loosens the bounds") {
    // The grid sampler ignores the store, so both runs update the same pairs.
    auto run = [](double lipschitz, std::int64_t steps) {
        MdpModel m = models::frequency_chain(2, models::Wave::triangle, 0.3, lipschitz);
        SolverConfig c;
        c.mode = Mode::brtdp;
        c.epsilon = 1e-9;
        c.max_steps = steps;
        c.precision_floor = 1e-3;
        c.use_grid = false;
        c.sampler.kind = SamplerKind::grid;
        c.stagnation_window = 1'000'000;
        Solver s(m, c);
        SolverResult r = s.run();
        return std::make_pair(r.lower, r.upper);
    };
    const double C = models::frequency_lipschitz(2, models::Wave::triangle);
    for (std::int64_t steps : {50, 200, 800}) {
        auto [l1, u1] = run(C, steps);
        auto [l2, u2] = run(2 * C, steps);
        CAPTURE(steps);
        CHECK(l2 <= l1 + 0.01);
        CHECK(u2 >= u1 - 0.01);
    }
}

TEST_CASE("invalid settings are usage errors") {
    MdpModel m = models::gravity_1d();
    SolverConfig c;
    c.probe_every = 0;
    CHECK_THROWS_AS(Solver(m, c), UsageError);
}

TEST_CASE("identical seeds give identical traces") {
    FiniteMdp f = models::random_finite_mdp(9, 10, 3);
    MdpModel m = models::finite(f, "rf");
    Solver a(m, brtdp(0.01, 17)), b(m, brtdp(0.01, 17));
    a.run();
    b.run();
    REQUIRE(a.trace().size() == b.trace().size());
    for (std::size_t i = 0; i < a.trace().size(); ++i) {
        CHECK(a.trace()[i].lower == b.trace()[i].lower);
        CHECK(a.trace()[i].upper == b.trace()[i].upper);
        CHECK(a.trace()[i].state == b.trace()[i].state);
    }
}

}  // TEST_SUITE
