#include <doctest.h>

#include <cmath>

#include "gen.hpp"
#include "lipreach/approx.hpp"
#include "lipreach/envelope_grid.hpp"
#include "lipreach/errors.hpp"
#include "lipreach/models.hpp"
#include "lipreach/solvers.hpp"

using namespace lipreach;

namespace {

// f(x) = 0.5 + sum_j a_j sin(w_j x_j + p_j): values in (0,1), closed-form box means.
struct Wave {
    std::vector<double> a, w, p;

    double operator()(const std::vector<double>& x) const {
        double v = 0.5;
        for (std::size_t j = 0; j < x.size(); ++j) v += a[j] * std::sin(w[j] * x[j] + p[j]);
        return v;
    }
    double lipschitz() const {
        double s = 0;
        for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * a[j] * w[j] * w[j];
        return std::sqrt(s);
    }
    double box_mean(const Box& b) const {
        double v = 0.5;
        for (std::size_t j = 0; j < a.size(); ++j) {
            if (b.degenerate(j)) {
                v += a[j] * std::sin(w[j] * b.lo[j] + p[j]);
                continue;
            }
            v += a[j] * (std::cos(w[j] * b.lo[j] + p[j]) - std::cos(w[j] * b.hi[j] + p[j])) / (w[j] * b.extent(j));
        }
        return v;
    }
    double expectation(const TransitionKernel& k) const {
        double e = 0;
        for (const auto& at : k.atoms()) e += at.mass * (*this)(at.point.coords);
        for (const auto& bx : k.boxes()) e += bx.mass * box_mean(bx.box);
        return e;
    }
};

Wave random_wave(gen::Rng& r, std::size_t d) {
    Wave f;
    for (std::size_t j = 0; j < d; ++j) {
        f.a.push_back(gen::uniform(r, 0.0, 0.45 / static_cast<double>(d)));
        f.w.push_back(gen::uniform(r, 0.5, 12.0));
        f.p.push_back(gen::uniform(r, 0.0, 6.3));
    }
    return f;
}

}  // namespace

TEST_SUITE("approx") {

TEST_CASE("expectation sandwich on 500 random kernels and integrands") {
    gen::Rng r(41);
    for (int i = 0; i < 500; ++i) {
        const std::size_t d = static_cast<std::size_t>(gen::integer(r, 1, 2));
        TransitionKernel k = gen::kernel(r, d);
        Wave f = random_wave(r, d);
        LipschitzIntegrand g([&](const StatePoint& s) { return f(s.coords); }, f.lipschitz());
        const double exact = f.expectation(k);
        const double prec = gen::uniform(r, 0.005, 0.05);
        ApproxRequest under{Direction::under, prec, f.lipschitz(), 2'000'000};
        ApproxRequest over{Direction::over, prec, f.lipschitz(), 2'000'000};
        double lo = approx_expectation(k, g, under), hi = approx_expectation(k, g, over);
        CAPTURE(i);
        CHECK(lo <= exact + 1e-12);
        CHECK(hi >= exact - 1e-12);
        CHECK(exact - lo <= prec + 1e-12);
        CHECK(hi - exact <= prec + 1e-12);
    }
}

TEST_CASE("max sandwich over box action sets") {
    gen::Rng r(42);
    for (int i = 0; i < 300; ++i) {
        const std::size_t d = static_cast<std::size_t>(gen::integer(r, 1, 2));
        ActionSet acts = ActionSet::box(Box{std::vector<double>(d, 0.0), std::vector<double>(d, 1.0)});
        // Tent functions peak at points inside the box, so the max is the top height.
        std::vector<std::pair<std::vector<double>, double>> tents;
        double best = 0;
        for (int t = 0; t < 3; ++t) {
            tents.push_back({gen::point(r, d), gen::uniform(r, 0.2, 0.9)});
            best = std::max(best, tents.back().second);
        }
        const double L = gen::uniform(r, 0.5, 4.0);
        auto f = [&](const ActionPoint& a) {
            double v = 0;
            for (auto& [c, h] : tents) v = std::max(v, h - L * euclid(a.coords, c));
            return v;
        };
        const double prec = gen::uniform(r, 0.01, 0.1);
        double lo = approx_max(acts, f, {Direction::under, prec, L, 1'000'000});
        double hi = approx_max(acts, f, {Direction::over, prec, L, 1'000'000});
        CHECK(lo <= best + 1e-12);
        CHECK(hi >= best - 1e-12);
        CHECK(best - lo <= prec + 1e-12);
        CHECK(hi - best <= prec + 1e-12);
    }
}

TEST_CASE("finite action sets are enumerated exactly") {
    ActionSet acts = ActionSet::finite({ActionPoint{{}, 0}, ActionPoint{{}, 1}});
    auto f = [](const ActionPoint& a) { return a.tag == 0 ? 0.25 : 0.75; };
    CHECK(approx_max(acts, f, {Direction::under, 0.5, 1.0, 10}) == 0.75);
    CHECK(approx_max(acts, f, {Direction::over, 0.5, 1.0, 10}) == 0.75);
}

TEST_CASE("atoms are exact regardless of precision") {
    TransitionKernel k = TransitionKernel::discrete({{{{0.2}, 0}, 0.5}, {{{0.9}, 0}, 0.5}});
    LipschitzIntegrand g([](const StatePoint& s) { return s.coords[0]; }, 1.0);
    CHECK(approx_expectation(k, g, {Direction::under, 0.3, 1.0, 10}) == doctest::Approx(0.55));
    CHECK(approx_expectation(k, g, {Direction::over, 0.3, 1.0, 10}) == doctest::Approx(0.55));
}

TEST_CASE("evaluation cap is reported as a budget error") {
    TransitionKernel k = TransitionKernel::uniform(0, Box{{0.0, 0.0}, {1.0, 1.0}});
    LipschitzIntegrand g([](const StatePoint&) { return 0.5; }, 100.0);
    CHECK_THROWS_AS(approx_expectation(k, g, {Direction::under, 1e-4, 100.0, 1000}), BudgetExceeded);
}

TEST_CASE("envelope grid: Fenwick means equal direct sums, serial and parallel") {
    MdpModel m = models::navigation_2d();
    EnvelopeGrid grid(m, {0.05, std::size_t{1} << 14});
    gen::Rng r(43);
    BoundStore st = BoundStore::for_model(m);
    for (int i = 0; i < 400; ++i) {
        StatePoint s{gen::point(r, 2), 0};
        if (m.is_target(s) || m.is_sink(s)) continue;
        ActionPoint a{{}, gen::integer(r, 0, 1)};
        double l = std::min(gen::uniform(r, 0, 0.4), st.upper_at(s, a));
        double u = std::max(gen::uniform(r, 0.6, 1.0), st.lower_at(s, a));
        grid.absorb(st.record_update(s, a, l, u));
    }
    for (int i = 0; i < 200; ++i) {
        Box b = gen::box(r, 2, 0.0, 1.0, 0.1);
        for (Direction dir : {Direction::under, Direction::over}) {
            double fen = *grid.mean(0, b, dir);
            CHECK(fen == doctest::Approx(*grid.mean_direct(0, b, dir, false)).epsilon(1e-9));
            CHECK(fen == doctest::Approx(*grid.mean_direct(0, b, dir, true)).epsilon(1e-9));
        }
    }
}

TEST_CASE("envelope grid means are sound against grid-free quadrature") {
    MdpModel m = models::navigation_2d();
    const EnvelopeGrid::Options opt{0.2, std::size_t{1} << 12};
    EnvelopeGrid grid(m, opt);
    gen::Rng r(44);
    BoundStore st = BoundStore::for_model(m);
    for (int i = 0; i < 300; ++i) {
        StatePoint s{gen::point(r, 2), 0};
        if (m.is_target(s) || m.is_sink(s)) continue;
        ActionPoint a{{}, gen::integer(r, 0, 1)};
        double l = std::min(gen::uniform(r, 0.2, 0.5), st.upper_at(s, a));
        double u = std::max(gen::uniform(r, 0.5, 0.8), st.lower_at(s, a));
        grid.absorb(st.record_update(s, a, l, u));
    }
    EnvelopeIntegrand with_grid(m, st, &grid, 1e-3);
    EnvelopeIntegrand without(m, st, nullptr, 1e-3);
    const double C = m.lipschitz_pair;
    for (int i = 0; i < 40; ++i) {
        StatePoint s{gen::point(r, 2), 0};
        if (m.is_target(s) || m.is_sink(s)) continue;
        TransitionKernel k = m.kernel(s, ActionPoint{{}, gen::integer(r, 0, 1)});
        const double fine = 0.02;
        double lo_g = approx_expectation(k, with_grid, {Direction::under, 1.0, C, 4'000'000});
        double hi_g = approx_expectation(k, with_grid, {Direction::over, 1.0, C, 4'000'000});
        double lo_f = approx_expectation(k, without, {Direction::under, fine, C, 4'000'000});
        double hi_f = approx_expectation(k, without, {Direction::over, fine, C, 4'000'000});
        // Both pairs bracket the same true expectation.
        CHECK(lo_g <= hi_f + 1e-12);
        CHECK(hi_g >= lo_f - 1e-12);
        // And the grid is no looser than its advertised precision.
        CHECK(hi_g - lo_g <= (hi_f - lo_f) + 2 * grid.precision() + 1e-9);
    }
}

TEST_CASE("envelope grid pointwise cell bounds bracket the store envelope") {
    MdpModel m = models::navigation_2d();
    EnvelopeGrid grid(m, {0.1, std::size_t{1} << 12});
    gen::Rng r(45);
    BoundStore st = BoundStore::for_model(m);
    for (int i = 0; i < 200; ++i) {
        StatePoint s{gen::point(r, 2), 0};
        if (m.is_target(s) || m.is_sink(s)) continue;
        ActionPoint a{{}, gen::integer(r, 0, 1)};
        double l = std::min(gen::uniform(r, 0.1, 0.5), st.upper_at(s, a));
        double u = std::max(gen::uniform(r, 0.5, 0.9), st.lower_at(s, a));
        grid.absorb(st.record_update(s, a, l, u));
    }
    ActionSet acts = m.actions(m.initial);
    for (int i = 0; i < 2000; ++i) {
        StatePoint s{gen::point(r, 2), 0};
        if (m.is_target(s) || m.is_sink(s)) continue;
        CHECK(grid.cell_bound(s, Direction::under) <= st.lower_state(s, acts, 1e-3) + 1e-12);
        CHECK(grid.cell_bound(s, Direction::over) >= st.upper_state(s, acts, 1e-3) - 1e-12);
    }
}

}  // TEST_SUITE
