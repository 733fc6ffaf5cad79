#include "lipreach/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <numbers>
#include <random>

#include "lipreach/errors.hpp"

namespace lipreach::models {

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Largest slope of min(k / x^2, cap) for x > 0: reached where k / x^2 = cap.
double clipped_pull_slope(double k, double cap) { return 2 * std::pow(cap, 1.5) / std::sqrt(k); }

}  // namespace

double gravity_lipschitz(const GravityParams& p) {
    // The centre c(s) moves with slope at most 1 + Lip(F); a uniform law of
    // width 2w shifted by x is at TV distance x / 2w; constant mixture
    // weights scale that. |V(s,a) - V(s',a)| <= TV since 0 <= V <= 1.
    double drift = 1 + clipped_pull_slope(p.k_target, p.max_pull) + clipped_pull_slope(p.k_sink, p.max_pull);
    double tv = std::max(1 / (2 * p.noise), (1 - p.explode) / (2 * p.emergency_noise));
    return (1 - p.p_fail) * tv * drift;
}

MdpModel gravity_1d(const GravityParams& p) {
    if (!(p.noise > 0 && p.emergency_noise > 0 && p.k_target > 0 && p.k_sink > 0 && p.band > 0 && p.band < 1))
        throw UsageError("gravity-1d: invalid parameters");
    MdpModel m;
    m.name = "gravity-1d";
    m.descriptor = "band=" + num(p.band) + " kT=" + num(p.k_target) + " kR=" + num(p.k_sink) + " Fmax=" +
                   num(p.max_pull) + " w=" + num(p.noise) + " we=" + num(p.emergency_noise) + " thrust=" +
                   num(p.thrust) + " emergency=" + num(p.emergency_thrust) + " explode=" + num(p.explode) +
                   " pfail=" + num(p.p_fail) + " s0=" + num(p.initial);
    const Box space{{-1.0}, {1.0}};
    m.components = {{0, space}};
    m.action_names = {"idle", "left", "right", "emergency"};
    std::vector<ActionPoint> acts;
    for (int i = 0; i < 4; ++i) acts.push_back(ActionPoint{{}, i});
    ActionSet set = ActionSet::finite(acts);
    m.actions = [set](const StatePoint&) { return set; };
    m.uniform_actions = true;
    m.kernel = [p, space](const StatePoint& s, const ActionPoint& a) {
        const double x = s.coords[0];
        const double pull = std::min(p.k_target / std::pow(std::max(1 - x, 1e-300), 2), p.max_pull) -
                            std::min(p.k_sink / std::pow(std::max(1 + x, 1e-300), 2), p.max_pull);
        const StatePoint crash{{-1.0}, 0};
        const double thrust[] = {0.0, -p.thrust, p.thrust, p.emergency_thrust};
        const double c = x + thrust[a.tag] + pull;
        TransitionKernel engine;
        if (a.tag == 3) {
            engine.add(TransitionKernel::dirac(crash), p.explode);
            engine.add(TransitionKernel::clipped_uniform(0, Box{{c - p.emergency_noise}, {c + p.emergency_noise}}, space),
                       1 - p.explode);
        } else {
            engine = TransitionKernel::clipped_uniform(0, Box{{c - p.noise}, {c + p.noise}}, space);
        }
        if (p.p_fail <= 0) return engine;
        TransitionKernel k;
        k.add(TransitionKernel::dirac(crash), p.p_fail);
        k.add(engine, 1 - p.p_fail);
        return k;
    };
    m.target = RegionSet::box(0, Box{{1 - p.band}, {1.0}});
    m.sink = RegionSet::box(0, Box{{-1.0}, {-1 + p.band}});
    m.sink_representative = StatePoint{{-1.0}, 0};
    m.lipschitz_state = m.lipschitz_pair = gravity_lipschitz(p);
    m.initial = StatePoint{{p.initial}, 0};
    m.constants_note = "C = (1 - pfail) * max(1/(2w), (1 - explode)/(2we)) * (1 + 2 Fmax^1.5 (1/sqrt(kT) + 1/sqrt(kR))) = " +
                       num(m.lipschitz_pair) + " (TV route: uniform shift over width, slope of the clipped pull)";
    m.path_length_hint = 40;
    return m;
}

double navigation_lipschitz(const NavigationParams& p) {
    // The engine factor e(s) and capture probability q(s) have slopes 1/ramp
    // and capture/ramp. The centre s + thrust * e(s) * dir then has slope
    // 1 + thrust/ramp, and a square of half-width w shifted by x is at TV
    // distance at most sqrt(2) |x| / (2w). Mixing in the capture Dirac adds
    // the slope of q. Wells never overlap, so the larger term is enough.
    double centre = 1 + p.thrust / p.ramp;
    return (1 - p.p_fail) * (std::sqrt(2.0) / (2 * p.noise) * centre + p.capture / p.ramp);
}

MdpModel navigation_2d(const NavigationParams& p) {
    if (!(p.noise > 0 && p.ramp > 0 && p.radius > 0 && p.capture >= 0 && p.capture <= 1 && p.p_fail >= 0 &&
          p.p_fail < 1))
        throw UsageError("navigation-2d: invalid parameters");
    MdpModel m;
    m.name = "navigation-2d";
    m.descriptor = "r=" + num(p.radius) + " thrust=" + num(p.thrust) + " w=" + num(p.noise) + " capture=" +
                   num(p.capture) + " well=" + num(p.well) +  " ramp=" + num(p.ramp) + " pfail=" + num(p.p_fail) + " s0=" + num(p.initial_x) +
                   "," + num(p.initial_y);
    const Box space{{0.0, 0.0}, {1.0, 1.0}};
    m.components = {{0, space}};
    m.action_names = {"north", "east"};
    ActionSet set = ActionSet::finite({ActionPoint{{}, 0}, ActionPoint{{}, 1}});
    m.actions = [set](const StatePoint&) { return set; };
    m.uniform_actions = true;
    const std::vector<double> goal{1.0, 1.0}, hole{0.5, 0.5};
    m.kernel = [p, space, goal, hole](const StatePoint& s, const ActionPoint& a) {
        // Strength of the well: 1 inside rim + well, falling to 0 over ramp.
        auto strength = [&](const std::vector<double>& c) {
            double d = euclid(s.coords, c) - p.radius - p.well;
            return std::clamp(1 - d / p.ramp, 0.0, 1.0);
        };
        double sg = strength(goal), sh = strength(hole);
        double engine = 1 - std::max(sg, sh);
        std::vector<double> c = s.coords;
        c[a.tag == 0 ? 1 : 0] += p.thrust * engine;
        Box raw{{c[0] - p.noise, c[1] - p.noise}, {c[0] + p.noise, c[1] + p.noise}};
        TransitionKernel k;
        double qg = p.capture * sg, qh = p.capture * sh;
        if (qg > 0) k.add(TransitionKernel::dirac(StatePoint{goal, 0}), qg);
        if (qh > 0) k.add(TransitionKernel::dirac(StatePoint{hole, 0}), qh);
        k.add(TransitionKernel::clipped_uniform(0, raw, space), 1 - qg - qh);
        if (p.p_fail <= 0) return k;
        TransitionKernel out;
        out.add(TransitionKernel::dirac(StatePoint{hole, 0}), p.p_fail);
        out.add(k, 1 - p.p_fail);
        return out;
    };
    m.target = RegionSet::ball(0, goal, p.radius);
    m.sink = RegionSet::ball(0, hole, p.radius);
    m.sink_representative = StatePoint{hole, 0};
    m.lipschitz_state = m.lipschitz_pair = navigation_lipschitz(p);
    m.initial = StatePoint{{p.initial_x, p.initial_y}, 0};
    m.constants_note = "C = (1 - pfail) * (sqrt(2)/(2w) * (1 + thrust/ramp) + capture/ramp) = " + num(m.lipschitz_pair) +
                       " (TV route: square shift, engine fade and capture ramp)";
    m.path_length_hint = 30;
    return m;
}

double frequency_lipschitz(int k, Wave wave) {
    return k * (wave == Wave::triangle ? 2.0 : std::numbers::pi);
}

MdpModel frequency_chain(int k, Wave wave, double initial, double lipschitz) {
    if (k < 1) throw UsageError("frequency-chain: k must be at least 1");
    if (!(initial >= 0 && initial <= 1)) throw UsageError("frequency-chain: initial state must lie in [0,1]");
    const bool sine = wave == Wave::sine;
    MdpModel m;
    m.name = "frequency-chain";
    double c = lipschitz > 0 ? lipschitz : frequency_lipschitz(k, wave);
    m.descriptor = "k=" + std::to_string(k) + " wave=" + (sine ? "sine" : "triangle") + " s0=" + num(initial) +
                   " C=" + num(c);
    m.components = {{0, Box{{0.0}, {1.0}}}, {1, Box{{0.0}, {0.0}}}, {2, Box{{0.0}, {0.0}}}};
    m.action_names = {"step"};
    ActionSet set = ActionSet::finite({ActionPoint{{}, 0}});
    m.actions = [set](const StatePoint&) { return set; };
    m.uniform_actions = true;
    const double step = 1.0 / k;
    m.kernel = [k, sine, step](const StatePoint& s, const ActionPoint&) {
        if (s.tag != 0) return TransitionKernel::dirac(s);
        double x = s.coords[0];
        if (x > step) return TransitionKernel::dirac(StatePoint{{x - step}, 0});
        double f = closed_form::frequency_value(x, k, sine);
        std::vector<Atom> atoms;
        if (f > 0) atoms.push_back({StatePoint{{0.0}, 1}, f});
        if (f < 1) atoms.push_back({StatePoint{{0.0}, 2}, 1 - f});
        return TransitionKernel::discrete(std::move(atoms));
    };
    m.target = RegionSet::whole_tag(1);
    m.sink = RegionSet::whole_tag(2);
    m.sink_representative = StatePoint{{0.0}, 2};
    m.lipschitz_state = m.lipschitz_pair = c;
    m.initial = StatePoint{{initial}, 0};
    m.constants_note = lipschitz > 0 ? "declared C = " + num(c) + " (override; the true constant is " +
                                           num(frequency_lipschitz(k, wave)) + ")"
                                     : "C = k * Lip(f) = " + num(c);
    m.path_length_hint = static_cast<std::size_t>(k) + 1;
    return m;
}

MdpModel finite(const FiniteMdp& fm, const std::string& name) {
    fm.validate();
    MdpModel m;
    m.name = name;
    std::string d = "states=" + std::to_string(fm.size()) + " initial=" + std::to_string(fm.initial);
    for (std::size_t s = 0; s < fm.size(); ++s) {
        if (fm.target[s]) d += "\ntarget " + std::to_string(s);
        if (fm.sink[s]) d += "\nsink " + std::to_string(s);
        for (std::size_t a = 0; a < fm.rows[s].size(); ++a)
            for (auto [t, pr] : fm.rows[s][a])
                d += "\ntrans " + std::to_string(s) + " " + std::to_string(a) + " " + std::to_string(t) + " " + num(pr);
    }
    m.descriptor = d;
    std::size_t most = 1;
    for (std::size_t s = 0; s < fm.size(); ++s) {
        m.components.push_back({static_cast<int>(s), Box{}});
        most = std::max(most, fm.rows[s].size());
    }
    for (std::size_t a = 0; a < most; ++a) m.action_names.push_back("a" + std::to_string(a));
    auto rows = std::make_shared<const std::vector<std::vector<FiniteMdp::Row>>>(fm.rows);
    m.actions = [rows](const StatePoint& s) {
        std::size_t n = std::max<std::size_t>(1, (*rows)[static_cast<std::size_t>(s.tag)].size());
        std::vector<ActionPoint> acts;
        for (std::size_t a = 0; a < n; ++a) acts.push_back(ActionPoint{{}, static_cast<int>(a)});
        return ActionSet::finite(std::move(acts));
    };
    m.kernel = [rows](const StatePoint& s, const ActionPoint& a) {
        const auto& state_rows = (*rows)[static_cast<std::size_t>(s.tag)];
        if (state_rows.empty()) return TransitionKernel::dirac(s);
        std::vector<Atom> atoms;
        for (auto [t, pr] : state_rows[static_cast<std::size_t>(a.tag)])
            atoms.push_back({StatePoint{{}, static_cast<int>(t)}, pr});
        return TransitionKernel::discrete(std::move(atoms));
    };
    for (std::size_t s = 0; s < fm.size(); ++s) {
        if (fm.target[s]) m.target.merge(RegionSet::whole_tag(static_cast<int>(s)));
        if (fm.sink[s]) {
            m.sink.merge(RegionSet::whole_tag(static_cast<int>(s)));
            if (!m.sink_representative) m.sink_representative = StatePoint{{}, static_cast<int>(s)};
        }
    }
    m.lipschitz_state = m.lipschitz_pair = 1;
    m.initial = StatePoint{{}, static_cast<int>(fm.initial)};
    m.constants_note = "C = 1: values lie in [0,1] and distinct points are at distance >= 1";
    m.path_length_hint = fm.size();
    return m;
}

FiniteMdp to_finite(const MdpModel& model) {
    for (const auto& c : model.components)
        if (c.box.nondegenerate_axes() != 0) throw UnsupportedModel("to_finite: component " + std::to_string(c.tag) + " is not a point");
    return discretize(model, 1.0).mdp;
}

FiniteMdp random_finite_mdp(std::uint64_t seed, std::size_t n_states, std::size_t n_actions) {
    if (n_states < 1 || n_actions < 1) throw UsageError("random-finite: need at least one state and one action");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick(0, n_states - 1), fan(1, 3);
    const auto target = static_cast<std::uint32_t>(n_states), sink = target + 1;
    FiniteMdp m;
    m.rows.resize(n_states + 2);
    m.target.assign(n_states + 2, 0);
    m.sink.assign(n_states + 2, 0);
    m.target[target] = 1;
    m.sink[sink] = 1;
    for (std::size_t s = 0; s < n_states; ++s) {
        for (std::size_t a = 0; a < n_actions; ++a) {
            double leak = 0.01 + 0.19 * unit(rng);
            double to_target = leak * unit(rng);
            std::map<std::uint32_t, double> row;
            std::size_t k = fan(rng);
            std::vector<double> w(k);
            double total = 0;
            for (auto& x : w) total += (x = 0.05 + unit(rng));
            for (std::size_t i = 0; i < k; ++i)
                row[static_cast<std::uint32_t>(pick(rng))] += (1 - leak) * w[i] / total;
            row[target] += to_target;
            row[sink] += leak - to_target;
            FiniteMdp::Row r(row.begin(), row.end());
            double rest = 0;
            for (std::size_t i = 0; i + 1 < r.size(); ++i) rest += r[i].second;
            r.back().second = 1 - rest;
            m.rows[s].push_back(std::move(r));
        }
    }
    return m;
}

MdpModel random_finite(std::uint64_t seed, std::size_t n_states, std::size_t n_actions) {
    return finite(random_finite_mdp(seed, n_states, n_actions),
                  "random-finite-" + std::to_string(seed) + "-" + std::to_string(n_states) + "x" +
                      std::to_string(n_actions));
}

FiniteMdp two_state_chain(double p) {
    FiniteMdp m;
    m.rows = {{{{1, p}, {2, 1 - p}}}, {}, {{{2, 1.0}}}};
    m.target = {0, 1, 0};
    m.sink = {0, 0, 0};
    return m;
}

FiniteMdp self_loop_chain(double p) {
    FiniteMdp m;
    m.rows = {{{{0, 1 - p}, {1, p}}}, {}};
    m.target = {0, 1};
    m.sink = {0, 0};
    return m;
}

MdpModel catalog(const std::string& name, const CatalogOptions& opt) {
    if (name == "gravity-1d") return gravity_1d();
    if (name == "navigation-2d") return navigation_2d();
    if (name == "frequency-chain") return frequency_chain(opt.k, opt.wave, 0.3, opt.bad_constant ? 1.0 : 0.0);
    if (name == "random-finite") return random_finite(opt.seed, opt.states, opt.actions);
    if (name == "two-state") return finite(two_state_chain(), "two-state");
    if (name == "self-loop") return finite(self_loop_chain(), "self-loop");
    throw UsageError("unknown model '" + name + "'");
}

}  // namespace lipreach::models
