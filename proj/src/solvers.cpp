#include "lipreach/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "lipreach/errors.hpp"

namespace lipreach {

const char* to_string(Mode m) {
    switch (m) {
        case Mode::vi_lower: return "vi-lower";
        case Mode::brtdp: return "brtdp";
        case Mode::step_bounded: return "step-bounded";
        case Mode::reach_avoid: return "reach-avoid";
    }
    return "?";
}

const char* to_string(Outcome o) {
    switch (o) {
        case Outcome::yes: return "yes";
        case Outcome::bounds: return "bounds";
        case Outcome::budget_exhausted: return "budget-exhausted";
    }
    return "?";
}

const char* to_string(SamplerKind k) {
    switch (k) {
        case SamplerKind::grid: return "grid";
        case SamplerKind::random: return "random";
        case SamplerKind::guided: return "guided";
        case SamplerKind::mixture: return "mixture";
    }
    return "?";
}

Mode parse_mode(const std::string& s) {
    for (Mode m : {Mode::vi_lower, Mode::brtdp, Mode::step_bounded, Mode::reach_avoid})
        if (s == to_string(m)) return m;
    throw UsageError("unknown mode '" + s + "'");
}

SamplerKind parse_sampler(const std::string& s) {
    for (SamplerKind k : {SamplerKind::grid, SamplerKind::random, SamplerKind::guided, SamplerKind::mixture})
        if (s == to_string(k)) return k;
    throw UsageError("unknown sampler '" + s + "'");
}

EnvelopeIntegrand::EnvelopeIntegrand(const MdpModel& model, const BoundStore& store, const EnvelopeGrid* grid,
                                     double point_precision)
    : model_(model),
      store_(store),
      grid_(grid),
      point_precision_(point_precision),
      lipschitz_(model.max_pair_lipschitz()) {}

double EnvelopeIntegrand::point(const StatePoint& s, Direction dir) const {
    if (model_.is_target(s)) return 1.0;
    if (model_.is_sink(s)) return 0.0;
    ActionSet acts = model_.actions(s);
    return dir == Direction::under ? store_.lower_state(s, acts, point_precision_)
                                   : store_.upper_state(s, acts, point_precision_);
}

double EnvelopeIntegrand::cell(int tag, const Box& box, Direction dir) const {
    const double trivial = dir == Direction::under ? 0.0 : 1.0;
    Overlap t = model_.target.classify(tag, box), r = model_.sink.classify(tag, box);
    if (t == Overlap::full) return 1.0;
    if (r == Overlap::full) return 0.0;
    if (dir == Direction::under && r != Overlap::none) return 0.0;
    if (dir == Direction::over && t != Overlap::none) return 1.0;
    StatePoint c{box.center(), tag};
    if (model_.is_target(c) || model_.is_sink(c)) return trivial;
    int region = store_.region_of(c);
    if (model_.partition) {
        // The whole cell must sit in the centre's region for V to be
        // Lipschitz across it.
        const auto& regions = model_.partition->regions;
        for (std::size_t i = 0; i < regions.size(); ++i) {
            Overlap o = regions[i].shape.classify(tag, box);
            if (static_cast<int>(i) == region ? o != Overlap::full : o != Overlap::none) return trivial;
        }
    }
    // V is C-Lipschitz on the cell and the envelope bounds V at the centre.
    double spread = store_.lipschitz_for(region) * 0.5 * box.diameter();
    double v = point(c, dir);
    return dir == Direction::under ? std::max(0.0, v - spread) : std::min(1.0, v + spread);
}

std::optional<double> EnvelopeIntegrand::box_mean(int tag, const Box& box, Direction dir, double precision) const {
    if (!grid_ || !grid_->covers(tag) || grid_->precision() > precision) return std::nullopt;
    return grid_->mean(tag, box, dir);
}

double TargetIndicator::cell(int tag, const Box& cell, Direction dir) const {
    switch (model_.target.classify(tag, cell)) {
        case Overlap::full: return 1.0;
        case Overlap::none: return 0.0;
        case Overlap::partial: break;
    }
    return dir == Direction::under ? 0.0 : 1.0;
}

Solver::Solver(MdpModel model, SolverConfig config) : model_(std::move(model)), config_(std::move(config)) {
    const Mode mode = config_.mode;
    if (mode == Mode::vi_lower) {
        if (!(config_.xi >= 0 && config_.xi < 1)) throw UsageError("xi must lie in [0, 1)");
    } else if (!(config_.epsilon > 0)) {
        throw UsageError("epsilon must be positive");
    }
    if (config_.horizon < 0) throw UsageError("horizon must be non-negative");
    if (config_.probe_every < 1 || config_.trace_every < 1) throw UsageError("probe and trace cadence must be >= 1");
    if (config_.max_steps < 0) throw UsageError("max steps must be non-negative");
    if (config_.precision_floor < 0) throw UsageError("precision floor must be non-negative");
    if (mode == Mode::reach_avoid) {
        if (!config_.avoid) throw UsageError("reach-avoid needs an avoid set");
        model_ = with_avoid(model_, *config_.avoid);
    }
    if (!model_.in_space(model_.initial)) throw UsageError("initial state lies outside the state space");
    floor_ = config_.precision_floor > 0 ? config_.precision_floor
                                         : (mode == Mode::vi_lower ? 1e-3 : config_.epsilon / 64);
    std::size_t n_layers = mode == Mode::step_bounded ? static_cast<std::size_t>(config_.horizon) : 1;
    for (std::size_t i = 0; i < n_layers; ++i) layers_.push_back(BoundStore::for_model(model_, config_.store));
    make_grids();
    SamplerConfig sc = config_.sampler;
    if (mode == Mode::step_bounded) {
        std::size_t cap = static_cast<std::size_t>(std::max(1, config_.horizon));
        sc.max_path_len = sc.max_path_len ? std::min(sc.max_path_len, cap) : cap;
    }
    config_.sampler = sc;
    sampler_ = make_sampler(sc, model_, config_.seed);
}

Solver::~Solver() = default;

void Solver::make_grids() {
    grids_.clear();
    if (!config_.use_grid || !EnvelopeGrid::supports(model_)) return;
    EnvelopeGrid::Options opt{floor_ / 2, config_.grid_max_cells};
    for (std::size_t i = 0; i < layers_.size(); ++i) grids_.push_back(std::make_unique<EnvelopeGrid>(model_, opt));
    if (!grids_.empty() && grids_.front()->precision() > floor_ / 2) {
        double raised = 2 * grids_.front()->precision();
        char buf[160];
        std::snprintf(buf, sizeof buf, "precision floor raised from %.6g to %.6g: envelope grid capped at %zu cells",
                      floor_, raised, grids_.front()->cells());
        notes_.push_back(buf);
        floor_ = raised;
    }
}

const BoundStore& Solver::store() const {
    if (layers_.empty()) throw UsageError("a zero-step run has no store");
    return layers_.back();
}

const EnvelopeGrid* Solver::grid() const { return grids_.empty() ? nullptr : grids_.back().get(); }

void Solver::warm_start(const std::vector<SampleRecord>& records) {
    if (layers_.empty()) return;
    for (const auto& r : records) {
        layers_.back().restore(r);
        if (!grids_.empty()) grids_.back()->absorb(r);
    }
}

double Solver::precision(std::int64_t t) const {
    return std::max(1.0 / static_cast<double>(std::max<std::int64_t>(t, 1)), floor_);
}

std::pair<double, double> probe_bounds(const BoundStore& store, const MdpModel& model, const StatePoint& s,
                                       double precision) {
    if (!(precision > 0)) throw UsageError("probe precision must be positive");
    ActionSet acts = model.actions(s);
    return {store.lower_state(s, acts, precision), store.upper_state(s, acts, precision)};
}

std::pair<double, double> Solver::probe(const StatePoint& s, double prec) const {
    if (layers_.empty()) {
        double v = model_.is_target(s) ? 1.0 : 0.0;
        return {v, v};
    }
    return probe_bounds(store(), model_, s, prec);
}

std::vector<std::pair<double, double>> Solver::probe_many(const std::vector<StatePoint>& states, double prec,
                                                          bool parallel) const {
    std::vector<std::pair<double, double>> out(states.size());
    const auto n = static_cast<std::ptrdiff_t>(states.size());
#pragma omp parallel for schedule(dynamic, 16) if (parallel && n > 64)
    for (std::ptrdiff_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = probe(states[static_cast<std::size_t>(i)], prec);
    return out;
}

std::vector<ActionPoint> Solver::greedy(const StatePoint& s, double tolerance) const {
    ActionSet acts = model_.actions(s);
    if (layers_.empty()) return acts.is_finite() ? acts.points() : std::vector<ActionPoint>{acts.canonical()};
    return store().greedy_actions(s, acts, tolerance);
}

Solver::Probe Solver::probe_initial(std::int64_t t) const {
    const StatePoint& s0 = model_.initial;
    double p = precision(t);
    auto [l, u] = probe(s0, p);
    bool exact = layers_.empty() || model_.actions(s0).is_finite();
    return {l, u, exact ? 0.0 : p};
}

SamplerContext Solver::context(double gap) const {
    static const BoundStore no_store(0, 0, 1);
    SamplerContext ctx{model_, layers_.empty() ? no_store : store(), gap, {}};
    if (config_.mode == Mode::step_bounded) {
        const std::size_t n = layers_.size();
        ctx.greedy = [this, n](const StatePoint& s, std::size_t depth, double tol) {
            ActionSet acts = model_.actions(s);
            if (depth >= n) return acts.is_finite() ? acts.points() : std::vector<ActionPoint>{acts.canonical()};
            return layers_[n - 1 - depth].greedy_actions(s, acts, tol);
        };
    }
    return ctx;
}

std::string Solver::update(const PairSample& p, std::int64_t t) {
    const StatePoint& s = p.state;
    const ActionPoint& a = p.action;
    if (model_.is_target(s)) return "target-hit";
    if (model_.is_sink(s)) return "sink-hit";
    const double prec = precision(t);
    const double C = model_.max_pair_lipschitz();
    const TransitionKernel k = model_.kernel(s, a);
    ApproxRequest under{Direction::under, prec, C, config_.approx_budget};
    ApproxRequest over{Direction::over, prec, C, config_.approx_budget};
    auto commit = [&](std::size_t i, double lo, double hi) {
        BoundStore& st = layers_[i];
        double nl = std::max(lo, st.lower_at(s, a));
        double nu = std::min(hi, st.upper_at(s, a));
        SampleRecord rec = st.record_update(s, a, nl, nu, t);
        if (!grids_.empty()) grids_[i]->absorb(rec);
    };
    switch (config_.mode) {
        case Mode::step_bounded: {
            TargetIndicator zero(model_, C);
            for (std::size_t i = 0; i < layers_.size(); ++i) {
                std::optional<EnvelopeIntegrand> prev;
                if (i > 0) prev.emplace(model_, layers_[i - 1], grids_.empty() ? nullptr : grids_[i - 1].get(), prec / 2);
                const Integrand& g = i == 0 ? static_cast<const Integrand&>(zero) : *prev;
                commit(i, approx_expectation(k, g, under), approx_expectation(k, g, over));
            }
            break;
        }
        case Mode::vi_lower: {
            EnvelopeIntegrand g(model_, layers_[0], grids_.empty() ? nullptr : grids_[0].get(), prec / 2);
            commit(0, approx_expectation(k, g, under), 1.0);
            break;
        }
        case Mode::brtdp:
        case Mode::reach_avoid: {
            EnvelopeIntegrand g(model_, layers_[0], grids_.empty() ? nullptr : grids_[0].get(), prec / 2);
            commit(0, approx_expectation(k, g, under), approx_expectation(k, g, over));
            break;
        }
    }
    return "backprop";
}

void Solver::emit(std::int64_t t, const std::string& event, const PairSample& p, const Probe& pr) {
    TraceRow row{t, event, p.state, p.action, pr.lower, pr.upper, pr.slack, layers_.empty() ? 0 : store().size()};
    trace_.push_back(row);
    if (on_trace) on_trace(trace_.back());
}

SolverResult Solver::run() {
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - start).count(); };
    const bool vi = config_.mode == Mode::vi_lower;
    const bool stagnation = config_.mode == Mode::brtdp || config_.mode == Mode::reach_avoid;

    SolverResult res;
    res.notes = notes_;
    res.precision_floor = floor_;
    auto done = [&](double l, double u) { return vi ? l > config_.xi : u - l < config_.epsilon; };
    auto finish = [&](Outcome o) {
        res.outcome = o;
        res.steps = steps_;
        res.seconds = elapsed();
        return res;
    };

    PairSample last{model_.initial, model_.actions(model_.initial).canonical()};
    std::string last_event = "init";
    Probe pr = probe_initial(steps_);
    emit(steps_, last_event, last, pr);
    res.lower = pr.lower;
    res.upper = pr.upper;
    std::int64_t last_row = steps_;
    if (done(res.lower, res.upper)) return finish(vi ? Outcome::yes : Outcome::bounds);

    double best_gap = res.upper - res.lower;
    std::int64_t improved_at = steps_;
    const std::int64_t limit = steps_ + config_.max_steps;
    while (true) {
        if (steps_ >= limit || (config_.max_seconds > 0 && (steps_ & 255) == 0 && elapsed() > config_.max_seconds)) {
            if (last_row != steps_) emit(steps_, last_event, last, probe_initial(steps_));
            return finish(Outcome::budget_exhausted);
        }
        SamplerContext ctx = context(res.upper - res.lower);
        last = sampler_->next(ctx);
        ++steps_;
        last_event = update(last, steps_);
        const bool probe_due = steps_ % config_.probe_every == 0;
        const bool trace_due = steps_ % config_.trace_every == 0;
        if (!probe_due && !trace_due) continue;
        pr = probe_initial(steps_);
        res.lower = std::max(res.lower, pr.lower);
        res.upper = std::min(res.upper, pr.upper);
        const bool finished = done(res.lower, res.upper);
        if (trace_due || finished) {
            emit(steps_, last_event, last, pr);
            last_row = steps_;
        }
        if (finished) return finish(vi ? Outcome::yes : Outcome::bounds);
        double gap = res.upper - res.lower;
        if (gap < best_gap - 1e-12) {
            best_gap = gap;
            improved_at = steps_;
        } else if (stagnation && steps_ - improved_at >= config_.stagnation_window) {
            throw Stagnation("gap at the initial state unchanged for " + std::to_string(steps_ - improved_at) +
                                 " steps; the model may violate absorption",
                             steps_, gap);
        }
    }
}

std::pair<double, double> Solver::refine_pair(const StatePoint& s, const ActionPoint& a, double gap,
                                              std::int64_t max_steps) {
    if (layers_.empty()) throw UsageError("refine_pair needs a store");
    if (config_.mode == Mode::step_bounded) throw UsageError("refine_pair is not available for step-bounded runs");
    SamplerConfig sc = config_.sampler;
    sc.first_action = a;
    GuidedPathSampler paths(config_.seed ^ fnv1a(format_point(s.coords, s.tag) + model_.action_label(a)), sc, s);
    auto bounds = [&] { return std::pair{store().lower_at(s, a), store().upper_at(s, a)}; };
    auto b = bounds();
    for (std::int64_t i = 0; i < max_steps && b.second - b.first >= gap; ++i) {
        SamplerContext ctx = context(b.second - b.first);
        PairSample p = paths.next(ctx);
        ++steps_;
        update(p, steps_);
        if (steps_ % config_.probe_every == 0) b = bounds();
    }
    return bounds();
}

SolverResult solve_vi_lower(const MdpModel& model, SolverConfig config) {
    config.mode = Mode::vi_lower;
    return Solver(model, std::move(config)).run();
}

SolverResult solve_brtdp(const MdpModel& model, SolverConfig config) {
    config.mode = Mode::brtdp;
    return Solver(model, std::move(config)).run();
}

SolverResult solve_step_bounded(const MdpModel& model, int horizon, SolverConfig config) {
    config.mode = Mode::step_bounded;
    config.horizon = horizon;
    return Solver(model, std::move(config)).run();
}

SolverResult solve_reach_avoid(const MdpModel& model, const RegionSet& avoid, SolverConfig config) {
    config.mode = Mode::reach_avoid;
    config.avoid = avoid;
    return Solver(model, std::move(config)).run();
}

}  // namespace lipreach
