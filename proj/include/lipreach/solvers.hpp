#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lipreach/approx.hpp"
#include "lipreach/bound_store.hpp"
#include "lipreach/envelope_grid.hpp"
#include "lipreach/model.hpp"
#include "lipreach/samplers.hpp"

namespace lipreach {

enum class Mode { vi_lower, brtdp, step_bounded, reach_avoid };
enum class Outcome { yes, bounds, budget_exhausted };

const char* to_string(Mode m);
const char* to_string(Outcome o);
const char* to_string(SamplerKind k);
Mode parse_mode(const std::string& s);
SamplerKind parse_sampler(const std::string& s);

struct SolverConfig {
    Mode mode = Mode::brtdp;
    double epsilon = 0.01;
    double xi = 0.5;
    int horizon = 0;
    /// Precision(t) = max(1/t, floor). 0 picks eps/64 (vi-lower: 1e-3).
    double precision_floor = 0;
    SamplerConfig sampler;
    std::uint64_t seed = 1;
    std::int64_t max_steps = 10'000'000;
    /// 0 means no wall-clock cap.
    double max_seconds = 0;
    /// Loop-head probe cadence, and trace cadence (a multiple of nothing in
    /// particular; a probe runs whenever either one is due).
    std::int64_t probe_every = 32;
    std::int64_t trace_every = 32;
    /// Steps without any gap improvement before reporting stagnation.
    std::int64_t stagnation_window = 2'000'000;
    std::size_t approx_budget = 1'000'000;
    bool use_grid = true;
    std::size_t grid_max_cells = std::size_t{1} << 22;
    StoreOptions store;
    /// Avoid set for reach-avoid runs, merged into the sink.
    std::optional<RegionSet> avoid;
};

struct TraceRow {
    std::int64_t step = 0;
    std::string event;  // init | target-hit | sink-hit | backprop
    StatePoint state;
    ActionPoint action;
    double lower = 0;
    double upper = 1;
    /// Precision of the probe that produced lower/upper.
    double slack = 0;
    std::size_t store_size = 0;
};

struct SolverResult {
    Outcome outcome = Outcome::bounds;
    double lower = 0;
    double upper = 1;
    std::int64_t steps = 0;
    double seconds = 0;
    /// Precision floor actually used (it can be raised to what the envelope
    /// grid can deliver).
    double precision_floor = 0;
    std::vector<std::string> notes;
};

/// Sound bounds of a state envelope, usable as a quadrature integrand.
/// Target and sink states are exact; cells that straddle them, or a
/// partition boundary, fall back to the trivial bound unless their centre
/// can still extrapolate. Box integrals go through the envelope grid when it
/// is fine enough.
class EnvelopeIntegrand : public Integrand {
public:
    EnvelopeIntegrand(const MdpModel& model, const BoundStore& store, const EnvelopeGrid* grid,
                      double point_precision);
    double point(const StatePoint& s, Direction dir) const override;
    double cell(int tag, const Box& cell, Direction dir) const override;
    double lipschitz() const override { return lipschitz_; }
    std::optional<double> box_mean(int tag, const Box& box, Direction dir, double precision) const override;

private:
    const MdpModel& model_;
    const BoundStore& store_;
    const EnvelopeGrid* grid_;
    double point_precision_;
    double lipschitz_;
};

/// Indicator of the target: the zero-step value of step-bounded runs.
class TargetIndicator : public Integrand {
public:
    TargetIndicator(const MdpModel& model, double lipschitz) : model_(model), lipschitz_(lipschitz) {}
    double point(const StatePoint& s, Direction) const override { return model_.is_target(s) ? 1.0 : 0.0; }
    double cell(int tag, const Box& cell, Direction dir) const override;
    double lipschitz() const override { return lipschitz_; }

private:
    const MdpModel& model_;
    double lipschitz_;
};

/// The vi-lower and brtdp loops, plus the step-bounded and reach-avoid
/// variants. The loop is sequential; every update immediately feeds the
/// next one.
class Solver {
public:
    Solver(MdpModel model, SolverConfig config);
    ~Solver();
    Solver(const Solver&) = delete;
    Solver& operator=(const Solver&) = delete;

    /// Inserts records into the (top-layer) store, e.g. from a snapshot.
    void warm_start(const std::vector<SampleRecord>& records);

    /// Runs until the loop head is satisfied or a cap is hit. Throws
    /// BoundCrossing or Stagnation; the trace up to that point stays
    /// available.
    SolverResult run();

    /// Keeps running guided paths from s that start with a, until the
    /// pair's own gap drops below `gap` or max_steps more steps are spent.
    /// Returns the pair bounds.
    std::pair<double, double> refine_pair(const StatePoint& s, const ActionPoint& a, double gap,
                                          std::int64_t max_steps);

    /// (lower, upper) of the state value at s from the top layer.
    std::pair<double, double> probe(const StatePoint& s, double precision) const;
    std::vector<std::pair<double, double>> probe_many(const std::vector<StatePoint>& states, double precision,
                                                      bool parallel = true) const;
    /// Actions whose upper bound is within tolerance of the best at s.
    std::vector<ActionPoint> greedy(const StatePoint& s, double tolerance) const;

    const MdpModel& model() const { return model_; }
    const SolverConfig& config() const { return config_; }
    /// Step-bounded runs keep one store per remaining-step count 1..n; the
    /// top layer is n. Other modes have one.
    const BoundStore& store() const;
    const BoundStore& layer(std::size_t i) const { return layers_.at(i); }
    std::size_t layers() const { return layers_.size(); }
    const EnvelopeGrid* grid() const;
    const std::vector<TraceRow>& trace() const { return trace_; }
    double precision_floor() const { return floor_; }
    /// Called for every trace row as it is produced.
    std::function<void(const TraceRow&)> on_trace;

private:
    struct Probe {
        double lower;
        double upper;
        double slack;
    };
    double precision(std::int64_t t) const;
    Probe probe_initial(std::int64_t t) const;
    std::string update(const PairSample& p, std::int64_t t);
    void emit(std::int64_t t, const std::string& event, const PairSample& p, const Probe& pr);
    SamplerContext context(double gap) const;
    void make_grids();

    MdpModel model_;
    SolverConfig config_;
    std::vector<BoundStore> layers_;
    std::vector<std::unique_ptr<EnvelopeGrid>> grids_;
    std::unique_ptr<Sampler> sampler_;
    std::vector<TraceRow> trace_;
    std::vector<std::string> notes_;
    double floor_ = 0;
    std::int64_t steps_ = 0;
    std::optional<ActionPoint> focus_;
    std::optional<StatePoint> focus_state_;
};

/// Convenience wrappers.
SolverResult solve_vi_lower(const MdpModel& model, SolverConfig config);
SolverResult solve_brtdp(const MdpModel& model, SolverConfig config);
SolverResult solve_step_bounded(const MdpModel& model, int horizon, SolverConfig config);
SolverResult solve_reach_avoid(const MdpModel& model, const RegionSet& avoid, SolverConfig config);

/// probe_bounds on a bare store: (lower_state, upper_state) at s.
std::pair<double, double> probe_bounds(const BoundStore& store, const MdpModel& model, const StatePoint& s,
                                       double precision);

}  // namespace lipreach
