#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <vector>

#include "lipreach/bound_store.hpp"
#include "lipreach/model.hpp"

namespace lipreach {

enum class SamplerKind { grid, random, guided, mixture };

struct SamplerConfig {
    SamplerKind kind = SamplerKind::mixture;
    /// Probability of taking the guided component in a mixture.
    double nu = 0.5;
    /// Guidance tolerance is max(floor, fraction * current gap at s0).
    double guidance_fraction = 0.05;
    double guidance_floor = 1e-3;
    /// 0 picks max(256, 10 * model.path_length_hint).
    std::size_t max_path_len = 0;
    int grid_start_level = 1;
    /// Safe component of a mixture: random or grid.
    SamplerKind safe = SamplerKind::random;
    /// When set, every path plays this action first.
    std::optional<ActionPoint> first_action;
};

struct PairSample {
    StatePoint state;
    ActionPoint action;
};

/// What a sampler may look at: the model, the (read-only) store and the
/// current gap at s0. `greedy` overrides the store's greedy_actions; it
/// receives the path depth (used by step-bounded runs).
struct SamplerContext {
    const MdpModel& model;
    const BoundStore& store;
    double gap = 1;
    std::function<std::vector<ActionPoint>(const StatePoint&, std::size_t depth, double tolerance)> greedy;
};

class Sampler {
public:
    virtual ~Sampler() = default;
    virtual PairSample next(const SamplerContext& ctx) = 0;
};

/// Every grid pair of level l exactly once, then level l + 1. Level l puts
/// 2^l + 1 points on each non-degenerate axis of every state component and
/// of a box action set.
class GridSampler : public Sampler {
public:
    explicit GridSampler(int start_level = 1);
    PairSample next(const SamplerContext& ctx) override;
    int level() const { return level_; }

private:
    void load_state(const MdpModel& model);
    int level_;
    std::size_t component_ = 0;
    std::size_t state_ = 0;
    std::size_t action_ = 0;
    std::optional<StatePoint> current_;
    std::vector<ActionPoint> actions_;
};

/// Uniform component, uniform state inside it, uniform available action.
class RandomSampler : public Sampler {
public:
    explicit RandomSampler(std::uint64_t seed) : rng_(seed) {}
    PairSample next(const SamplerContext& ctx) override;

private:
    std::mt19937_64 rng_;
};

/// Simulates a path from s0 along near-greedy actions of the upper bound
/// until T, R or the length cap, then emits the terminal state followed by
/// the path's pairs in reverse order.
class GuidedPathSampler : public Sampler {
public:
    GuidedPathSampler(std::uint64_t seed, SamplerConfig config, std::optional<StatePoint> start = std::nullopt);
    PairSample next(const SamplerContext& ctx) override;
    std::size_t paths() const { return paths_; }

private:
    void simulate(const SamplerContext& ctx);
    std::mt19937_64 rng_;
    SamplerConfig config_;
    std::optional<StatePoint> start_;
    std::deque<PairSample> pending_;
    std::size_t paths_ = 0;
};

/// With probability nu the guided component, else the safe one. Each part
/// owns its random stream, so nu = 0 replays the safe sampler exactly.
class MixtureSampler : public Sampler {
public:
    MixtureSampler(double nu, std::unique_ptr<Sampler> guided, std::unique_ptr<Sampler> safe, std::uint64_t seed);
    PairSample next(const SamplerContext& ctx) override;

private:
    double nu_;
    std::unique_ptr<Sampler> guided_;
    std::unique_ptr<Sampler> safe_;
    std::mt19937_64 coin_;
};

std::size_t effective_path_cap(const SamplerConfig& config, const MdpModel& model);
/// Guided and coin streams are derived from `seed`; the safe component of a
/// mixture uses `seed` itself.
std::unique_ptr<Sampler> make_sampler(const SamplerConfig& config, const MdpModel& model, std::uint64_t seed,
                                      std::optional<StatePoint> start = std::nullopt);

}  // namespace lipreach
