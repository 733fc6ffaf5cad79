#include "lipreach/samplers.hpp"

#include <algorithm>
#include <cmath>

#include "lipreach/errors.hpp"

namespace lipreach {

namespace {

std::size_t axis_points(const Box& b, std::size_t j, int level) {
    return b.degenerate(j) ? 1 : (std::size_t{1} << level) + 1;
}

std::vector<double> grid_point(const Box& b, std::size_t flat, int level) {
    // Last axis fastest.
    std::vector<double> x(b.dim());
    for (std::size_t j = b.dim(); j-- > 0;) {
        std::size_t n = axis_points(b, j, level);
        std::size_t i = flat % n;
        flat /= n;
        x[j] = n == 1 ? b.lo[j] : b.lo[j] + b.extent(j) * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    return x;
}

std::size_t grid_size(const Box& b, int level) {
    std::size_t total = 1;
    for (std::size_t j = 0; j < b.dim(); ++j) total *= axis_points(b, j, level);
    return total;
}

// Pre-mixed seeds for derived streams.
constexpr std::uint64_t kGuidedSalt = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kCoinSalt = 0xc2b2ae3d27d4eb4fULL;

}  // namespace

GridSampler::GridSampler(int start_level) : level_(start_level) {
    if (start_level < 0 || start_level > 30) throw UsageError("grid start level must lie in [0, 30]");
}

void GridSampler::load_state(const MdpModel& model) {
    const StateComponent& c = model.components[component_];
    current_ = StatePoint{grid_point(c.box, state_, level_), c.tag};
    ActionSet acts = model.actions(*current_);
    actions_.clear();
    if (acts.is_finite()) {
        actions_ = acts.points();
    } else {
        const Box& ab = acts.box_bounds();
        std::size_t n = grid_size(ab, level_);
        for (std::size_t i = 0; i < n; ++i) actions_.push_back(ActionPoint{grid_point(ab, i, level_), acts.box_tag()});
    }
    action_ = 0;
}

PairSample GridSampler::next(const SamplerContext& ctx) {
    const MdpModel& model = ctx.model;
    if (!current_) load_state(model);
    PairSample out{*current_, actions_[action_]};
    if (++action_ == actions_.size()) {
        if (++state_ == grid_size(model.components[component_].box, level_)) {
            state_ = 0;
            if (++component_ == model.components.size()) {
                component_ = 0;
                ++level_;
            }
        }
        load_state(model);
    }
    return out;
}

PairSample RandomSampler::next(const SamplerContext& ctx) {
    StatePoint s = random_state(ctx.model, rng_);
    ActionSet acts = ctx.model.actions(s);
    if (acts.is_finite()) {
        std::uniform_int_distribution<std::size_t> pick(0, acts.points().size() - 1);
        return {std::move(s), acts.points()[pick(rng_)]};
    }
    const Box& b = acts.box_bounds();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    ActionPoint a{std::vector<double>(b.dim()), acts.box_tag()};
    for (std::size_t j = 0; j < b.dim(); ++j) a.coords[j] = b.lo[j] + b.extent(j) * unit(rng_);
    return {std::move(s), std::move(a)};
}

GuidedPathSampler::GuidedPathSampler(std::uint64_t seed, SamplerConfig config, std::optional<StatePoint> start)
    : rng_(seed), config_(std::move(config)), start_(std::move(start)) {}

void GuidedPathSampler::simulate(const SamplerContext& ctx) {
    const MdpModel& model = ctx.model;
    const std::size_t cap = effective_path_cap(config_, model);
    const double tol = std::max(config_.guidance_floor, config_.guidance_fraction * ctx.gap);
    StatePoint s = start_ ? *start_ : model.initial;
    std::vector<PairSample> path;
    std::optional<StatePoint> terminal;
    for (std::size_t depth = 0; depth < cap; ++depth) {
        if (model.is_target(s) || model.is_sink(s)) {
            terminal = s;
            break;
        }
        ActionSet acts = model.actions(s);
        ActionPoint a;
        if (depth == 0 && config_.first_action) {
            a = *config_.first_action;
        } else {
            std::vector<ActionPoint> best =
                ctx.greedy ? ctx.greedy(s, depth, tol) : ctx.store.greedy_actions(s, acts, tol);
            if (best.empty()) best.push_back(acts.canonical());
            std::uniform_int_distribution<std::size_t> pick(0, best.size() - 1);
            a = best[pick(rng_)];
        }
        StatePoint next = model.kernel(s, a).sample(rng_);
        path.push_back({std::move(s), std::move(a)});
        s = std::move(next);
    }
    if (!terminal && (model.is_target(s) || model.is_sink(s))) terminal = s;
    if (terminal) pending_.push_back({*terminal, model.actions(*terminal).canonical()});
    for (auto it = path.rbegin(); it != path.rend(); ++it) pending_.push_back(std::move(*it));
    ++paths_;
}

PairSample GuidedPathSampler::next(const SamplerContext& ctx) {
    while (pending_.empty()) simulate(ctx);
    PairSample out = std::move(pending_.front());
    pending_.pop_front();
    return out;
}

MixtureSampler::MixtureSampler(double nu, std::unique_ptr<Sampler> guided, std::unique_ptr<Sampler> safe,
                               std::uint64_t seed)
    : nu_(nu), guided_(std::move(guided)), safe_(std::move(safe)), coin_(seed ^ kCoinSalt) {
    if (!(nu >= 0 && nu <= 1)) throw UsageError("nu must lie in [0, 1]");
}

PairSample MixtureSampler::next(const SamplerContext& ctx) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    return unit(coin_) < nu_ ? guided_->next(ctx) : safe_->next(ctx);
}

std::size_t effective_path_cap(const SamplerConfig& config, const MdpModel& model) {
    if (config.max_path_len > 0) return config.max_path_len;
    return std::max<std::size_t>(256, 10 * model.path_length_hint);
}

std::unique_ptr<Sampler> make_sampler(const SamplerConfig& config, const MdpModel& model, std::uint64_t seed,
                                      std::optional<StatePoint> start) {
    (void)model;
    auto simple = [&](SamplerKind kind) -> std::unique_ptr<Sampler> {
        switch (kind) {
            case SamplerKind::grid:
                return std::make_unique<GridSampler>(config.grid_start_level);
            case SamplerKind::random:
                return std::make_unique<RandomSampler>(seed);
            case SamplerKind::guided:
                return std::make_unique<GuidedPathSampler>(seed ^ kGuidedSalt, config, start);
            case SamplerKind::mixture:
                break;
        }
        throw UsageError("a mixture cannot be its own component");
    };
    if (config.kind != SamplerKind::mixture) return simple(config.kind);
    return std::make_unique<MixtureSampler>(config.nu, simple(SamplerKind::guided), simple(config.safe), seed);
}

}  // namespace lipreach
