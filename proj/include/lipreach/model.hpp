#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "lipreach/geometry.hpp"
#include "lipreach/kernel.hpp"
#include "lipreach/region.hpp"

namespace lipreach {

/// One discrete component of the state space: a tag and the box its
/// coordinates live in. A finite MDP is a list of point components.
struct StateComponent {
    int tag = 0;
    Box box;
};

class ActionSet {
public:
    static ActionSet finite(std::vector<ActionPoint> points);
    static ActionSet box(Box b, int tag = 0);

    bool is_finite() const { return finite_; }
    const std::vector<ActionPoint>& points() const& { return points_; }
    // Temporaries hand their points over, so `actions(s).points()` is safe to iterate.
    std::vector<ActionPoint> points() && { return std::move(points_); }
    const Box& box_bounds() const { return box_; }
    int box_tag() const { return box_tag_; }

    bool contains(const ActionPoint& a) const;
    /// Points such that every member of the set is within h of one of them.
    /// Finite sets return themselves.
    std::vector<ActionPoint> net(double h) const;
    /// A fixed member, used for state-level records.
    ActionPoint canonical() const;

private:
    bool finite_ = true;
    std::vector<ActionPoint> points_;
    Box box_;
    int box_tag_ = 0;
};

/// Regions with their own Lipschitz constants. States outside every region
/// use the model's global constant. First match wins.
struct Partition {
    struct Region {
        std::string name;
        RegionSet shape;
        double lipschitz = 0;
    };
    std::vector<Region> regions;

    int region_of(const StatePoint& s) const;
};

struct MdpModel {
    std::string name;
    /// Canonical parameter description; the fingerprint hashes it.
    std::string descriptor;
    std::vector<StateComponent> components;
    std::function<ActionSet(const StatePoint&)> actions;
    /// True when actions(s) is the same finite list everywhere.
    bool uniform_actions = false;
    std::vector<std::string> action_names;
    std::function<TransitionKernel(const StatePoint&, const ActionPoint&)> kernel;
    RegionSet target;
    RegionSet sink;
    double lipschitz_state = 1;
    double lipschitz_pair = 1;
    std::optional<Partition> partition;
    StatePoint initial;
    std::optional<StatePoint> sink_representative;
    std::string constants_note;
    /// Rough number of steps a good path needs; sizes the path cap.
    std::size_t path_length_hint = 0;

    std::size_t state_dim() const;
    std::size_t action_dim() const;
    const StateComponent* component(int tag) const;
    bool in_space(const StatePoint& s, double slack = 1e-12) const;

    bool is_target(const StatePoint& s) const { return target.contains(s); }
    bool is_sink(const StatePoint& s) const { return sink.contains(s); }

    /// Draws a successor; throws UsageError when a is not available in s.
    StatePoint sample_successor(const StatePoint& s, const ActionPoint& a, std::mt19937_64& rng) const;
    std::string action_label(const ActionPoint& a) const;
    /// 16 hex digits of FNV-1a over name and descriptor.
    std::string fingerprint() const;
    /// Largest Lipschitz constant used anywhere (global or regional).
    double max_pair_lipschitz() const;
};

std::uint64_t fnv1a(const std::string& bytes, std::uint64_t seed = 1469598103934665603ULL);

/// Every non-target kernel becomes gamma * original + (1 - gamma) * Dirac(sink).
/// A sink representative is synthesized as a fresh point component when the
/// model has none.
MdpModel discount_transform(const MdpModel& model, double gamma);

/// Merges `avoid` into the sink (reach-avoid reduction).
MdpModel with_avoid(const MdpModel& model, const RegionSet& avoid);

struct ValidationReport {
    std::vector<std::string> errors;
    std::vector<std::string> warnings;
    std::vector<std::string> notes;
    bool ok() const { return errors.empty(); }
};

/// Sampled structural checks: kernel masses, support containment, metric
/// axioms, target/sink disjointness.
ValidationReport validate_model(const MdpModel& model, std::uint64_t seed = 1, int samples = 1000);

/// Uniformly random state from a uniformly chosen component.
StatePoint random_state(const MdpModel& model, std::mt19937_64& rng);

}  // namespace lipreach
