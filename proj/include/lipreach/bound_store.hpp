#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <unordered_map>
#include <vector>

#include "lipreach/geometry.hpp"
#include "lipreach/kernels.hpp"
#include "lipreach/model.hpp"

namespace lipreach {

/// Region ids. Non-negative ids are partition regions.
inline constexpr int kFreeRegion = -1;
inline constexpr int kTargetRegion = -2;
inline constexpr int kSinkRegion = -3;

struct SampleRecord {
    StatePoint state;
    ActionPoint action;
    double lower = 0;
    double upper = 1;
    int region = kFreeRegion;
    std::int64_t step = 0;

    bool operator==(const SampleRecord&) const = default;
};

struct StoreOptions {
    double dedupe_radius = 1e-9;
    /// Grid bucket edge; 0 picks 1/(4C), at least 8 * dedupe_radius.
    double bucket_edge = 0;
    /// Below this many records queries scan linearly.
    std::size_t scan_below = 512;
    /// Scan with the OpenMP kernel instead of the serial one.
    bool parallel_scan = true;
};

/// The set of sampled records with Lipschitz-extrapolated envelopes.
/// Target and sink states are answered exactly (1 and 0); records taken
/// there live in their own regions and never extrapolate elsewhere.
class BoundStore {
public:
    using Classifier = std::function<int(const StatePoint&)>;

    /// `classify` maps a state to its region id (kFreeRegion when absent);
    /// `region_lipschitz[i]` is the constant of partition region i.
    BoundStore(std::size_t state_dim, std::size_t action_dim, double pair_lipschitz, StoreOptions options = {},
               Classifier classify = {}, std::vector<double> region_lipschitz = {});
    static BoundStore for_model(const MdpModel& model, StoreOptions options = {});

    int region_of(const StatePoint& s) const;
    double lipschitz_for(int region) const;
    double pair_lipschitz() const { return pair_lipschitz_; }
    const std::vector<double>& region_lipschitz() const { return region_lipschitz_; }
    const StoreOptions& options() const { return options_; }
    std::size_t state_dim() const { return state_dim_; }
    std::size_t action_dim() const { return action_dim_; }

    double lower_at(const StatePoint& s, const ActionPoint& a) const;
    double upper_at(const StatePoint& s, const ActionPoint& a) const;
    /// Brute-force references for the two queries above.
    double lower_at_scan(const StatePoint& s, const ActionPoint& a) const;
    double upper_at_scan(const StatePoint& s, const ActionPoint& a) const;

    /// Max/min merge into the record within dedupe_radius, or a fresh insert.
    /// Throws BoundCrossing when the merged bounds, or the envelopes at the
    /// updated pair, cross. Returns the stored record.
    SampleRecord record_update(const StatePoint& s, const ActionPoint& a, double new_lower, double new_upper,
                               std::int64_t step = 0);
    /// Inserts a snapshot record verbatim (merging duplicates, no crossing check).
    void restore(const SampleRecord& r);

    /// max_a L(s,a) within `precision` from below.
    double lower_state(const StatePoint& s, const ActionSet& actions, double precision) const;
    /// max_a U(s,a) within `precision` from above.
    double upper_state(const StatePoint& s, const ActionSet& actions, double precision) const;
    /// Actions whose upper bound is within `tolerance` of the best one.
    std::vector<ActionPoint> greedy_actions(const StatePoint& s, const ActionSet& actions, double tolerance) const;

    std::size_t size() const { return lower_.size(); }
    SampleRecord record(std::size_t i) const;
    kernels::RecordView view() const;

private:
    static constexpr std::size_t kMaxAxes = 6;
    struct Key {
        std::array<std::int32_t, kMaxAxes> cell{};
        std::int32_t state_tag = 0;
        std::int32_t action_tag = 0;
        std::int32_t region = 0;
        bool operator==(const Key&) const = default;
    };
    struct KeyHash {
        std::size_t operator()(const Key& k) const;
    };
    struct Bucket {
        std::vector<std::uint32_t> ids;
        double max_lower = -std::numeric_limits<double>::infinity();
        double min_upper = std::numeric_limits<double>::infinity();
    };

    Key key_for(std::span<const double> s, int stag, std::span<const double> a, int atag, int region) const;
    kernels::PairQuery query_for(const StatePoint& s, const ActionPoint& a, int region) const;
    bool use_scan() const;
    double indexed_lower(const StatePoint& s, const ActionPoint& a, int region) const;
    double indexed_upper(const StatePoint& s, const ActionPoint& a, int region) const;
    template <class Visit>
    void visit_rings(const Key& center, std::span<const double> q, double lipschitz, Visit&& visit) const;
    double record_distance(std::size_t i, const StatePoint& s, const ActionPoint& a) const;
    std::size_t insert(const StatePoint& s, const ActionPoint& a, double lower, double upper, int region,
                       std::int64_t step);
    long find_duplicate(const StatePoint& s, const ActionPoint& a, int region) const;
    void refresh_bucket(std::size_t id);

    std::size_t state_dim_;
    std::size_t action_dim_;
    double pair_lipschitz_;
    StoreOptions options_;
    Classifier classify_;
    std::vector<double> region_lipschitz_;
    double bucket_edge_;

    std::vector<double> state_coords_;
    std::vector<double> action_coords_;
    std::vector<int> state_tag_;
    std::vector<int> action_tag_;
    std::vector<int> region_;
    std::vector<double> lower_;
    std::vector<double> upper_;
    std::vector<std::int64_t> step_;
    std::vector<Key> key_of_;

    std::unordered_map<Key, Bucket, KeyHash> buckets_;
    std::array<std::int32_t, kMaxAxes> cell_min_{};
    std::array<std::int32_t, kMaxAxes> cell_max_{};
    double max_lower_ = -std::numeric_limits<double>::infinity();
    double min_upper_ = std::numeric_limits<double>::infinity();
};

}  // namespace lipreach
