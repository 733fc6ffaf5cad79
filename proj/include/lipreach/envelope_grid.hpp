#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "lipreach/approx.hpp"
#include "lipreach/bound_store.hpp"
#include "lipreach/model.hpp"

namespace lipreach {

/// Cell-wise bounds of the state-level envelopes, kept current by splatting
/// every new record into the cells it improves. Each cell holds the envelope
/// cones evaluated at its centre c:
///   lower: max over records of (L - C * |x_i - c|)
///   upper: max over actions of min over records of (U + C * |x_i - c|)
/// Both envelopes are C-Lipschitz, so the mean over a whole cell is within
/// C * E|x - c| <= C * (RMS distance to the centre) of the centre value, and
/// any point of a cell is within C * (half diameter). Box means subtract
/// the RMS term for cells the box covers fully and the half-diameter term
/// for the rest. Rows along the last axis carry fixed-point Fenwick trees,
/// which makes box integrals cost O(rows * log n).
///
/// Only models with one finite action list everywhere and no partition
/// are supported.
class EnvelopeGrid {
public:
    struct Options {
        /// Wanted bound on C * (cell diameter).
        double cell_precision = 0.005;
        std::size_t max_cells = std::size_t{1} << 22;
    };

    static bool supports(const MdpModel& model);
    EnvelopeGrid(const MdpModel& model, Options options);

    /// C * (largest cell diameter) plus the fixed-point resolution.
    double precision() const { return precision_; }
    bool covers(int tag) const { return grid_for(tag) != nullptr; }
    std::size_t cells() const;

    void absorb(const SampleRecord& r);

    /// Certified mean of the lower (under) or upper (over) state envelope
    /// over a box of component `tag`; nullopt when the tag has no grid.
    std::optional<double> mean(int tag, const Box& box, Direction dir) const;
    /// Same quantity by direct summation over cells (test reference).
    std::optional<double> mean_direct(int tag, const Box& box, Direction dir, bool parallel) const;

    /// Effective cell bound at the cell containing s (for tests).
    double cell_bound(const StatePoint& s, Direction dir) const;

private:
    enum : std::uint8_t { kFullTarget = 1, kFullSink = 2, kPartTarget = 4, kPartSink = 8 };

    struct Grid {
        int tag = 0;
        Box box;
        std::vector<std::size_t> n;
        std::vector<double> edge;
        double rms = 0;        // C * RMS distance to the centre of a cell
        double half_diam = 0;  // C * half diameter of a cell
        std::vector<std::size_t> stride;
        std::size_t total = 0;
        std::size_t row_len = 0;
        std::vector<double> lower;  // per cell
        std::vector<double> upper;  // per action, per cell
        std::vector<std::uint8_t> kind;
        std::vector<std::int64_t> fen_lower;
        std::vector<std::int64_t> fen_upper;
        std::vector<std::uint32_t> stamp;
        std::uint32_t epoch = 0;
    };

    const Grid* grid_for(int tag) const;
    Grid* grid_for(int tag);
    Box cell_box(const Grid& g, std::size_t flat) const;
    std::size_t cell_of(const Grid& g, std::span<const double> x) const;
    double dist_to_centre(const Grid& g, std::size_t c, std::span<const double> x) const;
    std::int64_t eff_lower(const Grid& g, std::size_t c) const;
    std::int64_t eff_upper(const Grid& g, std::size_t c) const;
    static void fenwick_add(std::vector<std::int64_t>& f, std::size_t row_start, std::size_t len, std::size_t i,
                            std::int64_t delta);
    static std::int64_t fenwick_prefix(const std::vector<std::int64_t>& f, std::size_t row_start, std::size_t i);
    struct AxisSpan {
        std::size_t first = 0;
        std::vector<double> weight;
        std::vector<std::uint8_t> full;  // cell lies inside the box along this axis
    };
    bool spans(const Grid& g, const Box& box, std::vector<AxisSpan>& out) const;
    /// Weight of the cells the box covers fully.
    double full_weight(const Grid& g, const std::vector<AxisSpan>& sp) const;
    double finish(const Grid& g, const std::vector<AxisSpan>& sp, double total, Direction dir) const;

    std::vector<Grid> grids_;
    std::vector<int> action_index_;  // by action tag
    std::size_t n_actions_ = 0;
    double lipschitz_ = 0;
    double precision_ = 0;
};

}  // namespace lipreach
