#pragma once

#include <span>
#include <string>
#include <vector>

namespace lipreach {

/// A state: real coordinates plus a discrete tag. Tags compare under the
/// discrete metric, so two states with different tags are at least 1 apart.
struct StatePoint {
    std::vector<double> coords;
    int tag = 0;

    bool operator==(const StatePoint&) const = default;
};

/// An action; finite-action models use only the tag.
struct ActionPoint {
    std::vector<double> coords;
    int tag = 0;

    bool operator==(const ActionPoint&) const = default;
};

/// Axis-aligned box. Axes with hi == lo are degenerate (a fixed coordinate).
struct Box {
    std::vector<double> lo;
    std::vector<double> hi;

    static Box point(std::span<const double> x);

    std::size_t dim() const { return lo.size(); }
    double extent(std::size_t j) const { return hi[j] - lo[j]; }
    bool degenerate(std::size_t j) const { return !(hi[j] > lo[j]); }
    bool contains(std::span<const double> x, double slack = 0.0) const;
    bool intersects(const Box& other) const;
    std::vector<double> center() const;
    double diameter() const;
    /// Distance from x to the farthest point of the box.
    double max_dist(std::span<const double> x) const;
    /// Distance from x to the nearest point of the box (0 inside).
    double min_dist(std::span<const double> x) const;
    /// Product of the positive extents; 1 for a point.
    double measure() const;
    std::size_t nondegenerate_axes() const;
    void clamp(std::span<double> x) const;

    bool operator==(const Box&) const = default;
};

double euclid(std::span<const double> a, std::span<const double> b);

double dist_state(const StatePoint& s1, const StatePoint& s2);
double dist_action(const ActionPoint& a1, const ActionPoint& a2);
/// Sum metric on pairs: d_S + d_Act.
double dist_pair(const StatePoint& s1, const ActionPoint& a1,
                 const StatePoint& s2, const ActionPoint& a2);

std::string format_point(std::span<const double> coords, int tag);

}  // namespace lipreach
