#pragma once

#include <vector>

#include "lipreach/geometry.hpp"

namespace lipreach {

enum class Overlap { none, partial, full };

/// Finite union of simple shapes over the state space. Used for targets,
/// sinks, avoid sets and partition regions, and able to classify a whole
/// cell against itself (needed by the quadrature near discontinuities).
class RegionSet {
public:
    struct Shape {
        enum class Kind { box, ball, tag } kind = Kind::box;
        int tag = 0;
        Box box;                     // kind == box: closed box
        std::vector<double> center;  // kind == ball: open ball
        double radius = 0;
    };

    static RegionSet box(int tag, Box b);
    static RegionSet ball(int tag, std::vector<double> center, double radius);
    static RegionSet whole_tag(int tag);

    RegionSet& add(Shape s);
    RegionSet& merge(const RegionSet& other);

    bool empty() const { return shapes_.empty(); }
    const std::vector<Shape>& shapes() const { return shapes_; }

    bool contains(const StatePoint& s) const;
    /// Classification of a cell {tag} x cell. `partial` may be reported for a
    /// cell that a union of shapes happens to cover exactly; never the reverse.
    Overlap classify(int tag, const Box& cell) const;

private:
    std::vector<Shape> shapes_;
};

}  // namespace lipreach
