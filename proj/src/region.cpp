#include "lipreach/region.hpp"

#include <cmath>

namespace lipreach {

RegionSet RegionSet::box(int tag, Box b) {
    RegionSet r;
    Shape s;
    s.kind = Shape::Kind::box;
    s.tag = tag;
    s.box = std::move(b);
    r.shapes_.push_back(std::move(s));
    return r;
}

RegionSet RegionSet::ball(int tag, std::vector<double> center, double radius) {
    RegionSet r;
    Shape s;
    s.kind = Shape::Kind::ball;
    s.tag = tag;
    s.center = std::move(center);
    s.radius = radius;
    r.shapes_.push_back(std::move(s));
    return r;
}

RegionSet RegionSet::whole_tag(int tag) {
    RegionSet r;
    Shape s;
    s.kind = Shape::Kind::tag;
    s.tag = tag;
    r.shapes_.push_back(std::move(s));
    return r;
}

RegionSet& RegionSet::add(Shape s) {
    shapes_.push_back(std::move(s));
    return *this;
}

RegionSet& RegionSet::merge(const RegionSet& other) {
    for (const auto& s : other.shapes_) shapes_.push_back(s);
    return *this;
}

bool RegionSet::contains(const StatePoint& p) const {
    for (const auto& s : shapes_) {
        if (s.tag != p.tag) continue;
        switch (s.kind) {
            case Shape::Kind::tag: return true;
            case Shape::Kind::box:
                if (s.box.contains(p.coords)) return true;
                break;
            case Shape::Kind::ball:
                if (euclid(p.coords, s.center) < s.radius) return true;
                break;
        }
    }
    return false;
}

Overlap RegionSet::classify(int tag, const Box& cell) const {
    Overlap best = Overlap::none;
    for (const auto& s : shapes_) {
        if (s.tag != tag) continue;
        Overlap o = Overlap::none;
        switch (s.kind) {
            case Shape::Kind::tag: o = Overlap::full; break;
            case Shape::Kind::box: {
                bool inside = true;
                for (std::size_t j = 0; j < cell.dim(); ++j)
                    if (cell.lo[j] < s.box.lo[j] || cell.hi[j] > s.box.hi[j]) inside = false;
                if (inside) o = Overlap::full;
                else if (cell.intersects(s.box)) o = Overlap::partial;
                break;
            }
            case Shape::Kind::ball:
                if (cell.max_dist(s.center) < s.radius) o = Overlap::full;
                else if (cell.min_dist(s.center) < s.radius) o = Overlap::partial;
                break;
        }
        if (o == Overlap::full) return o;
        if (o == Overlap::partial) best = o;
    }
    return best;
}

}  // namespace lipreach
