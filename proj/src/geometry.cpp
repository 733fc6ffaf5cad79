#include "lipreach/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "lipreach/errors.hpp"

namespace lipreach {

Box Box::point(std::span<const double> x) {
    Box b;
    b.lo.assign(x.begin(), x.end());
    b.hi = b.lo;
    return b;
}

bool Box::contains(std::span<const double> x, double slack) const {
    if (x.size() != lo.size()) return false;
    for (std::size_t j = 0; j < lo.size(); ++j)
        if (x[j] < lo[j] - slack || x[j] > hi[j] + slack) return false;
    return true;
}

bool Box::intersects(const Box& other) const {
    for (std::size_t j = 0; j < lo.size(); ++j)
        if (other.hi[j] < lo[j] || other.lo[j] > hi[j]) return false;
    return true;
}

std::vector<double> Box::center() const {
    std::vector<double> c(lo.size());
    for (std::size_t j = 0; j < lo.size(); ++j) c[j] = 0.5 * (lo[j] + hi[j]);
    return c;
}

double Box::diameter() const {
    double s = 0;
    for (std::size_t j = 0; j < lo.size(); ++j) s += (hi[j] - lo[j]) * (hi[j] - lo[j]);
    return std::sqrt(s);
}

double Box::max_dist(std::span<const double> x) const {
    double s = 0;
    for (std::size_t j = 0; j < lo.size(); ++j) {
        double d = std::max(std::abs(x[j] - lo[j]), std::abs(x[j] - hi[j]));
        s += d * d;
    }
    return std::sqrt(s);
}

double Box::min_dist(std::span<const double> x) const {
    double s = 0;
    for (std::size_t j = 0; j < lo.size(); ++j) {
        double d = 0;
        if (x[j] < lo[j]) d = lo[j] - x[j];
        else if (x[j] > hi[j]) d = x[j] - hi[j];
        s += d * d;
    }
    return std::sqrt(s);
}

double Box::measure() const {
    double m = 1;
    for (std::size_t j = 0; j < lo.size(); ++j)
        if (hi[j] > lo[j]) m *= hi[j] - lo[j];
    return m;
}

std::size_t Box::nondegenerate_axes() const {
    std::size_t n = 0;
    for (std::size_t j = 0; j < lo.size(); ++j) n += hi[j] > lo[j];
    return n;
}

void Box::clamp(std::span<double> x) const {
    for (std::size_t j = 0; j < lo.size(); ++j) x[j] = std::clamp(x[j], lo[j], hi[j]);
}

double euclid(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw UsageError("dimension mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    double s = 0;
    for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
    return std::sqrt(s);
}

double dist_state(const StatePoint& s1, const StatePoint& s2) {
    return euclid(s1.coords, s2.coords) + (s1.tag != s2.tag ? 1.0 : 0.0);
}

double dist_action(const ActionPoint& a1, const ActionPoint& a2) {
    return euclid(a1.coords, a2.coords) + (a1.tag != a2.tag ? 1.0 : 0.0);
}

double dist_pair(const StatePoint& s1, const ActionPoint& a1, const StatePoint& s2, const ActionPoint& a2) {
    return dist_state(s1, s2) + dist_action(a1, a2);
}

std::string format_point(std::span<const double> coords, int tag) {
    std::string out = "(";
    char buf[32];
    for (std::size_t j = 0; j < coords.size(); ++j) {
        std::snprintf(buf, sizeof buf, "%s%.6g", j ? ", " : "", coords[j]);
        out += buf;
    }
    out += ")#" + std::to_string(tag);
    return out;
}

}  // namespace lipreach
