#pragma once

#include <random>
#include <utility>
#include <vector>

#include "lipreach/geometry.hpp"

namespace lipreach {

struct Atom {
    StatePoint point;
    double mass = 0;
};

/// Uniform law on a box of one state component. Degenerate axes are fixed
/// coordinates, so a clipped face of a box is still a BoxPiece.
struct BoxPiece {
    int tag = 0;
    Box box;
    double mass = 0;
};

/// Successor law: a finite mixture of point masses and uniform boxes.
/// Discrete, uniform-box and mixture kernels all reduce to this form.
class TransitionKernel {
public:
    static TransitionKernel dirac(StatePoint s);
    static TransitionKernel discrete(std::vector<Atom> atoms);
    static TransitionKernel uniform(int tag, Box box);
    /// Uniform law on `raw` pushed through clipping to `bounds`: whatever falls
    /// outside piles up on the faces (and corners) of `bounds`.
    static TransitionKernel clipped_uniform(int tag, const Box& raw, const Box& bounds);
    static TransitionKernel mixture(const std::vector<std::pair<double, TransitionKernel>>& parts);

    /// Appends `other` scaled by `weight`.
    void add(const TransitionKernel& other, double weight);

    const std::vector<Atom>& atoms() const { return atoms_; }
    const std::vector<BoxPiece>& boxes() const { return boxes_; }
    double total_mass() const;

    StatePoint sample(std::mt19937_64& rng) const;

private:
    std::vector<Atom> atoms_;
    std::vector<BoxPiece> boxes_;
};

}  // namespace lipreach
