#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lipreach/kernels.hpp"
#include "lipreach/model.hpp"

namespace lipreach {

/// Explicit finite MDP. Target and sink states need no rows.
struct FiniteMdp {
    using Row = std::vector<std::pair<std::uint32_t, double>>;
    std::vector<std::vector<Row>> rows;  // rows[state][action]
    std::vector<char> target;
    std::vector<char> sink;
    std::size_t initial = 0;

    std::size_t size() const { return rows.size(); }
    /// Throws UsageError on bad indices, negative masses or rows not summing to 1.
    void validate() const;
    kernels::CsrMdp csr() const;
};

struct ViResult {
    std::vector<double> lower;
    std::vector<double> upper;  // empty unless bracketed
    bool absorbing = false;
    bool bracketed = false;
    std::size_t sweeps = 0;
    std::vector<std::string> warnings;
};

/// Value iteration from the target indicator until the step change drops
/// below tol * 1e-3. On absorbing models it also iterates from 1 on
/// non-sinks until the two runs are within tol.
ViResult exact_value_iteration(const FiniteMdp& m, double tol = 1e-10, bool parallel = true);

/// Maximal end components among non-terminal states.
std::vector<std::vector<std::uint32_t>> maximal_end_components(const FiniteMdp& m);
/// True when every end component meets T or R, i.e. no MEC avoids both.
bool is_absorbing(const FiniteMdp& m);

/// Probability of reaching T within n steps, exactly.
std::vector<double> n_step_dp(const FiniteMdp& m, int n);

/// Worst-case (over strategies) expected number of steps until T or R;
/// +inf where it diverges.
std::vector<double> max_expected_steps(const FiniteMdp& m, double tol = 1e-9, std::size_t max_sweeps = 2'000'000);

/// Reachability under discounting: every non-target step survives with
/// probability gamma.
FiniteMdp discount(const FiniteMdp& m, double gamma);

/// Grid discretization of a model, with what is needed to certify it.
///
/// Grid points sit at spacing h on every component; each point owns the
/// cell of points closer to it than to its neighbours. Kernel mass is moved
/// to the owner of the cell it lands in, so every row is an exact cell
/// integral. For the true value V restricted to the grid, one Bellman
/// backup of the discretized model is then off by at most
///   delta = max over rows of (C_S * r * (mass in cells free of T and R)
///                              + mass in cells that straddle T or R)
/// with r the largest point-to-cell distance; straddling cells can see a
/// jump of 1. Unrolling the error along the strategy that is optimal for
/// either side gives
///   |V(s) - v_h(s)| <= delta * tau(s)
/// where tau(s) is the worst-case expected absorption time of the
/// discretized model from s. So K_ora(s) = delta * tau(s) / (C_S * h).
/// Box action sets add C_pair * (net radius) to delta.
struct Discretization {
    FiniteMdp mdp;
    std::vector<StatePoint> points;
    double spacing = 0;
    double cell_radius = 0;
    double delta = 0;
    std::vector<double> tau;

    std::size_t index_of(const StatePoint& s) const;
    /// Certified interval [lo, hi] (clamped to [0,1]) around v_h at grid point i.
    std::pair<double, double> certified(const std::vector<double>& values, std::size_t i) const;

    struct Axis {
        int tag = 0;
        std::size_t offset = 0;
        Box box;
        std::vector<std::size_t> n;
        std::vector<double> step;
    };
    std::vector<Axis> layout;
};

/// Throws UnsupportedModel when a component cannot carry a grid at spacing h.
Discretization discretize(const MdpModel& model, double h);

namespace closed_form {
/// s0 -> T with p, else an absorbing non-target state.
inline double two_state(double p) { return p; }
/// Self-loop chain: T with p each step, survive with gamma.
double discounted_self_loop(double p, double gamma);
/// Escape p to T, leak q to the sink, retry otherwise.
inline double escape_with_leak(double p, double q) { return p / (p + q); }
/// Target within n steps when each step hits it with p.
double n_step_hit(double p, int n);
/// Value of the frequency chain at s in [0,1].
double frequency_value(double s, int k, bool sine);
/// Integral over [0,1] of the zig-zag |frac(2x) - 0.5| * 2.
inline double zigzag_mean() { return 0.5; }
}  // namespace closed_form

}  // namespace lipreach
