#pragma once

#include <cstdint>
#include <string>

#include "lipreach/model.hpp"
#include "lipreach/oracle.hpp"

namespace lipreach::models {

/// 1D rocket between a target band at +1 and a sink band at -1.
///
/// Successor of s under a thrust t: uniform on [c - w, c + w] clipped to
/// [-1, 1], with c = s + t + F(s) and
///   F(s) = min(kT / (1 - s)^2, Fmax) - min(kR / (1 + s)^2, Fmax).
/// Emergency fires a big thrust but explodes (Dirac at -1) 20% of the time.
/// Every action also fails outright with probability p_fail, which sends
/// the rocket to -1; without it a balancing strategy can hover forever.
struct GravityParams {
    double band = 0.05;
    double k_target = 0.02;
    double k_sink = 0.09;
    double max_pull = 0.1;
    double noise = 0.05;
    double emergency_noise = 0.05;
    double thrust = 0.05;
    double emergency_thrust = 0.2;
    double explode = 0.2;
    double p_fail = 0.01;
    double initial = 0.0;
};
MdpModel gravity_1d(const GravityParams& p = {});
/// Lipschitz constant of the value by the total-variation route.
double gravity_lipschitz(const GravityParams& p);

/// 2D ship on [0,1]^2 with actions north and east, a target disk at (1,1)
/// and a sink disk at (0.5,0.5), both of radius 0.05.
///
/// Near each disk there is a well: within `well` of the rim the ship is
/// captured (moved to the disk centre) with probability `capture` and the
/// engine has no effect; the effect ramps back to normal over `ramp`.
/// Otherwise the ship moves by `thrust` along the action's axis plus
/// uniform square noise of half-width `noise`, clipped to the box. The
/// engine fails with probability p_fail per step, which drops the ship into
/// the sink.
struct NavigationParams {
    double radius = 0.05;
    double thrust = 0.2;
    double noise = 0.4;
    double capture = 0.35;
    double well = 0.03;
    double ramp = 0.5;
    double p_fail = 0.02;
    double initial_x = 0.1;
    double initial_y = 0.1;
};
MdpModel navigation_2d(const NavigationParams& p = {});
double navigation_lipschitz(const NavigationParams& p);

enum class Wave { triangle, sine };
/// Markov chain on [0,1] plus two absorbing states s+ (tag 1, target) and
/// s- (tag 2, sink). From s <= 1/k it jumps to s+ with f(s k) and to s-
/// otherwise; from s > 1/k it moves deterministically to s - 1/k. The
/// value is f(frac(s k)). `lipschitz` overrides the correct k * Lip(f).
MdpModel frequency_chain(int k, Wave wave = Wave::triangle, double initial = 0.3, double lipschitz = 0);
double frequency_lipschitz(int k, Wave wave);

/// Finite MDP embedded as one point component per state. Distinct states
/// and actions sit at distance 1, so C = 1 is always sound.
MdpModel finite(const FiniteMdp& m, const std::string& name);
/// Inverse of finite(): exact transition table of a model with only point
/// components.
FiniteMdp to_finite(const MdpModel& model);

/// Random absorbing finite MDP: states 0..n-1 plus a target (n) and a sink
/// (n+1). Each row sends between 1% and 20% of its mass straight to T or R.
FiniteMdp random_finite_mdp(std::uint64_t seed, std::size_t n_states, std::size_t n_actions);
MdpModel random_finite(std::uint64_t seed, std::size_t n_states, std::size_t n_actions);

/// s0 -> T with p, else to a self-looping non-target state.
FiniteMdp two_state_chain(double p = 0.5);
/// s0 -> T with p, else back to s0.
FiniteMdp self_loop_chain(double p = 0.5);

/// Catalog lookup: gravity-1d, navigation-2d, frequency-chain,
/// random-finite, two-state, self-loop. Throws UsageError when unknown.
struct CatalogOptions {
    int k = 4;
    Wave wave = Wave::triangle;
    bool bad_constant = false;
    std::uint64_t seed = 1;
    std::size_t states = 10;
    std::size_t actions = 3;
};
MdpModel catalog(const std::string& name, const CatalogOptions& opt = {});

}  // namespace lipreach::models
