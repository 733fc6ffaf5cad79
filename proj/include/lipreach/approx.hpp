#pragma once

#include <cstddef>
#include <functional>
#include <optional>

#include "lipreach/kernel.hpp"
#include "lipreach/model.hpp"

namespace lipreach {

enum class Direction { under, over };

struct ApproxRequest {
    Direction direction = Direction::under;
    double precision = 0.01;
    /// Lipschitz constant of the objective in the relevant metric.
    double lipschitz = 1;
    /// Maximum number of evaluations per call.
    std::size_t budget = 1'000'000;
};

/// Absolute margin absorbing floating-point rounding in quadrature sums.
inline constexpr double kRoundingMargin = 1e-12;

/// Certified under/over-approximation of max f over the action set. Finite
/// sets are enumerated exactly. Box sets use a uniform net; the over
/// direction adds L times the covering radius and is not clamped.
double approx_max(const ActionSet& actions, const std::function<double(const ActionPoint&)>& f,
                  const ApproxRequest& req);

/// A function on states that can bound itself over cells.
class Integrand {
public:
    virtual ~Integrand() = default;
    /// One-sided bound at a point.
    virtual double point(const StatePoint& s, Direction dir) const = 0;
    /// One-sided bound over a whole cell of component `tag`.
    virtual double cell(int tag, const Box& cell, Direction dir) const = 0;
    /// Constant used to size quadrature cells.
    virtual double lipschitz() const = 0;
    /// Mean over a box with a certified one-sided error of at most
    /// `precision`, if the integrand can provide it directly.
    virtual std::optional<double> box_mean(int /*tag*/, const Box& /*box*/, Direction /*dir*/,
                                           double /*precision*/) const {
        return std::nullopt;
    }
};

/// f evaluated exactly, bounded over a cell by f(center) -/+ L * radius and
/// clamped to [floor, cap].
class LipschitzIntegrand : public Integrand {
public:
    LipschitzIntegrand(std::function<double(const StatePoint&)> f, double lipschitz, double floor = 0.0,
                       double cap = 1.0);
    double point(const StatePoint& s, Direction dir) const override;
    double cell(int tag, const Box& cell, Direction dir) const override;
    double lipschitz() const override { return lipschitz_; }

private:
    std::function<double(const StatePoint&)> f_;
    double lipschitz_;
    double floor_;
    double cap_;
};

/// Certified under/over-approximation of E[g] under the kernel. Atoms are
/// evaluated exactly; each box is cut into cells whose Lipschitz remainder
/// uses half the precision. Throws BudgetExceeded when the cells would
/// exceed req.budget.
double approx_expectation(const TransitionKernel& kernel, const Integrand& g, const ApproxRequest& req);

/// Quadrature cells approx_expectation would use for the given constant.
std::size_t quadrature_cells(const TransitionKernel& kernel, double lipschitz, double precision);

}  // namespace lipreach
