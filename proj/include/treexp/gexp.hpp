#pragma once

#include <functional>
#include <span>

#include "treexp/engine.hpp"

namespace treexp {

/**
 * A set of variance rates (sigma^2 levels, units 1/time), either listed
 * explicitly or as a finite grid over an interval. The half-open grid leaves
 * out the right endpoint, preserving the open/closed distinction that drives
 * the indicator scenarios below.
 */
struct VolSpec {
    enum class Kind { finite_set, interval_grid, half_open_grid };

    Kind kind = Kind::finite_set;
    std::vector<double> values;  // finite_set only
    double lo = 0.0;
    double hi = 0.0;
    int num_points = 0;

    static VolSpec finite(std::vector<double> values);
    /// num_points levels from lo to hi inclusive.
    static VolSpec closed_grid(double lo, double hi, int num_points);
    /// num_points levels lo + i*(hi-lo)/num_points, i < num_points; hi excluded.
    static VolSpec half_open(double lo, double hi, int num_points);

    /// Sorted distinct positive levels; throws InvalidSpec on a bad spec.
    std::vector<double> levels() const;

    friend bool operator==(const VolSpec&, const VolSpec&);
};

/// 1/2 * max over the spec's levels of gamma * sigma^2 (the supremum over a
/// half-open grid is over the points actually included).
double g_function(double gamma, const VolSpec& spec);

/**
 * An adapted set-valued variance-rate process: the admissible levels at step
 * k may depend on the path, but only through its increments before k.
 * Rule-backed processes are adapted by construction; table-backed ones can be
 * checked (see check_d_adaptedness).
 */
class DProcess {
public:
    using Rule = std::function<VolSpec(int step, std::span<const double> increments_before)>;

    static DProcess constant(VolSpec spec);
    static DProcess from_rule(Rule rule);
    /// spec is `below` while the average realized rate over past steps is
    /// under the threshold, `at_or_above` otherwise (at step 0 the average
    /// over no steps counts as 0).
    static DProcess realized_avg_threshold(double threshold, VolSpec below, VolSpec at_or_above,
                                           double dt);
    /// Levels tabulated per (path, step); adaptedness is a property to check,
    /// not a given.
    static DProcess from_table(std::vector<std::vector<VolSpec>> spec_by_path_and_step);

    VolSpec at(int step, std::span<const double> increments_before) const;
    bool is_table() const { return !table_.empty(); }
    const std::vector<std::vector<VolSpec>>& table() const { return table_; }

private:
    Rule rule_;
    std::vector<std::vector<VolSpec>> table_;
};

/**
 * A lattice generated from variance-rate levels: at each node the one-step
 * laws are the symmetric two-point laws (+-sqrt(level*dt) with probability
 * 1/2 each), one per admissible level, over the union alphabet of the step.
 * Every selection is then a martingale measure with the per-step conditional
 * variance equal to level*dt exactly, and the realized rate recovers the
 * level up to floating-point rounding of sqrt(level*dt)^2/dt (exactly when
 * level*dt is a representable square, e.g. dyadic grids).
 */
struct VolLattice {
    Lattice lattice;
    RectangularFamily family;
    std::vector<std::vector<double>> level_of_letter;  // per step, per alphabet index

    /// The exact variance-rate level of each step of the path, recovered from
    /// the increment table (not from floating-point squares).
    std::vector<double> path_levels(const PathId& p) const;
};

/// extra_levels contribute alphabet letters without laws: paths through them
/// exist but are null under every member, which is what the indicator
/// scenarios need to compare families on a common path space.
VolLattice build_vol_lattice(const VolSpec& spec, int num_steps, double dt,
                             const std::vector<double>& extra_levels = {});
VolLattice build_vol_lattice(const DProcess& d, int num_steps, double dt,
                             const std::vector<double>& extra_levels = {});

using PayoffFn = std::function<XReal(const Lattice&, const PathId&)>;

/// sup over the lattice family of E[xi], via backward induction at the root.
XReal g_expectation(const VolSpec& spec, int num_steps, double dt, const PayoffFn& xi);
XReal g_expectation(const DProcess& d, int num_steps, double dt, const PayoffFn& xi);

/**
 * Indicator of the constant-volatility path set: A = {every step runs at
 * level 9/4}, evaluated under the grid {1, 9/4, 4} and under the pair {1, 4}
 * on a common alphabet. The grid family contains the level-9/4 selection, so
 * its value is 1; the pair family charges no path in A, so its value is 0.
 * The values do not depend on the horizon or the step size.
 */
struct ConstantVolScenario {
    double grid_value = 0.0;
    double pair_value = 0.0;
};
ConstantVolScenario example_51_scenario(int num_steps, double dt);

/**
 * Indicator of {realized quadratic variation at the horizon >= 2 * K * dt}
 * under the closed grid [1,2] versus the half-open grid [1,2). Only the
 * closed grid attains the top rate, so the values are 1 and 0. The squared
 * terminal value is also reported for both families; those differ by the
 * contribution of the excluded top level and are informational.
 */
struct QvThresholdScenario {
    double closed_value = 0.0;
    double half_open_value = 0.0;
    double closed_bsq = 0.0;
    double half_open_bsq = 0.0;
};
QvThresholdScenario example_52_scenario(int num_steps, double dt, int num_points = 4);

struct AdaptednessReport {
    bool pass = true;
    std::size_t witness_a = 0;  // path ranks sharing a prefix but differing specs
    std::size_t witness_b = 0;
    int step = 0;
};

/// Structural PASS for rule-backed processes; for table-backed ones, verifies
/// that the step-k spec agrees across paths sharing the first k increments.
AdaptednessReport check_d_adaptedness(const DProcess& d, const Lattice& lat);

}  // namespace treexp
