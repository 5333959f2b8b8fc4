#pragma once

#include <optional>
#include <string>

#include "treexp/ambiguity.hpp"

namespace treexp {

/**
 * Conditional sublinear expectation engine.
 *
 * The oracle computes sup over the family at a node of the linear expectation
 * of the shifted payoff, by enumerating the family member by member. The
 * dynamic-programming route computes the same values for rectangular families
 * by backward induction: at each node the maximum over the node's one-step
 * laws of the one-step expectation of the child values. The two routes share
 * one extended-real arithmetic and agree within 1e-10 on feasible sizes.
 *
 * Batch functions here carry OpenMP parallel loops over independent nodes or
 * enumerated members; the per-item arithmetic is identical to the serial
 * reference implementations in engine::reference, so results are bit-exact
 * equal regardless of thread count.
 */

/// sup_{P in family(depth, rank)} E^P[xi shifted to the node]; -inf when the
/// family at the node is empty.
XReal oracle_value_at_node(const Lattice& lat, const Family& family, int depth, std::size_t rank,
                           const RandomVariable& xi, const EnumOptions& opts = {});

/// The oracle at omega's stopping node.
XReal sublinear_expectation_oracle(const Lattice& lat, const Family& family,
                                   const StoppingRule& tau, const RandomVariable& xi,
                                   const PathId& omega, const EnumOptions& opts = {});

/// Oracle values per boundary node of tau, in boundary order.
std::vector<XReal> oracle_boundary_values(const Lattice& lat, const Family& family,
                                          const StoppingRule& tau, const RandomVariable& xi,
                                          const EnumOptions& opts = {});

/// The oracle as a random variable: path -> value at its stopping node.
RandomVariable oracle_rv(const Lattice& lat, const Family& family, const StoppingRule& tau,
                         const RandomVariable& xi, const EnumOptions& opts = {});

/// Backward-induction values at every node of every depth, indexed by
/// Lattice::node_index. Leaves carry xi.
std::vector<XReal> dpp_node_values(const Lattice& lat, const RectangularFamily& family,
                                   const RandomVariable& xi);

/// The DPP value read off at tau's boundary, as a random variable (constant
/// on each boundary cylinder, so it passes is_stopped_measurable).
RandomVariable sublinear_expectation_dpp(const Lattice& lat, const RectangularFamily& family,
                                         const StoppingRule& tau, const RandomVariable& xi);

namespace reference {
/// Serial reference implementations kept for testing the parallel kernels.
std::vector<XReal> dpp_node_values(const Lattice& lat, const RectangularFamily& family,
                                   const RandomVariable& xi);
std::vector<XReal> oracle_boundary_values(const Lattice& lat, const Family& family,
                                          const StoppingRule& tau, const RandomVariable& xi,
                                          const EnumOptions& opts = {});
}  // namespace reference

// ---------------------------------------------------------------------------
// verifiers

struct TowerReport {
    double deviation = 0.0;        // max |E_sigma(xi) - E_sigma(E_tau(xi))| over sigma-nodes
    double one_sided_margin = 0.0; // max E_sigma(xi) - E_sigma(E_tau(xi)); <= tol iff the
                                   // inequality direction that needs only invariance holds
    std::optional<StoppingRule::Boundary> witness;  // sigma-node attaining the deviation
    XReal lhs_at_witness = 0.0;
    XReal rhs_at_witness = 0.0;
    std::optional<double> dpp_deviation;  // rectangular families: same check via the DPP route
};

/// Both sides of the two-stage identity, evaluated by the oracle at every
/// sigma-boundary node. Requires sigma <= tau pointwise.
TowerReport verify_tower(const Lattice& lat, const Family& family, const StoppingRule& sigma,
                         const StoppingRule& tau, const RandomVariable& xi,
                         const EnumOptions& opts = {});

struct EsssupReport {
    bool pass = true;
    double worst_deviation = 0.0;
    std::uint64_t members = 0;
    std::uint64_t cases = 0;
    std::string witness;
};

/// For every root member P and every P-positive-probability boundary node of
/// tau, compares the engine value with the maximum of E^{P'}[xi | tau-node]
/// over the members P' that agree with P on every boundary-node probability.
EsssupReport verify_esssup(const Lattice& lat, const Family& family, const StoppingRule& tau,
                           const RandomVariable& xi, double tol = 1e-10,
                           const EnumOptions& opts = {});

struct SamplingReport {
    bool pass = true;
    std::string witness;
    std::uint64_t cases = 0;
};

/// The value at tau equals the fixed-time value process sampled at tau(omega),
/// exactly. Definitional on finite spaces; guards the node indexing, not the
/// theorem.
SamplingReport verify_optional_sampling(const Lattice& lat, const Family& family,
                                        const StoppingRule& tau, const RandomVariable& xi,
                                        const EnumOptions& opts = {});

struct SelectorResult {
    Kernel kernel;                                      // argmax member per boundary node
    std::vector<std::size_t> chosen_index;              // enumeration index per boundary node
    std::vector<StoppingRule::Boundary> empty_nodes;    // nodes with empty family (no entry)
};

/// Exact argmax selector on tau's boundary; ties break to the first member in
/// enumeration order. On finite families the maximum is attained, so no
/// epsilon slack is needed.
SelectorResult optimal_selector(const Lattice& lat, const Family& family, const StoppingRule& tau,
                                const RandomVariable& xi, const EnumOptions& opts = {});

}  // namespace treexp
