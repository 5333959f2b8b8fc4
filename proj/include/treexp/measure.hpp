#pragma once

#include <map>
#include <utility>
#include <vector>

#include "treexp/lattice.hpp"

namespace treexp {

/**
 * A probability measure on a lattice, given by one-step transition
 * distributions at every non-terminal node. Transition vectors sum to 1
 * within 1e-12 and have no negative entries; path probabilities are the
 * products of the transition entries along the path.
 */
class TreeMeasure {
public:
    static constexpr double sum_tolerance = 1e-12;

    TreeMeasure(const Lattice& lat, std::vector<std::vector<double>> transitions);

    /// Same one-step law at every node (requires a step-homogeneous lattice).
    static TreeMeasure iid(const Lattice& lat, const std::vector<double>& law);
    static TreeMeasure uniform(const Lattice& lat);

    const std::vector<double>& at(const Lattice& lat, int depth, std::size_t rank) const {
        return trans_[lat.nonterminal_index(depth, rank)];
    }
    const std::vector<std::vector<double>>& transitions() const { return trans_; }

    double path_prob(const Lattice& lat, std::size_t path_rank) const;
    double node_prob(const Lattice& lat, int depth, std::size_t rank) const;
    /// Path probabilities for all paths, in rank order.
    std::vector<double> path_probs(const Lattice& lat) const;

private:
    std::vector<std::vector<double>> trans_;
};

/// Largest absolute path-probability difference between two measures on the
/// same lattice.
double measure_distance(const Lattice& lat, const TreeMeasure& a, const TreeMeasure& b);

/// E[xi] = E[xi+] - E[xi-], computed as an exact weighted sum over the paths
/// of positive probability; -inf when both parts are infinite.
XReal expectation(const Lattice& lat, const TreeMeasure& p, const RandomVariable& xi);

struct CondExpectation {
    RandomVariable value;                  // determined by the stopping node
    std::vector<unsigned char> null_node;  // per path: 1 iff its stopping node is P-null
    bool has_null_nodes = false;
};

/// omega -> E[xi | F_tau](omega), node-wise. On P-null boundary nodes the
/// value is -inf and the flag is set; the result is determined by the
/// stopping node, so it passes is_stopped_measurable.
CondExpectation conditional_expectation(const Lattice& lat, const TreeMeasure& p,
                                        const RandomVariable& xi, const StoppingRule& tau);

/// The conditional law given the node (depth, rank), relabeled to the suffix
/// lattice so paths restart at zero. No renormalization is involved: the
/// transitions below the node already are the conditional law. Throws
/// NullPrefix when the node has probability zero.
TreeMeasure rcpd_shift_node(const Lattice& lat, const TreeMeasure& p, int depth, std::size_t rank);

/// Same, conditioning on the node where `omega` stops under tau.
TreeMeasure rcpd_shift(const Lattice& lat, const TreeMeasure& p, const StoppingRule& tau,
                       const PathId& omega);

/// A boundary-node-indexed family of measures on the corresponding suffix
/// lattices; the measurability of the assignment is structural (it depends
/// only on the node).
class Kernel {
public:
    using Key = std::pair<int, std::size_t>;  // (depth, node rank)

    void set(int depth, std::size_t rank, TreeMeasure m);
    const TreeMeasure* find(int depth, std::size_t rank) const;
    const std::map<Key, TreeMeasure>& entries() const { return entries_; }

    /// The kernel of P's own conditional laws on tau's boundary (positive-
    /// probability nodes only).
    static Kernel conditionals(const Lattice& lat, const TreeMeasure& p, const StoppingRule& tau);

private:
    std::map<Key, TreeMeasure> entries_;
};

/// The measure that follows P strictly before theta's boundary and the
/// kernel's law beyond each boundary node. Kernel entries are used wherever
/// provided; a missing entry at a positive-probability boundary node throws
/// MissingKernel.
TreeMeasure paste(const Lattice& lat, const TreeMeasure& p, const StoppingRule& theta,
                  const Kernel& nu);

struct MartingaleResult {
    bool ok = true;
    int depth = 0;  // witness node when !ok
    std::size_t rank = 0;
    double drift = 0.0;
};

/// True iff the one-step mean increment vanishes (within tol) at every
/// positive-probability non-terminal node.
MartingaleResult is_martingale_measure(const Lattice& lat, const TreeMeasure& p,
                                       double tol = 1e-12);

/**
 * Pathwise realized quadratic variation.
 *
 * ahat[k] = (dB_{k+1})^2 / dt is the per-step variance rate and
 * qv[k] = dt * (ahat[0] + ... + ahat[k-1]) with qv[0] = 0, so the identity
 * qv_K = dt * sum(ahat) holds exactly, not merely up to rounding.
 */
struct RealizedQV {
    std::vector<double> qv;    // length K+1
    std::vector<double> ahat;  // length K
};

RealizedQV realized_qv(const Lattice& lat, const PathId& p);

/// Trailing moving average of the per-step rate over min(window, k) steps.
std::vector<double> windowed_density(const RealizedQV& rqv, int window);

}  // namespace treexp
