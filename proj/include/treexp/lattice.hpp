#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "treexp/errors.hpp"
#include "treexp/extreal.hpp"

namespace treexp {

/// A path: one alphabet index per step, full horizon.
using PathId = std::vector<int>;
/// A node: a prefix of a path; its length is the node's time index.
using NodeId = std::vector<int>;

/**
 * Finite discrete path space.
 *
 * K steps of length dt; at step k the increment is drawn from a finite
 * alphabet of b_k real values (strictly increasing). All paths start at 0;
 * the value at step k is the sum of the first k increments.
 *
 * Paths and nodes are ranked lexicographically (step 0 most significant),
 * so the set of paths through a node of depth j is the contiguous rank
 * range [rank * paths_per_node(j), (rank+1) * paths_per_node(j)).
 *
 * Lattices with more than `max_enumerable_paths` paths can be constructed
 * (pathwise operations still work), but the rank-based machinery throws
 * SizeLimit.
 */
class Lattice {
public:
    static constexpr std::size_t max_enumerable_paths = std::size_t(1) << 27;

    Lattice(double dt, std::vector<std::vector<double>> step_alphabets);

    /// Same alphabet at every step.
    static Lattice homogeneous(int num_steps, double dt, std::vector<double> alphabet);

    int steps() const { return static_cast<int>(steps_.size()); }
    double dt() const { return dt_; }
    int branching(int step) const { return static_cast<int>(steps_[step].size()); }
    const std::vector<double>& alphabet(int step) const { return steps_[step]; }
    double increment(int step, int letter) const { return steps_[step][letter]; }
    bool step_homogeneous() const { return homogeneous_; }

    /// Index of `value` in step's alphabet, or -1 if absent (exact match).
    int letter_of(int step, double value) const;

    bool enumerable() const { return enumerable_; }
    std::size_t path_count() const;
    std::size_t node_count(int depth) const;       // number of nodes at a depth, 0..K
    std::size_t paths_per_node(int depth) const;   // size of a depth-j subtree
    std::size_t total_node_count() const;          // all depths 0..K
    std::size_t nonterminal_count() const;         // depths 0..K-1

    // flat indices
    std::size_t node_index(int depth, std::size_t rank) const;         // over depths 0..K
    std::size_t nonterminal_index(int depth, std::size_t rank) const;  // over depths 0..K-1

    std::size_t path_rank(const PathId& p) const;
    PathId path_at(std::size_t rank) const;
    std::size_t node_rank(const NodeId& n) const;
    NodeId node_at(int depth, std::size_t rank) const;

    /// Rank of the depth-j prefix of the path with the given rank.
    std::size_t prefix_rank(std::size_t path_rank, int depth) const {
        return path_rank / paths_per_node(depth);
    }
    /// Rank of the letter-th child of node (depth, rank).
    std::size_t child_rank(int depth, std::size_t rank, int letter) const {
        return rank * static_cast<std::size_t>(branching(depth)) + static_cast<std::size_t>(letter);
    }

    /// Path rank obtained by extending node (depth, node_rank) with a
    /// suffix-lattice path of rank tail_rank.
    std::size_t splice_rank(int depth, std::size_t node_rank, std::size_t tail_rank) const {
        return node_rank * paths_per_node(depth) + tail_rank;
    }
    /// Index-wise concatenation of a node and a suffix-lattice path.
    PathId splice(const NodeId& node, const PathId& tail) const;

    /// Path value B_step = sum of the first `step` increments.
    double value_at(const PathId& p, int step) const;
    /// All values B_0..B_K (length K+1).
    std::vector<double> values(const PathId& p) const;

    /// The lattice seen from depth j: steps j..K-1, same dt.
    Lattice suffix(int depth) const;

private:
    Lattice() = default;  // zero-step lattice, see suffix()

    double dt_ = 1.0;
    std::vector<std::vector<double>> steps_;
    bool homogeneous_ = true;
    bool enumerable_ = true;
    std::vector<std::size_t> span_;     // span_[j] = prod_{k>=j} b_k, span_[K] = 1
    std::vector<std::size_t> ncount_;   // ncount_[j] = prod_{k<j} b_k
    std::vector<std::size_t> noffset_;  // node_index offsets, depths 0..K
    std::vector<std::size_t> ntoff_;    // nonterminal_index offsets, depths 0..K-1

    void require_enumerable() const;
};

/**
 * A stopping time, stored both as the per-path stopping depth and as its
 * boundary: the antichain of nodes at which paths stop. Every full path has
 * exactly one prefix in the boundary.
 */
class StoppingRule {
public:
    struct Boundary {
        int depth;
        std::size_t rank;
        friend bool operator==(const Boundary&, const Boundary&) = default;
    };

    static StoppingRule constant(const Lattice& lat, int time);
    /// Validates the antichain + covering property; throws InvalidSpec otherwise.
    static StoppingRule from_boundary(const Lattice& lat, const std::vector<NodeId>& boundary);
    /// Builds from a total path map after running the stopping-time test;
    /// throws NotStoppingRule with a witness pair on failure.
    static StoppingRule from_stopping_map(const Lattice& lat, std::vector<int> time_by_path);
    /// First step j with |B_j| >= level, or K if the level is never reached.
    static StoppingRule hitting(const Lattice& lat, double level);
    static StoppingRule pointwise_min(const Lattice& lat, const StoppingRule& a, const StoppingRule& b);

    int at(std::size_t path_rank) const { return time_by_path_[path_rank]; }
    int at_path(const Lattice& lat, const PathId& p) const { return time_by_path_[lat.path_rank(p)]; }
    const std::vector<Boundary>& boundary() const { return boundary_; }
    std::size_t path_count() const { return time_by_path_.size(); }

    bool leq(const StoppingRule& other) const;
    int min_time() const;
    int max_time() const;

private:
    std::vector<int> time_by_path_;
    std::vector<Boundary> boundary_;
};

struct StoppingMapResult {
    bool ok = true;
    std::size_t witness_a = 0;  // path ranks of a violating pair
    std::size_t witness_b = 0;
};

/// Stopping-time test for a total map path -> {0..K}: the stopping depth may
/// depend on the path only through its prefix of that depth.
StoppingMapResult is_stopping_rule(const Lattice& lat, std::span<const int> time_by_path);

/// A total map from full paths to extended reals, stored densely by path rank.
class RandomVariable {
public:
    explicit RandomVariable(std::vector<XReal> values) : values_(std::move(values)) {}
    static RandomVariable from_function(const Lattice& lat,
                                        const std::function<XReal(const PathId&)>& f);
    static RandomVariable constant(const Lattice& lat, XReal c);

    XReal operator[](std::size_t path_rank) const { return values_[path_rank]; }
    std::size_t size() const { return values_.size(); }
    const std::vector<XReal>& values() const { return values_; }

private:
    std::vector<XReal> values_;
};

/// The path that follows `base` up to time tau(base) and whose increments
/// afterwards are tail's initial increments (tail is a full path of the same
/// lattice). Throws AlphabetMismatch when a spliced increment value is not in
/// the target step's alphabet, which cannot happen on step-homogeneous
/// lattices.
PathId concat(const Lattice& lat, const PathId& base, const StoppingRule& tau, const PathId& tail);

/// The increments of `p` after tau(p), re-based at zero: a path of the
/// suffix lattice at depth tau(p).
PathId shift_path(const Lattice& lat, const PathId& p, const StoppingRule& tau);

/// The payoff seen from `base` at time tau(base): on the suffix lattice,
/// tail -> xi(base prefix spliced with tail). Depends on `base` only through
/// its prefix of length tau(base).
RandomVariable shift_rv(const Lattice& lat, const RandomVariable& xi, const StoppingRule& tau,
                        const PathId& base);

/// True iff xi(p) = xi(q) whenever p and q stop at the same node, i.e. xi is
/// determined by the path up to the stopping time.
bool is_stopped_measurable(const Lattice& lat, const RandomVariable& xi, const StoppingRule& tau);

/// The rule tail -> tau(node spliced with tail) - depth on the suffix lattice
/// at `depth`; requires tau >= depth on the subtree of the node.
StoppingRule shift_rule(const Lattice& lat, const StoppingRule& tau, int depth,
                        std::size_t node_rank);

}  // namespace treexp
