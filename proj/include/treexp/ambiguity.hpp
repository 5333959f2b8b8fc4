#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "treexp/measure.hpp"
#include "treexp/rng.hpp"

namespace treexp {

/**
 * A rectangular scenario family: at every non-terminal node, a finite
 * nonempty set of one-step laws. The family at a node is the set of all
 * measures obtained by selecting one law at every node weakly after it, so
 * adaptedness holds by construction.
 *
 * Duplicate laws at a node are dropped, which keeps enumerations
 * duplicate-free as transition tables.
 */
class RectangularFamily {
public:
    using LawSet = std::vector<std::vector<double>>;

    RectangularFamily(const Lattice& lat, std::vector<LawSet> sets_by_nonterminal);

    /// One law per node: the classical single-measure family.
    static RectangularFamily singleton(const Lattice& lat, const TreeMeasure& p);

    const LawSet& at(const Lattice& lat, int depth, std::size_t rank) const {
        return sets_[lat.nonterminal_index(depth, rank)];
    }
    const std::vector<LawSet>& sets() const { return sets_; }

    /// Number of selection measures on the subtree of (depth, rank);
    /// saturates at uint64 max.
    std::uint64_t selection_count(const Lattice& lat, int depth, std::size_t rank) const;

    /**
     * Odometer over the selections of the subtree of a node, in a fixed
     * deterministic order: subtree nodes are listed depth-major, and the last
     * node's choice varies fastest, so selection k has the mixed-radix digits
     * of k with the first node most significant.
     */
    class Selections {
    public:
        std::uint64_t count() const { return count_; }
        std::uint64_t index() const { return index_; }
        bool advance();            // false after the last selection wraps to the first
        void seek(std::uint64_t k);

        /// Transition law of the current selection at suffix-lattice node
        /// (u, srank).
        const std::vector<double>& law(int u, std::size_t srank) const {
            const std::size_t i = local_off_[static_cast<std::size_t>(u)] + srank;
            return (*node_sets_[i])[choice_[i]];
        }
        int suffix_steps() const { return static_cast<int>(local_off_.size()); }

        /// Current selection as a measure on the suffix lattice.
        TreeMeasure measure(const Lattice& suffix_lat) const;

    private:
        friend class RectangularFamily;
        std::vector<const LawSet*> node_sets_;  // depth-major over the subtree
        std::vector<std::size_t> local_off_;    // offset per suffix depth
        std::vector<std::uint32_t> choice_;
        std::uint64_t count_ = 1;
        std::uint64_t index_ = 0;
    };

    Selections selections(const Lattice& lat, int depth, std::size_t rank) const;

private:
    std::vector<LawSet> sets_;
};

/**
 * An explicitly enumerated scenario family: an arbitrary finite list of
 * measures per node, keyed by the node (so adaptedness again holds
 * structurally). Unlike the rectangular case nothing ties the lists at
 * different nodes together, which is exactly what the stability checkers
 * probe. Nodes without an entry have the empty set.
 */
class ExplicitFamily {
public:
    void set(const Lattice& lat, int depth, std::size_t rank, std::vector<TreeMeasure> measures);
    const std::vector<TreeMeasure>* find(int depth, std::size_t rank) const;

private:
    std::map<std::pair<int, std::size_t>, std::vector<TreeMeasure>> entries_;
};

using Family = std::variant<RectangularFamily, ExplicitFamily>;

struct EnumOptions {
    std::size_t max_enum = 10'000'000;
};

/// All measures of the family at (depth, rank), as measures on the suffix
/// lattice, in the family's deterministic order. At depth K the set is the
/// single trivial measure. Throws SizeLimit beyond opts.max_enum.
std::vector<TreeMeasure> enumerate_measures(const Lattice& lat, const Family& family, int depth,
                                            std::size_t rank, const EnumOptions& opts = {});

std::uint64_t family_size(const Lattice& lat, const Family& family, int depth, std::size_t rank);

// ---------------------------------------------------------------------------
// stopping-rule enumeration (used by the checkers and by tests)

/// Number of stopping rules on the lattice; saturates at uint64 max.
std::uint64_t stopping_rule_count(const Lattice& lat);

/// Every stopping rule, as boundaries generated in a fixed recursive order.
/// Throws SizeLimit when the count exceeds `cap`.
std::vector<StoppingRule> all_stopping_rules(const Lattice& lat, std::size_t cap = 100'000);

StoppingRule random_stopping_rule(const Lattice& lat, Rng& rng);

/// `n` distinct seeded random rules (fewer if the lattice has fewer).
std::vector<StoppingRule> sample_stopping_rules(const Lattice& lat, std::size_t n,
                                                std::uint64_t seed);

// ---------------------------------------------------------------------------
// checkers

struct CheckOptions {
    std::size_t max_enum = 10'000'000;
    std::size_t rule_sample = 100;  // sample size on lattices beyond K<=3, b<=2
    std::uint64_t kernel_cap = 4096;  // pasting kernels per (rule, measure) before sampling
    std::uint64_t seed = 0;
    double tol = 1e-12;
};

struct CheckReport {
    bool pass = true;
    std::string check;
    std::uint64_t cases = 0;     // tuples checked
    std::string witness;         // empty when pass
    std::vector<std::string> notes;
};

/// Verifies that conditioning stays inside the family: for every node, every
/// stopping rule on its subtree, every family member there, and every
/// positive-probability boundary node, the conditional law belongs to the
/// family at that boundary node.
CheckReport check_invariance(const Lattice& lat, const Family& family,
                             const CheckOptions& opts = {});

/// Verifies stability under pasting: replacing a member's conditional laws
/// beyond a stopping boundary by any family-valued kernel lands back in the
/// family at the starting node.
CheckReport check_pasting(const Lattice& lat, const Family& family, const CheckOptions& opts = {});

/// On a finite space every subset is Borel and every function is measurable,
/// so the measurability half of the stability assumptions holds vacuously;
/// always PASS, with a warning when some node carries an empty set.
CheckReport measurability_note(const Lattice& lat, const Family& family);

/// Optional diagnostic for rectangular families: at every reachable boundary
/// node of tau, the set of conditionals of root members equals the family at
/// the node (an identity that is ill-posed on continuum spaces but exact
/// here).
CheckReport rcpd_image_diagnostic(const Lattice& lat, const RectangularFamily& family,
                                  const StoppingRule& tau, const CheckOptions& opts = {});

// ---------------------------------------------------------------------------
// ready-made stability violations (used by tests, docs and shipped configs)

struct ViolationFixture {
    Lattice lattice;
    ExplicitFamily family;
    std::string description;
};

/// Root set {uniform}, but a depth-1 node set that excludes the uniform
/// conditional: check_invariance fails with that node as witness.
ViolationFixture invariance_violating_family();

/// Root set {uniform}; depth-1 sets {uniform, up mass, down mass}. The
/// conditionals of the root member are present (invariance holds) but pasting
/// the point-mass kernels leaves the root set, so check_pasting fails and the
/// two-step tower identity breaks while the one-sided inequality survives.
ViolationFixture pasting_violating_family();

}  // namespace treexp
