#include "treexp/ambiguity.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>
#include <sstream>
#include <unordered_set>

namespace treexp {

namespace {

std::uint64_t saturating_mul(std::uint64_t a, std::uint64_t b) {
    if (a == 0 || b == 0) return 0;
    if (a > UINT64_MAX / b) return UINT64_MAX;
    return a * b;
}

void validate_law(const Lattice& lat, int depth, const std::vector<double>& law) {
    if (law.size() != static_cast<std::size_t>(lat.branching(depth)))
        throw InvalidSpec("one-step law has wrong arity at depth " + std::to_string(depth));
    double sum = 0.0;
    for (double x : law) {
        if (!(x >= 0.0)) throw InvalidSpec("negative one-step probability");
        sum += x;
    }
    if (std::fabs(sum - 1.0) > TreeMeasure::sum_tolerance)
        throw InvalidSpec("one-step law does not sum to 1");
}

// raw bytes of a double vector, for exact-identity membership sets
std::string byte_key(const std::vector<double>& v) {
    std::string s(v.size() * sizeof(double), '\0');
    std::memcpy(s.data(), v.data(), s.size());
    return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// RectangularFamily

RectangularFamily::RectangularFamily(const Lattice& lat, std::vector<LawSet> sets_by_nonterminal)
    : sets_(std::move(sets_by_nonterminal)) {
    if (sets_.size() != lat.nonterminal_count())
        throw InvalidSpec("per-node law sets have wrong size");
    for (int depth = 0; depth < lat.steps(); ++depth) {
        for (std::size_t rank = 0; rank < lat.node_count(depth); ++rank) {
            auto& set = sets_[lat.nonterminal_index(depth, rank)];
            if (set.empty()) throw InvalidSpec("empty law set at a non-terminal node");
            for (const auto& law : set) validate_law(lat, depth, law);
            // drop exact duplicates, preserving first occurrences
            LawSet dedup;
            for (auto& law : set)
                if (std::find(dedup.begin(), dedup.end(), law) == dedup.end())
                    dedup.push_back(std::move(law));
            set = std::move(dedup);
        }
    }
}

RectangularFamily RectangularFamily::singleton(const Lattice& lat, const TreeMeasure& p) {
    std::vector<LawSet> sets(lat.nonterminal_count());
    for (std::size_t i = 0; i < sets.size(); ++i) sets[i] = {p.transitions()[i]};
    return RectangularFamily(lat, std::move(sets));
}

std::uint64_t RectangularFamily::selection_count(const Lattice& lat, int depth,
                                                 std::size_t rank) const {
    // subtree nodes at original depth depth+u have ranks [rank*m, (rank+1)*m)
    // with m the number of depth-u nodes of the suffix lattice
    std::uint64_t n = 1;
    for (int u = 0; depth + u < lat.steps(); ++u) {
        const std::size_t m = lat.node_count(depth + u) / lat.node_count(depth);
        const std::size_t lo = rank * m;
        for (std::size_t s = 0; s < m; ++s)
            n = saturating_mul(n, sets_[lat.nonterminal_index(depth + u, lo + s)].size());
    }
    return n;
}

RectangularFamily::Selections RectangularFamily::selections(const Lattice& lat, int depth,
                                                            std::size_t rank) const {
    Selections sel;
    for (int u = 0; depth + u < lat.steps(); ++u) {
        sel.local_off_.push_back(sel.node_sets_.size());
        const std::size_t m = lat.node_count(depth + u) / lat.node_count(depth);
        const std::size_t lo = rank * m;
        for (std::size_t s = 0; s < m; ++s) {
            const auto& set = sets_[lat.nonterminal_index(depth + u, lo + s)];
            sel.node_sets_.push_back(&set);
            sel.count_ = saturating_mul(sel.count_, set.size());
        }
    }
    sel.choice_.assign(sel.node_sets_.size(), 0);
    return sel;
}

bool RectangularFamily::Selections::advance() {
    ++index_;
    for (std::size_t i = choice_.size(); i-- > 0;) {
        if (++choice_[i] < node_sets_[i]->size()) return true;
        choice_[i] = 0;
    }
    index_ = 0;
    return false;
}

void RectangularFamily::Selections::seek(std::uint64_t k) {
    index_ = k;
    for (std::size_t i = choice_.size(); i-- > 0;) {
        const std::uint64_t sz = node_sets_[i]->size();
        choice_[i] = static_cast<std::uint32_t>(k % sz);
        k /= sz;
    }
}

TreeMeasure RectangularFamily::Selections::measure(const Lattice& suffix_lat) const {
    std::vector<std::vector<double>> trans(suffix_lat.nonterminal_count());
    for (int u = 0; u < suffix_lat.steps(); ++u)
        for (std::size_t s = 0; s < suffix_lat.node_count(u); ++s)
            trans[suffix_lat.nonterminal_index(u, s)] = law(u, s);
    return TreeMeasure(suffix_lat, std::move(trans));
}

// ---------------------------------------------------------------------------
// ExplicitFamily

void ExplicitFamily::set(const Lattice& lat, int depth, std::size_t rank,
                         std::vector<TreeMeasure> measures) {
    const Lattice sub = lat.suffix(depth);
    for (const auto& m : measures)
        if (m.transitions().size() != sub.nonterminal_count())
            throw InvalidSpec("family measure does not live on the node's suffix lattice");
    entries_.insert_or_assign({depth, rank}, std::move(measures));
}

const std::vector<TreeMeasure>* ExplicitFamily::find(int depth, std::size_t rank) const {
    auto it = entries_.find({depth, rank});
    return it == entries_.end() ? nullptr : &it->second;
}

// ---------------------------------------------------------------------------
// enumeration

std::uint64_t family_size(const Lattice& lat, const Family& family, int depth, std::size_t rank) {
    if (depth == lat.steps()) return 1;
    if (const auto* rect = std::get_if<RectangularFamily>(&family))
        return rect->selection_count(lat, depth, rank);
    const auto* list = std::get<ExplicitFamily>(family).find(depth, rank);
    return list == nullptr ? 0 : list->size();
}

std::vector<TreeMeasure> enumerate_measures(const Lattice& lat, const Family& family, int depth,
                                            std::size_t rank, const EnumOptions& opts) {
    const Lattice sub = lat.suffix(depth);
    if (depth == lat.steps()) return {TreeMeasure(sub, {})};
    const std::uint64_t n = family_size(lat, family, depth, rank);
    if (n > opts.max_enum)
        throw SizeLimit("family enumeration of size " + std::to_string(n) + " exceeds the cap",
                        static_cast<std::size_t>(n), opts.max_enum);
    std::vector<TreeMeasure> out;
    out.reserve(static_cast<std::size_t>(n));
    if (const auto* rect = std::get_if<RectangularFamily>(&family)) {
        auto sel = rect->selections(lat, depth, rank);
        do {
            out.push_back(sel.measure(sub));
        } while (sel.advance());
        return out;
    }
    const auto* list = std::get<ExplicitFamily>(family).find(depth, rank);
    if (list != nullptr) out = *list;
    return out;
}

// ---------------------------------------------------------------------------
// stopping-rule enumeration

std::uint64_t stopping_rule_count(const Lattice& lat) {
    // same count below every node of a given depth
    std::uint64_t count = 1;  // at depth K only "stop" remains
    for (int depth = lat.steps() - 1; depth >= 0; --depth) {
        std::uint64_t prod = 1;
        for (int i = 0; i < lat.branching(depth); ++i) prod = saturating_mul(prod, count);
        count = prod == UINT64_MAX ? UINT64_MAX : prod + 1;
    }
    return count;
}

namespace {

template <class SizeOf>
bool advance_odometer(std::vector<std::size_t>& idx, SizeOf&& size_of) {
    for (std::size_t i = idx.size(); i-- > 0;) {
        if (++idx[i] < size_of(i)) return true;
        idx[i] = 0;
    }
    return false;
}

// all cuts of the subtree rooted at (depth, rank), each as a boundary list
void collect_cuts(const Lattice& lat, int depth, std::size_t rank,
                  std::vector<std::vector<StoppingRule::Boundary>>& out, std::size_t cap) {
    out.clear();
    if (depth == lat.steps()) {
        out.push_back({{depth, rank}});
        return;
    }
    std::vector<std::vector<std::vector<StoppingRule::Boundary>>> child_cuts(
        static_cast<std::size_t>(lat.branching(depth)));
    for (int i = 0; i < lat.branching(depth); ++i)
        collect_cuts(lat, depth + 1, lat.child_rank(depth, rank, i), child_cuts[i], cap);

    out.push_back({{depth, rank}});  // stop here
    std::vector<std::size_t> idx(static_cast<std::size_t>(lat.branching(depth)), 0);
    do {
        std::vector<StoppingRule::Boundary> combined;
        for (std::size_t i = 0; i < idx.size(); ++i)
            combined.insert(combined.end(), child_cuts[i][idx[i]].begin(),
                            child_cuts[i][idx[i]].end());
        out.push_back(std::move(combined));
        if (out.size() > cap)
            throw SizeLimit("stopping-rule enumeration exceeds the cap", out.size(), cap);
    } while (advance_odometer(idx, [&](std::size_t i) { return child_cuts[i].size(); }));
}

StoppingRule rule_from_ranked_boundary(const Lattice& lat,
                                       const std::vector<StoppingRule::Boundary>& boundary) {
    std::vector<NodeId> nodes;
    nodes.reserve(boundary.size());
    for (const auto& b : boundary) nodes.push_back(lat.node_at(b.depth, b.rank));
    return StoppingRule::from_boundary(lat, nodes);
}

}  // namespace

std::vector<StoppingRule> all_stopping_rules(const Lattice& lat, std::size_t cap) {
    const std::uint64_t n = stopping_rule_count(lat);
    if (n > cap) throw SizeLimit("stopping-rule enumeration exceeds the cap",
                                 static_cast<std::size_t>(std::min<std::uint64_t>(n, SIZE_MAX)),
                                 cap);
    std::vector<std::vector<StoppingRule::Boundary>> cuts;
    collect_cuts(lat, 0, 0, cuts, cap);
    std::vector<StoppingRule> rules;
    rules.reserve(cuts.size());
    for (const auto& c : cuts) rules.push_back(rule_from_ranked_boundary(lat, c));
    return rules;
}

StoppingRule random_stopping_rule(const Lattice& lat, Rng& rng) {
    std::vector<StoppingRule::Boundary> boundary;
    // iterative frontier descent; stop probability grows with depth
    std::vector<StoppingRule::Boundary> frontier{{0, 0}};
    while (!frontier.empty()) {
        const auto node = frontier.back();
        frontier.pop_back();
        const bool stop =
            node.depth == lat.steps() ||
            rng.coin(0.3 + 0.4 * static_cast<double>(node.depth) / lat.steps());
        if (stop) {
            boundary.push_back(node);
        } else {
            for (int i = lat.branching(node.depth) - 1; i >= 0; --i)
                frontier.push_back({node.depth + 1, lat.child_rank(node.depth, node.rank, i)});
        }
    }
    return rule_from_ranked_boundary(lat, boundary);
}

std::vector<StoppingRule> sample_stopping_rules(const Lattice& lat, std::size_t n,
                                                std::uint64_t seed) {
    Rng rng(seed ^ 0x5bf0f5e4c0de5eedULL);
    std::vector<StoppingRule> rules;
    std::set<std::vector<int>> seen;
    for (std::size_t attempt = 0; attempt < 8 * n && rules.size() < n; ++attempt) {
        StoppingRule r = random_stopping_rule(lat, rng);
        std::vector<int> key(r.path_count());
        for (std::size_t i = 0; i < key.size(); ++i) key[i] = r.at(i);
        if (seen.insert(std::move(key)).second) rules.push_back(std::move(r));
    }
    return rules;
}

// ---------------------------------------------------------------------------
// checkers

namespace {

struct NodeRef {
    int depth;
    std::size_t rank;
};

// rules the checkers quantify over: exhaustive on small lattices, a fixed
// seeded sample otherwise
std::vector<StoppingRule> checker_rules(const Lattice& lat, const CheckOptions& opts) {
    int maxb = 0;
    for (int k = 0; k < lat.steps(); ++k) maxb = std::max(maxb, lat.branching(k));
    if (lat.steps() <= 3 && maxb <= 2) return all_stopping_rules(lat);
    return sample_stopping_rules(lat, opts.rule_sample, opts.seed);
}

// family at a node, as path-probability vectors plus an exact-identity set;
// path probabilities are products taken root-to-leaf so that equal transition
// tables give bitwise-equal vectors
struct NodeFamilyProbs {
    std::vector<std::vector<double>> probs;
    std::unordered_set<std::string> exact;

    bool contains(const std::vector<double>& candidate, double tol) const {
        if (exact.count(byte_key(candidate)) > 0) return true;
        for (const auto& p : probs) {
            double d = 0.0;
            for (std::size_t i = 0; i < p.size(); ++i)
                d = std::max(d, std::fabs(p[i] - candidate[i]));
            if (d <= tol) return true;
        }
        return false;
    }
};

NodeFamilyProbs node_family_probs(const Lattice& lat, const Family& family, int depth,
                                  std::size_t rank, const EnumOptions& opts) {
    NodeFamilyProbs out;
    const Lattice sub = lat.suffix(depth);
    for (const auto& m : enumerate_measures(lat, family, depth, rank, opts)) {
        out.probs.push_back(m.path_probs(sub));
        out.exact.insert(byte_key(out.probs.back()));
    }
    return out;
}

std::string describe_rule(const StoppingRule& rule) {
    std::ostringstream os;
    os << "boundary{";
    for (std::size_t i = 0; i < rule.boundary().size(); ++i) {
        if (i > 0) os << " ";
        os << "(" << rule.boundary()[i].depth << "," << rule.boundary()[i].rank << ")";
    }
    os << "}";
    return os.str();
}

std::string describe_node(int depth, std::size_t rank) {
    return "(depth " + std::to_string(depth) + ", rank " + std::to_string(rank) + ")";
}

}  // namespace

CheckReport check_invariance(const Lattice& lat, const Family& family, const CheckOptions& opts) {
    CheckReport report;
    report.check = "invariance";
    const EnumOptions eopts{opts.max_enum};

    for (int s = 0; s < lat.steps(); ++s) {
        for (std::size_t base = 0; base < lat.node_count(s); ++base) {
            const Lattice sub = lat.suffix(s);
            const auto members = enumerate_measures(lat, family, s, base, eopts);
            if (members.empty()) continue;
            const auto rules = checker_rules(sub, opts);

            // family probs at the reachable target nodes, cached lazily
            std::map<std::pair<int, std::size_t>, NodeFamilyProbs> targets;
            auto target = [&](int gdepth, std::size_t grank) -> const NodeFamilyProbs& {
                auto it = targets.find({gdepth, grank});
                if (it == targets.end())
                    it = targets.emplace(std::pair{gdepth, grank},
                                         node_family_probs(lat, family, gdepth, grank, eopts))
                             .first;
                return it->second;
            };

            for (const auto& theta : rules) {
                for (std::size_t pi = 0; pi < members.size(); ++pi) {
                    const TreeMeasure& p = members[pi];
                    for (const auto& m : theta.boundary()) {
                        if (m.depth == sub.steps()) continue;  // trivial tail
                        if (p.node_prob(sub, m.depth, m.rank) == 0.0) continue;
                        const int gdepth = s + m.depth;
                        const std::size_t grank =
                            base * lat.node_count(gdepth) / lat.node_count(s) + m.rank;
                        const TreeMeasure cond = rcpd_shift_node(sub, p, m.depth, m.rank);
                        const auto cond_probs = cond.path_probs(sub.suffix(m.depth));
                        ++report.cases;
                        if (!target(gdepth, grank).contains(cond_probs, opts.tol)) {
                            report.pass = false;
                            report.witness = "node " + describe_node(s, base) + ", rule " +
                                             describe_rule(theta) + ", member #" +
                                             std::to_string(pi) + ", conditional at " +
                                             describe_node(gdepth, grank) +
                                             " is not in the family there";
                            return report;
                        }
                    }
                }
            }
        }
    }
    return report;
}

CheckReport check_pasting(const Lattice& lat, const Family& family, const CheckOptions& opts) {
    CheckReport report;
    report.check = "pasting";
    const EnumOptions eopts{opts.max_enum};
    std::uint64_t sampled_tuples = 0;

    for (int s = 0; s < lat.steps(); ++s) {
        for (std::size_t base = 0; base < lat.node_count(s); ++base) {
            const Lattice sub = lat.suffix(s);
            const auto members = enumerate_measures(lat, family, s, base, eopts);
            if (members.empty()) continue;
            const NodeFamilyProbs home = node_family_probs(lat, family, s, base, eopts);
            const auto rules = checker_rules(sub, opts);

            std::map<std::pair<int, std::size_t>, std::vector<TreeMeasure>> target_measures;
            auto targets = [&](int gdepth, std::size_t grank) -> const std::vector<TreeMeasure>& {
                auto it = target_measures.find({gdepth, grank});
                if (it == target_measures.end())
                    it = target_measures
                             .emplace(std::pair{gdepth, grank},
                                      enumerate_measures(lat, family, gdepth, grank, eopts))
                             .first;
                return it->second;
            };

            for (std::size_t ri = 0; ri < rules.size(); ++ri) {
                const auto& theta = rules[ri];
                for (std::size_t pi = 0; pi < members.size(); ++pi) {
                    const TreeMeasure& p = members[pi];

                    // positive-probability boundary nodes and their kernel choices
                    struct Slot {
                        StoppingRule::Boundary node;
                        const std::vector<TreeMeasure>* choices;
                        double prefix_prob;          // P(node), multiplied root-to-node
                        std::vector<std::vector<double>> seg;  // per choice: pasted probs on the block
                    };
                    std::vector<Slot> slots;
                    bool vacuous = false;
                    for (const auto& m : theta.boundary()) {
                        if (p.node_prob(sub, m.depth, m.rank) == 0.0) continue;
                        const int gdepth = s + m.depth;
                        const std::size_t grank =
                            base * lat.node_count(gdepth) / lat.node_count(s) + m.rank;
                        const auto& choice_list = targets(gdepth, grank);
                        if (choice_list.empty()) {
                            vacuous = true;  // no admissible kernel at this node
                            break;
                        }
                        slots.push_back({m, &choice_list, 0.0, {}});
                    }
                    if (vacuous || slots.empty()) continue;

                    // pasted path probabilities decompose over boundary blocks;
                    // precompute every block segment with the same left-to-right
                    // multiplication order as TreeMeasure::path_probs
                    for (auto& slot : slots) {
                        const int d = slot.node.depth;
                        const Lattice tail_lat = sub.suffix(d);
                        slot.prefix_prob = p.node_prob(sub, d, slot.node.rank);
                        slot.seg.reserve(slot.choices->size());
                        for (const auto& choice : *slot.choices) {
                            std::vector<double> probs(tail_lat.path_count(), 0.0);
                            for (std::size_t t = 0; t < probs.size(); ++t) {
                                double q = slot.prefix_prob;
                                std::size_t cur = 0;
                                for (int u = 0; u < tail_lat.steps() && q > 0.0; ++u) {
                                    const int letter = static_cast<int>(
                                        (t / tail_lat.paths_per_node(u + 1)) %
                                        static_cast<std::size_t>(tail_lat.branching(u)));
                                    q *= choice.at(tail_lat, u, cur)[static_cast<std::size_t>(letter)];
                                    cur = tail_lat.child_rank(u, cur, letter);
                                }
                                probs[t] = q;
                            }
                            slot.seg.push_back(std::move(probs));
                        }
                    }

                    std::uint64_t kernel_count = 1;
                    for (const auto& slot : slots)
                        kernel_count = saturating_mul(kernel_count, slot.choices->size());
                    const bool sample = kernel_count > opts.kernel_cap;
                    const std::uint64_t trials = sample ? opts.kernel_cap : kernel_count;
                    if (sample) sampled_tuples += trials;
                    Rng rng(opts.seed ^ (0x9e3779b9ULL * (ri + 1)) ^ (0x85ebca6bULL * (pi + 1)));

                    std::vector<double> pasted(sub.path_count(), 0.0);
                    std::vector<std::size_t> choice(slots.size(), 0);
                    for (std::uint64_t k = 0; k < trials; ++k) {
                        if (sample) {
                            for (std::size_t i = 0; i < slots.size(); ++i)
                                choice[i] = static_cast<std::size_t>(
                                    rng.below(slots[i].choices->size()));
                        } else {
                            std::uint64_t kk = k;
                            for (std::size_t i = slots.size(); i-- > 0;) {
                                choice[i] = static_cast<std::size_t>(
                                    kk % slots[i].choices->size());
                                kk /= slots[i].choices->size();
                            }
                        }
                        std::fill(pasted.begin(), pasted.end(), 0.0);
                        for (std::size_t i = 0; i < slots.size(); ++i) {
                            const auto& slot = slots[i];
                            const std::size_t lo =
                                slot.node.rank * sub.paths_per_node(slot.node.depth);
                            const auto& seg = slot.seg[choice[i]];
                            std::copy(seg.begin(), seg.end(), pasted.begin() + lo);
                        }
                        ++report.cases;
                        if (!home.contains(pasted, opts.tol)) {
                            report.pass = false;
                            report.witness = "node " + describe_node(s, base) + ", rule " +
                                             describe_rule(theta) + ", member #" +
                                             std::to_string(pi) + ", kernel #" +
                                             std::to_string(k) +
                                             ": pasted measure leaves the family";
                            return report;
                        }
                    }
                }
            }
        }
    }
    if (sampled_tuples > 0)
        report.notes.push_back("kernel space truncated: " + std::to_string(sampled_tuples) +
                               " sampled tuples beyond the cap of " +
                               std::to_string(opts.kernel_cap));
    return report;
}

CheckReport measurability_note(const Lattice& lat, const Family& family) {
    CheckReport report;
    report.check = "measurability";
    report.notes.push_back(
        "finite path space: every subset is Borel and every graph is measurable, so the "
        "measurability requirement on the family holds vacuously");
    if (const auto* exp = std::get_if<ExplicitFamily>(&family)) {
        for (int depth = 0; depth <= lat.steps(); ++depth) {
            for (std::size_t rank = 0; rank < lat.node_count(depth); ++rank) {
                const auto* list = exp->find(depth, rank);
                if (depth < lat.steps() && (list == nullptr || list->empty())) {
                    report.notes.push_back(
                        "warning: empty scenario set at " + describe_node(depth, rank) +
                        "; admissible only if the node is null under every root member");
                    report.cases++;
                }
            }
        }
    }
    return report;
}

CheckReport rcpd_image_diagnostic(const Lattice& lat, const RectangularFamily& family,
                                  const StoppingRule& tau, const CheckOptions& opts) {
    CheckReport report;
    report.check = "rcpd-image";
    const EnumOptions eopts{opts.max_enum};
    const Family fam{family};
    const auto roots = enumerate_measures(lat, fam, 0, 0, eopts);

    for (const auto& b : tau.boundary()) {
        if (b.depth == lat.steps()) continue;
        const Lattice sub = lat.suffix(b.depth);
        const auto node_probs = node_family_probs(lat, fam, b.depth, b.rank, eopts);

        std::unordered_set<std::string> image;
        std::vector<std::vector<double>> image_probs;
        for (const auto& p : roots) {
            if (p.node_prob(lat, b.depth, b.rank) == 0.0) continue;
            auto probs = rcpd_shift_node(lat, p, b.depth, b.rank).path_probs(sub);
            if (image.insert(byte_key(probs)).second) image_probs.push_back(std::move(probs));
        }
        if (image.empty()) continue;  // unreachable node under every member

        for (const auto& probs : image_probs) {
            ++report.cases;
            if (!node_probs.contains(probs, opts.tol)) {
                report.pass = false;
                report.witness = "a conditional at " + describe_node(b.depth, b.rank) +
                                 " is outside the family there";
                return report;
            }
        }
        for (const auto& probs : node_probs.probs) {
            ++report.cases;
            NodeFamilyProbs img;
            img.probs = image_probs;
            img.exact = image;
            if (!img.contains(probs, opts.tol)) {
                report.pass = false;
                report.witness = "the family member at " + describe_node(b.depth, b.rank) +
                                 " is not a conditional of any root member";
                return report;
            }
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// fixtures

namespace {

Lattice two_step_walk() { return Lattice::homogeneous(2, 1.0, {-1.0, 1.0}); }

TreeMeasure one_step_law(const Lattice& sub, double down, double up) {
    return TreeMeasure(sub, {{down, up}});
}

}  // namespace

ViolationFixture invariance_violating_family() {
    ViolationFixture fx{two_step_walk(), {}, ""};
    const Lattice& lat = fx.lattice;
    const Lattice sub = lat.suffix(1);
    fx.family.set(lat, 0, 0, {TreeMeasure::uniform(lat)});
    // depth-1 sets hold point masses only; the uniform conditional is excluded
    fx.family.set(lat, 1, 0, {one_step_law(sub, 0.0, 1.0)});
    fx.family.set(lat, 1, 1, {one_step_law(sub, 0.0, 1.0)});
    fx.description =
        "root carries the uniform two-step walk but the depth-1 sets only allow the "
        "up point mass, so the uniform conditional is not available after one step";
    return fx;
}

ViolationFixture pasting_violating_family() {
    ViolationFixture fx{two_step_walk(), {}, ""};
    const Lattice& lat = fx.lattice;
    const Lattice sub = lat.suffix(1);
    fx.family.set(lat, 0, 0, {TreeMeasure::uniform(lat)});
    const std::vector<TreeMeasure> depth1 = {
        one_step_law(sub, 0.5, 0.5),  // the uniform conditional, keeps invariance intact
        one_step_law(sub, 0.0, 1.0),
        one_step_law(sub, 1.0, 0.0),
    };
    fx.family.set(lat, 1, 0, depth1);
    fx.family.set(lat, 1, 1, depth1);
    fx.description =
        "conditionals of the uniform walk stay in the family, but pasting the point-mass "
        "kernels after step 1 produces measures the root set does not contain";
    return fx;
}

}  // namespace treexp
