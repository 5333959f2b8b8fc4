#include "treexp/measure.hpp"

#include <cmath>

namespace treexp {

TreeMeasure::TreeMeasure(const Lattice& lat, std::vector<std::vector<double>> transitions)
    : trans_(std::move(transitions)) {
    if (trans_.size() != lat.nonterminal_count())
        throw InvalidSpec("transition table has wrong size");
    for (int depth = 0; depth < lat.steps(); ++depth) {
        for (std::size_t rank = 0; rank < lat.node_count(depth); ++rank) {
            const auto& t = trans_[lat.nonterminal_index(depth, rank)];
            if (t.size() != static_cast<std::size_t>(lat.branching(depth)))
                throw InvalidSpec("transition vector has wrong arity at depth " +
                                  std::to_string(depth));
            double sum = 0.0;
            for (double x : t) {
                if (!(x >= 0.0)) throw InvalidSpec("negative transition probability");
                sum += x;
            }
            if (std::fabs(sum - 1.0) > sum_tolerance)
                throw InvalidSpec("transition vector does not sum to 1");
        }
    }
}

TreeMeasure TreeMeasure::iid(const Lattice& lat, const std::vector<double>& law) {
    if (!lat.step_homogeneous())
        throw InvalidSpec("iid law requires a step-homogeneous lattice");
    std::vector<std::vector<double>> t(lat.nonterminal_count(), law);
    return TreeMeasure(lat, std::move(t));
}

TreeMeasure TreeMeasure::uniform(const Lattice& lat) {
    std::vector<std::vector<double>> t(lat.nonterminal_count());
    for (int depth = 0; depth < lat.steps(); ++depth) {
        const std::vector<double> law(static_cast<std::size_t>(lat.branching(depth)),
                                      1.0 / lat.branching(depth));
        for (std::size_t rank = 0; rank < lat.node_count(depth); ++rank)
            t[lat.nonterminal_index(depth, rank)] = law;
    }
    return TreeMeasure(lat, std::move(t));
}

double TreeMeasure::path_prob(const Lattice& lat, std::size_t path_rank) const {
    double p = 1.0;
    std::size_t rank = 0;
    for (int depth = 0; depth < lat.steps(); ++depth) {
        const int letter = static_cast<int>((path_rank / lat.paths_per_node(depth + 1)) %
                                            static_cast<std::size_t>(lat.branching(depth)));
        p *= trans_[lat.nonterminal_index(depth, rank)][static_cast<std::size_t>(letter)];
        if (p == 0.0) return 0.0;
        rank = lat.child_rank(depth, rank, letter);
    }
    return p;
}

double TreeMeasure::node_prob(const Lattice& lat, int depth, std::size_t rank) const {
    double p = 1.0;
    // letters of the node, most significant first
    std::size_t r = rank, scale = 1;
    for (int k = 0; k < depth; ++k) scale *= static_cast<std::size_t>(lat.branching(k));
    std::size_t cur = 0;
    for (int k = 0; k < depth; ++k) {
        scale /= static_cast<std::size_t>(lat.branching(k));
        const int letter = static_cast<int>(r / scale);
        r %= scale;
        p *= trans_[lat.nonterminal_index(k, cur)][static_cast<std::size_t>(letter)];
        if (p == 0.0) return 0.0;
        cur = lat.child_rank(k, cur, letter);
    }
    return p;
}

std::vector<double> TreeMeasure::path_probs(const Lattice& lat) const {
    std::vector<double> out(lat.path_count(), 0.0);
    // depth-first walk, pruning zero-probability subtrees
    struct Frame {
        int depth;
        std::size_t rank;
        double prob;
    };
    std::vector<Frame> stack{{0, 0, 1.0}};
    while (!stack.empty()) {
        const Frame f = stack.back();
        stack.pop_back();
        if (f.depth == lat.steps()) {
            out[f.rank] = f.prob;
            continue;
        }
        const auto& t = trans_[lat.nonterminal_index(f.depth, f.rank)];
        for (int i = lat.branching(f.depth) - 1; i >= 0; --i) {
            const double q = f.prob * t[static_cast<std::size_t>(i)];
            if (q > 0.0) stack.push_back({f.depth + 1, lat.child_rank(f.depth, f.rank, i), q});
        }
    }
    return out;
}

double measure_distance(const Lattice& lat, const TreeMeasure& a, const TreeMeasure& b) {
    const auto pa = a.path_probs(lat);
    const auto pb = b.path_probs(lat);
    double d = 0.0;
    for (std::size_t r = 0; r < pa.size(); ++r) d = std::max(d, std::fabs(pa[r] - pb[r]));
    return d;
}

namespace {

// E[xi restricted to the subtree of (depth, rank)], transitions taken from
// the conditional law; prob-0 branches are never evaluated.
void accumulate_subtree(const Lattice& lat, const TreeMeasure& p, const RandomVariable& xi,
                        int depth, std::size_t rank, double prob, detail::PosNeg& acc) {
    if (depth == lat.steps()) {
        acc.add(prob, xi[rank]);
        return;
    }
    const auto& t = p.at(lat, depth, rank);
    for (int i = 0; i < lat.branching(depth); ++i) {
        const double q = prob * t[static_cast<std::size_t>(i)];
        if (q > 0.0) accumulate_subtree(lat, p, xi, depth + 1, lat.child_rank(depth, rank, i), q, acc);
    }
}

}  // namespace

XReal expectation(const Lattice& lat, const TreeMeasure& p, const RandomVariable& xi) {
    if (xi.size() != lat.path_count()) throw InvalidSpec("random variable has wrong length");
    detail::PosNeg acc;
    accumulate_subtree(lat, p, xi, 0, 0, 1.0, acc);
    return acc.value();
}

CondExpectation conditional_expectation(const Lattice& lat, const TreeMeasure& p,
                                        const RandomVariable& xi, const StoppingRule& tau) {
    std::vector<XReal> out(lat.path_count());
    std::vector<unsigned char> null_node(lat.path_count(), 0);
    bool any_null = false;
    for (const auto& b : tau.boundary()) {
        const std::size_t span = lat.paths_per_node(b.depth);
        const std::size_t lo = b.rank * span;
        if (p.node_prob(lat, b.depth, b.rank) == 0.0) {
            any_null = true;
            for (std::size_t r = lo; r < lo + span; ++r) {
                out[r] = XReal::neg_inf();
                null_node[r] = 1;
            }
            continue;
        }
        detail::PosNeg acc;
        accumulate_subtree(lat, p, xi, b.depth, b.rank, 1.0, acc);
        const XReal v = acc.value();
        for (std::size_t r = lo; r < lo + span; ++r) out[r] = v;
    }
    return {RandomVariable(std::move(out)), std::move(null_node), any_null};
}

TreeMeasure rcpd_shift_node(const Lattice& lat, const TreeMeasure& p, int depth,
                            std::size_t rank) {
    if (p.node_prob(lat, depth, rank) == 0.0)
        throw NullPrefix("conditioning node has probability zero");
    const Lattice sub = lat.suffix(depth);
    std::vector<std::vector<double>> trans(sub.nonterminal_count());
    for (int u = 0; u < sub.steps(); ++u) {
        const std::size_t base = rank * sub.node_count(u);
        for (std::size_t s = 0; s < sub.node_count(u); ++s)
            trans[sub.nonterminal_index(u, s)] = p.at(lat, depth + u, base + s);
    }
    return TreeMeasure(sub, std::move(trans));
}

TreeMeasure rcpd_shift(const Lattice& lat, const TreeMeasure& p, const StoppingRule& tau,
                       const PathId& omega) {
    const std::size_t r = lat.path_rank(omega);
    const int t = tau.at(r);
    return rcpd_shift_node(lat, p, t, lat.prefix_rank(r, t));
}

void Kernel::set(int depth, std::size_t rank, TreeMeasure m) {
    entries_.insert_or_assign({depth, rank}, std::move(m));
}

const TreeMeasure* Kernel::find(int depth, std::size_t rank) const {
    auto it = entries_.find({depth, rank});
    return it == entries_.end() ? nullptr : &it->second;
}

Kernel Kernel::conditionals(const Lattice& lat, const TreeMeasure& p, const StoppingRule& tau) {
    Kernel k;
    for (const auto& b : tau.boundary()) {
        if (p.node_prob(lat, b.depth, b.rank) == 0.0) continue;
        k.set(b.depth, b.rank, rcpd_shift_node(lat, p, b.depth, b.rank));
    }
    return k;
}

TreeMeasure paste(const Lattice& lat, const TreeMeasure& p, const StoppingRule& theta,
                  const Kernel& nu) {
    std::vector<std::vector<double>> trans = p.transitions();
    for (const auto& b : theta.boundary()) {
        const TreeMeasure* m = nu.find(b.depth, b.rank);
        if (m == nullptr) {
            if (p.node_prob(lat, b.depth, b.rank) > 0.0)
                throw MissingKernel("no kernel at a positive-probability boundary node");
            continue;
        }
        const Lattice sub = lat.suffix(b.depth);
        for (int u = 0; u < sub.steps(); ++u) {
            const std::size_t base = b.rank * sub.node_count(u);
            for (std::size_t s = 0; s < sub.node_count(u); ++s)
                trans[lat.nonterminal_index(b.depth + u, base + s)] = m->at(sub, u, s);
        }
    }
    return TreeMeasure(lat, std::move(trans));
}

MartingaleResult is_martingale_measure(const Lattice& lat, const TreeMeasure& p, double tol) {
    for (int depth = 0; depth < lat.steps(); ++depth) {
        const auto& alphabet = lat.alphabet(depth);
        for (std::size_t rank = 0; rank < lat.node_count(depth); ++rank) {
            if (p.node_prob(lat, depth, rank) == 0.0) continue;
            const auto& t = p.at(lat, depth, rank);
            double drift = 0.0;
            for (std::size_t i = 0; i < alphabet.size(); ++i) drift += t[i] * alphabet[i];
            if (std::fabs(drift) > tol) return {false, depth, rank, drift};
        }
    }
    return {};
}

RealizedQV realized_qv(const Lattice& lat, const PathId& p) {
    const int K = lat.steps();
    RealizedQV out;
    out.ahat.resize(static_cast<std::size_t>(K));
    out.qv.resize(static_cast<std::size_t>(K) + 1, 0.0);
    double running = 0.0;
    for (int k = 0; k < K; ++k) {
        const double d = lat.increment(k, p[static_cast<std::size_t>(k)]);
        out.ahat[static_cast<std::size_t>(k)] = d * d / lat.dt();
        running += out.ahat[static_cast<std::size_t>(k)];
        out.qv[static_cast<std::size_t>(k) + 1] = lat.dt() * running;
    }
    return out;
}

std::vector<double> windowed_density(const RealizedQV& rqv, int window) {
    if (window < 1) throw InvalidSpec("window must be >= 1");
    const std::size_t K = rqv.ahat.size();
    std::vector<double> out(K, 0.0);
    for (std::size_t k = 0; k < K; ++k) {
        const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(window), k + 1);
        double sum = 0.0;
        for (std::size_t j = k + 1 - w; j <= k; ++j) sum += rqv.ahat[j];
        out[k] = sum / static_cast<double>(w);
    }
    return out;
}

}  // namespace treexp
