#include "treexp/engine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace treexp {

namespace {

// E of the payoff spliced at node (depth, rank), under the transitions
// returned by trans(u, srank) on the suffix tree. Probability-zero branches
// are pruned, so off-support infinities never contribute.
template <class TransAt>
void spliced_walk(const Lattice& lat, int depth, std::size_t base_rank, const RandomVariable& xi,
                  TransAt&& trans, int u, std::size_t srank, double prob, detail::PosNeg& acc) {
    if (depth + u == lat.steps()) {
        acc.add(prob, xi[base_rank + srank]);
        return;
    }
    const auto& t = trans(u, srank);
    const int b = lat.branching(depth + u);
    for (int i = 0; i < b; ++i) {
        const double q = prob * t[static_cast<std::size_t>(i)];
        if (q > 0.0)
            spliced_walk(lat, depth, base_rank, xi, trans, u + 1,
                         srank * static_cast<std::size_t>(b) + static_cast<std::size_t>(i), q, acc);
    }
}

template <class TransAt>
XReal spliced_expectation(const Lattice& lat, int depth, std::size_t rank,
                          const RandomVariable& xi, TransAt&& trans) {
    detail::PosNeg acc;
    spliced_walk(lat, depth, rank * lat.paths_per_node(depth), xi, trans, 0, 0, 1.0, acc);
    return acc.value();
}

struct NodeOracle {
    XReal value = XReal::neg_inf();  // sup over an empty family
    std::uint64_t argmax = 0;
    std::uint64_t count = 0;
};

NodeOracle oracle_at_node(const Lattice& lat, const Family& family, int depth, std::size_t rank,
                          const RandomVariable& xi, const EnumOptions& opts,
                          bool parallel = true) {
    NodeOracle out;
    if (depth == lat.steps()) {
        out.value = xi[rank];
        out.count = 1;
        return out;
    }
    if (const auto* rect = std::get_if<RectangularFamily>(&family)) {
        const std::uint64_t n = rect->selection_count(lat, depth, rank);
        if (n > opts.max_enum)
            throw SizeLimit("family enumeration of size " + std::to_string(n) +
                                " exceeds the cap",
                            static_cast<std::size_t>(n), opts.max_enum);
        out.count = n;
        // chunked scan over the selection odometer; per-chunk winners merge
        // front to back with strict improvement, reproducing the serial
        // first-wins argmax bit for bit
        const std::uint64_t chunks = parallel && n >= 512 ? 64 : 1;
        std::vector<XReal> best(chunks, XReal::neg_inf());
        std::vector<std::uint64_t> arg(chunks, 0);
#pragma omp parallel for schedule(dynamic) if (chunks > 1)
        for (std::uint64_t c = 0; c < chunks; ++c) {
            const std::uint64_t lo = n * c / chunks;
            const std::uint64_t hi = n * (c + 1) / chunks;
            auto sel = rect->selections(lat, depth, rank);
            sel.seek(lo);
            for (std::uint64_t k = lo; k < hi; ++k, sel.advance()) {
                const XReal e = spliced_expectation(
                    lat, depth, rank, xi,
                    [&](int u, std::size_t srank) -> const std::vector<double>& {
                        return sel.law(u, srank);
                    });
                if (k == lo || e > best[c]) {
                    best[c] = e;
                    arg[c] = k;
                }
            }
        }
        out.value = best[0];
        out.argmax = arg[0];
        for (std::uint64_t c = 1; c < chunks; ++c) {
            if (best[c] > out.value) {
                out.value = best[c];
                out.argmax = arg[c];
            }
        }
        return out;
    }
    const auto* list = std::get<ExplicitFamily>(family).find(depth, rank);
    if (list == nullptr) return out;
    out.count = list->size();
    const Lattice sub = lat.suffix(depth);
    for (std::uint64_t k = 0; k < list->size(); ++k) {
        const TreeMeasure& m = (*list)[static_cast<std::size_t>(k)];
        const XReal e =
            spliced_expectation(lat, depth, rank, xi,
                                [&](int u, std::size_t srank) -> const std::vector<double>& {
                                    return m.at(sub, u, srank);
                                });
        if (k == 0 || e > out.value) {
            out.value = e;
            out.argmax = k;
        }
    }
    return out;
}

XReal one_step_value(const std::vector<double>& law, const XReal* child, int b) {
    detail::PosNeg acc;
    for (int i = 0; i < b; ++i) {
        const double p = law[static_cast<std::size_t>(i)];
        if (p > 0.0) acc.add(p, child[i]);
    }
    return acc.value();
}

}  // namespace

XReal oracle_value_at_node(const Lattice& lat, const Family& family, int depth, std::size_t rank,
                           const RandomVariable& xi, const EnumOptions& opts) {
    return oracle_at_node(lat, family, depth, rank, xi, opts).value;
}

XReal sublinear_expectation_oracle(const Lattice& lat, const Family& family,
                                   const StoppingRule& tau, const RandomVariable& xi,
                                   const PathId& omega, const EnumOptions& opts) {
    const std::size_t r = lat.path_rank(omega);
    const int t = tau.at(r);
    return oracle_value_at_node(lat, family, t, lat.prefix_rank(r, t), xi, opts);
}

std::vector<XReal> oracle_boundary_values(const Lattice& lat, const Family& family,
                                          const StoppingRule& tau, const RandomVariable& xi,
                                          const EnumOptions& opts) {
    const auto& boundary = tau.boundary();
    std::vector<XReal> out(boundary.size());
    std::exception_ptr error;
    // a single-node boundary stays inactive here so the within-node
    // enumeration below can fork instead
#pragma omp parallel for schedule(dynamic) if (boundary.size() > 1)
    for (std::size_t i = 0; i < boundary.size(); ++i) {
        try {
            out[i] = oracle_value_at_node(lat, family, boundary[i].depth, boundary[i].rank, xi,
                                          opts);
        } catch (...) {
#pragma omp critical
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);
    return out;
}

RandomVariable oracle_rv(const Lattice& lat, const Family& family, const StoppingRule& tau,
                         const RandomVariable& xi, const EnumOptions& opts) {
    const auto values = oracle_boundary_values(lat, family, tau, xi, opts);
    std::vector<XReal> by_path(lat.path_count());
    for (std::size_t i = 0; i < tau.boundary().size(); ++i) {
        const auto& b = tau.boundary()[i];
        const std::size_t span = lat.paths_per_node(b.depth);
        const std::size_t lo = b.rank * span;
        for (std::size_t r = lo; r < lo + span; ++r) by_path[r] = values[i];
    }
    return RandomVariable(std::move(by_path));
}

std::vector<XReal> dpp_node_values(const Lattice& lat, const RectangularFamily& family,
                                   const RandomVariable& xi) {
    std::vector<XReal> v(lat.total_node_count());
    const std::size_t leaf_off = lat.node_index(lat.steps(), 0);
    const std::size_t paths = lat.path_count();
#pragma omp parallel for schedule(static)
    for (std::size_t r = 0; r < paths; ++r) v[leaf_off + r] = xi[r];

    for (int depth = lat.steps() - 1; depth >= 0; --depth) {
        const std::size_t n = lat.node_count(depth);
        const std::size_t child_off = lat.node_index(depth + 1, 0);
        const std::size_t off = lat.node_index(depth, 0);
        const int b = lat.branching(depth);
#pragma omp parallel for schedule(static)
        for (std::size_t rank = 0; rank < n; ++rank) {
            const XReal* child = v.data() + child_off + rank * static_cast<std::size_t>(b);
            const auto& laws = family.at(lat, depth, rank);
            XReal best = one_step_value(laws[0], child, b);
            for (std::size_t l = 1; l < laws.size(); ++l)
                best = xmax(best, one_step_value(laws[l], child, b));
            v[off + rank] = best;
        }
    }
    return v;
}

RandomVariable sublinear_expectation_dpp(const Lattice& lat, const RectangularFamily& family,
                                         const StoppingRule& tau, const RandomVariable& xi) {
    const auto v = dpp_node_values(lat, family, xi);
    std::vector<XReal> by_path(lat.path_count());
    for (const auto& b : tau.boundary()) {
        const XReal value = v[lat.node_index(b.depth, b.rank)];
        const std::size_t span = lat.paths_per_node(b.depth);
        for (std::size_t r = b.rank * span; r < (b.rank + 1) * span; ++r) by_path[r] = value;
    }
    return RandomVariable(std::move(by_path));
}

namespace reference {

std::vector<XReal> dpp_node_values(const Lattice& lat, const RectangularFamily& family,
                                   const RandomVariable& xi) {
    std::vector<XReal> v(lat.total_node_count());
    for (std::size_t r = 0; r < lat.path_count(); ++r)
        v[lat.node_index(lat.steps(), r)] = xi[r];
    for (int depth = lat.steps() - 1; depth >= 0; --depth) {
        const int b = lat.branching(depth);
        for (std::size_t rank = 0; rank < lat.node_count(depth); ++rank) {
            const XReal* child =
                v.data() + lat.node_index(depth + 1, rank * static_cast<std::size_t>(b));
            const auto& laws = family.at(lat, depth, rank);
            XReal best = one_step_value(laws[0], child, b);
            for (std::size_t l = 1; l < laws.size(); ++l)
                best = xmax(best, one_step_value(laws[l], child, b));
            v[lat.node_index(depth, rank)] = best;
        }
    }
    return v;
}

std::vector<XReal> oracle_boundary_values(const Lattice& lat, const Family& family,
                                          const StoppingRule& tau, const RandomVariable& xi,
                                          const EnumOptions& opts) {
    const auto& boundary = tau.boundary();
    std::vector<XReal> out(boundary.size());
    for (std::size_t i = 0; i < boundary.size(); ++i)
        out[i] = oracle_at_node(lat, family, boundary[i].depth, boundary[i].rank, xi, opts,
                                /*parallel=*/false)
                     .value;
    return out;
}

}  // namespace reference

// ---------------------------------------------------------------------------
// verifiers

TowerReport verify_tower(const Lattice& lat, const Family& family, const StoppingRule& sigma,
                         const StoppingRule& tau, const RandomVariable& xi,
                         const EnumOptions& opts) {
    if (!sigma.leq(tau))
        throw PrecedenceViolation("verify_tower requires sigma <= tau pointwise");

    const RandomVariable inner = oracle_rv(lat, family, tau, xi, opts);
    const auto lhs = oracle_boundary_values(lat, family, sigma, xi, opts);
    const auto rhs = oracle_boundary_values(lat, family, sigma, inner, opts);

    TowerReport report;
    report.one_sided_margin = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < lhs.size(); ++i) {
        const double dev = deviation(lhs[i], rhs[i]);
        report.one_sided_margin = std::max(report.one_sided_margin, signed_gap(lhs[i], rhs[i]));
        if (!report.witness || dev > report.deviation) {
            report.deviation = dev;
            report.witness = sigma.boundary()[i];
            report.lhs_at_witness = lhs[i];
            report.rhs_at_witness = rhs[i];
        }
    }

    if (const auto* rect = std::get_if<RectangularFamily>(&family)) {
        const auto v = dpp_node_values(lat, *rect, xi);
        const RandomVariable inner_dpp = sublinear_expectation_dpp(lat, *rect, tau, xi);
        const auto rhs_dpp = oracle_boundary_values(lat, family, sigma, inner_dpp, opts);
        double dev = 0.0;
        for (std::size_t i = 0; i < sigma.boundary().size(); ++i) {
            const auto& b = sigma.boundary()[i];
            dev = std::max(dev, deviation(v[lat.node_index(b.depth, b.rank)], rhs_dpp[i]));
        }
        report.dpp_deviation = dev;
    }
    return report;
}

EsssupReport verify_esssup(const Lattice& lat, const Family& family, const StoppingRule& tau,
                           const RandomVariable& xi, double tol, const EnumOptions& opts) {
    EsssupReport report;
    const auto members = enumerate_measures(lat, family, 0, 0, opts);
    report.members = members.size();
    const auto& boundary = tau.boundary();
    const auto engine_values = oracle_boundary_values(lat, family, tau, xi, opts);

    // per member: boundary-node probabilities (the restriction that defines
    // the agreement classes) and conditional expectations at its support nodes
    const std::size_t nb = boundary.size();
    std::vector<std::vector<double>> node_probs(members.size(), std::vector<double>(nb));
    std::vector<std::vector<XReal>> cond(members.size(), std::vector<XReal>(nb, XReal(0.0)));
#pragma omp parallel for schedule(dynamic)
    for (std::size_t m = 0; m < members.size(); ++m) {
        const CondExpectation ce =
            conditional_expectation(lat, members[m], xi, tau);
        for (std::size_t i = 0; i < nb; ++i) {
            node_probs[m][i] = members[m].node_prob(lat, boundary[i].depth, boundary[i].rank);
            const std::size_t lo = boundary[i].rank * lat.paths_per_node(boundary[i].depth);
            cond[m][i] = ce.value[lo];
        }
    }

    // group members by their boundary restriction (exact equality of the
    // probability vectors; equal restrictions arise from equal transition
    // choices before the boundary and rounding is identical there)
    std::map<std::vector<double>, std::vector<std::size_t>> classes;
    for (std::size_t m = 0; m < members.size(); ++m) classes[node_probs[m]].push_back(m);

    for (const auto& [probs, cls] : classes) {
        std::vector<XReal> class_max(nb, XReal::neg_inf());
        for (std::size_t m : cls)
            for (std::size_t i = 0; i < nb; ++i)
                if (probs[i] > 0.0) class_max[i] = xmax(class_max[i], cond[m][i]);
        for (std::size_t i = 0; i < nb; ++i) {
            if (probs[i] == 0.0) continue;  // statement holds on support only
            ++report.cases;
            const double dev = deviation(engine_values[i], class_max[i]);
            if (dev > report.worst_deviation) {
                report.worst_deviation = dev;
                if (dev > tol) {
                    report.pass = false;
                    std::ostringstream os;
                    os << "boundary node (" << boundary[i].depth << "," << boundary[i].rank
                       << "), class of " << cls.size() << " member(s): engine "
                       << engine_values[i].v << " vs esssup " << class_max[i].v;
                    report.witness = os.str();
                }
            }
        }
    }
    return report;
}

SamplingReport verify_optional_sampling(const Lattice& lat, const Family& family,
                                        const StoppingRule& tau, const RandomVariable& xi,
                                        const EnumOptions& opts) {
    SamplingReport report;
    const auto at_tau = oracle_boundary_values(lat, family, tau, xi, opts);
    // fixed-time value process, one constant rule per depth on the boundary
    std::map<int, std::vector<XReal>> process;
    for (const auto& b : tau.boundary())
        if (process.find(b.depth) == process.end()) {
            const StoppingRule fixed = StoppingRule::constant(lat, b.depth);
            process[b.depth] =
                reference::oracle_boundary_values(lat, family, fixed, xi, opts);
        }
    for (std::size_t i = 0; i < tau.boundary().size(); ++i) {
        const auto& b = tau.boundary()[i];
        const XReal via_process = process[b.depth][b.rank];
        ++report.cases;
        if (at_tau[i] != via_process) {
            report.pass = false;
            std::ostringstream os;
            os << "node (" << b.depth << "," << b.rank << "): value at the stopping rule "
               << at_tau[i].v << " vs fixed-time process " << via_process.v;
            report.witness = os.str();
            return report;
        }
    }
    return report;
}

SelectorResult optimal_selector(const Lattice& lat, const Family& family, const StoppingRule& tau,
                                const RandomVariable& xi, const EnumOptions& opts) {
    SelectorResult out;
    out.chosen_index.assign(tau.boundary().size(), SIZE_MAX);
    for (std::size_t i = 0; i < tau.boundary().size(); ++i) {
        const auto& b = tau.boundary()[i];
        const NodeOracle node = oracle_at_node(lat, family, b.depth, b.rank, xi, opts);
        if (node.count == 0) {
            out.empty_nodes.push_back(b);  // sup over nothing stays -inf
            continue;
        }
        out.chosen_index[i] = static_cast<std::size_t>(node.argmax);
        if (b.depth == lat.steps()) {
            out.kernel.set(b.depth, b.rank, TreeMeasure(lat.suffix(lat.steps()), {}));
            continue;
        }
        if (const auto* rect = std::get_if<RectangularFamily>(&family)) {
            auto sel = rect->selections(lat, b.depth, b.rank);
            sel.seek(node.argmax);
            out.kernel.set(b.depth, b.rank, sel.measure(lat.suffix(b.depth)));
        } else {
            const auto* list = std::get<ExplicitFamily>(family).find(b.depth, b.rank);
            out.kernel.set(b.depth, b.rank, (*list)[static_cast<std::size_t>(node.argmax)]);
        }
    }
    return out;
}

}  // namespace treexp
