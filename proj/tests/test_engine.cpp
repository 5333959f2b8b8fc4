#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support/random_models.hpp"
#include "treexp/engine.hpp"

using namespace treexp;

namespace {

Lattice walk(int K) { return Lattice::homogeneous(K, 1.0, {-1.0, 1.0}); }

RandomVariable squared_terminal(const Lattice& lat) {
    return RandomVariable::from_function(lat, [&](const PathId& p) -> XReal {
        const double b = lat.value_at(p, lat.steps());
        return b * b;
    });
}

// one-step volatility choice: +-1 with probability 1/2 or +-2 with 1/2, on
// the union alphabet {-2,-1,1,2}
Lattice vol_walk(int K) { return Lattice::homogeneous(K, 1.0, {-2.0, -1.0, 1.0, 2.0}); }

RectangularFamily vol_family(const Lattice& lat) {
    std::vector<RectangularFamily::LawSet> sets(lat.nonterminal_count());
    for (auto& set : sets)
        set = {{0.0, 0.5, 0.5, 0.0}, {0.5, 0.0, 0.0, 0.5}};
    return RectangularFamily(lat, std::move(sets));
}

}  // namespace

TEST_CASE("oracle picks the worst-case one-step law") {
    const Lattice lat = vol_walk(1);
    const Family fam{vol_family(lat)};
    const RandomVariable bsq = squared_terminal(lat);

    CHECK(oracle_value_at_node(lat, fam, 0, 0, bsq) == XReal(4.0));
    CHECK(sublinear_expectation_oracle(lat, fam, StoppingRule::constant(lat, 0), bsq,
                                       PathId{2}) == XReal(4.0));
    CHECK(sublinear_expectation_oracle(lat, fam, StoppingRule::constant(lat, 1), bsq,
                                       PathId{3}) == XReal(4.0));  // at the leaf: the payoff
    const RandomVariable neg = RandomVariable::from_function(lat, [&](const PathId& p) -> XReal {
        const double b = lat.value_at(p, 1);
        return -b * b;
    });
    CHECK(oracle_value_at_node(lat, fam, 0, 0, neg) == XReal(-1.0));
}

TEST_CASE("singleton family reduces to the classical conditional expectation") {
    Rng rng(3);
    const Lattice lat = walk(3);
    const TreeMeasure p = testing::random_measure(rng, lat);
    const Family fam{RectangularFamily::singleton(lat, p)};
    const RandomVariable xi = testing::payoff_from_pool(rng, lat);
    for (const auto& tau : sample_stopping_rules(lat, 6, 1)) {
        const auto ce = conditional_expectation(lat, p, xi, tau);
        const RandomVariable ev = oracle_rv(lat, fam, tau, xi);
        for (std::size_t r = 0; r < lat.path_count(); ++r) {
            if (p.path_prob(lat, r) == 0.0) continue;
            CHECK(deviation(ev[r], ce.value[r]) <= 1e-12);
        }
    }
}

TEST_CASE("empty explicit sets give sup over nothing") {
    const Lattice lat = walk(1);
    ExplicitFamily fam;  // no entry anywhere, even at the root
    CHECK(oracle_value_at_node(lat, Family{fam}, 0, 0, squared_terminal(lat)) ==
          XReal::neg_inf());
}

TEST_CASE("backward induction equals the enumeration oracle everywhere") {
    Rng rng(2024);
    for (int trial = 0; trial < 20; ++trial) {
        const Lattice lat = testing::random_lattice(rng, 3, 2);
        const RectangularFamily fam = testing::random_rect_family(rng, lat, 3);
        const Family vfam{fam};
        const RandomVariable xi = trial % 4 == 0 ? testing::infinite_payoff(rng, lat)
                                                 : testing::payoff_from_pool(rng, lat);
        const auto v = dpp_node_values(lat, fam, xi);
        for (int depth = 0; depth <= lat.steps(); ++depth)
            for (std::size_t rank = 0; rank < lat.node_count(depth); ++rank)
                CHECK(deviation(v[lat.node_index(depth, rank)],
                                oracle_value_at_node(lat, vfam, depth, rank, xi)) <= 1e-10);
    }
}

TEST_CASE("worst-case variance accumulates across steps") {
    const Lattice lat = vol_walk(2);
    const Family fam{vol_family(lat)};
    const RandomVariable bsq = squared_terminal(lat);
    // independent check: enumerate all selections and all 16 paths directly
    const auto members = enumerate_measures(lat, fam, 0, 0);
    XReal best = XReal::neg_inf();
    for (const auto& m : members) best = xmax(best, expectation(lat, m, bsq));
    CHECK(best == XReal(8.0));  // maximal variance in both steps
    CHECK(dpp_node_values(lat, vol_family(lat), bsq)[lat.node_index(0, 0)] == best);
}

TEST_CASE("value at a leaf is the payoff") {
    Rng rng(7);
    const Lattice lat = walk(2);
    const RectangularFamily fam = testing::random_rect_family(rng, lat, 2);
    const RandomVariable xi = testing::payoff_from_pool(rng, lat);
    const auto v = dpp_node_values(lat, fam, xi);
    for (std::size_t r = 0; r < lat.path_count(); ++r)
        CHECK(v[lat.node_index(2, r)] == xi[r]);
}

TEST_CASE("wider alphabets: induction, oracle and identities agree") {
    Rng rng(606);
    const Lattice lat(0.5, {{-1.0, 0.0, 1.0}, {-2.0, 0.5, 2.0}});
    std::vector<RectangularFamily::LawSet> sets(lat.nonterminal_count());
    for (auto& set : sets) {
        set.push_back(testing::random_law(rng, 3));
        set.push_back(testing::random_law(rng, 3));
    }
    const RectangularFamily fam(lat, std::move(sets));
    const Family vfam{fam};
    const RandomVariable xi = testing::payoff_from_pool(rng, lat);

    const auto v = dpp_node_values(lat, fam, xi);
    for (int depth = 0; depth <= lat.steps(); ++depth)
        for (std::size_t rank = 0; rank < lat.node_count(depth); ++rank)
            CHECK(deviation(v[lat.node_index(depth, rank)],
                            oracle_value_at_node(lat, vfam, depth, rank, xi)) <= 1e-10);

    for (const auto& tau : all_stopping_rules(lat)) {
        const StoppingRule sigma = testing::random_leq_rule(rng, lat, tau);
        CHECK(verify_tower(lat, vfam, sigma, tau, xi).deviation <= 1e-10);
        CHECK(verify_esssup(lat, vfam, tau, xi).pass);
    }
    CHECK(check_invariance(lat, vfam).pass);
    CHECK(check_pasting(lat, vfam).pass);
}

TEST_CASE("the stage value is determined by the stopping node") {
    Rng rng(1234);
    for (int trial = 0; trial < 6; ++trial) {
        const Lattice lat = testing::random_lattice(rng, 3, 2);
        const RectangularFamily fam = testing::random_rect_family(rng, lat, 3);
        const RandomVariable xi = testing::payoff_from_pool(rng, lat);
        const StoppingRule tau = random_stopping_rule(lat, rng);
        CHECK(is_stopped_measurable(lat, sublinear_expectation_dpp(lat, fam, tau, xi), tau));
        CHECK(is_stopped_measurable(lat, oracle_rv(lat, Family{fam}, tau, xi), tau));
    }
}

TEST_CASE("engine is monotone, positively homogeneous and subadditive") {
    Rng rng(100);
    for (int trial = 0; trial < 8; ++trial) {
        const Lattice lat = testing::random_lattice(rng, 3, 2);
        const RectangularFamily fam = testing::random_rect_family(rng, lat, 3);
        const RandomVariable xi = testing::payoff_from_pool(rng, lat);
        const RandomVariable eta = testing::payoff_from_pool(rng, lat);
        const double lambda = 0.25 + 2.0 * rng.u01();

        std::vector<XReal> sum(lat.path_count()), scaled(lat.path_count()),
            bigger(lat.path_count());
        for (std::size_t r = 0; r < lat.path_count(); ++r) {
            sum[r] = xadd(xi[r], eta[r]);
            scaled[r] = xmul(lambda, xi[r]);
            bigger[r] = xadd(xi[r], xabs(eta[r]));  // >= xi pointwise
        }
        const auto vx = dpp_node_values(lat, fam, xi);
        const auto ve = dpp_node_values(lat, fam, eta);
        const auto vs = dpp_node_values(lat, fam, RandomVariable(sum));
        const auto vl = dpp_node_values(lat, fam, RandomVariable(scaled));
        const auto vb = dpp_node_values(lat, fam, RandomVariable(bigger));
        for (std::size_t n = 0; n < vx.size(); ++n) {
            CHECK(vs[n].v <= xadd(vx[n], ve[n]).v + 1e-10);       // subadditive
            CHECK(deviation(vl[n], xmul(lambda, vx[n])) <= 1e-10);  // homogeneous
            CHECK(vb[n].v >= vx[n].v - 1e-12);                     // monotone
        }
    }
}

TEST_CASE("indicator localization at the stopping boundary") {
    Rng rng(55);
    const Lattice lat = walk(3);
    const RectangularFamily fam = testing::random_rect_family(rng, lat, 2);
    const RandomVariable xi = testing::payoff_from_pool(rng, lat);
    for (const auto& tau : sample_stopping_rules(lat, 8, 9)) {
        // A = union of some boundary cylinders, so its indicator is known at tau
        std::vector<XReal> ind(lat.path_count());
        std::size_t keep = 0;
        for (const auto& b : tau.boundary()) {
            const bool in = (keep++ % 2) == 0;
            const std::size_t span = lat.paths_per_node(b.depth);
            for (std::size_t r = b.rank * span; r < (b.rank + 1) * span; ++r)
                ind[r] = XReal(in ? 1.0 : 0.0);
        }
        std::vector<XReal> localized(lat.path_count());
        for (std::size_t r = 0; r < lat.path_count(); ++r)
            localized[r] = xmul(ind[r], xi[r]);

        const RandomVariable left =
            oracle_rv(lat, Family{fam}, tau, RandomVariable(localized));
        const RandomVariable right = oracle_rv(lat, Family{fam}, tau, xi);
        for (std::size_t r = 0; r < lat.path_count(); ++r)
            CHECK(deviation(left[r], xmul(ind[r], right[r])) <= 1e-10);
    }
}

TEST_CASE("payoffs agreeing on every charged path give the same value") {
    // alphabet letters carrying no law mass anywhere are polar: payoff values
    // there are invisible at every reachable node
    const Lattice lat = vol_walk(2);
    std::vector<RectangularFamily::LawSet> sets(lat.nonterminal_count());
    for (auto& set : sets) set = {{0.0, 0.5, 0.5, 0.0}, {0.0, 0.25, 0.75, 0.0}};
    const RectangularFamily fam(lat, std::move(sets));  // +-2 letters never charged

    const auto touches_outer = [&](const PathId& p) {
        for (int k = 0; k < lat.steps(); ++k)
            if (std::abs(lat.increment(k, p[static_cast<std::size_t>(k)])) == 2.0) return true;
        return false;
    };
    const RandomVariable xi = squared_terminal(lat);
    std::vector<XReal> tweaked = xi.values();
    for (std::size_t r = 0; r < lat.path_count(); ++r)
        if (touches_outer(lat.path_at(r))) tweaked[r] = XReal::pos_inf();

    const auto a = dpp_node_values(lat, fam, xi);
    const auto b = dpp_node_values(lat, fam, RandomVariable(tweaked));
    for (int depth = 0; depth <= lat.steps(); ++depth)
        for (std::size_t rank = 0; rank < lat.node_count(depth); ++rank) {
            if (touches_outer(lat.splice(lat.node_at(depth, rank),
                                         PathId(static_cast<std::size_t>(lat.steps() - depth),
                                                1))))
                continue;  // the node itself is unreachable
            CHECK(a[lat.node_index(depth, rank)] == b[lat.node_index(depth, rank)]);
        }
}

TEST_CASE("two-stage evaluation matches the direct one for rectangular families") {
    Rng rng(321);
    for (int trial = 0; trial < 10; ++trial) {
        const Lattice lat = testing::random_lattice(rng, 3, 2);
        const Family fam{testing::random_rect_family(rng, lat, 3)};
        const RandomVariable xi = testing::payoff_from_pool(rng, lat);
        const StoppingRule tau = random_stopping_rule(lat, rng);
        const StoppingRule sigma = testing::random_leq_rule(rng, lat, tau);
        const TowerReport tr = verify_tower(lat, fam, sigma, tau, xi);
        CHECK(tr.deviation <= 1e-10);
        REQUIRE(tr.dpp_deviation.has_value());
        CHECK(*tr.dpp_deviation <= 1e-10);
        CHECK(tr.one_sided_margin <= 1e-10);
    }
}

TEST_CASE("equal rules collapse the two-stage identity exactly") {
    Rng rng(77);
    const Lattice lat = walk(2);
    const Family fam{testing::random_rect_family(rng, lat, 2)};
    const RandomVariable xi = testing::payoff_from_pool(rng, lat);
    const StoppingRule tau = random_stopping_rule(lat, rng);
    const TowerReport tr = verify_tower(lat, fam, tau, tau, xi);
    CHECK(tr.deviation == 0.0);
}

TEST_CASE("rule order is enforced") {
    const Lattice lat = walk(2);
    const Family fam{RectangularFamily::singleton(lat, TreeMeasure::uniform(lat))};
    CHECK_THROWS_AS(verify_tower(lat, fam, StoppingRule::constant(lat, 2),
                                 StoppingRule::constant(lat, 1), squared_terminal(lat)),
                    PrecedenceViolation);
}

TEST_CASE("the pasting violation breaks the two-stage identity one-sidedly") {
    const ViolationFixture fx = pasting_violating_family();
    const Lattice& lat = fx.lattice;
    const Family fam{fx.family};
    const RandomVariable b2 = RandomVariable::from_function(
        lat, [&](const PathId& p) { return XReal(lat.value_at(p, 2)); });
    const TowerReport tr = verify_tower(lat, fam, StoppingRule::constant(lat, 0),
                                        StoppingRule::constant(lat, 1), b2);
    CHECK(tr.deviation > 1e-6);
    // the inequality that needs only invariance still holds
    CHECK(tr.one_sided_margin <= 1e-12);
    CHECK(tr.lhs_at_witness == XReal(0.0));
    CHECK(tr.rhs_at_witness == XReal(1.0));
}

TEST_CASE("essential-supremum representation") {
    SUBCASE("singleton family: both sides are the classical conditional") {
        const Lattice lat = walk(2);
        const Family fam{RectangularFamily::singleton(lat, TreeMeasure::uniform(lat))};
        const auto report =
            verify_esssup(lat, fam, StoppingRule::constant(lat, 1), squared_terminal(lat));
        CHECK(report.pass);
        CHECK(report.members == 1);
    }
    SUBCASE("volatility choices at the first step") {
        const Lattice lat = vol_walk(2);
        const Family fam{vol_family(lat)};
        const auto report =
            verify_esssup(lat, fam, StoppingRule::constant(lat, 1), squared_terminal(lat));
        CHECK(report.pass);
        CHECK(report.worst_deviation <= 1e-10);
    }
    SUBCASE("at time zero it reduces to the root maximum") {
        const Lattice lat = vol_walk(1);
        const Family fam{vol_family(lat)};
        const auto report =
            verify_esssup(lat, fam, StoppingRule::constant(lat, 0), squared_terminal(lat));
        CHECK(report.pass);
    }
    SUBCASE("random rectangular families pass at random rules") {
        Rng rng(888);
        for (int trial = 0; trial < 8; ++trial) {
            const Lattice lat = testing::random_lattice(rng, 3, 2);
            const Family fam{testing::random_rect_family(rng, lat, 3)};
            const RandomVariable xi = testing::payoff_from_pool(rng, lat);
            const auto report = verify_esssup(lat, fam, random_stopping_rule(lat, rng), xi);
            CHECK(report.pass);
        }
    }
}

TEST_CASE("sampling the fixed-time process at the rule changes nothing") {
    Rng rng(4242);
    for (int trial = 0; trial < 8; ++trial) {
        const Lattice lat = testing::random_lattice(rng, 3, 2);
        const Family fam{testing::random_rect_family(rng, lat, 3)};
        const RandomVariable xi = trial % 3 == 0 ? testing::infinite_payoff(rng, lat)
                                                 : testing::payoff_from_pool(rng, lat);
        const auto report =
            verify_optional_sampling(lat, fam, random_stopping_rule(lat, rng), xi);
        CHECK(report.pass);
    }
    const Lattice lat = walk(3);
    const Family fam{vol_family(vol_walk(3))};
    // hitting rule on the matching lattice
    const Lattice vlat = vol_walk(3);
    const Family vfam{vol_family(vlat)};
    const auto report = verify_optional_sampling(
        vlat, vfam, StoppingRule::hitting(vlat, 2.0), squared_terminal(vlat));
    CHECK(report.pass);
}

TEST_CASE("argmax selector") {
    SUBCASE("singleton families have a unique selection") {
        const Lattice lat = walk(2);
        const TreeMeasure p = TreeMeasure::uniform(lat);
        const Family fam{RectangularFamily::singleton(lat, p)};
        const auto sel = optimal_selector(lat, fam, StoppingRule::constant(lat, 1),
                                          squared_terminal(lat));
        CHECK(sel.empty_nodes.empty());
        CHECK(sel.chosen_index == std::vector<std::size_t>{0, 0});
    }
    SUBCASE("the high-volatility law wins for a convex payoff") {
        const Lattice lat = vol_walk(1);
        const Family fam{vol_family(lat)};
        const auto sel =
            optimal_selector(lat, fam, StoppingRule::constant(lat, 0), squared_terminal(lat));
        REQUIRE(sel.chosen_index.size() == 1);
        CHECK(sel.chosen_index[0] == 1);  // the +-2 law
        const TreeMeasure* m = sel.kernel.find(0, 0);
        REQUIRE(m != nullptr);
        CHECK(m->transitions()[0] == std::vector<double>{0.5, 0.0, 0.0, 0.5});
    }
    SUBCASE("ties break to the first member in enumeration order") {
        const Lattice lat = vol_walk(1);
        const Family fam{vol_family(lat)};
        const auto sel = optimal_selector(lat, fam, StoppingRule::constant(lat, 0),
                                          RandomVariable::constant(lat, 0.0));
        CHECK(sel.chosen_index[0] == 0);
    }
    SUBCASE("empty sets are flagged") {
        const Lattice lat = walk(1);
        ExplicitFamily fam;
        const auto sel = optimal_selector(lat, Family{fam}, StoppingRule::constant(lat, 0),
                                          squared_terminal(lat));
        REQUIRE(sel.empty_nodes.size() == 1);
        CHECK(sel.chosen_index[0] == SIZE_MAX);
    }
    SUBCASE("selected kernels achieve the engine value when pasted") {
        Rng rng(31337);
        const Lattice lat = walk(2);
        const RectangularFamily fam = testing::random_rect_family(rng, lat, 3);
        const RandomVariable xi = testing::payoff_from_pool(rng, lat);
        const StoppingRule tau = StoppingRule::constant(lat, 1);
        const auto sel = optimal_selector(lat, Family{fam}, tau, xi);
        const RandomVariable values = oracle_rv(lat, Family{fam}, tau, xi);
        for (std::size_t i = 0; i < tau.boundary().size(); ++i) {
            const auto& b = tau.boundary()[i];
            const TreeMeasure* m = sel.kernel.find(b.depth, b.rank);
            REQUIRE(m != nullptr);
            const RandomVariable shifted = shift_rv(
                lat, xi, tau, lat.path_at(b.rank * lat.paths_per_node(b.depth)));
            CHECK(deviation(expectation(lat.suffix(b.depth), *m, shifted),
                            values[b.rank * lat.paths_per_node(b.depth)]) <= 1e-12);
        }
    }
}
