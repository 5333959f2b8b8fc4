#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support/random_models.hpp"
#include "treexp/ambiguity.hpp"

using namespace treexp;

namespace {

Lattice walk(int K) { return Lattice::homogeneous(K, 1.0, {-1.0, 1.0}); }

std::vector<int> map_of(const Lattice& lat, const StoppingRule& r) {
    std::vector<int> m(lat.path_count());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = r.at(i);
    return m;
}

}  // namespace

TEST_CASE("lattice counts and values") {
    const Lattice lat(0.5, {{-1.0, 1.0}, {-2.0, 0.0, 2.0}});
    CHECK(lat.path_count() == 6);
    CHECK(lat.node_count(0) == 1);
    CHECK(lat.node_count(1) == 2);
    CHECK(lat.node_count(2) == 6);
    CHECK(lat.total_node_count() == 9);
    CHECK(lat.nonterminal_count() == 3);
    CHECK_FALSE(lat.step_homogeneous());

    const PathId p{1, 0};
    CHECK(lat.value_at(p, 0) == 0.0);  // all paths start at zero
    CHECK(lat.value_at(p, 1) == 1.0);
    CHECK(lat.value_at(p, 2) == -1.0);
    CHECK(lat.values(p) == std::vector<double>{0.0, 1.0, -1.0});
}

TEST_CASE("rank round-trips") {
    const Lattice lat(1.0, {{-1.0, 1.0}, {-2.0, 0.0, 2.0}, {-1.0, 1.0}});
    for (std::size_t r = 0; r < lat.path_count(); ++r) {
        CHECK(lat.path_rank(lat.path_at(r)) == r);
        for (int depth = 0; depth <= lat.steps(); ++depth) {
            const NodeId n = lat.node_at(depth, lat.prefix_rank(r, depth));
            const PathId p = lat.path_at(r);
            CHECK(NodeId(p.begin(), p.begin() + depth) == n);
        }
    }
}

TEST_CASE("lattice validation") {
    CHECK_THROWS_AS(Lattice(0.0, {{-1.0, 1.0}}), InvalidSpec);
    CHECK_THROWS_AS(Lattice(1.0, {{1.0, -1.0}}), InvalidSpec);  // not increasing
    CHECK_THROWS_AS(Lattice(1.0, {{1.0, 1.0}}), InvalidSpec);   // duplicate letter
    CHECK_THROWS_AS(Lattice(1.0, {}), InvalidSpec);
}

TEST_CASE("concat at constant times") {
    const Lattice lat = walk(2);
    const PathId up2{1, 1}, down2{0, 0}, downup{0, 1};

    const StoppingRule at0 = StoppingRule::constant(lat, 0);
    CHECK(concat(lat, up2, at0, downup) == downup);  // nothing kept

    const StoppingRule at2 = StoppingRule::constant(lat, 2);
    CHECK(concat(lat, up2, at2, downup) == up2);  // nothing appended

    const StoppingRule at1 = StoppingRule::constant(lat, 1);
    CHECK(concat(lat, up2, at1, down2) == PathId{1, 0});
}

TEST_CASE("concat needs the spliced increment in the target alphabet") {
    const Lattice lat(1.0, {{-1.0, 1.0}, {-2.0, 2.0}});
    const StoppingRule at1 = StoppingRule::constant(lat, 1);
    // tail's first increment is +-1, which step 1 does not offer
    CHECK_THROWS_AS(concat(lat, PathId{0, 0}, at1, PathId{1, 0}), AlphabetMismatch);
}

TEST_CASE("shift_path basics and round-trip") {
    const Lattice lat = walk(3);
    const PathId p{1, 0, 1};

    CHECK(shift_path(lat, p, StoppingRule::constant(lat, 0)) == p);
    CHECK(shift_path(lat, p, StoppingRule::constant(lat, 3)).empty());

    const PathId tail = shift_path(lat, p, StoppingRule::constant(lat, 1));
    CHECK(tail == PathId{0, 1});
    const Lattice sub = lat.suffix(1);
    CHECK(sub.values(tail) == std::vector<double>{0.0, -1.0, 0.0});  // re-based at zero

    // splicing the prefix with the shifted tail reproduces the path, for
    // every path and every stopping rule
    for (const auto& rule : all_stopping_rules(lat)) {
        for (std::size_t r = 0; r < lat.path_count(); ++r) {
            const PathId q = lat.path_at(r);
            const int t = rule.at(r);
            const NodeId node(q.begin(), q.begin() + t);
            CHECK(lat.splice(node, shift_path(lat, q, rule)) == q);
            // same through concat with any full path extending the tail
            PathId ext = shift_path(lat, q, rule);
            while (static_cast<int>(ext.size()) < lat.steps()) ext.push_back(0);
            CHECK(concat(lat, q, rule, ext) == q);
        }
    }
}

TEST_CASE("shift_rv matches its definition and is local in the prefix") {
    const Lattice lat = walk(3);
    const RandomVariable terminal = RandomVariable::from_function(
        lat, [&](const PathId& p) { return XReal(lat.value_at(p, 3)); });

    for (const auto& rule : all_stopping_rules(lat)) {
        for (std::size_t r = 0; r < lat.path_count(); ++r) {
            const PathId base = lat.path_at(r);
            const int t = rule.at(r);
            const Lattice sub = lat.suffix(t);
            const RandomVariable shifted = shift_rv(lat, terminal, rule, base);
            REQUIRE(shifted.size() == sub.path_count());
            for (std::size_t s = 0; s < sub.path_count(); ++s) {
                const PathId tail = sub.path_at(s);
                // value form: B_t(base) + value of the tail
                CHECK(shifted[s].v ==
                      doctest::Approx(lat.value_at(base, t) + sub.value_at(tail, sub.steps()))
                          .epsilon(1e-15));
                CHECK(shifted[s] == terminal[lat.path_rank(lat.splice(
                                        NodeId(base.begin(), base.begin() + t), tail))]);
            }
            // locality: any path through the same stopping node shifts identically
            const std::size_t span = lat.paths_per_node(t);
            const std::size_t other_rank = (r / span) * span + (span - 1);
            const RandomVariable other = shift_rv(lat, terminal, rule, lat.path_at(other_rank));
            CHECK(other.values() == shifted.values());
        }
    }
}

TEST_CASE("shift_rv trivial cases") {
    const Lattice lat = walk(2);
    const StoppingRule at1 = StoppingRule::constant(lat, 1);

    const RandomVariable c = RandomVariable::constant(lat, 7.5);
    CHECK(shift_rv(lat, c, at1, PathId{0, 0}).values() ==
          std::vector<XReal>{XReal(7.5), XReal(7.5)});

    // a variable determined at the stopping time shifts to its value
    const RandomVariable first = RandomVariable::from_function(
        lat, [&](const PathId& p) { return XReal(lat.value_at(p, 1)); });
    const RandomVariable s = shift_rv(lat, first, at1, PathId{1, 0});
    CHECK(s[0] == XReal(1.0));
    CHECK(s[1] == XReal(1.0));
}

TEST_CASE("stopping-time test") {
    const Lattice lat = walk(3);

    SUBCASE("hitting times pass") {
        const StoppingRule h = StoppingRule::hitting(lat, 1.0);
        CHECK(is_stopping_rule(lat, map_of(lat, h)).ok);
        CHECK(h.at(lat.path_rank({1, 1, 1})) == 1);
    }
    SUBCASE("constants pass") {
        for (int j = 0; j <= 3; ++j)
            CHECK(is_stopping_rule(lat, map_of(lat, StoppingRule::constant(lat, j))).ok);
    }
    SUBCASE("peeking at the future fails with a witness") {
        // stop at 3 when the terminal value is positive, else 0
        std::vector<int> map(lat.path_count());
        for (std::size_t r = 0; r < map.size(); ++r)
            map[r] = lat.value_at(lat.path_at(r), 3) > 0 ? 3 : 0;
        const auto res = is_stopping_rule(lat, map);
        REQUIRE_FALSE(res.ok);
        CHECK(map[res.witness_a] != map[res.witness_b]);
        // the witnesses agree up to the earlier claimed time
        const int t = std::min(map[res.witness_a], map[res.witness_b]);
        CHECK(lat.prefix_rank(res.witness_a, t) == lat.prefix_rank(res.witness_b, t));
    }
}

TEST_CASE("boundary antichains and stopping maps coincide") {
    // every boundary rule passes the map test, and every passing map is
    // representable as a boundary; exhaustive over maps on small lattices
    for (auto [K, b] : {std::pair{2, 2}, std::pair{3, 2}}) {
        std::vector<double> letters;
        for (int i = 0; i < b; ++i) letters.push_back(static_cast<double>(2 * i - 1));
        const Lattice lat = Lattice::homogeneous(K, 1.0, letters);
        const std::size_t n = lat.path_count();

        std::uint64_t passing = 0;
        std::vector<int> map(n, 0);
        while (true) {
            if (is_stopping_rule(lat, map).ok) {
                ++passing;
                const StoppingRule rule = StoppingRule::from_stopping_map(lat, map);
                CHECK(map_of(lat, rule) == map);
                // boundary really is an antichain covering: rebuilding agrees
                std::vector<NodeId> nodes;
                for (const auto& bd : rule.boundary())
                    nodes.push_back(lat.node_at(bd.depth, bd.rank));
                CHECK(map_of(lat, StoppingRule::from_boundary(lat, nodes)) == map);
            }
            std::size_t i = 0;
            while (i < n && ++map[i] > K) map[i++] = 0;
            if (i == n) break;
        }
        CHECK(passing == stopping_rule_count(lat));
    }

    // larger lattices: every generated boundary rule passes
    for (auto [K, b] : {std::pair{4, 2}, std::pair{3, 3}}) {
        std::vector<double> letters;
        for (int i = 0; i < b; ++i) letters.push_back(static_cast<double>(i) - 1.0);
        const Lattice lat = Lattice::homogeneous(K, 1.0, letters);
        const auto rules = all_stopping_rules(lat);
        CHECK(rules.size() == stopping_rule_count(lat));
        for (const auto& rule : rules) CHECK(is_stopping_rule(lat, map_of(lat, rule)).ok);
    }
}

TEST_CASE("invalid boundaries are rejected") {
    const Lattice lat = walk(2);
    CHECK_THROWS_AS(StoppingRule::from_boundary(lat, {NodeId{}, NodeId{0}}), InvalidSpec);
    CHECK_THROWS_AS(StoppingRule::from_boundary(lat, {NodeId{0}}), InvalidSpec);
}

TEST_CASE("shifted rules are again stopping rules") {
    const Lattice lat = walk(3);
    Rng rng(7);
    for (const auto& tau : all_stopping_rules(lat)) {
        const StoppingRule sigma = testing::random_leq_rule(rng, lat, tau);
        REQUIRE(sigma.leq(tau));
        for (const auto& b : sigma.boundary()) {
            const StoppingRule theta = shift_rule(lat, tau, b.depth, b.rank);
            const Lattice sub = lat.suffix(b.depth);
            CHECK(is_stopping_rule(sub, map_of(sub, theta)).ok);
            CHECK(theta.path_count() == sub.path_count());
        }
    }
}

TEST_CASE("measurability at a stopping time") {
    const Lattice lat = walk(2);
    const RandomVariable terminal = RandomVariable::from_function(
        lat, [&](const PathId& p) { return XReal(lat.value_at(p, 2)); });
    const RandomVariable first = RandomVariable::from_function(
        lat, [&](const PathId& p) { return XReal(lat.value_at(p, 1)); });

    CHECK_FALSE(is_stopped_measurable(lat, terminal, StoppingRule::constant(lat, 0)));
    CHECK(is_stopped_measurable(lat, terminal, StoppingRule::constant(lat, 2)));
    CHECK(is_stopped_measurable(lat, first, StoppingRule::constant(lat, 1)));

    // the value at the stopping time is always determined by the stopping node
    const StoppingRule h = StoppingRule::hitting(lat, 1.0);
    const RandomVariable stopped = RandomVariable::from_function(
        lat, [&](const PathId& p) { return XReal(lat.value_at(p, h.at_path(lat, p))); });
    CHECK(is_stopped_measurable(lat, stopped, h));
}

TEST_CASE("extended-real conventions") {
    const XReal pinf = XReal::pos_inf(), ninf = XReal::neg_inf();
    CHECK(xsub(pinf, pinf) == ninf);
    CHECK(xadd(pinf, ninf) == ninf);
    CHECK(xadd(ninf, pinf) == ninf);
    CHECK(xadd(pinf, 3.0) == pinf);
    CHECK(xmul(0.0, pinf) == XReal(0.0));
    CHECK(xmul(ninf, -2.0) == pinf);
    CHECK(xdiv(1.0, 0.0) == pinf);
    CHECK(xdiv(-1.0, 0.0) == ninf);
    CHECK(xdiv(0.0, 0.0) == ninf);
    CHECK(xdiv(pinf, pinf) == ninf);
    CHECK(xpow(-2.0, 0.5) == ninf);  // totalized
    CHECK(deviation(pinf, pinf) == 0.0);
    CHECK(deviation(pinf, ninf) == std::numeric_limits<double>::infinity());
    CHECK(deviation(1.0, 1.5) == 0.5);
    CHECK(pinf > 5.0);
    CHECK(ninf < -1e300);
}
