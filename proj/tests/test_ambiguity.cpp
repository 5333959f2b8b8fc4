#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <set>

#include "support/random_models.hpp"

using namespace treexp;

namespace {

Lattice walk(int K) { return Lattice::homogeneous(K, 1.0, {-1.0, 1.0}); }

RectangularFamily two_laws_everywhere(const Lattice& lat) {
    std::vector<RectangularFamily::LawSet> sets(lat.nonterminal_count());
    for (auto& set : sets) set = {{0.5, 0.5}, {0.25, 0.75}};
    return RectangularFamily(lat, std::move(sets));
}

}  // namespace

TEST_CASE("enumeration sizes and order") {
    SUBCASE("a single law per node yields one measure") {
        const Lattice lat = walk(2);
        const Family fam{RectangularFamily::singleton(lat, TreeMeasure::uniform(lat))};
        CHECK(enumerate_measures(lat, fam, 0, 0).size() == 1);
    }
    SUBCASE("three laws at the root of a one-step lattice") {
        const Lattice lat = walk(1);
        RectangularFamily fam(lat, {{{0.5, 0.5}, {0.25, 0.75}, {1.0, 0.0}}});
        const auto ms = enumerate_measures(lat, Family{fam}, 0, 0);
        REQUIRE(ms.size() == 3);
        // enumeration follows the per-node list order
        CHECK(ms[0].transitions()[0] == std::vector<double>{0.5, 0.5});
        CHECK(ms[1].transitions()[0] == std::vector<double>{0.25, 0.75});
        CHECK(ms[2].transitions()[0] == std::vector<double>{1.0, 0.0});
    }
    SUBCASE("two laws on three nodes give the full product") {
        const Lattice lat = walk(2);
        const auto ms = enumerate_measures(lat, Family{two_laws_everywhere(lat)}, 0, 0);
        CHECK(ms.size() == 8);
        std::set<std::vector<std::vector<double>>> distinct;
        for (const auto& m : ms) distinct.insert(m.transitions());
        CHECK(distinct.size() == 8);  // duplicate-free as transition tables
    }
    SUBCASE("duplicate laws are dropped at construction") {
        const Lattice lat = walk(1);
        RectangularFamily fam(lat, {{{0.5, 0.5}, {0.5, 0.5}}});
        CHECK(fam.at(lat, 0, 0).size() == 1);
    }
    SUBCASE("the cap is enforced") {
        const Lattice lat = walk(3);
        const Family fam{two_laws_everywhere(lat)};
        CHECK_THROWS_AS(enumerate_measures(lat, fam, 0, 0, EnumOptions{16}), SizeLimit);
    }
    SUBCASE("at the horizon the family is the trivial measure") {
        const Lattice lat = walk(2);
        const Family fam{two_laws_everywhere(lat)};
        const auto ms = enumerate_measures(lat, fam, 2, 3);
        REQUIRE(ms.size() == 1);
        CHECK(ms[0].transitions().empty());
    }
}

TEST_CASE("selection odometer matches indexed decoding") {
    Rng rng(5);
    const Lattice lat = walk(2);
    const RectangularFamily fam = testing::random_rect_family(rng, lat, 3);
    auto sel = fam.selections(lat, 0, 0);
    const auto ms = enumerate_measures(lat, Family{fam}, 0, 0);
    std::uint64_t k = 0;
    do {
        auto seeked = fam.selections(lat, 0, 0);
        seeked.seek(k);
        CHECK(seeked.measure(lat).transitions() == ms[k].transitions());
        ++k;
    } while (sel.advance());
    CHECK(k == sel.count());
}

TEST_CASE("rectangular families pass both stability checks exhaustively") {
    Rng rng(17);
    for (int trial = 0; trial < 6; ++trial) {
        const Lattice lat = testing::random_lattice(rng, 3, 2);
        const Family fam{testing::random_rect_family(rng, lat, 3)};
        const auto inv = check_invariance(lat, fam);
        CHECK(inv.pass);
        CHECK(inv.cases > 0);
        const auto pas = check_pasting(lat, fam);
        CHECK(pas.pass);
        CHECK(pas.cases > 0);
    }
    // one run with the kernel cap lifted: fully exhaustive quantification
    const Lattice lat = walk(3);
    Rng rng2(99);
    const Family fam{testing::random_rect_family(rng2, lat, 3)};
    CheckOptions opts;
    opts.kernel_cap = UINT64_MAX;
    CHECK(check_invariance(lat, fam, opts).pass);
    CHECK(check_pasting(lat, fam, opts).pass);
}

TEST_CASE("singleton families are classical conditional probability") {
    const Lattice lat = walk(2);
    const Family fam{RectangularFamily::singleton(lat, TreeMeasure::uniform(lat))};
    CHECK(check_invariance(lat, fam).pass);
    CHECK(check_pasting(lat, fam).pass);
}

TEST_CASE("engineered invariance violation fails with a witness") {
    const ViolationFixture fx = invariance_violating_family();
    const auto report = check_invariance(fx.lattice, Family{fx.family});
    CHECK_FALSE(report.pass);
    CHECK(report.witness.find("conditional") != std::string::npos);
    // pasting the excluded conditionals also escapes the family
    CHECK_FALSE(check_pasting(fx.lattice, Family{fx.family}).pass);
}

TEST_CASE("engineered pasting violation keeps invariance but fails pasting") {
    const ViolationFixture fx = pasting_violating_family();
    CHECK(check_invariance(fx.lattice, Family{fx.family}).pass);
    const auto report = check_pasting(fx.lattice, Family{fx.family});
    CHECK_FALSE(report.pass);
    CHECK(report.witness.find("pasted") != std::string::npos);
}

TEST_CASE("measurability note") {
    const Lattice lat = walk(2);
    const auto ok = measurability_note(lat, Family{two_laws_everywhere(lat)});
    CHECK(ok.pass);
    REQUIRE_FALSE(ok.notes.empty());
    CHECK(ok.notes[0].find("finite") != std::string::npos);

    ExplicitFamily partial;
    partial.set(lat, 0, 0, {TreeMeasure::uniform(lat)});
    const auto warned = measurability_note(lat, Family{partial});
    CHECK(warned.pass);  // still a PASS, with warnings listed
    bool has_warning = false;
    for (const auto& n : warned.notes) has_warning |= n.find("empty") != std::string::npos;
    CHECK(has_warning);
}

TEST_CASE("members agreeing up to the boundary are exactly the prefix selections") {
    // group the enumeration by the boundary restriction and by the selection
    // prefix; with strictly positive laws the two partitions coincide
    const Lattice lat = walk(2);
    std::vector<RectangularFamily::LawSet> sets(lat.nonterminal_count());
    for (auto& set : sets) set = {{0.5, 0.5}, {0.2, 0.8}};
    const RectangularFamily fam(lat, std::move(sets));
    const StoppingRule tau = StoppingRule::constant(lat, 1);

    const auto ms = enumerate_measures(lat, Family{fam}, 0, 0);
    std::map<std::vector<double>, std::set<std::size_t>> by_restriction;
    std::map<std::vector<std::vector<double>>, std::set<std::size_t>> by_prefix;
    for (std::size_t i = 0; i < ms.size(); ++i) {
        std::vector<double> probs;
        for (const auto& b : tau.boundary()) probs.push_back(ms[i].node_prob(lat, b.depth, b.rank));
        by_restriction[probs].insert(i);
        by_prefix[{ms[i].transitions()[lat.nonterminal_index(0, 0)]}].insert(i);
    }
    REQUIRE(by_restriction.size() == by_prefix.size());
    for (const auto& [probs, members] : by_restriction) {
        bool found = false;
        for (const auto& [prefix, others] : by_prefix) found |= members == others;
        CHECK(found);
    }
}

TEST_CASE("conditionals of root members exactly fill the family at reachable nodes") {
    Rng rng(71);
    for (int trial = 0; trial < 4; ++trial) {
        const Lattice lat = testing::random_lattice(rng, 3, 2);
        const RectangularFamily fam = testing::random_rect_family(rng, lat, 2);
        for (const auto& tau : sample_stopping_rules(lat, 5, trial)) {
            const auto report = rcpd_image_diagnostic(lat, fam, tau);
            CHECK(report.pass);
        }
    }
}

TEST_CASE("stopping rule samples are deterministic and within the count") {
    const Lattice lat = walk(3);
    CHECK(stopping_rule_count(lat) == 26);
    CHECK(all_stopping_rules(lat).size() == 26);

    const auto a = sample_stopping_rules(lat, 10, 42);
    const auto b = sample_stopping_rules(lat, 10, 42);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t r = 0; r < lat.path_count(); ++r) CHECK(a[i].at(r) == b[i].at(r));

    // distinct rules only
    std::set<std::vector<int>> seen;
    for (const auto& rule : a) {
        std::vector<int> key(lat.path_count());
        for (std::size_t r = 0; r < key.size(); ++r) key[r] = rule.at(r);
        CHECK(seen.insert(key).second);
    }
}

TEST_CASE("explicit family entries validate against the node's suffix lattice") {
    const Lattice lat = walk(2);
    ExplicitFamily fam;
    CHECK_THROWS_AS(fam.set(lat, 1, 0, {TreeMeasure::uniform(lat)}), InvalidSpec);
    CHECK_NOTHROW(fam.set(lat, 1, 0, {TreeMeasure::uniform(lat.suffix(1))}));
    CHECK(fam.find(1, 0) != nullptr);
    CHECK(fam.find(1, 1) == nullptr);
}
