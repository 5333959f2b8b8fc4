#include "treexp/gexp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace treexp {

// ---------------------------------------------------------------------------
// VolSpec

VolSpec VolSpec::finite(std::vector<double> values) {
    VolSpec s;
    s.kind = Kind::finite_set;
    s.values = std::move(values);
    return s;
}

VolSpec VolSpec::closed_grid(double lo, double hi, int num_points) {
    VolSpec s;
    s.kind = Kind::interval_grid;
    s.lo = lo;
    s.hi = hi;
    s.num_points = num_points;
    return s;
}

VolSpec VolSpec::half_open(double lo, double hi, int num_points) {
    VolSpec s;
    s.kind = Kind::half_open_grid;
    s.lo = lo;
    s.hi = hi;
    s.num_points = num_points;
    return s;
}

std::vector<double> VolSpec::levels() const {
    std::vector<double> out;
    if (kind == Kind::finite_set) {
        out = values;
        std::sort(out.begin(), out.end());
    } else {
        if (!(lo > 0.0) || !(hi >= lo)) throw InvalidSpec("grid needs 0 < lo <= hi");
        if (num_points < 1) throw InvalidSpec("grid needs at least one point");
        if (kind == Kind::interval_grid) {
            if (num_points == 1) {
                if (lo != hi) throw InvalidSpec("a one-point closed grid needs lo == hi");
                out.push_back(lo);
            } else {
                for (int i = 0; i < num_points; ++i)
                    out.push_back(lo + (hi - lo) * static_cast<double>(i) /
                                           static_cast<double>(num_points - 1));
                out.back() = hi;  // endpoint exact
            }
        } else {
            if (!(hi > lo)) throw InvalidSpec("a half-open grid needs lo < hi");
            for (int i = 0; i < num_points; ++i)
                out.push_back(lo + (hi - lo) * static_cast<double>(i) /
                                       static_cast<double>(num_points));
        }
    }
    if (out.empty()) throw InvalidSpec("empty level set");
    for (double v : out)
        if (!(v > 0.0) || !std::isfinite(v)) throw InvalidSpec("variance rates must be positive");
    for (std::size_t i = 1; i < out.size(); ++i)
        if (!(out[i - 1] < out[i])) throw InvalidSpec("variance rates must be distinct");
    return out;
}

bool operator==(const VolSpec& a, const VolSpec& b) {
    return a.kind == b.kind && a.values == b.values && a.lo == b.lo && a.hi == b.hi &&
           a.num_points == b.num_points;
}

double g_function(double gamma, const VolSpec& spec) {
    const auto levels = spec.levels();
    double best = gamma * levels[0];
    for (double s2 : levels) best = std::max(best, gamma * s2);
    return 0.5 * best;
}

// ---------------------------------------------------------------------------
// DProcess

DProcess DProcess::constant(VolSpec spec) {
    DProcess d;
    d.rule_ = [spec = std::move(spec)](int, std::span<const double>) { return spec; };
    return d;
}

DProcess DProcess::from_rule(Rule rule) {
    DProcess d;
    d.rule_ = std::move(rule);
    return d;
}

DProcess DProcess::realized_avg_threshold(double threshold, VolSpec below, VolSpec at_or_above,
                                          double dt) {
    DProcess d;
    d.rule_ = [=](int step, std::span<const double> incs) {
        double avg = 0.0;
        if (step > 0) {
            double sum = 0.0;
            for (double x : incs) sum += x * x / dt;
            avg = sum / static_cast<double>(step);
        }
        return avg < threshold ? below : at_or_above;
    };
    return d;
}

DProcess DProcess::from_table(std::vector<std::vector<VolSpec>> spec_by_path_and_step) {
    DProcess d;
    d.table_ = std::move(spec_by_path_and_step);
    return d;
}

VolSpec DProcess::at(int step, std::span<const double> increments_before) const {
    if (rule_) return rule_(step, increments_before);
    throw InvalidSpec("table-backed process has no rule form; check adaptedness first");
}

// ---------------------------------------------------------------------------
// lattice construction

namespace {

double increment_for_level(double level, double dt) { return std::sqrt(level * dt); }

struct StepAlphabet {
    std::vector<double> letters;           // sorted increments
    std::vector<double> level_of_letter;   // same indexing
};

StepAlphabet make_alphabet(const std::set<double>& step_levels, double dt) {
    // sorted by increment value; negative letters first
    std::map<double, double> by_letter;
    for (double level : step_levels) {
        const double a = increment_for_level(level, dt);
        if (by_letter.count(a) > 0 || by_letter.count(-a) > 0)
            throw InvalidSpec("two variance rates collapse to the same increment");
        by_letter[a] = level;
        by_letter[-a] = level;
    }
    StepAlphabet out;
    for (const auto& [a, level] : by_letter) {
        out.letters.push_back(a);
        out.level_of_letter.push_back(level);
    }
    return out;
}

}  // namespace

std::vector<double> VolLattice::path_levels(const PathId& p) const {
    std::vector<double> out(p.size());
    for (std::size_t k = 0; k < p.size(); ++k)
        out[k] = level_of_letter[k][static_cast<std::size_t>(p[k])];
    return out;
}

VolLattice build_vol_lattice(const DProcess& d, int num_steps, double dt,
                             const std::vector<double>& extra_levels) {
    if (num_steps < 1) throw InvalidSpec("num_steps must be >= 1");
    if (!(dt > 0.0)) throw InvalidSpec("dt must be positive");
    for (double x : extra_levels)
        if (!(x > 0.0)) throw InvalidSpec("extra levels must be positive");

    // grow the alphabet step by step; the spec at a node may read the
    // realized increments of its prefix, which are known once the earlier
    // alphabets are fixed
    std::vector<StepAlphabet> alphabets;
    std::vector<std::vector<std::vector<double>>> node_levels(
        static_cast<std::size_t>(num_steps));  // per step, per node rank
    std::size_t nodes_at_step = 1;
    constexpr std::size_t node_cap = std::size_t(1) << 22;

    for (int k = 0; k < num_steps; ++k) {
        node_levels[static_cast<std::size_t>(k)].resize(nodes_at_step);
        std::set<double> step_levels(extra_levels.begin(), extra_levels.end());
        for (std::size_t rank = 0; rank < nodes_at_step; ++rank) {
            // decode the node's increments from the alphabets built so far
            std::vector<double> incs(static_cast<std::size_t>(k));
            std::size_t r = rank;
            for (int j = k - 1; j >= 0; --j) {
                const std::size_t b = alphabets[static_cast<std::size_t>(j)].letters.size();
                incs[static_cast<std::size_t>(j)] =
                    alphabets[static_cast<std::size_t>(j)].letters[r % b];
                r /= b;
            }
            const auto levels = d.at(k, incs).levels();
            node_levels[static_cast<std::size_t>(k)][rank] = levels;
            step_levels.insert(levels.begin(), levels.end());
        }
        alphabets.push_back(make_alphabet(step_levels, dt));
        nodes_at_step *= alphabets.back().letters.size();
        if (nodes_at_step > node_cap)
            throw SizeLimit("volatility lattice grows past the cap", nodes_at_step, node_cap);
    }

    std::vector<std::vector<double>> steps;
    std::vector<std::vector<double>> level_table;
    for (auto& a : alphabets) {
        steps.push_back(a.letters);
        level_table.push_back(a.level_of_letter);
    }
    Lattice lat(dt, std::move(steps));

    // one symmetric two-point law per admissible level at each node
    std::vector<RectangularFamily::LawSet> sets(lat.nonterminal_count());
    for (int k = 0; k < num_steps; ++k) {
        const auto& a = alphabets[static_cast<std::size_t>(k)];
        for (std::size_t rank = 0; rank < lat.node_count(k); ++rank) {
            RectangularFamily::LawSet laws;
            for (double level : node_levels[static_cast<std::size_t>(k)][rank]) {
                std::vector<double> law(a.letters.size(), 0.0);
                const double inc = increment_for_level(level, dt);
                const int up = lat.letter_of(k, inc);
                const int down = lat.letter_of(k, -inc);
                if (up < 0 || down < 0) throw InvalidSpec("level increment missing from alphabet");
                law[static_cast<std::size_t>(up)] = 0.5;
                law[static_cast<std::size_t>(down)] = 0.5;
                laws.push_back(std::move(law));
            }
            sets[lat.nonterminal_index(k, rank)] = std::move(laws);
        }
    }
    RectangularFamily family(lat, std::move(sets));
    return {std::move(lat), std::move(family), std::move(level_table)};
}

VolLattice build_vol_lattice(const VolSpec& spec, int num_steps, double dt,
                             const std::vector<double>& extra_levels) {
    return build_vol_lattice(DProcess::constant(spec), num_steps, dt, extra_levels);
}

// ---------------------------------------------------------------------------
// values and scenarios

namespace {

XReal root_value(const VolLattice& vol, const PayoffFn& xi) {
    const RandomVariable rv = RandomVariable::from_function(
        vol.lattice, [&](const PathId& p) { return xi(vol.lattice, p); });
    const auto v = dpp_node_values(vol.lattice, vol.family, rv);
    return v[vol.lattice.node_index(0, 0)];
}

}  // namespace

XReal g_expectation(const DProcess& d, int num_steps, double dt, const PayoffFn& xi) {
    return root_value(build_vol_lattice(d, num_steps, dt), xi);
}

XReal g_expectation(const VolSpec& spec, int num_steps, double dt, const PayoffFn& xi) {
    return root_value(build_vol_lattice(spec, num_steps, dt), xi);
}

ConstantVolScenario example_51_scenario(int num_steps, double dt) {
    const double mid = 2.25;
    const VolLattice grid = build_vol_lattice(VolSpec::finite({1.0, mid, 4.0}), num_steps, dt);
    const VolLattice pair =
        build_vol_lattice(VolSpec::finite({1.0, 4.0}), num_steps, dt, {mid});

    const auto indicator = [&](const VolLattice& vol) {
        return RandomVariable::from_function(vol.lattice, [&](const PathId& p) -> XReal {
            for (double level : vol.path_levels(p))
                if (level != mid) return 0.0;
            return 1.0;
        });
    };
    ConstantVolScenario out;
    out.grid_value =
        dpp_node_values(grid.lattice, grid.family, indicator(grid))[grid.lattice.node_index(0, 0)]
            .v;
    out.pair_value =
        dpp_node_values(pair.lattice, pair.family, indicator(pair))[pair.lattice.node_index(0, 0)]
            .v;
    return out;
}

QvThresholdScenario example_52_scenario(int num_steps, double dt, int num_points) {
    const VolLattice closed =
        build_vol_lattice(VolSpec::closed_grid(1.0, 2.0, num_points), num_steps, dt);
    const VolLattice half =
        build_vol_lattice(VolSpec::half_open(1.0, 2.0, num_points), num_steps, dt);

    // {qv at the horizon >= 2*K*dt}; with dt > 0 this is {sum of the per-step
    // rates >= 2*K}, evaluated on the exact level table so the comparison is
    // immune to sqrt rounding for any dt
    const double threshold = 2.0 * static_cast<double>(num_steps);
    const auto indicator = [&](const VolLattice& vol) {
        return RandomVariable::from_function(vol.lattice, [&](const PathId& p) -> XReal {
            double sum = 0.0;
            for (double level : vol.path_levels(p)) sum += level;
            return sum >= threshold ? 1.0 : 0.0;
        });
    };
    const auto bsq = [](const VolLattice& vol) {
        return RandomVariable::from_function(vol.lattice, [&](const PathId& p) -> XReal {
            const double b = vol.lattice.value_at(p, vol.lattice.steps());
            return b * b;
        });
    };

    QvThresholdScenario out;
    out.closed_value = dpp_node_values(closed.lattice, closed.family,
                                       indicator(closed))[closed.lattice.node_index(0, 0)]
                           .v;
    out.half_open_value =
        dpp_node_values(half.lattice, half.family, indicator(half))[half.lattice.node_index(0, 0)]
            .v;
    out.closed_bsq =
        dpp_node_values(closed.lattice, closed.family, bsq(closed))[closed.lattice.node_index(0, 0)]
            .v;
    out.half_open_bsq =
        dpp_node_values(half.lattice, half.family, bsq(half))[half.lattice.node_index(0, 0)].v;
    return out;
}

AdaptednessReport check_d_adaptedness(const DProcess& d, const Lattice& lat) {
    AdaptednessReport report;
    if (!d.is_table()) return report;  // keyed by prefix, adapted by construction
    const auto& table = d.table();
    if (table.size() != lat.path_count()) throw InvalidSpec("table has wrong path count");
    for (int k = 0; k < lat.steps(); ++k) {
        // paths sharing the first k increments form contiguous rank blocks
        const std::size_t span = lat.paths_per_node(k);
        for (std::size_t lo = 0; lo < lat.path_count(); lo += span) {
            for (std::size_t r = lo + 1; r < lo + span; ++r) {
                if (!(table[r][static_cast<std::size_t>(k)] ==
                      table[lo][static_cast<std::size_t>(k)])) {
                    return {false, lo, r, k};
                }
            }
        }
    }
    return report;
}

}  // namespace treexp
