#include "treexp/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace treexp {

namespace {

// saturating product; false once the running product leaves the safe range
bool checked_mul(std::size_t& acc, std::size_t m, std::size_t cap) {
    if (acc > cap / m) return false;
    acc *= m;
    return true;
}

}  // namespace

Lattice::Lattice(double dt, std::vector<std::vector<double>> step_alphabets)
    : dt_(dt), steps_(std::move(step_alphabets)) {
    if (!(dt_ > 0.0) || !std::isfinite(dt_)) throw InvalidSpec("dt must be a positive real");
    if (steps_.empty()) throw InvalidSpec("lattice needs at least one step");
    for (std::size_t k = 0; k < steps_.size(); ++k) {
        const auto& a = steps_[k];
        if (a.empty()) throw InvalidSpec("empty alphabet at step " + std::to_string(k));
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (!std::isfinite(a[i])) throw InvalidSpec("non-finite increment value");
            if (i > 0 && !(a[i - 1] < a[i]))
                throw InvalidSpec("alphabet must be strictly increasing at step " +
                                  std::to_string(k));
        }
        if (a != steps_[0]) homogeneous_ = false;
    }

    const int K = steps();
    span_.assign(K + 1, 1);
    ncount_.assign(K + 1, 1);
    for (int j = K - 1; j >= 0; --j) {
        span_[j] = span_[j + 1];
        if (!checked_mul(span_[j], steps_[j].size(), max_enumerable_paths)) {
            enumerable_ = false;
            break;
        }
    }
    if (enumerable_) {
        for (int j = 1; j <= K; ++j) ncount_[j] = ncount_[j - 1] * steps_[j - 1].size();
        noffset_.assign(K + 2, 0);
        for (int j = 0; j <= K; ++j) noffset_[j + 1] = noffset_[j] + ncount_[j];
        ntoff_.assign(K + 1, 0);
        for (int j = 0; j < K; ++j) ntoff_[j + 1] = ntoff_[j] + ncount_[j];
    }
}

Lattice Lattice::homogeneous(int num_steps, double dt, std::vector<double> alphabet) {
    if (num_steps < 1) throw InvalidSpec("num_steps must be >= 1");
    std::vector<std::vector<double>> steps(static_cast<std::size_t>(num_steps), alphabet);
    return Lattice(dt, std::move(steps));
}

void Lattice::require_enumerable() const {
    if (!enumerable_)
        throw SizeLimit("lattice too large for rank-based enumeration", 0, max_enumerable_paths);
}

std::size_t Lattice::path_count() const {
    require_enumerable();
    return span_[0];
}

std::size_t Lattice::node_count(int depth) const {
    require_enumerable();
    return ncount_[depth];
}

std::size_t Lattice::paths_per_node(int depth) const {
    require_enumerable();
    return span_[depth];
}

std::size_t Lattice::total_node_count() const {
    require_enumerable();
    return noffset_[steps() + 1];
}

std::size_t Lattice::nonterminal_count() const {
    require_enumerable();
    return ntoff_[steps()];
}

std::size_t Lattice::node_index(int depth, std::size_t rank) const {
    require_enumerable();
    return noffset_[depth] + rank;
}

std::size_t Lattice::nonterminal_index(int depth, std::size_t rank) const {
    require_enumerable();
    return ntoff_[depth] + rank;
}

std::size_t Lattice::path_rank(const PathId& p) const {
    require_enumerable();
    if (static_cast<int>(p.size()) != steps()) throw InvalidSpec("path has wrong length");
    std::size_t r = 0;
    for (int k = 0; k < steps(); ++k) {
        if (p[k] < 0 || p[k] >= branching(k)) throw InvalidSpec("path letter out of range");
        r += static_cast<std::size_t>(p[k]) * span_[k + 1];
    }
    return r;
}

PathId Lattice::path_at(std::size_t rank) const {
    require_enumerable();
    PathId p(static_cast<std::size_t>(steps()));
    for (int k = 0; k < steps(); ++k)
        p[k] = static_cast<int>((rank / span_[k + 1]) % static_cast<std::size_t>(branching(k)));
    return p;
}

std::size_t Lattice::node_rank(const NodeId& n) const {
    require_enumerable();
    if (static_cast<int>(n.size()) > steps()) throw InvalidSpec("node deeper than the horizon");
    std::size_t r = 0;
    for (std::size_t k = 0; k < n.size(); ++k) {
        if (n[k] < 0 || n[k] >= branching(static_cast<int>(k)))
            throw InvalidSpec("node letter out of range");
        r = r * static_cast<std::size_t>(branching(static_cast<int>(k))) +
            static_cast<std::size_t>(n[k]);
    }
    return r;
}

NodeId Lattice::node_at(int depth, std::size_t rank) const {
    require_enumerable();
    NodeId n(static_cast<std::size_t>(depth));
    for (int k = depth - 1; k >= 0; --k) {
        n[k] = static_cast<int>(rank % static_cast<std::size_t>(branching(k)));
        rank /= static_cast<std::size_t>(branching(k));
    }
    return n;
}

PathId Lattice::splice(const NodeId& node, const PathId& tail) const {
    PathId p(node);
    p.insert(p.end(), tail.begin(), tail.end());
    if (static_cast<int>(p.size()) != steps()) throw InvalidSpec("splice has wrong length");
    return p;
}

double Lattice::value_at(const PathId& p, int step) const {
    double v = 0.0;
    for (int k = 0; k < step; ++k) v += increment(k, p[k]);
    return v;
}

std::vector<double> Lattice::values(const PathId& p) const {
    std::vector<double> v(static_cast<std::size_t>(steps()) + 1, 0.0);
    for (int k = 0; k < steps(); ++k) v[k + 1] = v[k] + increment(k, p[k]);
    return v;
}

int Lattice::letter_of(int step, double value) const {
    const auto& a = steps_[step];
    auto it = std::lower_bound(a.begin(), a.end(), value);
    if (it != a.end() && *it == value) return static_cast<int>(it - a.begin());
    return -1;
}

Lattice Lattice::suffix(int depth) const {
    if (depth < 0 || depth > steps()) throw InvalidSpec("suffix depth out of range");
    std::vector<std::vector<double>> rest(steps_.begin() + depth, steps_.end());
    if (rest.empty()) {
        // zero-step lattice: a single empty path; used internally for tau = K
        Lattice l;
        l.dt_ = dt_;
        l.span_.assign(1, 1);
        l.ncount_.assign(1, 1);
        l.noffset_ = {0, 1};
        l.ntoff_ = {0};
        return l;
    }
    return Lattice(dt_, std::move(rest));
}

// ---------------------------------------------------------------------------
// stopping rules

StoppingMapResult is_stopping_rule(const Lattice& lat, std::span<const int> time_by_path) {
    const std::size_t n = lat.path_count();
    if (time_by_path.size() != n) throw InvalidSpec("stopping map has wrong length");
    std::size_t r = 0;
    while (r < n) {
        const int t = time_by_path[r];
        if (t < 0 || t > lat.steps()) throw InvalidSpec("stopping time out of range");
        const std::size_t span = lat.paths_per_node(t);
        const std::size_t lo = (r / span) * span;
        // the stopping cylinder must start here; reaching r mid-cylinder means
        // an earlier path shares the prefix but claimed a different time
        if (lo != r) return {false, lo, r};
        for (std::size_t q = r + 1; q < lo + span; ++q) {
            if (time_by_path[q] != t) return {false, r, q};
        }
        r = lo + span;
    }
    return {};
}

StoppingRule StoppingRule::from_stopping_map(const Lattice& lat, std::vector<int> time_by_path) {
    const auto res = is_stopping_rule(lat, time_by_path);
    if (!res.ok)
        throw NotStoppingRule("map fails the stopping-time test", res.witness_a, res.witness_b);
    StoppingRule rule;
    rule.time_by_path_ = std::move(time_by_path);
    std::size_t r = 0;
    const std::size_t n = lat.path_count();
    while (r < n) {
        const int t = rule.time_by_path_[r];
        const std::size_t span = lat.paths_per_node(t);
        rule.boundary_.push_back({t, r / span});
        r += span;
    }
    return rule;
}

StoppingRule StoppingRule::constant(const Lattice& lat, int time) {
    if (time < 0 || time > lat.steps()) throw InvalidSpec("constant stopping time out of range");
    std::vector<int> map(lat.path_count(), time);
    return from_stopping_map(lat, std::move(map));
}

StoppingRule StoppingRule::from_boundary(const Lattice& lat, const std::vector<NodeId>& boundary) {
    struct Range {
        std::size_t lo, hi;
        int depth;
        std::size_t rank;
    };
    std::vector<Range> ranges;
    ranges.reserve(boundary.size());
    for (const auto& n : boundary) {
        const int depth = static_cast<int>(n.size());
        const std::size_t rank = lat.node_rank(n);
        const std::size_t span = lat.paths_per_node(depth);
        ranges.push_back({rank * span, (rank + 1) * span, depth, rank});
    }
    std::sort(ranges.begin(), ranges.end(),
              [](const Range& a, const Range& b) { return a.lo < b.lo; });
    std::size_t cursor = 0;
    for (const auto& r : ranges) {
        if (r.lo != cursor)
            throw InvalidSpec(r.lo < cursor ? "boundary is not an antichain"
                                            : "boundary does not cover all paths");
        cursor = r.hi;
    }
    if (cursor != lat.path_count()) throw InvalidSpec("boundary does not cover all paths");

    StoppingRule rule;
    rule.time_by_path_.assign(lat.path_count(), 0);
    for (const auto& r : ranges) {
        for (std::size_t p = r.lo; p < r.hi; ++p) rule.time_by_path_[p] = r.depth;
        rule.boundary_.push_back({r.depth, r.rank});
    }
    return rule;
}

StoppingRule StoppingRule::hitting(const Lattice& lat, double level) {
    const std::size_t n = lat.path_count();
    std::vector<int> map(n, lat.steps());
    for (std::size_t r = 0; r < n; ++r) {
        const PathId p = lat.path_at(r);
        double v = 0.0;
        int hit = lat.steps();
        if (std::fabs(v) >= level) hit = 0;
        for (int k = 0; k < lat.steps() && hit == lat.steps(); ++k) {
            v += lat.increment(k, p[k]);
            if (std::fabs(v) >= level) hit = k + 1;
        }
        map[r] = hit;
    }
    return from_stopping_map(lat, std::move(map));
}

StoppingRule StoppingRule::pointwise_min(const Lattice& lat, const StoppingRule& a,
                                         const StoppingRule& b) {
    std::vector<int> map(lat.path_count());
    for (std::size_t r = 0; r < map.size(); ++r) map[r] = std::min(a.at(r), b.at(r));
    return from_stopping_map(lat, std::move(map));
}

bool StoppingRule::leq(const StoppingRule& other) const {
    for (std::size_t r = 0; r < time_by_path_.size(); ++r)
        if (time_by_path_[r] > other.time_by_path_[r]) return false;
    return true;
}

int StoppingRule::min_time() const {
    int m = time_by_path_.empty() ? 0 : time_by_path_[0];
    for (int t : time_by_path_) m = std::min(m, t);
    return m;
}

int StoppingRule::max_time() const {
    int m = 0;
    for (int t : time_by_path_) m = std::max(m, t);
    return m;
}

// ---------------------------------------------------------------------------
// random variables and path operations

RandomVariable RandomVariable::from_function(const Lattice& lat,
                                             const std::function<XReal(const PathId&)>& f) {
    std::vector<XReal> v(lat.path_count());
    for (std::size_t r = 0; r < v.size(); ++r) v[r] = f(lat.path_at(r));
    return RandomVariable(std::move(v));
}

RandomVariable RandomVariable::constant(const Lattice& lat, XReal c) {
    return RandomVariable(std::vector<XReal>(lat.path_count(), c));
}

PathId concat(const Lattice& lat, const PathId& base, const StoppingRule& tau,
              const PathId& tail) {
    const int t = tau.at(lat.path_rank(base));
    PathId out(base.begin(), base.begin() + t);
    for (int k = t; k < lat.steps(); ++k) {
        const int src = k - t;
        const double value = lat.increment(src, tail[src]);
        const int letter = lat.letter_of(k, value);
        if (letter < 0)
            throw AlphabetMismatch("increment " + std::to_string(value) +
                                   " is not in the alphabet of step " + std::to_string(k));
        out.push_back(letter);
    }
    return out;
}

PathId shift_path(const Lattice& lat, const PathId& p, const StoppingRule& tau) {
    const int t = tau.at(lat.path_rank(p));
    return PathId(p.begin() + t, p.end());
}

RandomVariable shift_rv(const Lattice& lat, const RandomVariable& xi, const StoppingRule& tau,
                        const PathId& base) {
    const std::size_t base_rank = lat.path_rank(base);
    const int t = tau.at(base_rank);
    const std::size_t node = lat.prefix_rank(base_rank, t);
    const std::size_t span = lat.paths_per_node(t);
    std::vector<XReal> v(span);
    for (std::size_t tail = 0; tail < span; ++tail) v[tail] = xi[lat.splice_rank(t, node, tail)];
    return RandomVariable(std::move(v));
}

bool is_stopped_measurable(const Lattice& lat, const RandomVariable& xi, const StoppingRule& tau) {
    for (const auto& b : tau.boundary()) {
        const std::size_t span = lat.paths_per_node(b.depth);
        const std::size_t lo = b.rank * span;
        for (std::size_t r = lo + 1; r < lo + span; ++r)
            if (xi[r] != xi[lo]) return false;
    }
    return true;
}

StoppingRule shift_rule(const Lattice& lat, const StoppingRule& tau, int depth,
                        std::size_t node_rank) {
    const Lattice sub = lat.suffix(depth);
    const std::size_t span = lat.paths_per_node(depth);
    std::vector<int> map(span);
    for (std::size_t tail = 0; tail < span; ++tail) {
        const int t = tau.at(lat.splice_rank(depth, node_rank, tail));
        if (t < depth)
            throw PrecedenceViolation("rule stops before the shift depth on the subtree");
        map[tail] = t - depth;
    }
    return StoppingRule::from_stopping_map(sub, std::move(map));
}

}  // namespace treexp
