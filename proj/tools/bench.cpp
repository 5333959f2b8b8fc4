// Timing comparison of the OpenMP kernels against the serial reference
// implementations: backward induction, the enumeration oracle, and the tower
// verifier built on top of them.

#include <chrono>
#include <cstdio>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "treexp/engine.hpp"
#include "treexp/gexp.hpp"

using namespace treexp;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <class F>
double time_best_of(int repeats, F&& f) {
    double best = 1e300;
    for (int i = 0; i < repeats; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        f();
        best = std::min(best, seconds_since(t0));
    }
    return best;
}

RandomVariable squared_terminal(const Lattice& lat) {
    return RandomVariable::from_function(lat, [&](const PathId& p) -> XReal {
        const double b = lat.value_at(p, lat.steps());
        return b * b;
    });
}

void row(const char* name, double serial, double parallel, double checksum) {
    std::printf("%-28s %10.4fs %10.4fs %8.2fx   (checksum %.6g)\n", name, serial, parallel,
                serial / parallel, checksum);
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("OpenMP threads: %d\n", omp_get_max_threads());
#else
    std::printf("built without OpenMP; both columns are serial\n");
#endif
    std::printf("%-28s %11s %11s %9s\n", "kernel", "serial", "parallel", "speedup");

    {
        // deep lattice, two volatility levels per node
        const VolLattice vol = build_vol_lattice(VolSpec::finite({1.0, 4.0}), 10, 1.0 / 16);
        const RandomVariable xi = squared_terminal(vol.lattice);
        std::vector<XReal> serial_values, parallel_values;
        const double ts = time_best_of(
            3, [&] { serial_values = reference::dpp_node_values(vol.lattice, vol.family, xi); });
        const double tp =
            time_best_of(3, [&] { parallel_values = dpp_node_values(vol.lattice, vol.family, xi); });
        if (serial_values != parallel_values) {
            std::printf("MISMATCH in dpp_node_values\n");
            return 1;
        }
        row("backward induction (K=10)", ts, tp, serial_values[0].v);
    }

    {
        // shallow lattice with a large enumeration at the root
        const Lattice lat = Lattice::homogeneous(3, 1.0, {-1.0, 1.0});
        std::vector<RectangularFamily::LawSet> sets(lat.nonterminal_count());
        for (auto& set : sets)
            for (int l = 0; l < 6; ++l)
                set.push_back({0.5 + 0.05 * l, 0.5 - 0.05 * l});
        const Family family{RectangularFamily(lat, std::move(sets))};
        const RandomVariable xi = squared_terminal(lat);
        const StoppingRule tau = StoppingRule::constant(lat, 0);
        const EnumOptions opts{std::size_t{1} << 30};
        std::vector<XReal> serial_values, parallel_values;
        const double ts = time_best_of(3, [&] {
            serial_values = reference::oracle_boundary_values(lat, family, tau, xi, opts);
        });
        const double tp = time_best_of(
            3, [&] { parallel_values = oracle_boundary_values(lat, family, tau, xi, opts); });
        if (serial_values != parallel_values) {
            std::printf("MISMATCH in oracle_boundary_values\n");
            return 1;
        }
        row("enumeration oracle (6^7)", ts, tp, serial_values[0].v);

        const StoppingRule sigma = StoppingRule::constant(lat, 1);
        const StoppingRule tau2 = StoppingRule::constant(lat, 2);
        TowerReport tr;
        const double tv =
            time_best_of(3, [&] { tr = verify_tower(lat, family, sigma, tau2, xi, opts); });
        std::printf("%-28s %10s %10.4fs %9s   (deviation %.3g)\n", "tower verifier", "-", tv, "-",
                    tr.deviation);
    }
    return 0;
}
