#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "phonon/experiments.hpp"

#include <cmath>

using namespace phonon;

namespace {

// Largest change of any p_up column between the default cutoffs and twice them.
double doubling_change(ExperimentConfig c) {
    const auto base = run(c);
    c.n_max_1 *= 2;
    c.n_max_2 *= 2;
    const auto doubled = run(c);
    double worst = 0.0;
    for (const auto& col : base.columns) {
        if (col.name.rfind("p_up", 0) != 0) continue;
        const auto a = base.numeric_column(col.name);
        const auto b = doubled.numeric_column(col.name);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    }
    return worst;
}

} // namespace

// Table I coherent rates with decoherence; the doubled space has 1058 states,
// so the scans are shortened.
TEST_CASE("RABI_COHERENT at doubled cutoff") {
    auto c = default_config(ExperimentKind::RabiCoherent);
    c.scan.stop = 0.05;
    c.scan.points = 11;
    CHECK(doubling_change(c) < 1e-4);
}

TEST_CASE("PHASE_SCAN_BOTH at doubled cutoff") {
    auto c = default_config(ExperimentKind::PhaseScanBoth);
    c.scan.points = 9;
    CHECK(doubling_change(c) < 1e-4);
}
