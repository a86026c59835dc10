// collective.hpp: two-mode collective (bright/dark) basis and the named
// motional states built from it.

#pragma once

#include <compare>
#include <map>

#include "phonon/hilbert.hpp"

namespace phonon {

// Label of |psi_n^N>: `total` phonons shared by the two modes, `bright`
// index n in [0, total]. bright == total is the maximally bright state,
// bright == 0 the perfectly dark one.
struct CollectiveIndex {
    int total = 0;
    int bright = 0;

    friend auto operator<=>(const CollectiveIndex&, const CollectiveIndex&) = default;
};

struct CollectiveDecomposition {
    std::map<CollectiveIndex, Complex> entries;
    // Norm of the part of the state outside the represented N range.
    double residual = 0.0;

    Complex amplitude(CollectiveIndex idx) const;
    double weight(CollectiveIndex idx) const { return std::norm(amplitude(idx)); }
    double represented_norm_squared() const;
};

// Largest N for which collective_coeff is evaluated exactly.
inline constexpr int kMaxCollectiveTotal = 60;

/// Coefficient of |m, N-m> in |psi_n^N> for symmetric coupling.
///
/// The alternating sum runs over max(0, n+m-N) <= q <= min(n, m), the range on
/// which every factorial argument is non-negative. Each term is an exact
/// multinomial, summed in 128-bit integers, so no cancellation is lost.
double collective_coeff(int total, int bright, int m);

// Motional coefficients C^N_{m,n} for m = 0..N.
Eigen::VectorXd collective_vector(CollectiveIndex idx);

PureState collective_state(const SpaceConfig& space, CollectiveIndex idx, Level level = Level::Down);
PureState bright_state(const SpaceConfig& space, int total, Level level = Level::Down);
PureState dark_state(const SpaceConfig& space, int total, Level level = Level::Down);

// Two-mode coherent state |alpha, e^{i phi} alpha> on one electronic level.
// Throws SimulationError when the truncation discards more than 1e-6 probability.
PureState coherent_two_mode(const SpaceConfig& space, Complex alpha, double phi, Level level = Level::Down);

// Smallest cutoff satisfying n_max >= |alpha|^2 + 6|alpha| + 4.
int recommended_cutoff(double abs_alpha);

// 1/2 (|0> + |1>)(|0> + e^{i phi}|1>) on the motional factors.
PureState upsilon_state(const SpaceConfig& space, double phi, Level level = Level::Down);

// <psi_n^N | state> for every N <= min cutoff. The state's population must
// sit on a single electronic level.
CollectiveDecomposition decompose(const PureState& state);

} // namespace phonon
