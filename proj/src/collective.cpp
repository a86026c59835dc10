#include "phonon/collective.hpp"

#include <cmath>
#include <string>

namespace phonon {

namespace {

using Int128 = __int128;

Int128 binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    Int128 r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// N! / (a! b! c! d!) with a + b + c + d = N.
Int128 multinomial(int total, int a, int b, int c) {
    return binomial(total, a) * binomial(total - a, b) * binomial(total - a - b, c);
}

long double log_factorial(int n) {
    return std::lgamma(static_cast<long double>(n) + 1.0L);
}

void check_index(int total, int bright) {
    if (total < 0 || bright < 0 || bright > total) {
        throw std::out_of_range("collective index (N=" + std::to_string(total) + ", n=" + std::to_string(bright) +
                                ") requires 0 <= n <= N");
    }
    if (total > kMaxCollectiveTotal) {
        throw std::out_of_range("collective basis supports N <= " + std::to_string(kMaxCollectiveTotal));
    }
}

} // namespace

Complex CollectiveDecomposition::amplitude(CollectiveIndex idx) const {
    const auto it = entries.find(idx);
    return it == entries.end() ? Complex{0.0, 0.0} : it->second;
}

double CollectiveDecomposition::represented_norm_squared() const {
    double s = 0.0;
    for (const auto& [idx, amp] : entries) s += std::norm(amp);
    return s;
}

double collective_coeff(int total, int bright, int m) {
    check_index(total, bright);
    if (m < 0 || m > total) {
        throw std::out_of_range("collective_coeff: m=" + std::to_string(m) + " outside [0, N]");
    }
    const int q_lo = std::max(0, bright + m - total);
    const int q_hi = std::min(bright, m);
    Int128 sum = 0;
    for (int q = q_lo; q <= q_hi; ++q) {
        const Int128 term = multinomial(total, q, bright - q, m - q);
        sum += ((m - q) % 2 == 0) ? term : -term;
    }
    if (sum == 0) return 0.0;
    const long double log_prefactor =
        0.5L * (log_factorial(bright) + log_factorial(total - bright) + log_factorial(m) + log_factorial(total - m) -
                total * std::log(2.0L)) -
        log_factorial(total);
    return static_cast<double>(static_cast<long double>(sum) * std::exp(log_prefactor));
}

Eigen::VectorXd collective_vector(CollectiveIndex idx) {
    check_index(idx.total, idx.bright);
    Eigen::VectorXd c(idx.total + 1);
    for (int m = 0; m <= idx.total; ++m) c(m) = collective_coeff(idx.total, idx.bright, m);
    return c;
}

PureState collective_state(const SpaceConfig& space, CollectiveIndex idx, Level level) {
    check_index(idx.total, idx.bright);
    if (idx.total > std::min(space.n_max_1(), space.n_max_2())) {
        throw std::out_of_range("collective_state: N=" + std::to_string(idx.total) + " exceeds the Fock cutoff");
    }
    const Eigen::VectorXd c = collective_vector(idx);
    CVector v = CVector::Zero(space.dim());
    for (int m = 0; m <= idx.total; ++m) v(space.index(level, m, idx.total - m)) = c(m);
    return {space, v, 1.0};
}

PureState bright_state(const SpaceConfig& space, int total, Level level) {
    return collective_state(space, {total, total}, level);
}

PureState dark_state(const SpaceConfig& space, int total, Level level) {
    return collective_state(space, {total, 0}, level);
}

int recommended_cutoff(double abs_alpha) {
    return static_cast<int>(std::ceil(abs_alpha * abs_alpha + 6.0 * abs_alpha + 4.0));
}

PureState coherent_two_mode(const SpaceConfig& space, Complex alpha, double phi, Level level) {
    const Complex alpha2 = alpha * std::polar(1.0, phi);
    const CVector col1 = single_mode_displacement(space.n_max_1(), alpha).col(0);
    const CVector col2 = single_mode_displacement(space.n_max_2(), alpha2).col(0);
    CVector motional(space.motional_dim());
    for (int n1 = 0; n1 <= space.n_max_1(); ++n1) {
        for (int n2 = 0; n2 <= space.n_max_2(); ++n2) {
            motional(n1 * (space.n_max_2() + 1) + n2) = col1(n1) * col2(n2);
        }
    }
    const double lost = 1.0 - motional.squaredNorm();
    if (lost > 1e-6) {
        throw SimulationError("coherent_two_mode: truncation discards " + std::to_string(lost) +
                              " probability; raise the cutoff to at least " +
                              std::to_string(recommended_cutoff(std::abs(alpha))));
    }
    return with_level(space, level, motional / motional.norm());
}

PureState upsilon_state(const SpaceConfig& space, double phi, Level level) {
    const Complex e = std::polar(1.0, phi);
    CVector v = CVector::Zero(space.dim());
    v(space.index(level, 0, 0)) = 0.5;
    v(space.index(level, 0, 1)) = 0.5 * e;
    v(space.index(level, 1, 0)) = 0.5;
    v(space.index(level, 1, 1)) = 0.5 * e;
    return {space, v, 1.0};
}

CollectiveDecomposition decompose(const PureState& state) {
    const SpaceConfig& space = state.space;
    const double total_norm2 = state.amplitudes.squaredNorm();
    int occupied = 0;
    Level level = Level::Down;
    for (int e = 0; e < space.levels(); ++e) {
        if (level_population(state, static_cast<Level>(e)) > 1e-12 * std::max(1.0, total_norm2)) {
            ++occupied;
            level = static_cast<Level>(e);
        }
    }
    if (occupied > 1) {
        throw std::invalid_argument("decompose: state is spread over several electronic levels");
    }

    CollectiveDecomposition out;
    const int max_total = std::min(space.n_max_1(), space.n_max_2());
    for (int total = 0; total <= max_total; ++total) {
        for (int bright = 0; bright <= total; ++bright) {
            Complex amp = 0.0;
            for (int m = 0; m <= total; ++m) {
                amp += collective_coeff(total, bright, m) * state.amplitudes(space.index(level, m, total - m));
            }
            out.entries[{total, bright}] = amp;
        }
    }
    out.residual = std::sqrt(std::max(0.0, total_norm2 - out.represented_norm_squared()));
    return out;
}

} // namespace phonon
