// tomography.hpp: sideband Rabi-signal model and fits of phonon-number
// distributions and coherent displacements.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "phonon/hilbert.hpp"

namespace phonon {

enum class Sideband { Rsb, Bsb };

const char* to_string(Sideband sb);

struct RabiModel {
    double omega0 = 100.0;       // kHz, bare carrier Rabi frequency
    double eta = 0.041;          // Lamb-Dicke parameter
    double decay = 0.0;          // kHz, base decay rate
    double decay_exponent = 0.0; // gamma_n = decay * (n+1)^p

    void validate() const;
    double sideband_frequency(Sideband sb, int n) const;
};

inline constexpr double kEtaMode1 = 0.041;
inline constexpr double kEtaMode2 = 0.044;

struct PhononDistribution {
    std::vector<double> probs;

    int nmax() const { return static_cast<int>(probs.size()) - 1; }
    void validate(double tol = 1e-9) const;
};

struct RabiTrace {
    std::vector<double> times; // ms
    std::vector<double> p_up;
    std::vector<double> sigma; // empty for unweighted data
    Sideband sideband = Sideband::Bsb;
    Mode mode = Mode::One;

    void validate() const;
};

// P(t) = sum_n p_n 1/2 [1 - cos(2 pi Omega_n t) exp(-2 pi gamma_n t)] with
// Omega_n = omega0 eta sqrt(n+1) (BSB) or omega0 eta sqrt(n) (RSB).
std::vector<double> rabi_signal(const PhononDistribution& dist, const RabiModel& model, Sideband sb,
                                std::span<const double> times);

// Columns n = 0..nmax of the linear map p -> P(t).
Eigen::MatrixXd rabi_design(const RabiModel& model, Sideband sb, std::span<const double> times, int nmax);

struct FitOptions {
    std::uint64_t seed = 1;
    int random_starts = 5;
    int max_iterations = 20000;
    // Root-mean-square residual above which the fit is reported as failed.
    double max_rms = 0.25;
};

struct DistributionFit {
    PhononDistribution distribution;
    double residual = 0.0; // weighted sum of squared residuals
    double rms = 0.0;      // unweighted root-mean-square residual
    // Local curvature (reduced Hessian) standard errors; zero on the boundary.
    std::vector<double> stderr_;
};

// Weighted least squares over the probability simplex, jointly on both
// traces. The RSB n = 0 column vanishes, so p_0 is fixed by the BSB trace.
DistributionFit fit_distribution(const RabiTrace& rsb, const RabiTrace& bsb, const RabiModel& model, int nmax = 7,
                                 const FitOptions& options = {});

// Occupations p_0..p_nmax of D(alpha) rho_th(n_th) D(alpha)^dag, renormalized.
std::vector<double> displaced_thermal_populations(double alpha, double n_th, int nmax);

struct CoherentFit {
    double alpha = 0.0;
    double n_th = 0.0;
    double residual = 0.0;
};

// Two-parameter fit of a BSB trace to a displaced thermal state.
CoherentFit fit_coherent_alpha(const RabiTrace& trace, const RabiModel& model, const FitOptions& options = {});

// Binomial (projection-noise) samples of rabi_signal with `shots` repetitions
// per point; shots == 0 returns the noiseless signal. sigma is the binomial
// standard error with the estimate regularized away from 0 and 1.
RabiTrace synthesize_trace(const PhononDistribution& dist, const RabiModel& model, Sideband sb, Mode mode,
                           std::span<const double> times, int shots, std::uint64_t seed);

PhononDistribution poisson_distribution(double mean, int nmax);

} // namespace phonon
