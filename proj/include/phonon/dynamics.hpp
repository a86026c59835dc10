// dynamics.hpp: interaction Hamiltonian, collapse operators, closed-system
// propagation and Lindblad master-equation integration.
//
// Units: rates in kHz (cycles per ms), times in ms. The 2*pi conversion to
// angular frequency happens only inside the operator constructors.

#pragma once

#include <functional>
#include <span>
#include <vector>

#include "phonon/hilbert.hpp"

namespace phonon {

struct SimParams {
    double g1 = 0.0;       // kHz, sideband coupling of mode 1
    double g2 = 0.0;       // kHz, sideband coupling of mode 2
    double phi = 0.0;      // rad, phase of the mode-2 coupling term
    double gamma_m = 0.0;  // kHz, motional dephasing (both modes)
    double gamma_e = 0.0;  // kHz, electronic dephasing
    double n_th = 0.0;     // mean thermal occupation per mode
    double contrast = 1.0; // readout rescaling A
    double offset = 0.0;   // readout offset C

    void validate() const;
    // Additionally requires g1, g2 > 0.
    void validate_bichromatic() const;

    friend bool operator==(const SimParams&, const SimParams&) = default;
};

struct Trajectory {
    std::vector<double> times;      // ms
    std::vector<double> p_up;       // population of the Up subspace
    std::vector<double> p_reported; // after the readout model; equals p_up until applied
    std::vector<double> trace_err;  // |tr rho - 1| before renormalization (norm error for kets)
    std::vector<DensityOp> states;  // filled by evolve_lindblad when requested
    std::vector<PureState> kets;    // filled by evolve_unitary
};

// H = 2pi g1 (s+ a1 + s- a1^dag) + 2pi g2 (e^{-i phi} s+ a2 + e^{i phi} s- a2^dag), in rad/ms.
// With phi = 0 the state |Down>|B^1> is maximally coupled; with phi = pi it is dark.
// Either coupling may be zero, which gives the single-tone reference Hamiltonian.
OperatorMatrix interaction_hamiltonian(const SpaceConfig& space, const SimParams& params);

// sqrt(2pi gamma_m) a_i^dag a_i for both modes and sqrt(2pi gamma_e) s+ s-.
// Operators with zero rate are omitted.
std::vector<OperatorMatrix> collapse_operators(const SpaceConfig& space, const SimParams& params);

// Groups basis indices into sets closed under every given operator (connected
// components of the union of their off-diagonal sparsity patterns).
std::vector<std::vector<Index>> invariant_blocks(const SpaceConfig& space, std::span<const CMatrix* const> ops);

// exp(-i H t) via eigendecomposition of each invariant block of H.
class UnitaryPropagator {
public:
    explicit UnitaryPropagator(const OperatorMatrix& hamiltonian);

    PureState propagate(const PureState& state, double t) const;
    const SpaceConfig& space() const { return space_; }

private:
    struct Block {
        std::vector<Index> indices;
        CMatrix vectors;
        Eigen::VectorXd energies;
    };
    SpaceConfig space_;
    std::vector<Block> blocks_;
};

std::vector<double> linspace(double start, double stop, int points);

Trajectory evolve_unitary(const OperatorMatrix& hamiltonian, const PureState& state, double duration, int samples);
Trajectory evolve_unitary(const OperatorMatrix& hamiltonian, const PureState& state, std::span<const double> times);

struct LindbladOptions {
    bool store_states = false;
    // Coherences between different excitation manifolds never feed back into
    // populations. Dropping them gives the same p_up at a fraction of the cost.
    bool keep_manifold_coherences = true;
    double step_bound = 0.05;       // ||L|| * h
    // Richardson estimate accumulated over the run, in units of max |rho_ij|.
    double error_tolerance = 1e-10;
    double trace_tolerance = 1e-8;
    // Block pairs whose entries are all below this times max |rho_ij| are
    // held constant; their effect on any population is at most their weight.
    double negligible_block = 1e-15;
    double positivity_tolerance = 1e-6;
    // Full-matrix eigenvalue check up to this dimension, per-block check above it.
    Index full_positivity_check_dim = 200;
};

/// Integrates d rho/dt = -i[H, rho] + sum_n (C rho C^dag - 1/2 {C^dag C, rho})
/// with fixed-step RK4 on each invariant block pair of rho.
///
/// The step h satisfies ||L_block|| h <= step_bound and is checked once per
/// block pair against two half steps; the bound is tightened until the
/// estimated error accumulated to the last grid time meets error_tolerance.
/// ||L_block|| is bounded by the block norms of H plus, for diagonal C, the
/// largest entry of the Hadamard dissipator. Outputs are renormalized by the
/// trace; a trace drift above trace_tolerance or an eigenvalue below
/// -positivity_tolerance raises SimulationError naming the time.
Trajectory evolve_lindblad(const OperatorMatrix& hamiltonian, const std::vector<OperatorMatrix>& collapse,
                           const DensityOp& rho0, std::span<const double> t_grid, const LindbladOptions& options = {});

double reported_population(double p_up, const SimParams& params);
// p_reported = offset + contrast * p_up, clipped to [0, 1].
Trajectory apply_readout_model(Trajectory trajectory, const SimParams& params);

struct Peak {
    bool found = false;
    double time = 0.0;
    double value = 0.0;
};

// First local maximum of a uniformly sampled curve, refined by a parabola
// through the three samples around it. Rises smaller than min_rise are ignored.
Peak first_peak(std::span<const double> times, std::span<const double> values, double min_rise = 1e-9);

// First local maximum of f on [0, t_max], located on a grid of `samples`
// points and refined by golden-section search to `tol`.
Peak refine_first_peak(const std::function<double(double)>& f, double t_max, int samples = 401,
                       double tol = 1e-13);

} // namespace phonon
