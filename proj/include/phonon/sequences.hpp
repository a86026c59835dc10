// sequences.hpp: ideal pulse primitives, postselection and the scripted
// state-preparation programs.

#pragma once

#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "phonon/dynamics.hpp"
#include "phonon/hilbert.hpp"

namespace phonon {

enum class PulseKind { CarrierA, CarrierB, Rsb1, Rsb2, Bsb1, Bsb2, Bichromatic, Tickle };

const char* to_string(PulseKind kind);
PulseKind pulse_kind_from_string(const std::string& name);
bool is_resonant(PulseKind kind);

// Resonant kinds take `area` (rad). Bichromatic takes `duration` (ms).
// Tickle takes alpha1/alpha2 and neither area nor duration.
struct PulseSpec {
    PulseKind kind = PulseKind::CarrierA;
    std::optional<double> area;
    std::optional<double> duration;
    double phase = 0.0;
    Complex alpha1 = 0.0;
    Complex alpha2 = 0.0;

    void validate() const;
    friend bool operator==(const PulseSpec&, const PulseSpec&) = default;
};

struct Postselect {
    std::set<Level> keep;
    friend bool operator==(const Postselect&, const Postselect&) = default;
};

using SequenceStep = std::variant<PulseSpec, Postselect>;

struct SequenceSpec {
    std::vector<SequenceStep> steps;
    // Empty: |Down, 0, 0>. Otherwise a thermal density matrix with this n_th.
    std::optional<double> thermal_n_th;

    friend bool operator==(const SequenceSpec&, const SequenceSpec&) = default;
};

// Full-space unitary of an ideal resonant pulse. A pulse with phase p
// rotates each addressed pair (g, e) as
//   |g> -> cos(t/2)|g> + e^{ip} sin(t/2)|e>,  |e> -> cos(t/2)|e> - e^{-ip} sin(t/2)|g>.
// Carrier pairs use t = area. Sideband pairs |n> <-> |n+1> use
// t = area * sqrt(n+1); pairs whose partner lies above the cutoff are left alone.
CMatrix resonant_unitary(const SpaceConfig& space, PulseKind kind, double area, double phase);

PureState resonant_pulse(const PureState& state, PulseKind kind, double area, double phase);
DensityOp resonant_pulse(const DensityOp& rho, PulseKind kind, double area, double phase);

PureState bichromatic_pulse(const PureState& state, const SimParams& params, double duration);
DensityOp bichromatic_pulse(const DensityOp& rho, const SimParams& params, double duration);

// Instantaneous displacement D(alpha1) x D(alpha2). Throws SimulationError
// when the truncation discards more than 1e-6 probability.
PureState tickle(const PureState& state, Complex alpha1, Complex alpha2);
DensityOp tickle(const DensityOp& rho, Complex alpha1, Complex alpha2);

// Product of per-mode geometric distributions on |Down>, truncated and renormalized.
DensityOp thermal_state(const SpaceConfig& space, double n_th);

struct DisplacedThermal {
    DensityOp state;
    double truncation_loss; // probability the cutoff discarded before renormalizing
};

// tickle(thermal_state(space, n_th), alpha1, alpha2), assembled as a Kronecker
// product of the two single-mode states instead of a full-space conjugation.
DisplacedThermal displaced_thermal_state(const SpaceConfig& space, double n_th, Complex alpha1, Complex alpha2);

template <class State>
struct Postselected {
    State state;
    double probability = 0.0;
};

// Projects onto the kept electronic levels, renormalizes and multiplies the
// weight by the survival probability.
Postselected<PureState> postselect(const PureState& state, const std::set<Level>& keep);
Postselected<DensityOp> postselect(const DensityOp& rho, const std::set<Level>& keep);

// Default BSB2 area for the Upsilon program: splits the remaining ground
// amplitude sqrt(2/3) into equal halves.
double upsilon_bsb2_area();

// (|0,1> + e^{i phi}|1,0>)/sqrt(2). With final_carrier the ion ends in Down,
// otherwise in Up.
SequenceSpec single_phonon_program(double phi, bool final_carrier = true);
PureState prepare_single_phonon(const SpaceConfig& space, double phi, bool final_carrier = true);

// 1/2 |Down> (|0,0> + |1,0> + e^{i phi2}|0,1> + e^{i phi1}|1,1>). Needs three levels.
SequenceSpec upsilon_program(double phi1, double phi2, double bsb2_area = upsilon_bsb2_area());

struct SequenceResult {
    std::variant<PureState, DensityOp> state;
    std::vector<double> survival; // one entry per postselection step
    double weight = 1.0;
};

SequenceResult run_sequence(const SequenceSpec& spec, const SpaceConfig& space, const SimParams& params = {});

// Ket of a sequence that started from the motional ground state.
PureState run_pure_sequence(const SequenceSpec& spec, const SpaceConfig& space, const SimParams& params = {});

struct UpsilonPreparation {
    PureState state;
    std::vector<double> survival;
};
UpsilonPreparation prepare_upsilon(const SpaceConfig& space, double phi1, double phi2,
                                   double bsb2_area = upsilon_bsb2_area());

// Tickle calibration: alpha grows linearly at these rates (1/ms).
inline constexpr double kTickleRateMode1 = 6.53;
inline constexpr double kTickleRateMode2 = 8.81;

double tickle_duration_for(double alpha, Mode mode);

} // namespace phonon
