#include "phonon/sequences.hpp"

#include <string>

#include <cmath>

#include <unsupported/Eigen/KroneckerProduct>
#include <stdexcept>

namespace phonon {

namespace {

constexpr double kProjectionFloor = 1e-12;
constexpr double kTruncationTolerance = 1e-6;

struct KindName {
    PulseKind kind;
    const char* name;
};

constexpr KindName kKindNames[] = {
    {PulseKind::CarrierA, "CAR_A"}, {PulseKind::CarrierB, "CAR_B"},
    {PulseKind::Rsb1, "RSB1"},      {PulseKind::Rsb2, "RSB2"},
    {PulseKind::Bsb1, "BSB1"},      {PulseKind::Bsb2, "BSB2"},
    {PulseKind::Bichromatic, "BICHROMATIC_RSB"}, {PulseKind::Tickle, "TICKLE"},
};

void rotate_pair(CMatrix& u, Index g, Index e, double angle, double phase) {
    const double c = std::cos(0.5 * angle);
    const double s = std::sin(0.5 * angle);
    u(g, g) = c;
    u(e, e) = c;
    u(e, g) = std::polar(s, phase);
    u(g, e) = -std::polar(s, -phase);
}

} // namespace

const char* to_string(PulseKind kind) {
    for (const auto& k : kKindNames) {
        if (k.kind == kind) return k.name;
    }
    return "?";
}

PulseKind pulse_kind_from_string(const std::string& name) {
    for (const auto& k : kKindNames) {
        if (name == k.name) return k.kind;
    }
    throw std::invalid_argument("unknown pulse kind '" + name + "'");
}

bool is_resonant(PulseKind kind) {
    return kind != PulseKind::Bichromatic && kind != PulseKind::Tickle;
}

void PulseSpec::validate() const {
    const std::string name = to_string(kind);
    if (is_resonant(kind)) {
        if (!area || duration) throw std::invalid_argument(name + " pulse needs an area and no duration");
        if (!std::isfinite(*area)) throw std::invalid_argument(name + " pulse area must be finite");
    } else if (kind == PulseKind::Bichromatic) {
        if (!duration || area) throw std::invalid_argument(name + " pulse needs a duration and no area");
        if (!(*duration >= 0.0)) throw std::invalid_argument(name + " pulse duration must be >= 0");
    } else if (area || duration) {
        throw std::invalid_argument(name + " takes alpha1/alpha2 only");
    }
    if (!std::isfinite(phase)) throw std::invalid_argument(name + " pulse phase must be finite");
}

CMatrix resonant_unitary(const SpaceConfig& space, PulseKind kind, double area, double phase) {
    if (!is_resonant(kind)) throw std::invalid_argument("resonant_unitary: not a resonant pulse kind");
    if (kind == PulseKind::CarrierB && !space.has_level(Level::Aux)) {
        throw std::invalid_argument("CAR_B needs a space with three electronic levels");
    }
    CMatrix u = CMatrix::Identity(space.dim(), space.dim());
    for (int n1 = 0; n1 <= space.n_max_1(); ++n1) {
        for (int n2 = 0; n2 <= space.n_max_2(); ++n2) {
            const Index g = space.index(Level::Down, n1, n2);
            switch (kind) {
                case PulseKind::CarrierA:
                    rotate_pair(u, g, space.index(Level::Up, n1, n2), area, phase);
                    break;
                case PulseKind::CarrierB:
                    rotate_pair(u, g, space.index(Level::Aux, n1, n2), area, phase);
                    break;
                case PulseKind::Bsb1:
                    if (n1 < space.n_max_1()) {
                        rotate_pair(u, g, space.index(Level::Up, n1 + 1, n2), area * std::sqrt(n1 + 1.0), phase);
                    }
                    break;
                case PulseKind::Bsb2:
                    if (n2 < space.n_max_2()) {
                        rotate_pair(u, g, space.index(Level::Up, n1, n2 + 1), area * std::sqrt(n2 + 1.0), phase);
                    }
                    break;
                case PulseKind::Rsb1:
                    if (n1 > 0) rotate_pair(u, g, space.index(Level::Up, n1 - 1, n2), area * std::sqrt(n1), phase);
                    break;
                case PulseKind::Rsb2:
                    if (n2 > 0) rotate_pair(u, g, space.index(Level::Up, n1, n2 - 1), area * std::sqrt(n2), phase);
                    break;
                default:
                    break;
            }
        }
    }
    return u;
}

PureState resonant_pulse(const PureState& state, PulseKind kind, double area, double phase) {
    const CMatrix u = resonant_unitary(state.space, kind, area, phase);
    return {state.space, u * state.amplitudes, state.weight};
}

DensityOp resonant_pulse(const DensityOp& rho, PulseKind kind, double area, double phase) {
    const CMatrix u = resonant_unitary(rho.space, kind, area, phase);
    return {rho.space, u * rho.matrix * u.adjoint(), rho.weight};
}

PureState bichromatic_pulse(const PureState& state, const SimParams& params, double duration) {
    params.validate_bichromatic();
    if (!(duration >= 0.0)) throw std::invalid_argument("bichromatic_pulse: duration must be >= 0");
    const UnitaryPropagator u(interaction_hamiltonian(state.space, params));
    return u.propagate(state, duration);
}

DensityOp bichromatic_pulse(const DensityOp& rho, const SimParams& params, double duration) {
    params.validate_bichromatic();
    if (!(duration >= 0.0)) throw std::invalid_argument("bichromatic_pulse: duration must be >= 0");
    if (duration == 0.0) return rho;
    LindbladOptions opts;
    opts.store_states = true;
    const double t[] = {duration};
    auto traj = evolve_lindblad(interaction_hamiltonian(rho.space, params), collapse_operators(rho.space, params), rho,
                                t, opts);
    DensityOp out = std::move(traj.states.back());
    out.weight = rho.weight;
    return out;
}

PureState tickle(const PureState& state, Complex alpha1, Complex alpha2) {
    PureState out = apply_motional(motional_displacement(state.space, alpha1, alpha2), state);
    const double lost = state.amplitudes.squaredNorm() - out.amplitudes.squaredNorm();
    if (lost > kTruncationTolerance) {
        throw SimulationError("tickle: truncation discards " + std::to_string(lost) + " probability");
    }
    out.amplitudes /= out.amplitudes.norm();
    return out;
}

DensityOp tickle(const DensityOp& rho, Complex alpha1, Complex alpha2) {
    DensityOp out = apply_motional(motional_displacement(rho.space, alpha1, alpha2), rho);
    const double kept = out.trace().real();
    const double lost = rho.trace().real() - kept;
    if (lost > kTruncationTolerance) {
        throw SimulationError("tickle: truncation discards " + std::to_string(lost) + " probability");
    }
    out.matrix /= kept;
    return out;
}

DensityOp thermal_state(const SpaceConfig& space, double n_th) {
    if (!(n_th >= 0.0) || !std::isfinite(n_th)) throw std::invalid_argument("thermal_state: n_th must be >= 0");
    auto geometric = [n_th](int n_max) {
        Eigen::VectorXd p(n_max + 1);
        const double ratio = n_th / (1.0 + n_th);
        for (int n = 0; n <= n_max; ++n) p(n) = std::pow(ratio, n) / (1.0 + n_th);
        return Eigen::VectorXd(p / p.sum());
    };
    const Eigen::VectorXd p1 = geometric(space.n_max_1());
    const Eigen::VectorXd p2 = geometric(space.n_max_2());
    CMatrix rho = CMatrix::Zero(space.dim(), space.dim());
    for (int n1 = 0; n1 <= space.n_max_1(); ++n1) {
        for (int n2 = 0; n2 <= space.n_max_2(); ++n2) {
            const Index i = space.index(Level::Down, n1, n2);
            rho(i, i) = p1(n1) * p2(n2);
        }
    }
    return {space, rho, 1.0};
}

DisplacedThermal displaced_thermal_state(const SpaceConfig& space, double n_th, Complex alpha1, Complex alpha2) {
    if (!(n_th >= 0.0) || !std::isfinite(n_th)) throw std::invalid_argument("displaced_thermal_state: n_th must be >= 0");
    auto mode_state = [n_th](int n_max, Complex alpha) {
        Eigen::VectorXd p(n_max + 1);
        const double ratio = n_th / (1.0 + n_th);
        for (int n = 0; n <= n_max; ++n) p(n) = std::pow(ratio, n) / (1.0 + n_th);
        p /= p.sum();
        const CMatrix d = single_mode_displacement(n_max, alpha);
        return CMatrix(d * p.cast<Complex>().asDiagonal() * d.adjoint());
    };
    const CMatrix rho1 = mode_state(space.n_max_1(), alpha1);
    const CMatrix rho2 = mode_state(space.n_max_2(), alpha2);
    const double kept = rho1.trace().real() * rho2.trace().real();
    const double lost = 1.0 - kept;
    if (lost > kTruncationTolerance) {
        throw SimulationError("tickle: truncation discards " + std::to_string(lost) + " probability");
    }
    CMatrix rho = CMatrix::Zero(space.dim(), space.dim());
    const Index m = space.motional_dim();
    rho.topLeftCorner(m, m) = Eigen::kroneckerProduct(rho1, rho2).eval() / kept;
    return {{space, std::move(rho), 1.0}, lost};
}

namespace {

Eigen::VectorXd kept_mask(const SpaceConfig& space, const std::set<Level>& keep) {
    if (keep.empty()) throw std::invalid_argument("postselect: no levels kept");
    Eigen::VectorXd mask = Eigen::VectorXd::Zero(space.dim());
    for (Level l : keep) {
        if (!space.has_level(l)) throw std::invalid_argument("postselect: level not in space");
        mask.segment(static_cast<Index>(l) * space.motional_dim(), space.motional_dim()).setOnes();
    }
    return mask;
}

void require_survivors(double probability) {
    if (probability < kProjectionFloor) {
        throw SimulationError("postselect: survival probability " + std::to_string(probability) +
                              " (projection removes the whole state)");
    }
}

} // namespace

Postselected<PureState> postselect(const PureState& state, const std::set<Level>& keep) {
    const Eigen::VectorXd mask = kept_mask(state.space, keep);
    CVector v = mask.cast<Complex>().cwiseProduct(state.amplitudes);
    const double p = v.squaredNorm() / state.amplitudes.squaredNorm();
    require_survivors(p);
    v /= v.norm();
    return {{state.space, v, state.weight * p}, p};
}

Postselected<DensityOp> postselect(const DensityOp& rho, const std::set<Level>& keep) {
    const Eigen::VectorXd mask = kept_mask(rho.space, keep);
    CMatrix m = mask.cast<Complex>().asDiagonal() * rho.matrix * mask.cast<Complex>().asDiagonal();
    const double p = m.trace().real() / rho.trace().real();
    require_survivors(p);
    m /= m.trace().real();
    return {{rho.space, m, rho.weight * p}, p};
}

double upsilon_bsb2_area() {
    return 2.0 * std::asin(1.0 / std::sqrt(3.0));
}

namespace {

PulseSpec pulse(PulseKind kind, double area, double phase = 0.0) {
    PulseSpec p;
    p.kind = kind;
    p.area = area;
    p.phase = phase;
    return p;
}

} // namespace

SequenceSpec single_phonon_program(double phi, bool final_carrier) {
    SequenceSpec spec;
    spec.steps.push_back(pulse(PulseKind::Bsb1, kPi / 2.0, phi));
    spec.steps.push_back(pulse(PulseKind::Bsb2, kPi));
    spec.steps.push_back(Postselect{{Level::Up}});
    if (final_carrier) spec.steps.push_back(pulse(PulseKind::CarrierA, kPi, kPi));
    return spec;
}

PureState prepare_single_phonon(const SpaceConfig& space, double phi, bool final_carrier) {
    return run_pure_sequence(single_phonon_program(phi, final_carrier), space);
}

SequenceSpec upsilon_program(double phi1, double phi2, double bsb2_area) {
    SequenceSpec spec;
    auto& s = spec.steps;
    // Split |Down,0,0> into |Down,0,0>, |Up,1,0>, |Up,0,1> with equal weights.
    s.push_back(pulse(PulseKind::Bsb1, kPi / 3.0));
    s.push_back(pulse(PulseKind::Bsb2, bsb2_area, phi2));
    // Move the ground branch to Aux and the excited branches to Down.
    s.push_back(pulse(PulseKind::CarrierA, kPi));
    s.push_back(pulse(PulseKind::CarrierB, kPi));
    s.push_back(Postselect{{Level::Up, Level::Aux}});
    s.push_back(pulse(PulseKind::CarrierA, kPi));
    // Build the |1,1> component from |1,0> and |0,1>.
    s.push_back(pulse(PulseKind::Bsb1, kPi / 2.0, phi1));
    s.push_back(pulse(PulseKind::Rsb2, kPi, kPi));
    s.push_back(pulse(PulseKind::CarrierB, kPi / 2.0));
    s.push_back(Postselect{{Level::Aux}});
    s.push_back(pulse(PulseKind::CarrierB, kPi));
    return spec;
}

SequenceResult run_sequence(const SequenceSpec& spec, const SpaceConfig& space, const SimParams& params) {
    SequenceResult result{spec.thermal_n_th ? std::variant<PureState, DensityOp>(thermal_state(space, *spec.thermal_n_th))
                                            : std::variant<PureState, DensityOp>(basis_state(space, Level::Down, 0, 0)),
                          {}, 1.0};
    for (std::size_t i = 0; i < spec.steps.size(); ++i) {
        const auto& step = spec.steps[i];
        try {
            if (const auto* p = std::get_if<PulseSpec>(&step)) {
                p->validate();
                std::visit(
                    [&](auto& st) {
                        if (is_resonant(p->kind)) {
                            st = resonant_pulse(st, p->kind, *p->area, p->phase);
                        } else if (p->kind == PulseKind::Bichromatic) {
                            SimParams q = params;
                            q.phi = params.phi + p->phase;
                            st = bichromatic_pulse(st, q, *p->duration);
                        } else {
                            st = tickle(st, p->alpha1, p->alpha2);
                        }
                    },
                    result.state);
            } else {
                const auto& sel = std::get<Postselect>(step);
                std::visit(
                    [&](auto& st) {
                        auto r = postselect(st, sel.keep);
                        st = std::move(r.state);
                        result.survival.push_back(r.probability);
                    },
                    result.state);
            }
        } catch (const std::exception& e) {
            throw SimulationError("sequence step " + std::to_string(i + 1) + ": " + e.what());
        }
    }
    result.weight = std::visit([](const auto& st) { return st.weight; }, result.state);
    return result;
}

PureState run_pure_sequence(const SequenceSpec& spec, const SpaceConfig& space, const SimParams& params) {
    if (spec.thermal_n_th) throw std::invalid_argument("run_pure_sequence: thermal start gives a mixed state");
    return std::get<PureState>(run_sequence(spec, space, params).state);
}

UpsilonPreparation prepare_upsilon(const SpaceConfig& space, double phi1, double phi2, double bsb2_area) {
    if (!space.has_level(Level::Aux)) throw std::invalid_argument("prepare_upsilon needs three electronic levels");
    auto r = run_sequence(upsilon_program(phi1, phi2, bsb2_area), space);
    return {std::get<PureState>(std::move(r.state)), std::move(r.survival)};
}

double tickle_duration_for(double alpha, Mode mode) {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("tickle_duration_for: alpha must be >= 0");
    return alpha / (mode == Mode::One ? kTickleRateMode1 : kTickleRateMode2);
}

} // namespace phonon
