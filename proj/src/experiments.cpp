#include "phonon/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <thread>

#include "phonon/collective.hpp"
#include "phonon/config.hpp"
#include "phonon/sequences.hpp"

namespace phonon {

namespace {

const std::vector<CatalogueEntry> kCatalogue = {
    {ExperimentKind::PhaseScanFock, "PHASE_SCAN_FOCK", "Fig. 3(a)",
     "single-phonon state vs relative phase after a fixed bichromatic pulse"},
    {ExperimentKind::RabiFock, "RABI_FOCK", "Fig. 4(a)", "Rabi oscillations of |B1>, |D1> and |0,1> with the ion in Down"},
    {ExperimentKind::DistributionsFock, "DISTRIBUTIONS_FOCK", "Fig. 4(b-e)",
     "per-mode phonon distributions after bichromatic pi pulses"},
    {ExperimentKind::RabiCoherent, "RABI_COHERENT", "Fig. 5", "two-mode coherent states |a,a>, |a,-a>, |a,0>"},
    {ExperimentKind::RabiUpsilon, "RABI_UPSILON", "Fig. 6(a)", "Upsilon states for phi = 0, pi/2, pi"},
    {ExperimentKind::PhaseScanBoth, "PHASE_SCAN_BOTH", "Fig. 6(b)",
     "Upsilon and coherent states vs phase after a bichromatic pi pulse"},
    {ExperimentKind::RabiExcited, "RABI_EXCITED", "Fig. 10", "Rabi oscillations with the ion initially in Up"},
    {ExperimentKind::TomoRoundtrip, "TOMO_ROUNDTRIP", "Figs. 7-9", "sideband tomography of ideal prepared states"},
};

} // namespace

const std::vector<CatalogueEntry>& catalogue() {
    return kCatalogue;
}

const CatalogueEntry& catalogue_entry(ExperimentKind kind) {
    for (const auto& e : kCatalogue) {
        if (e.kind == kind) return e;
    }
    throw std::invalid_argument("unknown experiment kind");
}

ExperimentKind experiment_from_string(const std::string& name) {
    for (const auto& e : kCatalogue) {
        if (name == e.name) return e.kind;
    }
    throw std::invalid_argument("unknown experiment '" + name + "'");
}

std::string file_stem(ExperimentKind kind) {
    std::string s = catalogue_entry(kind).name;
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

SimParams table1_defaults(Table1Row row) {
    SimParams p;
    switch (row) {
        case Table1Row::Fock:
            p.g1 = p.g2 = 5.2;
            p.gamma_m = 0.0;
            p.gamma_e = 1.5;
            p.contrast = 0.94;
            p.offset = 0.03;
            break;
        case Table1Row::Coherent:
            p.g1 = p.g2 = 7.1;
            p.gamma_m = 0.11;
            p.gamma_e = 3.8;
            p.contrast = 1.0;
            p.offset = 0.0;
            p.n_th = 0.025;
            break;
        case Table1Row::Upsilon:
            p.g1 = p.g2 = 7.3;
            p.gamma_m = 0.28;
            p.gamma_e = 2.9;
            p.contrast = 0.68;
            p.offset = 0.11;
            break;
    }
    return p;
}

std::vector<double> ScanSpec::grid() const {
    if (points < 1) throw std::invalid_argument("scan: points must be >= 1");
    if (axis == ScanAxis::Time && !(start >= 0.0 && stop > start)) {
        throw std::invalid_argument("scan: time scans need 0 <= start < stop");
    }
    if (axis == ScanAxis::Phase && !(stop >= start)) throw std::invalid_argument("scan: phase scans need start <= stop");
    return linspace(start, stop, points);
}

double bright_pi_time(double g) {
    if (!(g > 0.0)) throw std::invalid_argument("bright_pi_time: g must be > 0");
    return 1.0 / (4.0 * std::sqrt(2.0) * g);
}

namespace {

bool is_phase_scan(ExperimentKind k) {
    return k == ExperimentKind::PhaseScanFock || k == ExperimentKind::PhaseScanBoth;
}

bool is_coherent(ExperimentKind k) {
    return k == ExperimentKind::RabiCoherent || k == ExperimentKind::PhaseScanBoth;
}

} // namespace

void ExperimentConfig::validate() const {
    params.validate_bichromatic();
    if (kind == ExperimentKind::PhaseScanBoth) coherent_params.validate_bichromatic();
    make_space(n_max_1, n_max_2, 2);
    if (kind != ExperimentKind::DistributionsFock && kind != ExperimentKind::TomoRoundtrip) {
        const auto g = scan.grid();
        if (g.empty()) throw std::invalid_argument("config: scan is empty");
        if (is_phase_scan(kind) != (scan.axis == ScanAxis::Phase)) {
            throw std::invalid_argument(std::string("config: ") + catalogue_entry(kind).name + " needs a " +
                                        (is_phase_scan(kind) ? "phase" : "time") + " scan");
        }
    }
    if (fixed_duration && !(*fixed_duration > 0.0)) throw std::invalid_argument("config: fixed_duration must be > 0");
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("config: alpha must be >= 0");
    if (!std::isfinite(phi0)) throw std::invalid_argument("config: phi0 must be finite");
    if (shots < 0) throw std::invalid_argument("config: shots must be >= 0");
    if (tomo_nmax < 1 || tomo_nmax > 12) throw std::invalid_argument("config: tomo_nmax must lie in [1, 12]");
    if (preparation) {
        if (is_phase_scan(kind) || kind == ExperimentKind::DistributionsFock || kind == ExperimentKind::TomoRoundtrip) {
            throw std::invalid_argument("config: a preparation sequence is only used by time-scan experiments");
        }
        for (const auto& step : preparation->steps) {
            if (const auto* pulse = std::get_if<PulseSpec>(&step)) pulse->validate();
        }
    }
    tomo_model.validate();
}

ExperimentConfig default_config(ExperimentKind kind) {
    ExperimentConfig c;
    c.kind = kind;
    switch (kind) {
        case ExperimentKind::PhaseScanFock:
        case ExperimentKind::RabiFock:
        case ExperimentKind::DistributionsFock:
        case ExperimentKind::RabiExcited:
        case ExperimentKind::TomoRoundtrip:
            c.params = table1_defaults(Table1Row::Fock);
            break;
        case ExperimentKind::RabiCoherent:
            c.params = table1_defaults(Table1Row::Coherent);
            break;
        case ExperimentKind::RabiUpsilon:
        case ExperimentKind::PhaseScanBoth:
            c.params = table1_defaults(Table1Row::Upsilon);
            break;
    }
    c.coherent_params = table1_defaults(Table1Row::Coherent);
    if (is_coherent(kind)) {
        c.n_max_1 = c.n_max_2 = recommended_cutoff(c.alpha);
    } else {
        c.n_max_1 = c.n_max_2 = 3;
    }
    if (is_phase_scan(kind)) {
        c.scan = {ScanAxis::Phase, 0.0, 4.0 * kPi, 101};
    } else {
        // Two bright-state Rabi periods, 1/(sqrt(2) g).
        c.scan = {ScanAxis::Time, 0.0, 1.0 / (std::sqrt(2.0) * c.params.g1), 101};
    }
    c.tomo_model.omega0 = 100.0;
    c.tomo_model.eta = kEtaMode1;
    return c;
}

std::size_t ResultSet::column_index(const std::string& col) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i].name == col) return i;
    }
    throw std::out_of_range("ResultSet '" + name + "' has no column '" + col + "'");
}

std::vector<double> ResultSet::numeric_column(const std::string& col) const {
    const std::size_t i = column_index(col);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(std::get<double>(r[i]));
    return out;
}

unsigned scan_threads() {
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("PHONON_SIM_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 1) n = static_cast<unsigned>(v);
    }
    return n;
}

namespace {

// Runs fn(0..count-1) on up to scan_threads() workers; results are written
// by index, so the output does not depend on scheduling.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min<std::size_t>(scan_threads(), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

bool has_decoherence(const SimParams& p) {
    return p.gamma_m > 0.0 || p.gamma_e > 0.0;
}

using Initial = std::variant<PureState, DensityOp>;

// Up population on the grid, before the readout model.
std::vector<double> simulate(const SimParams& params, const Initial& init, std::span<const double> times) {
    const SpaceConfig& space = std::visit([](const auto& s) -> const SpaceConfig& { return s.space; }, init);
    const auto h = interaction_hamiltonian(space, params);
    if (!has_decoherence(params) && std::holds_alternative<PureState>(init)) {
        return evolve_unitary(h, std::get<PureState>(init), times).p_up;
    }
    const DensityOp rho = std::holds_alternative<PureState>(init) ? to_density(std::get<PureState>(init))
                                                                   : std::get<DensityOp>(init);
    LindbladOptions opts;
    opts.keep_manifold_coherences = false;
    return evolve_lindblad(h, collapse_operators(space, params), rho, times, opts).p_up;
}

// Ket prepared on a three-level space, restricted to the two-level space.
PureState drop_aux(const PureState& ket, const SpaceConfig& two_level) {
    if (level_population(ket, Level::Aux) > 1e-20) throw SimulationError("prepared state has Aux population");
    return {two_level, ket.amplitudes.head(two_level.dim()), ket.weight};
}

struct Series {
    std::string name;
    Initial init;
    SimParams params;
};

bool needs_aux(const SequenceSpec& spec) {
    for (const auto& step : spec.steps) {
        if (const auto* pulse = std::get_if<PulseSpec>(&step)) {
            if (pulse->kind == PulseKind::CarrierB) return true;
        } else if (std::get<Postselect>(step).keep.contains(Level::Aux)) {
            return true;
        }
    }
    return false;
}

// The config's own preparation, evolved with the experiment's parameters.
Initial custom_initial(const SequenceSpec& spec, const SpaceConfig& space, const SimParams& params) {
    const SpaceConfig prep_space = make_space(space.n_max_1(), space.n_max_2(), needs_aux(spec) ? 3 : 2);
    const auto result = run_sequence(spec, prep_space, params);
    if (prep_space == space) return result.state;
    if (const auto* ket = std::get_if<PureState>(&result.state)) return drop_aux(*ket, space);
    const auto& rho = std::get<DensityOp>(result.state);
    if (level_population(rho, Level::Aux) > 1e-20) throw SimulationError("prepared state has Aux population");
    const Index d = space.dim();
    return DensityOp{space, rho.matrix.topLeftCorner(d, d), rho.weight};
}

void add_time_series(ResultSet& rs, const ExperimentConfig& c, const SpaceConfig& space, std::vector<Series> series) {
    if (c.preparation) series.push_back({"custom", custom_initial(*c.preparation, space, c.params), c.params});
    const auto times = c.scan.grid();
    std::vector<std::vector<double>> p(series.size());
    parallel_for(series.size(), [&](std::size_t i) { p[i] = simulate(series[i].params, series[i].init, times); });
    rs.columns.push_back({"t_ms", "ms"});
    for (const auto& s : series) rs.columns.push_back({"p_up_" + s.name, "1"});
    for (const auto& s : series) rs.columns.push_back({"p_up_reported_" + s.name, "1"});
    for (std::size_t k = 0; k < times.size(); ++k) {
        std::vector<Cell> row{times[k]};
        for (std::size_t i = 0; i < series.size(); ++i) row.emplace_back(p[i][k]);
        for (std::size_t i = 0; i < series.size(); ++i) row.emplace_back(reported_population(p[i][k], series[i].params));
        rs.rows.push_back(std::move(row));
    }
}

double top_level_population(const PureState& s) {
    double p = 0.0;
    for (Index i = 0; i < s.space.dim(); ++i) {
        const auto l = s.space.label(i);
        if (l.n1 == s.space.n_max_1() || l.n2 == s.space.n_max_2()) p += std::norm(s.amplitudes(i));
    }
    return p;
}

// Population per excitation number n1 + n2 + [Up]; H and the collapse
// operators never mix these manifolds.
int excitation_of(const BasisLabel& l) {
    return l.n1 + l.n2 + (l.level == Level::Up ? 1 : 0);
}

void accumulate_manifold_weights(const DensityOp& rho, std::vector<double>& w) {
    for (Index i = 0; i < rho.space.dim(); ++i) {
        const int k = excitation_of(rho.space.label(i));
        w[k] = std::max(w[k], rho.matrix(i, i).real());
    }
}

void accumulate_manifold_weights(const PureState& s, std::vector<double>& w) {
    for (Index i = 0; i < s.space.dim(); ++i) {
        const int k = excitation_of(s.space.label(i));
        w[k] = std::max(w[k], std::norm(s.amplitudes(i)));
    }
}

// Heisenberg-picture Up projector e^{L^dag t}(P_up), so that a phase scan
// needs one evolution instead of one per point. Every collapse operator of
// the model is Hermitian, so the adjoint generator is the same dissipator
// with H -> -H; it preserves trace and positivity, and P_up / tr P_up can be
// evolved as a density matrix. Manifolds in which no scanned state has a
// diagonal entry above kNegligible are left out; each such manifold changes
// tr(O rho) by at most its population.
class UpObservable {
public:
    static constexpr double kNegligible = 1e-16;

    UpObservable(const SpaceConfig& space, const SimParams& params, double t, const std::vector<double>& support) {
        const auto collapse = collapse_operators(space, params);
        for (const auto& op : collapse) {
            if (!op.is_hermitian()) throw SimulationError("Heisenberg evolution needs Hermitian collapse operators");
        }
        CMatrix p_up = level_projector(space, Level::Up).matrix;
        for (Index i = 0; i < space.dim(); ++i) {
            if (support[excitation_of(space.label(i))] <= kNegligible) p_up(i, i) = 0.0;
        }
        const double weight = p_up.trace().real();
        if (weight == 0.0) {
            matrix_ = p_up;
            return;
        }
        OperatorMatrix minus_h = interaction_hamiltonian(space, params);
        minus_h.matrix = -minus_h.matrix;
        LindbladOptions opts;
        opts.store_states = true;
        const double grid[] = {t};
        const auto traj = evolve_lindblad(minus_h, collapse, DensityOp{space, p_up / weight, 1.0}, grid, opts);
        matrix_ = weight * traj.states.back().matrix;
    }

    double operator()(const DensityOp& rho) const { return (matrix_.cwiseProduct(rho.matrix.transpose())).sum().real(); }
    double operator()(const PureState& s) const { return s.amplitudes.dot(matrix_ * s.amplitudes).real(); }

private:
    CMatrix matrix_;
};

std::vector<double> empty_support(const SpaceConfig& space) {
    return std::vector<double>(static_cast<std::size_t>(space.n_max_1() + space.n_max_2() + 2), 0.0);
}

void run_phase_scan_fock(const ExperimentConfig& c, const SpaceConfig& space, ResultSet& rs) {
    const auto phis = c.scan.grid();
    const double tau = c.fixed_duration.value_or(bright_pi_time(c.params.g1));
    std::vector<PureState> states;
    auto support = empty_support(space);
    for (double phi : phis) {
        states.push_back(prepare_single_phonon(space, phi - c.phi0));
        accumulate_manifold_weights(states.back(), support);
    }
    const UpObservable up(space, c.params, tau, support);
    std::vector<double> p(phis.size());
    parallel_for(phis.size(), [&](std::size_t i) { p[i] = up(states[i]); });
    rs.columns = {{"phi_rad", "rad"}, {"p_up", "1"}, {"p_up_reported", "1"}};
    for (std::size_t i = 0; i < phis.size(); ++i) rs.rows.push_back({phis[i], p[i], reported_population(p[i], c.params)});
    rs.metadata["pulse_duration_ms"] = tau;
}

// Single-mode reference: the phonon sits in mode 2 and only the mode-2
// sideband is driven. The same ket under both tones is kept as a diagnostic.
SimParams single_tone(const SimParams& p) {
    SimParams out = p;
    out.g1 = 0.0;
    return out;
}

void run_rabi_fock(const ExperimentConfig& c, const SpaceConfig& space, ResultSet& rs) {
    const auto single = basis_state(space, Level::Down, 0, 1);
    add_time_series(rs, c, space,
                    {{"bright", prepare_single_phonon(space, 0.0), c.params},
                     {"dark", prepare_single_phonon(space, kPi), c.params},
                     {"single", single, single_tone(c.params)},
                     {"single_bichromatic", single, c.params}});
}

void run_distributions(const ExperimentConfig& c, const SpaceConfig& space, ResultSet& rs) {
    struct Case {
        const char* name;
        PureState init;
        double tau;
    };
    SimParams ideal = c.params;
    ideal.gamma_m = ideal.gamma_e = 0.0;
    const double tau_b = bright_pi_time(c.params.g1);
    const auto up_bright = prepare_single_phonon(space, 0.0, false);
    const auto up_dark = prepare_single_phonon(space, kPi, false);
    const std::vector<Case> cases = {
        {"down_bright", prepare_single_phonon(space, 0.0), tau_b},
        {"down_dark", prepare_single_phonon(space, kPi), tau_b},
        {"up_bright", up_bright, excited_transfer_time(up_bright, ideal)},
        {"up_dark", up_dark, excited_transfer_time(up_dark, ideal)},
    };
    std::vector<std::array<std::vector<double>, 2>> p_ideal(cases.size()), p_sim(cases.size());
    parallel_for(cases.size(), [&](std::size_t i) {
        const auto ket = UnitaryPropagator(interaction_hamiltonian(space, ideal)).propagate(cases[i].init, cases[i].tau);
        p_ideal[i] = {mode_marginal(ket, Mode::One), mode_marginal(ket, Mode::Two)};
        const DensityOp rho = bichromatic_pulse(to_density(cases[i].init), c.params, cases[i].tau);
        p_sim[i] = {mode_marginal(rho, Mode::One), mode_marginal(rho, Mode::Two)};
    });
    rs.columns = {{"case", ""}, {"duration_ms", "ms"}, {"mode", ""}, {"n", ""}, {"p_ideal", "1"}, {"p_simulated", "1"}};
    for (std::size_t i = 0; i < cases.size(); ++i) {
        for (int m = 0; m < 2; ++m) {
            for (std::size_t n = 0; n < p_ideal[i][m].size(); ++n) {
                rs.rows.push_back({std::string(cases[i].name), cases[i].tau, static_cast<double>(m + 1),
                                   static_cast<double>(n), p_ideal[i][m][n], p_sim[i][m][n]});
            }
        }
    }
}

void run_rabi_coherent(const ExperimentConfig& c, const SpaceConfig& space, ResultSet& rs) {
    const Complex a = c.alpha;
    const auto bright = displaced_thermal_state(space, c.params.n_th, a, a);
    const auto dark = displaced_thermal_state(space, c.params.n_th, a, -a);
    const auto single = displaced_thermal_state(space, c.params.n_th, a, 0.0);
    add_time_series(rs, c, space,
                    {{"bright", bright.state, c.params}, {"dark", dark.state, c.params}, {"single", single.state, c.params}});
    rs.metadata["truncation_residual"] =
        std::max({bright.truncation_loss, dark.truncation_loss, single.truncation_loss});
}

void run_rabi_upsilon(const ExperimentConfig& c, const SpaceConfig& space, ResultSet& rs) {
    const SpaceConfig three = make_space(space.n_max_1(), space.n_max_2(), 3);
    std::vector<Series> series;
    for (const auto& [name, phi] : {std::pair{"phi_0", 0.0}, std::pair{"phi_half_pi", kPi / 2.0}, std::pair{"phi_pi", kPi}}) {
        series.push_back({name, drop_aux(prepare_upsilon(three, phi, phi).state, space), c.params});
    }
    add_time_series(rs, c, space, series);
}

void run_phase_scan_both(const ExperimentConfig& c, const SpaceConfig& space, ResultSet& rs) {
    const auto phis = c.scan.grid();
    const double tau_u = c.fixed_duration.value_or(bright_pi_time(c.params.g1));
    const double tau_c = c.fixed_duration.value_or(bright_pi_time(c.coherent_params.g1));
    const SpaceConfig three = make_space(space.n_max_1(), space.n_max_2(), 3);
    std::vector<PureState> upsilon;
    std::vector<DensityOp> coherent;
    std::vector<double> residual(phis.size());
    auto support_u = empty_support(space);
    auto support_c = empty_support(space);
    for (std::size_t i = 0; i < phis.size(); ++i) {
        const double phi = phis[i] - c.phi0;
        upsilon.push_back(drop_aux(prepare_upsilon(three, phi, phi).state, space));
        accumulate_manifold_weights(upsilon.back(), support_u);
        const Complex a = c.alpha;
        auto init = displaced_thermal_state(space, c.coherent_params.n_th, a, a * std::polar(1.0, phi));
        residual[i] = init.truncation_loss;
        coherent.push_back(std::move(init.state));
        accumulate_manifold_weights(coherent.back(), support_c);
    }
    std::optional<UpObservable> up_u, up_c;
    parallel_for(2, [&](std::size_t j) {
        if (j == 0) {
            up_u.emplace(space, c.params, tau_u, support_u);
        } else {
            up_c.emplace(space, c.coherent_params, tau_c, support_c);
        }
    });
    std::vector<double> pu(phis.size()), pc(phis.size());
    parallel_for(phis.size(), [&](std::size_t i) {
        pu[i] = (*up_u)(upsilon[i]);
        pc[i] = (*up_c)(coherent[i]);
    });
    rs.columns = {{"phi_rad", "rad"},     {"p_up_upsilon", "1"},          {"p_up_coherent", "1"},
                  {"p_up_reported_upsilon", "1"}, {"p_up_reported_coherent", "1"}};
    for (std::size_t i = 0; i < phis.size(); ++i) {
        rs.rows.push_back({phis[i], pu[i], pc[i], reported_population(pu[i], c.params),
                           reported_population(pc[i], c.coherent_params)});
    }
    rs.metadata["pulse_duration_upsilon_ms"] = tau_u;
    rs.metadata["pulse_duration_coherent_ms"] = tau_c;
    rs.metadata["truncation_residual"] = *std::max_element(residual.begin(), residual.end());
}

void run_rabi_excited(const ExperimentConfig& c, const SpaceConfig& space, ResultSet& rs) {
    const auto single = basis_state(space, Level::Up, 0, 1);
    add_time_series(rs, c, space,
                    {{"bright", prepare_single_phonon(space, 0.0, false), c.params},
                     {"dark", prepare_single_phonon(space, kPi, false), c.params},
                     {"single", single, single_tone(c.params)},
                     {"single_bichromatic", single, c.params}});
}

void run_tomography(const ExperimentConfig& c, const SpaceConfig& space, ResultSet& rs) {
    struct Target {
        std::string name;
        Mode mode;
        std::vector<double> truth;
    };
    const int nmax = c.tomo_nmax;
    auto pad = [nmax](std::vector<double> p) {
        p.resize(static_cast<std::size_t>(nmax + 1), 0.0);
        double s = 0.0;
        for (double v : p) s += v;
        for (double& v : p) v /= s;
        return p;
    };
    const SpaceConfig three = make_space(std::max(space.n_max_1(), 2), std::max(space.n_max_2(), 2), 3);
    const auto bright = prepare_single_phonon(space, 0.0);
    const auto upsilon = prepare_upsilon(three, 0.0, 0.0).state;
    const auto coherent = displaced_thermal_populations(c.alpha, c.coherent_params.n_th, nmax);
    std::vector<Target> targets;
    for (Mode m : {Mode::One, Mode::Two}) {
        targets.push_back({"ground", m, pad({1.0})});
        targets.push_back({"bright_fock", m, pad(mode_marginal(bright, m))});
        targets.push_back({"coherent", m, pad(coherent)});
        targets.push_back({"upsilon", m, pad(mode_marginal(upsilon, m))});
    }
    const double eta[] = {kEtaMode1, kEtaMode2};
    std::vector<DistributionFit> fits(targets.size());
    parallel_for(targets.size(), [&](std::size_t i) {
        RabiModel model = c.tomo_model;
        model.eta = eta[targets[i].mode == Mode::One ? 0 : 1];
        const auto times = linspace(0.0, 2.0 / (model.omega0 * model.eta), 60);
        const PhononDistribution d{targets[i].truth};
        const std::uint64_t seed = c.seed * 1000003u + 2 * i;
        const auto rsb = synthesize_trace(d, model, Sideband::Rsb, targets[i].mode, times, c.shots, seed);
        const auto bsb = synthesize_trace(d, model, Sideband::Bsb, targets[i].mode, times, c.shots, seed + 1);
        FitOptions opts;
        opts.seed = seed;
        fits[i] = fit_distribution(rsb, bsb, model, nmax, opts);
    });
    rs.columns = {{"state", ""}, {"mode", ""}, {"n", ""}, {"p_true", "1"}, {"p_fit", "1"}, {"stderr", "1"}};
    for (std::size_t i = 0; i < targets.size(); ++i) {
        for (int n = 0; n <= nmax; ++n) {
            rs.rows.push_back({targets[i].name, static_cast<double>(static_cast<int>(targets[i].mode)),
                               static_cast<double>(n), targets[i].truth[n], fits[i].distribution.probs[n],
                               fits[i].stderr_[n]});
        }
    }
}

} // namespace

double excited_transfer_time(const PureState& state, const SimParams& params) {
    const UnitaryPropagator u(interaction_hamiltonian(state.space, params));
    const auto down = [&](double t) { return level_population(u.propagate(state, t), Level::Down); };
    const auto peak = refine_first_peak(down, 0.5 / std::max(params.g1, params.g2));
    if (!peak.found) throw SimulationError("excited_transfer_time: no transfer maximum found");
    return peak.time;
}

ResultSet run(const ExperimentConfig& config) {
    config.validate();
    const SpaceConfig space = make_space(config.n_max_1, config.n_max_2, 2);
    const auto& entry = catalogue_entry(config.kind);
    ResultSet rs;
    rs.name = file_stem(config.kind);
    rs.metadata["experiment"] = entry.name;
    rs.metadata["figure"] = entry.figure;
    rs.metadata["code_version"] = kCodeVersion;
    rs.metadata["config"] = config_to_json(config);
    rs.metadata["config_hash"] = config_hash(config);
    rs.metadata["space"] = {{"n_max_1", space.n_max_1()}, {"n_max_2", space.n_max_2()}, {"levels", space.levels()}};
    rs.metadata["truncation_residual"] = 0.0;
    try {
        switch (config.kind) {
            case ExperimentKind::PhaseScanFock: run_phase_scan_fock(config, space, rs); break;
            case ExperimentKind::RabiFock: run_rabi_fock(config, space, rs); break;
            case ExperimentKind::DistributionsFock: run_distributions(config, space, rs); break;
            case ExperimentKind::RabiCoherent: run_rabi_coherent(config, space, rs); break;
            case ExperimentKind::RabiUpsilon: run_rabi_upsilon(config, space, rs); break;
            case ExperimentKind::PhaseScanBoth: run_phase_scan_both(config, space, rs); break;
            case ExperimentKind::RabiExcited: run_rabi_excited(config, space, rs); break;
            case ExperimentKind::TomoRoundtrip: run_tomography(config, space, rs); break;
        }
    } catch (const std::exception& e) {
        throw SimulationError(std::string(entry.name) + ": " + e.what());
    }
    if (config.kind == ExperimentKind::RabiFock || config.kind == ExperimentKind::RabiExcited) {
        rs.metadata["truncation_residual"] = top_level_population(prepare_single_phonon(space, 0.0));
    }
    return rs;
}

} // namespace phonon
