#include "phonon/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

namespace phonon {

namespace {

bool finite_nonnegative(double x) { return std::isfinite(x) && x >= 0.0; }

double spectral_norm(const CMatrix& m) {
    if (m.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<CMatrix> es(m.adjoint() * m, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

bool is_diagonal(const CMatrix& m) {
    for (Index j = 0; j < m.cols(); ++j) {
        for (Index i = 0; i < m.rows(); ++i) {
            if (i != j && m(i, j) != Complex{0.0, 0.0}) return false;
        }
    }
    return true;
}

void require_hermitian(const OperatorMatrix& h, const char* where) {
    const double scale = std::max(1.0, h.matrix.cwiseAbs().maxCoeff());
    if (!h.is_hermitian(1e-12 * scale)) throw std::invalid_argument(std::string(where) + ": Hamiltonian is not Hermitian");
}

std::string time_str(double t) {
    std::ostringstream os;
    os.precision(10);
    os << t;
    return os.str();
}

} // namespace

void SimParams::validate() const {
    if (!finite_nonnegative(g1) || !finite_nonnegative(g2)) throw std::invalid_argument("SimParams: couplings must be >= 0");
    if (!finite_nonnegative(gamma_m) || !finite_nonnegative(gamma_e)) {
        throw std::invalid_argument("SimParams: dephasing rates must be >= 0");
    }
    if (!finite_nonnegative(n_th)) throw std::invalid_argument("SimParams: n_th must be >= 0");
    if (!std::isfinite(phi)) throw std::invalid_argument("SimParams: phi must be finite");
    if (!(contrast > 0.0 && contrast <= 1.0)) throw std::invalid_argument("SimParams: contrast must lie in (0, 1]");
    if (!(offset >= 0.0 && offset < 1.0)) throw std::invalid_argument("SimParams: offset must lie in [0, 1)");
    if (contrast + offset > 1.05) throw std::invalid_argument("SimParams: contrast + offset exceeds 1.05");
}

void SimParams::validate_bichromatic() const {
    validate();
    if (!(g1 > 0.0 && g2 > 0.0)) throw std::invalid_argument("SimParams: a bichromatic pulse needs g1 > 0 and g2 > 0");
}

OperatorMatrix interaction_hamiltonian(const SpaceConfig& space, const SimParams& params) {
    params.validate();
    CMatrix h = CMatrix::Zero(space.dim(), space.dim());
    const double w1 = kTwoPi * params.g1;
    const Complex w2 = kTwoPi * params.g2 * std::polar(1.0, -params.phi);
    for (int n1 = 0; n1 <= space.n_max_1(); ++n1) {
        for (int n2 = 0; n2 <= space.n_max_2(); ++n2) {
            const Index down = space.index(Level::Down, n1, n2);
            if (n1 > 0) {
                const Index up = space.index(Level::Up, n1 - 1, n2);
                const double c = w1 * std::sqrt(static_cast<double>(n1));
                h(up, down) += c;
                h(down, up) += c;
            }
            if (n2 > 0) {
                const Index up = space.index(Level::Up, n1, n2 - 1);
                const Complex c = w2 * std::sqrt(static_cast<double>(n2));
                h(up, down) += c;
                h(down, up) += std::conj(c);
            }
        }
    }
    return {space, h};
}

std::vector<OperatorMatrix> collapse_operators(const SpaceConfig& space, const SimParams& params) {
    params.validate();
    std::vector<OperatorMatrix> ops;
    if (params.gamma_m > 0.0) {
        const double s = std::sqrt(kTwoPi * params.gamma_m);
        ops.push_back(Complex(s) * number_operator(space, Mode::One));
        ops.push_back(Complex(s) * number_operator(space, Mode::Two));
    }
    if (params.gamma_e > 0.0) {
        ops.push_back(Complex(std::sqrt(kTwoPi * params.gamma_e)) * level_projector(space, Level::Up));
    }
    return ops;
}

std::vector<std::vector<Index>> invariant_blocks(const SpaceConfig& space, std::span<const CMatrix* const> ops) {
    const Index dim = space.dim();
    std::vector<Index> parent(static_cast<std::size_t>(dim));
    std::iota(parent.begin(), parent.end(), Index{0});
    auto find = [&](Index x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    for (const CMatrix* op : ops) {
        if (op->rows() != dim || op->cols() != dim) throw std::invalid_argument("invariant_blocks: operator size mismatch");
        for (Index j = 0; j < dim; ++j) {
            for (Index i = 0; i < dim; ++i) {
                if (i == j || (*op)(i, j) == Complex{0.0, 0.0}) continue;
                const Index ri = find(i);
                const Index rj = find(j);
                if (ri != rj) parent[std::max(ri, rj)] = std::min(ri, rj);
            }
        }
    }
    std::vector<std::vector<Index>> blocks;
    std::vector<Index> block_of(static_cast<std::size_t>(dim), -1);
    for (Index i = 0; i < dim; ++i) {
        const Index r = find(i);
        if (block_of[r] < 0) {
            block_of[r] = static_cast<Index>(blocks.size());
            blocks.emplace_back();
        }
        blocks[block_of[r]].push_back(i);
    }
    return blocks;
}

UnitaryPropagator::UnitaryPropagator(const OperatorMatrix& hamiltonian) : space_(hamiltonian.space) {
    require_hermitian(hamiltonian, "UnitaryPropagator");
    const CMatrix* ops[] = {&hamiltonian.matrix};
    for (auto& indices : invariant_blocks(space_, ops)) {
        const CMatrix sub = hamiltonian.matrix(indices, indices);
        Eigen::SelfAdjointEigenSolver<CMatrix> es(sub);
        blocks_.push_back({std::move(indices), es.eigenvectors(), es.eigenvalues()});
    }
}

PureState UnitaryPropagator::propagate(const PureState& state, double t) const {
    require_same_space(state.space, space_, "UnitaryPropagator::propagate");
    PureState out = state;
    for (const Block& b : blocks_) {
        const CVector local = state.amplitudes(b.indices);
        if (local.cwiseAbs().maxCoeff() == 0.0) continue;
        CVector coeffs = b.vectors.adjoint() * local;
        for (Index k = 0; k < coeffs.size(); ++k) coeffs(k) *= std::polar(1.0, -b.energies(k) * t);
        out.amplitudes(b.indices) = b.vectors * coeffs;
    }
    return out;
}

std::vector<double> linspace(double start, double stop, int points) {
    if (points < 1) throw std::invalid_argument("linspace: need at least one point");
    std::vector<double> v(static_cast<std::size_t>(points));
    if (points == 1) {
        v[0] = start;
        return v;
    }
    const double step = (stop - start) / (points - 1);
    for (int i = 0; i < points; ++i) v[i] = start + step * i;
    v.back() = stop;
    return v;
}

namespace {

void require_increasing(std::span<const double> times, const char* where) {
    if (times.empty()) throw std::invalid_argument(std::string(where) + ": empty time grid");
    if (times.front() < 0.0) throw std::invalid_argument(std::string(where) + ": times must be >= 0");
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (!(times[i] > times[i - 1])) throw std::invalid_argument(std::string(where) + ": times must be strictly increasing");
    }
}

} // namespace

Trajectory evolve_unitary(const OperatorMatrix& hamiltonian, const PureState& state, double duration, int samples) {
    if (!(duration > 0.0) || samples < 2) throw std::invalid_argument("evolve_unitary: need duration > 0 and samples >= 2");
    const std::vector<double> times = linspace(0.0, duration, samples);
    return evolve_unitary(hamiltonian, state, times);
}

Trajectory evolve_unitary(const OperatorMatrix& hamiltonian, const PureState& state, std::span<const double> times) {
    require_increasing(times, "evolve_unitary");
    const UnitaryPropagator prop(hamiltonian);
    Trajectory traj;
    for (double t : times) {
        PureState psi = prop.propagate(state, t);
        const double n2 = psi.amplitudes.squaredNorm();
        traj.times.push_back(t);
        traj.p_up.push_back(level_population(psi, Level::Up));
        traj.trace_err.push_back(std::abs(n2 - 1.0));
        traj.kets.push_back(std::move(psi));
    }
    traj.p_reported = traj.p_up;
    return traj;
}

namespace {

// One (row block, column block) piece of rho with its own generator.
struct BlockPair {
    std::size_t row = 0;
    std::size_t col = 0;
    CMatrix x;
    CMatrix heff_row;     // H - i/2 sum C^dag C on the row block
    CMatrix heff_col_adj; // (H - i/2 sum C^dag C)^dag on the column block
    CMatrix jump_factor;  // Hadamard factor sum_C c_i conj(c_j) when all C are diagonal
    std::vector<std::pair<CMatrix, CMatrix>> jumps; // (C_row, C_col^dag) otherwise
    double generator_norm = 0.0;
    double step_bound = 0.0;
    bool frozen = false; // negligible weight: held constant
};

CMatrix lindblad_rhs(const BlockPair& p, const CMatrix& x) {
    CMatrix r = p.heff_row * x;
    r.noalias() -= x * p.heff_col_adj;
    r *= Complex(0.0, -1.0);
    if (p.jumps.empty()) {
        if (p.jump_factor.size() != 0) r += p.jump_factor.cwiseProduct(x);
    } else {
        for (const auto& [c_row, c_col_adj] : p.jumps) r.noalias() += c_row * x * c_col_adj;
    }
    return r;
}

CMatrix rk4_step(const BlockPair& p, const CMatrix& x, double h) {
    const CMatrix k1 = lindblad_rhs(p, x);
    const CMatrix k2 = lindblad_rhs(p, x + (0.5 * h) * k1);
    const CMatrix k3 = lindblad_rhs(p, x + (0.5 * h) * k2);
    const CMatrix k4 = lindblad_rhs(p, x + h * k3);
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

int substeps(const BlockPair& p, double dt) {
    if (p.generator_norm == 0.0 || dt == 0.0) return dt == 0.0 ? 0 : 1;
    return std::max(1, static_cast<int>(std::ceil(dt * p.generator_norm / p.step_bound)));
}

// Richardson comparison of one full step against two half steps; tightens
// the step bound until the local error estimate, summed over every step to
// t_end, is within tolerance. The tolerance is absolute on the scale of the
// whole density matrix, so nearly empty blocks are not over-resolved.
void calibrate_step(BlockPair& p, double first_dt, double t_end, double tolerance, double scale) {
    if (p.generator_norm == 0.0 || first_dt <= 0.0) return;
    for (int attempt = 0; attempt < 12; ++attempt) {
        const double h = first_dt / substeps(p, first_dt);
        const CMatrix full = rk4_step(p, p.x, h);
        const CMatrix half = rk4_step(p, rk4_step(p, p.x, 0.5 * h), 0.5 * h);
        const double estimate = (full - half).cwiseAbs().maxCoeff() / 15.0;
        const double total_steps = std::ceil(t_end / h);
        if (estimate * total_steps <= tolerance * scale) return;
        p.step_bound *= 0.5;
    }
    throw SimulationError("evolve_lindblad: step size could not meet the local error tolerance");
}

} // namespace

Trajectory evolve_lindblad(const OperatorMatrix& hamiltonian, const std::vector<OperatorMatrix>& collapse,
                           const DensityOp& rho0, std::span<const double> t_grid, const LindbladOptions& options) {
    const SpaceConfig& space = rho0.space;
    require_same_space(hamiltonian.space, space, "evolve_lindblad");
    for (const auto& c : collapse) require_same_space(c.space, space, "evolve_lindblad");
    require_increasing(t_grid, "evolve_lindblad");
    require_hermitian(hamiltonian, "evolve_lindblad");
    if (rho0.hermiticity_error() > 1e-10) throw std::invalid_argument("evolve_lindblad: rho0 is not Hermitian");
    const Complex tr0 = rho0.trace();
    if (std::abs(tr0 - 1.0) > 1e-10) throw std::invalid_argument("evolve_lindblad: rho0 trace differs from 1");
    if (!(options.step_bound > 0.0)) throw std::invalid_argument("evolve_lindblad: step_bound must be > 0");

    std::vector<const CMatrix*> ops{&hamiltonian.matrix};
    bool diagonal_jumps = true;
    for (const auto& c : collapse) {
        ops.push_back(&c.matrix);
        diagonal_jumps = diagonal_jumps && is_diagonal(c.matrix);
    }
    const auto blocks = invariant_blocks(space, ops);
    const std::size_t nb = blocks.size();

    CMatrix dissipator_diag = CMatrix::Zero(space.dim(), space.dim());
    for (const auto& c : collapse) dissipator_diag += c.matrix.adjoint() * c.matrix;
    std::vector<CMatrix> heff(nb);
    std::vector<double> heff_norm(nb);
    std::vector<double> h_norm(nb);
    std::vector<std::vector<CMatrix>> c_blocks(nb);
    std::vector<double> c_norm_sum(nb, 0.0);
    std::vector<std::vector<Index>> up_local(nb);
    for (std::size_t a = 0; a < nb; ++a) {
        const auto& idx = blocks[a];
        heff[a] = hamiltonian.matrix(idx, idx) - Complex(0.0, 0.5) * dissipator_diag(idx, idx);
        heff_norm[a] = spectral_norm(heff[a]);
        h_norm[a] = spectral_norm(hamiltonian.matrix(idx, idx));
        for (const auto& c : collapse) {
            c_blocks[a].push_back(c.matrix(idx, idx));
            c_norm_sum[a] += spectral_norm(c_blocks[a].back());
        }
        for (std::size_t k = 0; k < idx.size(); ++k) {
            if (space.label(idx[k]).level == Level::Up) up_local[a].push_back(static_cast<Index>(k));
        }
    }

    const CMatrix rho_start = rho0.matrix / tr0;
    const double rho_scale = rho_start.cwiseAbs().maxCoeff();
    std::vector<BlockPair> pairs;
    std::vector<std::size_t> diagonal_pairs;
    for (std::size_t a = 0; a < nb; ++a) {
        for (std::size_t b = 0; b < nb; ++b) {
            if (a != b && !options.keep_manifold_coherences) continue;
            CMatrix x = rho_start(blocks[a], blocks[b]);
            if (x.cwiseAbs().maxCoeff() == 0.0) continue;
            BlockPair p;
            p.row = a;
            p.col = b;
            p.x = std::move(x);
            p.heff_row = heff[a];
            p.heff_col_adj = heff[b].adjoint();
            if (!collapse.empty()) {
                if (diagonal_jumps) {
                    p.jump_factor = CMatrix::Zero(blocks[a].size(), blocks[b].size());
                    for (std::size_t k = 0; k < collapse.size(); ++k) {
                        p.jump_factor += c_blocks[a][k].diagonal() * c_blocks[b][k].diagonal().adjoint();
                    }
                } else {
                    for (std::size_t k = 0; k < collapse.size(); ++k) {
                        p.jumps.emplace_back(c_blocks[a][k], c_blocks[b][k].adjoint());
                    }
                }
            }
            if (diagonal_jumps && !collapse.empty()) {
                // Commutator with H plus the Hadamard factor J_ij - (d_i + d_j)/2
                // that the dissipator reduces to when every C is diagonal.
                const Eigen::VectorXd d_row = dissipator_diag(blocks[a], blocks[a]).diagonal().real();
                const Eigen::VectorXd d_col = dissipator_diag(blocks[b], blocks[b]).diagonal().real();
                double hadamard = 0.0;
                for (Index i = 0; i < p.jump_factor.rows(); ++i) {
                    for (Index j = 0; j < p.jump_factor.cols(); ++j) {
                        hadamard = std::max(hadamard, std::abs(p.jump_factor(i, j) - 0.5 * (d_row(i) + d_col(j))));
                    }
                }
                p.generator_norm = h_norm[a] + h_norm[b] + hadamard;
            } else {
                p.generator_norm = heff_norm[a] + heff_norm[b] + c_norm_sum[a] * c_norm_sum[b];
            }
            p.step_bound = options.step_bound;
            p.frozen = p.x.cwiseAbs().maxCoeff() <= options.negligible_block * rho_scale;
            if (a == b) diagonal_pairs.push_back(pairs.size());
            pairs.push_back(std::move(p));
        }
    }

    const bool full_check = options.keep_manifold_coherences && space.dim() <= options.full_positivity_check_dim;
    Trajectory traj;
    double t_now = 0.0;
    bool calibrated = false;
    for (double t_out : t_grid) {
        const double dt = t_out - t_now;
        if (!calibrated && dt > 0.0) {
            for (auto& p : pairs) {
                if (!p.frozen) calibrate_step(p, dt, t_grid.back(), options.error_tolerance, rho_scale);
            }
            calibrated = true;
        }
        for (auto& p : pairs) {
            if (p.frozen) continue;
            const int n = substeps(p, dt);
            const double h = n > 0 ? dt / n : 0.0;
            for (int s = 0; s < n; ++s) p.x = rk4_step(p, p.x, h);
        }
        t_now = t_out;

        Complex tr = 0.0;
        double up = 0.0;
        for (std::size_t k : diagonal_pairs) {
            const BlockPair& p = pairs[k];
            tr += p.x.trace();
            for (Index i : up_local[p.row]) up += p.x(i, i).real();
        }
        const double drift = std::abs(tr - 1.0);
        if (drift > options.trace_tolerance) {
            throw SimulationError("evolve_lindblad: trace drift " + std::to_string(drift) + " at t = " + time_str(t_out) +
                                  " ms");
        }
        const double inv_tr = 1.0 / tr.real();

        CMatrix rho;
        if (options.store_states || full_check) {
            rho = CMatrix::Zero(space.dim(), space.dim());
            for (const auto& p : pairs) rho(blocks[p.row], blocks[p.col]) = p.x * inv_tr;
        }
        double min_eig = 0.0;
        if (full_check) {
            min_eig = DensityOp{space, rho, 1.0}.min_eigenvalue();
        } else {
            for (std::size_t k : diagonal_pairs) {
                const CMatrix herm = 0.5 * (pairs[k].x + pairs[k].x.adjoint()) * inv_tr;
                Eigen::SelfAdjointEigenSolver<CMatrix> es(herm, Eigen::EigenvaluesOnly);
                min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
            }
        }
        if (min_eig < -options.positivity_tolerance) {
            throw SimulationError("evolve_lindblad: density matrix eigenvalue " + std::to_string(min_eig) +
                                  " at t = " + time_str(t_out) + " ms");
        }

        traj.times.push_back(t_out);
        traj.p_up.push_back(up * inv_tr);
        traj.trace_err.push_back(drift);
        if (options.store_states) traj.states.push_back({space, std::move(rho), rho0.weight});
    }
    traj.p_reported = traj.p_up;
    return traj;
}

double reported_population(double p_up, const SimParams& params) {
    return std::clamp(params.offset + params.contrast * p_up, 0.0, 1.0);
}

Trajectory apply_readout_model(Trajectory trajectory, const SimParams& params) {
    params.validate();
    trajectory.p_reported.resize(trajectory.p_up.size());
    for (std::size_t i = 0; i < trajectory.p_up.size(); ++i) {
        trajectory.p_reported[i] = reported_population(trajectory.p_up[i], params);
    }
    return trajectory;
}

namespace {

std::ptrdiff_t first_peak_index(std::span<const double> v, double min_rise) {
    if (v.size() < 3) return -1;
    double running_min = v[0];
    for (std::size_t k = 1; k + 1 < v.size(); ++k) {
        running_min = std::min(running_min, v[k]);
        if (v[k] >= v[k - 1] && v[k] > v[k + 1] && v[k] - running_min > min_rise) return static_cast<std::ptrdiff_t>(k);
    }
    return -1;
}

} // namespace

Peak first_peak(std::span<const double> times, std::span<const double> values, double min_rise) {
    if (times.size() != values.size()) throw std::invalid_argument("first_peak: size mismatch");
    const auto k = first_peak_index(values, min_rise);
    if (k < 0) return {};
    const double ym = values[k - 1], y0 = values[k], yp = values[k + 1];
    const double h = times[k + 1] - times[k];
    const double denom = ym - 2.0 * y0 + yp;
    double shift = 0.0;
    if (denom < 0.0) shift = 0.5 * (ym - yp) / denom;
    shift = std::clamp(shift, -0.5, 0.5);
    return {true, times[k] + shift * h, y0 - 0.25 * (ym - yp) * shift};
}

Peak refine_first_peak(const std::function<double(double)>& f, double t_max, int samples, double tol) {
    if (!(t_max > 0.0) || samples < 3) throw std::invalid_argument("refine_first_peak: bad search window");
    const std::vector<double> grid = linspace(0.0, t_max, samples);
    std::vector<double> vals(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) vals[i] = f(grid[i]);
    const auto k = first_peak_index(vals, 1e-9);
    if (k < 0) return {};
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = grid[k - 1], b = grid[k + 1];
    double c = b - invphi * (b - a), d = a + invphi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol * std::max(1.0, std::abs(b))) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    const double t = 0.5 * (a + b);
    return {true, t, f(t)};
}

} // namespace phonon
