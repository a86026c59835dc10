#include "phonon/hilbert.hpp"

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <string>

namespace phonon {

Level level_from_int(int value) {
    if (value < 0 || value > 2) {
        throw std::invalid_argument("electronic level must be 0, 1 or 2, got " + std::to_string(value));
    }
    return static_cast<Level>(value);
}

Mode mode_from_int(int value) {
    if (value != 1 && value != 2) {
        throw std::invalid_argument("mode index must be 1 or 2, got " + std::to_string(value));
    }
    return static_cast<Mode>(value);
}

const char* to_string(Level level) {
    switch (level) {
        case Level::Down: return "down";
        case Level::Up: return "up";
        case Level::Aux: return "aux";
    }
    return "?";
}

SpaceConfig::SpaceConfig(int n_max_1, int n_max_2, int electronic_levels)
    : n_max_1_(n_max_1), n_max_2_(n_max_2), levels_(electronic_levels) {
    if (n_max_1 < 1 || n_max_2 < 1) {
        throw std::invalid_argument("Fock cutoffs must be >= 1 (got " + std::to_string(n_max_1) + ", " +
                                    std::to_string(n_max_2) + ")");
    }
    if (electronic_levels != 2 && electronic_levels != 3) {
        throw std::invalid_argument("electronic_levels must be 2 or 3, got " + std::to_string(electronic_levels));
    }
}

Index SpaceConfig::index(Level level, int n1, int n2) const {
    const int e = static_cast<int>(level);
    if (e >= levels_ || n1 < 0 || n1 > n_max_1_ || n2 < 0 || n2 > n_max_2_) {
        throw std::out_of_range("basis label (" + std::to_string(e) + "," + std::to_string(n1) + "," +
                                std::to_string(n2) + ") outside the space");
    }
    return (static_cast<Index>(e) * (n_max_1_ + 1) + n1) * (n_max_2_ + 1) + n2;
}

BasisLabel SpaceConfig::label(Index i) const {
    if (i < 0 || i >= dim()) throw std::out_of_range("basis index outside the space");
    const Index n2 = i % (n_max_2_ + 1);
    const Index rest = i / (n_max_2_ + 1);
    const Index n1 = rest % (n_max_1_ + 1);
    const Index e = rest / (n_max_1_ + 1);
    return {static_cast<Level>(e), static_cast<int>(n1), static_cast<int>(n2)};
}

SpaceConfig make_space(int n_max_1, int n_max_2, int electronic_levels) {
    return SpaceConfig(n_max_1, n_max_2, electronic_levels);
}

void require_same_space(const SpaceConfig& a, const SpaceConfig& b, const char* where) {
    if (!(a == b)) throw std::invalid_argument(std::string(where) + ": space mismatch");
}

PureState PureState::normalized() const {
    const double n = norm();
    if (n == 0.0) throw SimulationError("cannot normalize the zero vector");
    return {space, amplitudes / n, weight};
}

double DensityOp::hermiticity_error() const {
    return (matrix - matrix.adjoint()).cwiseAbs().maxCoeff();
}

double DensityOp::min_eigenvalue() const {
    const CMatrix herm = 0.5 * (matrix + matrix.adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> es(herm, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

bool OperatorMatrix::is_hermitian(double tol) const {
    return (matrix - matrix.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

OperatorMatrix operator*(const OperatorMatrix& a, const OperatorMatrix& b) {
    require_same_space(a.space, b.space, "operator product");
    return {a.space, a.matrix * b.matrix};
}

OperatorMatrix operator+(const OperatorMatrix& a, const OperatorMatrix& b) {
    require_same_space(a.space, b.space, "operator sum");
    return {a.space, a.matrix + b.matrix};
}

OperatorMatrix operator-(const OperatorMatrix& a, const OperatorMatrix& b) {
    require_same_space(a.space, b.space, "operator difference");
    return {a.space, a.matrix - b.matrix};
}

OperatorMatrix operator*(Complex c, const OperatorMatrix& a) {
    return {a.space, c * a.matrix};
}

PureState basis_state(const SpaceConfig& space, Level level, int n1, int n2) {
    CVector v = CVector::Zero(space.dim());
    v(space.index(level, n1, n2)) = 1.0;
    return {space, v, 1.0};
}

PureState with_level(const SpaceConfig& space, Level level, const CVector& motional) {
    if (motional.size() != space.motional_dim()) {
        throw std::invalid_argument("with_level: motional vector has wrong length");
    }
    if (!space.has_level(level)) throw std::out_of_range("with_level: level not in space");
    CVector v = CVector::Zero(space.dim());
    v.segment(static_cast<Index>(level) * space.motional_dim(), space.motional_dim()) = motional;
    return {space, v, 1.0};
}

DensityOp to_density(const PureState& state) {
    return {state.space, state.amplitudes * state.amplitudes.adjoint(), state.weight};
}

OperatorMatrix identity(const SpaceConfig& space) {
    return {space, CMatrix::Identity(space.dim(), space.dim())};
}

OperatorMatrix annihilation(const SpaceConfig& space, Mode mode) {
    CMatrix a = CMatrix::Zero(space.dim(), space.dim());
    for (Index i = 0; i < space.dim(); ++i) {
        const BasisLabel l = space.label(i);
        const int n = mode == Mode::One ? l.n1 : l.n2;
        if (n == 0) continue;
        const Index j = mode == Mode::One ? space.index(l.level, l.n1 - 1, l.n2)
                                          : space.index(l.level, l.n1, l.n2 - 1);
        a(j, i) = std::sqrt(static_cast<double>(n));
    }
    return {space, a};
}

OperatorMatrix creation(const SpaceConfig& space, Mode mode) {
    return annihilation(space, mode).adjoint();
}

OperatorMatrix number_operator(const SpaceConfig& space, Mode mode) {
    CMatrix n = CMatrix::Zero(space.dim(), space.dim());
    for (Index i = 0; i < space.dim(); ++i) {
        const BasisLabel l = space.label(i);
        n(i, i) = mode == Mode::One ? l.n1 : l.n2;
    }
    return {space, n};
}

OperatorMatrix spin_raise(const SpaceConfig& space) {
    CMatrix s = CMatrix::Zero(space.dim(), space.dim());
    const Index block = space.motional_dim();
    for (Index k = 0; k < block; ++k) s(block + k, k) = 1.0;
    return {space, s};
}

OperatorMatrix spin_lower(const SpaceConfig& space) {
    return spin_raise(space).adjoint();
}

OperatorMatrix excitation_number(const SpaceConfig& space) {
    CMatrix n = CMatrix::Zero(space.dim(), space.dim());
    for (Index i = 0; i < space.dim(); ++i) {
        const BasisLabel l = space.label(i);
        n(i, i) = l.n1 + l.n2;
    }
    return {space, n};
}

OperatorMatrix level_projector(const SpaceConfig& space, Level level) {
    if (!space.has_level(level)) throw std::out_of_range("level_projector: level not in space");
    CMatrix p = CMatrix::Zero(space.dim(), space.dim());
    const Index block = space.motional_dim();
    const Index offset = static_cast<Index>(level) * block;
    for (Index k = 0; k < block; ++k) p(offset + k, offset + k) = 1.0;
    return {space, p};
}

Complex expectation(const PureState& state, const OperatorMatrix& op) {
    require_same_space(state.space, op.space, "expectation");
    return state.amplitudes.dot(op.matrix * state.amplitudes);
}

Complex expectation(const DensityOp& rho, const OperatorMatrix& op) {
    require_same_space(rho.space, op.space, "expectation");
    return (op.matrix * rho.matrix).trace();
}

PureState apply(const OperatorMatrix& op, const PureState& state) {
    require_same_space(state.space, op.space, "apply");
    return {state.space, op.matrix * state.amplitudes, state.weight};
}

Complex overlap(const PureState& a, const PureState& b) {
    require_same_space(a.space, b.space, "overlap");
    return a.amplitudes.dot(b.amplitudes);
}

double level_population(const PureState& state, Level level) {
    if (!state.space.has_level(level)) return 0.0;
    const Index block = state.space.motional_dim();
    return state.amplitudes.segment(static_cast<Index>(level) * block, block).squaredNorm();
}

double level_population(const DensityOp& rho, Level level) {
    if (!rho.space.has_level(level)) return 0.0;
    const Index block = rho.space.motional_dim();
    const Index offset = static_cast<Index>(level) * block;
    return rho.matrix.diagonal().segment(offset, block).real().sum();
}

namespace {

std::vector<double> marginal_from_diagonal(const SpaceConfig& space, const Eigen::VectorXd& diag, Mode mode) {
    std::vector<double> p(static_cast<std::size_t>(space.cutoff(mode)) + 1, 0.0);
    for (Index i = 0; i < space.dim(); ++i) {
        const BasisLabel l = space.label(i);
        p[static_cast<std::size_t>(mode == Mode::One ? l.n1 : l.n2)] += diag(i);
    }
    return p;
}

} // namespace

std::vector<double> mode_marginal(const PureState& state, Mode mode) {
    return marginal_from_diagonal(state.space, state.amplitudes.cwiseAbs2(), mode);
}

std::vector<double> mode_marginal(const DensityOp& rho, Mode mode) {
    return marginal_from_diagonal(rho.space, rho.matrix.diagonal().real(), mode);
}

CMatrix single_mode_displacement(int n_max, Complex alpha) {
    if (n_max < 0) throw std::invalid_argument("single_mode_displacement: negative cutoff");
    const double r = std::abs(alpha);
    const int padded = n_max + 1 + 30 + static_cast<int>(std::ceil(4.0 * r * r + 10.0 * r));
    CMatrix gen = CMatrix::Zero(padded, padded);
    for (int n = 1; n < padded; ++n) {
        const double s = std::sqrt(static_cast<double>(n));
        gen(n, n - 1) += alpha * s;            // alpha a^dag
        gen(n - 1, n) -= std::conj(alpha) * s; // -alpha* a
    }
    const CMatrix full = gen.exp();
    return full.topLeftCorner(n_max + 1, n_max + 1);
}

CMatrix motional_displacement(const SpaceConfig& space, Complex alpha1, Complex alpha2) {
    const CMatrix d1 = single_mode_displacement(space.n_max_1(), alpha1);
    const CMatrix d2 = single_mode_displacement(space.n_max_2(), alpha2);
    return Eigen::kroneckerProduct(d1, d2).eval();
}

PureState apply_motional(const CMatrix& motional, const PureState& state) {
    const Index block = state.space.motional_dim();
    if (motional.rows() != block || motional.cols() != block) {
        throw std::invalid_argument("apply_motional: operator does not match the motional dimension");
    }
    PureState out = state;
    for (int e = 0; e < state.space.levels(); ++e) {
        out.amplitudes.segment(e * block, block) = motional * state.amplitudes.segment(e * block, block);
    }
    return out;
}

DensityOp apply_motional(const CMatrix& motional, const DensityOp& rho) {
    const Index block = rho.space.motional_dim();
    if (motional.rows() != block || motional.cols() != block) {
        throw std::invalid_argument("apply_motional: operator does not match the motional dimension");
    }
    DensityOp out = rho;
    const CMatrix adj = motional.adjoint();
    for (int e = 0; e < rho.space.levels(); ++e) {
        for (int f = 0; f < rho.space.levels(); ++f) {
            const auto src = rho.matrix.block(e * block, f * block, block, block);
            if (src.cwiseAbs().maxCoeff() == 0.0) continue;
            out.matrix.block(e * block, f * block, block, block) = motional * src * adj;
        }
    }
    return out;
}

} // namespace phonon
