// hilbert.hpp: truncated electronic x mode-1 x mode-2 space, state containers
// and the elementary ladder/spin operators acting on it.

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <vector>

#include "phonon/error.hpp"

namespace phonon {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Index = Eigen::Index;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// Electronic levels. Aux is the optional third level used as a shelving state.
enum class Level : int { Down = 0, Up = 1, Aux = 2 };

enum class Mode : int { One = 1, Two = 2 };

Level level_from_int(int value);
Mode mode_from_int(int value);
const char* to_string(Level level);

struct BasisLabel {
    Level level;
    int n1;
    int n2;

    friend bool operator==(const BasisLabel&, const BasisLabel&) = default;
};

// Fock cutoffs are inclusive: mode i holds occupations 0..n_max_i.
// Basis ordering: index = e*(n_max_1+1)*(n_max_2+1) + n1*(n_max_2+1) + n2.
class SpaceConfig {
public:
    SpaceConfig(int n_max_1, int n_max_2, int electronic_levels);

    int n_max_1() const { return n_max_1_; }
    int n_max_2() const { return n_max_2_; }
    int cutoff(Mode mode) const { return mode == Mode::One ? n_max_1_ : n_max_2_; }
    int levels() const { return levels_; }
    Index dim() const { return static_cast<Index>(levels_) * (n_max_1_ + 1) * (n_max_2_ + 1); }
    Index motional_dim() const { return static_cast<Index>(n_max_1_ + 1) * (n_max_2_ + 1); }

    bool has_level(Level level) const { return static_cast<int>(level) < levels_; }
    Index index(Level level, int n1, int n2) const;
    BasisLabel label(Index i) const;

    friend bool operator==(const SpaceConfig&, const SpaceConfig&) = default;

private:
    int n_max_1_;
    int n_max_2_;
    int levels_;
};

SpaceConfig make_space(int n_max_1, int n_max_2, int electronic_levels);

// A ket on the composite space. Constructors below return normalized kets;
// apply() returns the raw image without renormalizing. `weight` carries the
// survival probability accumulated through postselection.
struct PureState {
    SpaceConfig space;
    CVector amplitudes;
    double weight = 1.0;

    double norm() const { return amplitudes.norm(); }
    bool is_normalized(double tol = 1e-12) const { return std::abs(norm() - 1.0) <= tol; }
    PureState normalized() const;
};

struct DensityOp {
    SpaceConfig space;
    CMatrix matrix;
    double weight = 1.0;

    Complex trace() const { return matrix.trace(); }
    double hermiticity_error() const;
    double min_eigenvalue() const;
};

struct OperatorMatrix {
    SpaceConfig space;
    CMatrix matrix;

    OperatorMatrix adjoint() const { return {space, matrix.adjoint()}; }
    bool is_hermitian(double tol = 1e-12) const;
};

OperatorMatrix operator*(const OperatorMatrix& a, const OperatorMatrix& b);
OperatorMatrix operator+(const OperatorMatrix& a, const OperatorMatrix& b);
OperatorMatrix operator-(const OperatorMatrix& a, const OperatorMatrix& b);
OperatorMatrix operator*(Complex c, const OperatorMatrix& a);

PureState basis_state(const SpaceConfig& space, Level level, int n1, int n2);
// Tensor product of an electronic level with a motional ket given in the
// (n1, n2) block ordering of length motional_dim().
PureState with_level(const SpaceConfig& space, Level level, const CVector& motional);
DensityOp to_density(const PureState& state);

OperatorMatrix identity(const SpaceConfig& space);
// Truncated ladder operator; a^dagger sends |n_max> to zero.
OperatorMatrix annihilation(const SpaceConfig& space, Mode mode);
OperatorMatrix creation(const SpaceConfig& space, Mode mode);
OperatorMatrix number_operator(const SpaceConfig& space, Mode mode);
// |Up><Down| on the motional identity. The auxiliary level is untouched.
OperatorMatrix spin_raise(const SpaceConfig& space);
OperatorMatrix spin_lower(const SpaceConfig& space);
OperatorMatrix excitation_number(const SpaceConfig& space);
OperatorMatrix level_projector(const SpaceConfig& space, Level level);

Complex expectation(const PureState& state, const OperatorMatrix& op);
Complex expectation(const DensityOp& rho, const OperatorMatrix& op);
PureState apply(const OperatorMatrix& op, const PureState& state);
// <a|b>
Complex overlap(const PureState& a, const PureState& b);

double level_population(const PureState& state, Level level);
double level_population(const DensityOp& rho, Level level);
// Occupation probabilities p_0..p_nmax of one mode, traced over everything else.
std::vector<double> mode_marginal(const PureState& state, Mode mode);
std::vector<double> mode_marginal(const DensityOp& rho, Mode mode);

// Single-mode displacement exp(alpha a^dag - alpha* a) restricted to the
// (n_max+1)-dimensional Fock block. The exponential is taken on a padded
// space so the retained block is accurate; the block itself is therefore not
// exactly unitary, and the lost norm is the truncation residual.
CMatrix single_mode_displacement(int n_max, Complex alpha);

// D(alpha1) x D(alpha2) on the motional factor only (motional_dim square).
CMatrix motional_displacement(const SpaceConfig& space, Complex alpha1, Complex alpha2);

// Applies a motional-only operator to every electronic block of a ket or
// density matrix (M psi_e, and M rho_ee' M^dag respectively).
PureState apply_motional(const CMatrix& motional, const PureState& state);
DensityOp apply_motional(const CMatrix& motional, const DensityOp& rho);

void require_same_space(const SpaceConfig& a, const SpaceConfig& b, const char* where);

} // namespace phonon
