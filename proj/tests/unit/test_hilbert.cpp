#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "oracles.hpp"
#include "phonon/collective.hpp"
#include "phonon/hilbert.hpp"

using namespace phonon;

TEST_CASE("space dimensions and validation") {
    CHECK(make_space(10, 10, 2).dim() == 242);
    CHECK(make_space(1, 1, 2).dim() == 8);
    CHECK(make_space(7, 7, 3).dim() == 192);
    CHECK_THROWS_AS(make_space(0, 3, 2), std::invalid_argument);
    CHECK_THROWS_AS(make_space(3, 3, 4), std::invalid_argument);
}

TEST_CASE("basis ordering round trip") {
    const auto s = make_space(4, 3, 3);
    for (Index i = 0; i < s.dim(); ++i) {
        const auto l = s.label(i);
        CHECK(s.index(l.level, l.n1, l.n2) == i);
    }
}

TEST_CASE("annihilation follows the sqrt(n) rule exactly") {
    const auto s = make_space(3, 3, 2);
    const auto a1 = annihilation(s, Mode::One);
    CHECK(apply(a1, basis_state(s, Level::Down, 0, 0)).amplitudes.norm() == 0.0);
    const auto out = apply(a1, basis_state(s, Level::Down, 2, 0));
    CHECK(out.amplitudes(s.index(Level::Down, 1, 0)) == Complex(std::sqrt(2.0), 0.0));
}

TEST_CASE("commutator is identity below the top Fock level") {
    for (int cutoff = 1; cutoff <= 12; ++cutoff) {
        const auto s = make_space(cutoff, cutoff, 2);
        for (Mode m : {Mode::One, Mode::Two}) {
            const CMatrix a = annihilation(s, m).matrix;
            const CMatrix comm = a * a.adjoint() - a.adjoint() * a;
            for (Index i = 0; i < s.dim(); ++i) {
                const auto l = s.label(i);
                if ((m == Mode::One ? l.n1 : l.n2) == cutoff) continue;
                CHECK(std::abs(comm(i, i) - 1.0) == doctest::Approx(0.0));
            }
        }
    }
}

TEST_CASE("spin operators") {
    const auto s = make_space(2, 2, 3);
    const CMatrix sp = spin_raise(s).matrix;
    const CMatrix anti = sp * sp.adjoint() + sp.adjoint() * sp;
    const CMatrix two_level = level_projector(s, Level::Down).matrix + level_projector(s, Level::Up).matrix;
    CHECK((anti - two_level).cwiseAbs().maxCoeff() == 0.0);
    CHECK(apply(spin_raise(s), basis_state(s, Level::Up, 0, 0)).amplitudes.norm() == 0.0);
}

TEST_CASE("excitation number expectations") {
    const auto s = make_space(3, 3, 2);
    const auto n = excitation_number(s);
    CHECK(expectation(dark_state(s, 1), n).real() == doctest::Approx(1.0));
    CHECK(expectation(bright_state(s, 2), n).real() == doctest::Approx(2.0));
    CHECK(overlap(bright_state(s, 1), dark_state(s, 1)).real() == doctest::Approx(0.0));
    CHECK(overlap(basis_state(s, Level::Down, 0, 1), bright_state(s, 1)).real() ==
          doctest::Approx(1.0 / std::sqrt(2.0)));
}

TEST_CASE("displacement matches the Laguerre closed form") {
    for (Complex alpha : {Complex(0.5, 0.0), Complex(1.0, 0.0), Complex(0.3, -0.7)}) {
        const CMatrix d = single_mode_displacement(12, alpha);
        const CMatrix ref = oracle::laguerre_displacement(12, alpha);
        CHECK((d - ref).cwiseAbs().maxCoeff() < 1e-12);
    }
}
