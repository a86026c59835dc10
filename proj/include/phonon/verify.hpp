// verify.hpp: self-check suite run by `phonon_sim verify`.

#pragma once

#include <functional>
#include <string>
#include <vector>

namespace phonon {

struct VerifyCheck {
    std::string name;
    std::string description;
    double value = 0.0;     // measured deviation
    double threshold = 0.0; // pass iff value < threshold
    bool passed = false;
    std::string detail;     // error text when the check threw
};

// Coefficient of |m, N-m> in |psi_n^N>, as (total, bright, m) -> value.
using CoeffFn = std::function<double(int, int, int)>;

// max |<psi_n^N|psi_n'^N'> - delta| over N, N' <= max_total, with the basis
// built from `coeff`. Different N never overlap, so only N = N' is summed.
double orthonormality_deviation(int max_total, const CoeffFn& coeff);

std::vector<std::string> verify_check_names();

// Runs every check whose name contains `filter` (all when empty).
std::vector<VerifyCheck> run_verify(const std::string& filter = {});

} // namespace phonon
