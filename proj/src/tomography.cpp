#include "phonon/tomography.hpp"

#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

namespace phonon {

const char* to_string(Sideband sb) {
    return sb == Sideband::Rsb ? "RSB" : "BSB";
}

void RabiModel::validate() const {
    if (!(omega0 > 0.0) || !std::isfinite(omega0)) throw std::invalid_argument("RabiModel: omega0 must be > 0");
    if (!(eta > 0.0 && eta < 0.3)) throw std::invalid_argument("RabiModel: eta must lie in (0, 0.3)");
    if (!(decay >= 0.0) || !std::isfinite(decay)) throw std::invalid_argument("RabiModel: decay must be >= 0");
    if (!std::isfinite(decay_exponent)) throw std::invalid_argument("RabiModel: decay_exponent must be finite");
}

double RabiModel::sideband_frequency(Sideband sb, int n) const {
    return omega0 * eta * std::sqrt(sb == Sideband::Bsb ? n + 1.0 : static_cast<double>(n));
}

void PhononDistribution::validate(double tol) const {
    if (probs.empty()) throw std::invalid_argument("PhononDistribution: empty");
    double sum = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0)) throw std::invalid_argument("PhononDistribution: negative probability");
        sum += p;
    }
    if (std::abs(sum - 1.0) > tol) throw std::invalid_argument("PhononDistribution: probabilities do not sum to 1");
}

void RabiTrace::validate() const {
    if (times.empty() || times.size() != p_up.size()) throw std::invalid_argument("RabiTrace: length mismatch");
    if (!sigma.empty() && sigma.size() != times.size()) throw std::invalid_argument("RabiTrace: sigma length mismatch");
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (!(times[i] > times[i - 1])) throw std::invalid_argument("RabiTrace: times must be increasing");
    }
    for (double s : sigma) {
        if (!(s > 0.0)) throw std::invalid_argument("RabiTrace: sigma must be > 0");
    }
}

Eigen::MatrixXd rabi_design(const RabiModel& model, Sideband sb, std::span<const double> times, int nmax) {
    model.validate();
    if (nmax < 0) throw std::invalid_argument("rabi_design: nmax must be >= 0");
    Eigen::MatrixXd a(static_cast<Index>(times.size()), nmax + 1);
    for (int n = 0; n <= nmax; ++n) {
        const double w = kTwoPi * model.sideband_frequency(sb, n);
        const double g = kTwoPi * model.decay * std::pow(n + 1.0, model.decay_exponent);
        for (std::size_t k = 0; k < times.size(); ++k) {
            a(static_cast<Index>(k), n) = 0.5 * (1.0 - std::cos(w * times[k]) * std::exp(-g * times[k]));
        }
    }
    return a;
}

std::vector<double> rabi_signal(const PhononDistribution& dist, const RabiModel& model, Sideband sb,
                                std::span<const double> times) {
    dist.validate();
    const Eigen::VectorXd p = Eigen::Map<const Eigen::VectorXd>(dist.probs.data(), dist.nmax() + 1);
    const Eigen::VectorXd s = rabi_design(model, sb, times, dist.nmax()) * p;
    std::vector<double> out(s.data(), s.data() + s.size());
    for (double& v : out) v = std::clamp(v, 0.0, 1.0);
    return out;
}

namespace {

// Euclidean projection onto {p >= 0, sum p = 1}.
Eigen::VectorXd project_simplex(const Eigen::VectorXd& v) {
    std::vector<double> u(v.data(), v.data() + v.size());
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumulative = 0.0;
    double theta = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        cumulative += u[i];
        const double t = (cumulative - 1.0) / static_cast<double>(i + 1);
        if (u[i] - t > 0.0) theta = t;
    }
    return (v.array() - theta).max(0.0).matrix();
}

struct Quadratic {
    Eigen::MatrixXd q; // A^T W A
    Eigen::VectorXd c; // A^T W y
    double yy = 0.0;   // y^T W y

    double objective(const Eigen::VectorXd& p) const { return p.dot(q * p) - 2.0 * c.dot(p) + yy; }
};

Eigen::VectorXd fista(const Quadratic& f, Eigen::VectorXd p, double lipschitz, int iterations) {
    Eigen::VectorXd y = p;
    double t = 1.0;
    for (int k = 0; k < iterations; ++k) {
        const Eigen::VectorXd grad = 2.0 * (f.q * y - f.c);
        const Eigen::VectorXd next = project_simplex(y - grad / lipschitz);
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        y = next + ((t - 1.0) / t_next) * (next - p);
        const double change = (next - p).cwiseAbs().maxCoeff();
        p = next;
        t = t_next;
        if (change < 1e-15) break;
    }
    return p;
}

// Exact minimizer on the face given by `active`, subject to sum p = 1.
Eigen::VectorXd solve_face(const Quadratic& f, const std::vector<int>& active, Index n) {
    const Index m = static_cast<Index>(active.size());
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(m + 1, m + 1);
    Eigen::VectorXd rhs(m + 1);
    for (Index i = 0; i < m; ++i) {
        for (Index j = 0; j < m; ++j) kkt(i, j) = 2.0 * f.q(active[i], active[j]);
        kkt(i, m) = 1.0;
        kkt(m, i) = 1.0;
        rhs(i) = 2.0 * f.c(active[i]);
    }
    rhs(m) = 1.0;
    const Eigen::VectorXd sol = kkt.fullPivLu().solve(rhs);
    Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
    for (Index i = 0; i < m; ++i) p(active[i]) = sol(i);
    return p;
}

// Primal active-set refinement starting from the support of p.
Eigen::VectorXd polish(const Quadratic& f, Eigen::VectorXd p) {
    const Index n = p.size();
    std::vector<int> active;
    for (Index i = 0; i < n; ++i) {
        if (p(i) > 1e-12) active.push_back(static_cast<int>(i));
    }
    for (int iter = 0; iter < 4 * static_cast<int>(n) + 10; ++iter) {
        const Eigen::VectorXd cand = solve_face(f, active, n);
        // Step from p toward the face minimizer until a coordinate hits zero.
        double step = 1.0;
        int blocking = -1;
        for (int i : active) {
            if (cand(i) < 0.0 && p(i) - cand(i) > 0.0) {
                const double s = p(i) / (p(i) - cand(i));
                if (s < step) {
                    step = s;
                    blocking = i;
                }
            }
        }
        p = p + step * (cand - p);
        if (blocking >= 0) {
            p(blocking) = 0.0;
            active.erase(std::find(active.begin(), active.end(), blocking));
            continue;
        }
        // Multiplier of the sum constraint and the most violated bound.
        const Eigen::VectorXd grad = 2.0 * (f.q * p - f.c);
        double mu = 0.0;
        for (int i : active) mu += grad(i);
        mu /= static_cast<double>(active.size());
        int enter = -1;
        double worst = -1e-12 * std::max(1.0, grad.cwiseAbs().maxCoeff());
        for (Index i = 0; i < n; ++i) {
            if (std::find(active.begin(), active.end(), i) != active.end()) continue;
            if (grad(i) - mu < worst) {
                worst = grad(i) - mu;
                enter = static_cast<int>(i);
            }
        }
        if (enter < 0) break;
        active.push_back(enter);
        std::sort(active.begin(), active.end());
    }
    return project_simplex(p);
}

void append_trace(const RabiTrace& trace, const RabiModel& model, int nmax, Eigen::MatrixXd& a, Eigen::VectorXd& y,
                  Eigen::VectorXd& w, Index& row) {
    const Eigen::MatrixXd part = rabi_design(model, trace.sideband, trace.times, nmax);
    for (Index k = 0; k < part.rows(); ++k, ++row) {
        a.row(row) = part.row(k);
        y(row) = trace.p_up[static_cast<std::size_t>(k)];
        w(row) = trace.sigma.empty() ? 1.0 : 1.0 / (trace.sigma[static_cast<std::size_t>(k)] * trace.sigma[static_cast<std::size_t>(k)]);
    }
}

} // namespace

DistributionFit fit_distribution(const RabiTrace& rsb, const RabiTrace& bsb, const RabiModel& model, int nmax,
                                 const FitOptions& options) {
    rsb.validate();
    bsb.validate();
    model.validate();
    if (rsb.sideband != Sideband::Rsb || bsb.sideband != Sideband::Bsb) {
        throw std::invalid_argument("fit_distribution: expected one RSB and one BSB trace");
    }
    if (rsb.mode != bsb.mode) throw std::invalid_argument("fit_distribution: traces come from different modes");
    if (nmax < 0) throw std::invalid_argument("fit_distribution: nmax must be >= 0");

    const Index rows = static_cast<Index>(rsb.times.size() + bsb.times.size());
    Eigen::MatrixXd a(rows, nmax + 1);
    Eigen::VectorXd y(rows), w(rows);
    Index row = 0;
    append_trace(rsb, model, nmax, a, y, w, row);
    append_trace(bsb, model, nmax, a, y, w, row);

    Quadratic f;
    f.q = a.transpose() * w.asDiagonal() * a;
    f.c = a.transpose() * w.asDiagonal() * y;
    f.yy = y.dot(w.asDiagonal() * y);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(f.q, Eigen::EigenvaluesOnly);
    const double lmax = es.eigenvalues().maxCoeff();
    const double lmin = es.eigenvalues().minCoeff();
    if (!(lmax > 0.0) || lmin < 1e-13 * lmax) {
        throw SimulationError("fit_distribution: degenerate design (components are not identifiable from these times)");
    }

    std::mt19937_64 rng(options.seed);
    std::exponential_distribution<double> expo(1.0);
    std::vector<Eigen::VectorXd> starts{Eigen::VectorXd::Constant(nmax + 1, 1.0 / (nmax + 1))};
    for (int s = 0; s < options.random_starts; ++s) {
        Eigen::VectorXd v(nmax + 1);
        for (Index i = 0; i <= nmax; ++i) v(i) = expo(rng);
        starts.push_back(v / v.sum());
    }
    Eigen::VectorXd best;
    double best_obj = std::numeric_limits<double>::infinity();
    for (const auto& start : starts) {
        const Eigen::VectorXd p = polish(f, fista(f, start, 2.0 * lmax, options.max_iterations));
        const double obj = f.objective(p);
        if (obj < best_obj) {
            best_obj = obj;
            best = p;
        }
    }

    DistributionFit fit;
    fit.distribution.probs.assign(best.data(), best.data() + best.size());
    fit.residual = std::max(0.0, best_obj);
    fit.rms = std::sqrt((a * best - y).squaredNorm() / static_cast<double>(rows));
    if (!(fit.rms <= options.max_rms)) {
        throw SimulationError("fit_distribution: rms residual " + std::to_string(fit.rms) + " exceeds " +
                              std::to_string(options.max_rms));
    }

    // Curvature of the objective along the simplex face holding the support.
    std::vector<int> free;
    for (Index i = 0; i <= nmax; ++i) {
        if (best(i) > 1e-9) free.push_back(static_cast<int>(i));
    }
    fit.stderr_.assign(static_cast<std::size_t>(nmax + 1), 0.0);
    const Index k = static_cast<Index>(free.size());
    if (k >= 2) {
        Eigen::MatrixXd z = Eigen::MatrixXd::Zero(nmax + 1, k - 1);
        for (Index j = 0; j + 1 < k; ++j) {
            z(free[j], j) = 1.0;
            z(free[k - 1], j) = -1.0;
        }
        const Eigen::MatrixXd reduced = z.transpose() * f.q * z;
        const double dof = static_cast<double>(std::max<Index>(1, rows - (k - 1)));
        const double scale = rsb.sigma.empty() || bsb.sigma.empty() ? fit.residual / dof : 1.0;
        const Eigen::MatrixXd cov = z * reduced.inverse() * z.transpose() * scale;
        for (int i : free) fit.stderr_[static_cast<std::size_t>(i)] = std::sqrt(std::max(0.0, cov(i, i)));
    }
    return fit;
}

std::vector<double> displaced_thermal_populations(double alpha, double n_th, int nmax) {
    if (!(n_th >= 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("displaced_thermal_populations: bad input");
    const double r = std::abs(alpha);
    const int work = std::max(nmax, static_cast<int>(std::ceil(r * r + 6.0 * r + 10.0 + 30.0 * n_th)));
    Eigen::VectorXd th(work + 1);
    const double ratio = n_th / (1.0 + n_th);
    for (int n = 0; n <= work; ++n) th(n) = std::pow(ratio, n);
    th /= th.sum();
    const CMatrix d = single_mode_displacement(work, alpha);
    const CMatrix rho = d * th.cast<Complex>().asDiagonal() * d.adjoint();
    std::vector<double> p(static_cast<std::size_t>(nmax + 1));
    double total = 0.0;
    for (int n = 0; n <= work; ++n) total += rho(n, n).real();
    for (int n = 0; n <= nmax; ++n) p[static_cast<std::size_t>(n)] = rho(n, n).real() / total;
    return p;
}

namespace {

constexpr int kCoherentSignalCutoff = 30;

struct CoherentResidual {
    using Scalar = double;
    using InputType = Eigen::VectorXd;
    using ValueType = Eigen::VectorXd;
    using JacobianType = Eigen::MatrixXd;
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

    const RabiTrace* trace;
    Eigen::MatrixXd design;
    CoherentResidual(const RabiTrace& t, const RabiModel& model)
        : trace(&t), design(rabi_design(model, t.sideband, t.times, kCoherentSignalCutoff)) {}

    int inputs() const { return 2; }
    int values() const { return static_cast<int>(trace->times.size()); }

    // x = (alpha, sqrt(n_th)); populations depend on |alpha| only.
    int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& fvec) const {
        const auto p = displaced_thermal_populations(x(0), x(1) * x(1), kCoherentSignalCutoff);
        const Eigen::VectorXd model = design * Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Index>(p.size()));
        for (Index k = 0; k < fvec.size(); ++k) {
            const double s = trace->sigma.empty() ? 1.0 : trace->sigma[static_cast<std::size_t>(k)];
            fvec(k) = (model(k) - trace->p_up[static_cast<std::size_t>(k)]) / s;
        }
        return 0;
    }
};

} // namespace

CoherentFit fit_coherent_alpha(const RabiTrace& trace, const RabiModel& model, const FitOptions& options) {
    trace.validate();
    model.validate();
    if (trace.sideband != Sideband::Bsb) throw std::invalid_argument("fit_coherent_alpha: needs a BSB trace");
    (void)options;
    CoherentResidual residual(trace, model);
    Eigen::VectorXd fvec(residual.values());

    // Coarse grid for the starting point, then Levenberg-Marquardt.
    Eigen::VectorXd best(2);
    double best_ss = std::numeric_limits<double>::infinity();
    for (double a = 0.0; a <= 3.0 + 1e-12; a += 0.1) {
        for (double nt : {0.0, 0.05, 0.2, 0.5}) {
            Eigen::VectorXd x(2);
            x << a, std::sqrt(nt);
            residual(x, fvec);
            if (fvec.squaredNorm() < best_ss) {
                best_ss = fvec.squaredNorm();
                best = x;
            }
        }
    }
    // Keep the start off the symmetry point of the n_th parameterization.
    if (best(1) == 0.0) best(1) = 0.05;
    if (best(0) == 0.0) best(0) = 0.05;

    Eigen::NumericalDiff<CoherentResidual> numdiff(residual);
    Eigen::LevenbergMarquardt<Eigen::NumericalDiff<CoherentResidual>> lm(numdiff);
    lm.parameters.xtol = 1e-12;
    lm.parameters.ftol = 1e-14;
    lm.parameters.maxfev = 4000;
    const auto status = lm.minimize(best);
    if (status == Eigen::LevenbergMarquardtSpace::ImproperInputParameters ||
        status == Eigen::LevenbergMarquardtSpace::TooManyFunctionEvaluation) {
        throw SimulationError("fit_coherent_alpha: optimizer did not converge");
    }
    residual(best, fvec);
    return {std::abs(best(0)), best(1) * best(1), fvec.squaredNorm()};
}

RabiTrace synthesize_trace(const PhononDistribution& dist, const RabiModel& model, Sideband sb, Mode mode,
                           std::span<const double> times, int shots, std::uint64_t seed) {
    if (shots < 0) throw std::invalid_argument("synthesize_trace: shots must be >= 0");
    RabiTrace trace;
    trace.times.assign(times.begin(), times.end());
    trace.sideband = sb;
    trace.mode = mode;
    trace.p_up = rabi_signal(dist, model, sb, times);
    if (shots == 0) return trace;
    std::mt19937_64 rng(seed);
    for (double& p : trace.p_up) {
        std::binomial_distribution<int> draw(shots, p);
        p = static_cast<double>(draw(rng)) / shots;
        const double reg = (p * shots + 1.0) / (shots + 2.0);
        trace.sigma.push_back(std::sqrt(reg * (1.0 - reg) / shots));
    }
    return trace;
}

PhononDistribution poisson_distribution(double mean, int nmax) {
    if (!(mean >= 0.0) || nmax < 0) throw std::invalid_argument("poisson_distribution: bad input");
    PhononDistribution d;
    double term = std::exp(-mean);
    double sum = 0.0;
    for (int n = 0; n <= nmax; ++n) {
        if (n > 0) term *= mean / n;
        d.probs.push_back(term);
        sum += term;
    }
    for (double& p : d.probs) p /= sum;
    return d;
}

} // namespace phonon
