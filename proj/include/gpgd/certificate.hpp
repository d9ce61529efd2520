#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gpgd/constraint.hpp"
#include "gpgd/errors.hpp"
#include "gpgd/linop.hpp"
#include "gpgd/problem.hpp"
#include "gpgd/solver.hpp"
#include "gpgd/symmetry.hpp"
#include "gpgd/vector_ops.hpp"

/// Constants of the Group-PGD linear-rate bound
///
///   E||x_k - x_dagger|| <= alpha^k ||x_0 - x_dagger||
///                          + kappa_c (1 - alpha^k) / (L (1 - alpha)) (eps_G + eps_w ||w||)
///
/// with alpha = kappa_c sqrt(1 - mu_G / L), and their empirical verification.
///
/// mu quantities are squared-norm constants: mu_G is the smallest value of
/// mean_g ||A T_g v||^2 over unit cone vectors v, i.e. the restricted Gram
/// eigenvalue of the 1/sqrt(|G|)-scaled stack.
namespace gpgd {

struct ConeValue {
    double value = 0.0;
    Exactness exactness = Exactness::exact;
};

struct CertificateReport {
    double L = 0.0;
    double mu_C = 0.0;
    double mu_Gstar = 0.0;
    int kappa_c = 1;
    double alpha_Gstar = 1.0;
    double eps_Gstar = 0.0;
    double eps_w = 0.0;
    double w_norm = 0.0;
    std::size_t subset_size = 1;
    std::size_t subset_radius = 0;
    Exactness mu_C_exactness = Exactness::exact;
    Exactness mu_Gstar_exactness = Exactness::exact;
    Exactness eps_Gstar_exactness = Exactness::exact;
    Exactness eps_w_exactness = Exactness::exact;

    bool contractive() const noexcept { return alpha_Gstar < 1.0; }
    bool all_exact() const noexcept {
        return mu_C_exactness == Exactness::exact && mu_Gstar_exactness == Exactness::exact &&
               eps_Gstar_exactness == Exactness::exact && eps_w_exactness == Exactness::exact;
    }
};

/// kappa_c * sqrt(1 - mu / L)
inline double compute_alpha(double mu, double L, int kappa_c) {
    if (!(L > 0.0)) throw std::invalid_argument("compute_alpha: L must be positive");
    if (kappa_c != 1 && kappa_c != 2) throw std::invalid_argument("compute_alpha: kappa_c must be 1 or 2");
    if (!(mu >= 0.0)) throw std::invalid_argument("compute_alpha: mu must be nonnegative");
    // Round-off allowance when mu and L come from different solvers.
    if (mu > L * (1.0 + 1e-10)) throw std::invalid_argument("compute_alpha: mu exceeds L");
    return kappa_c * std::sqrt(std::max(0.0, 1.0 - mu / L));
}

/// Operators A T_g for every action of the subset, in subset order.
inline std::vector<LinearMap> subset_operators(const LinearMap& A, const SymmetricSubset& subset) {
    std::vector<LinearMap> ops;
    ops.reserve(subset.size());
    for (const auto& g : subset) ops.push_back(compose_with_action(A, g));
    return ops;
}

/// max_g ||P_C(A_g^T A (x_dagger - T_g x_dagger))||_2
inline ConeValue compute_eps_Gstar(const LinearMap& A, const SymmetricSubset& subset, std::span<const double> x_dagger,
                                   const DescentCone& C) {
    detail::require_dims(x_dagger.size(), A.cols(), "compute_eps_Gstar: ground truth");
    detail::require_dims(subset.dimension(), A.cols(), "compute_eps_Gstar: subset");
    detail::require_dims(C.dimension(), A.cols(), "compute_eps_Gstar: cone");
    double best = 0.0;
    for (const auto& g : subset) {
        const Vector mismatch = subtract(x_dagger, g.apply(x_dagger));
        if (norm2(mismatch) == 0.0) continue;
        const LinearMap Ag = compose_with_action(A, g);
        const Vector v = Ag.apply_adjoint(A.apply(mismatch));
        best = std::max(best, norm2(project_cone(C, v)));
    }
    return {best, C.exactness()};
}

/// max_g ||P_C(A_g^T w)||_2 / ||w||_2, and 0 for w = 0.
inline ConeValue compute_eps_w(const LinearMap& A, const SymmetricSubset& subset, std::span<const double> w,
                               const DescentCone& C) {
    detail::require_dims(w.size(), A.rows(), "compute_eps_w: noise");
    detail::require_dims(subset.dimension(), A.cols(), "compute_eps_w: subset");
    const double wn = norm2(w);
    if (wn == 0.0) return {0.0, C.exactness()};
    double best = 0.0;
    for (const auto& g : subset) {
        const Vector v = compose_with_action(A, g).apply_adjoint(w);
        best = std::max(best, norm2(project_cone(C, v)) / wn);
    }
    return {best, C.exactness()};
}

struct CertifyOptions {
    std::size_t dense_cap = kDefaultDenseCap;
    double power_tol = 1e-12;
    std::size_t power_max_iter = 20000;
    std::uint64_t seed = 0;
    ConeSamplingOptions cone{};
};

/// Every constant of the bound for `problem` with uniform sampling over `subset`.
inline CertificateReport certify(const ProblemInstance& problem, const SymmetricSubset& subset,
                                 const CertifyOptions& opts = {}) {
    if (problem.dimension() > opts.dense_cap) {
        throw SizeError("certify: dimension " + std::to_string(problem.dimension()) + " exceeds dense cap " +
                        std::to_string(opts.dense_cap));
    }
    const DescentCone C = descent_cone_of(problem.K, problem.x_dagger, opts.cone);
    CertificateReport rep;
    const SpectralEstimate L = spectral_norm(problem.A, opts.power_tol, opts.power_max_iter, opts.seed);
    if (!L.converged) throw std::runtime_error("certify: power iteration for L did not converge");
    rep.L = L.value;
    rep.kappa_c = problem.K.kappa_c();
    rep.subset_size = subset.size();
    rep.subset_radius = subset.radius();

    const RestrictedEig muC = restricted_min_eig(problem.A, C, opts.dense_cap);
    rep.mu_C = muC.value;
    rep.mu_C_exactness = muC.exactness;

    if (subset.size() == 1) {
        rep.mu_Gstar = rep.mu_C;
        rep.mu_Gstar_exactness = rep.mu_C_exactness;
    } else {
        const RestrictedEig muG = restricted_min_eig(stack_mean(subset_operators(problem.A, subset)), C, opts.dense_cap);
        rep.mu_Gstar = muG.value;
        rep.mu_Gstar_exactness = muG.exactness;
    }
    // mu_G <= L always holds exactly; clip solver round-off before forming alpha.
    rep.mu_Gstar = std::min(rep.mu_Gstar, rep.L);
    rep.mu_C = std::min(rep.mu_C, rep.L);
    rep.alpha_Gstar = compute_alpha(rep.mu_Gstar, rep.L, rep.kappa_c);

    const ConeValue eg = compute_eps_Gstar(problem.A, subset, problem.x_dagger, C);
    rep.eps_Gstar = eg.value;
    rep.eps_Gstar_exactness = eg.exactness;
    const ConeValue ew = compute_eps_w(problem.A, subset, problem.w, C);
    rep.eps_w = ew.value;
    rep.eps_w_exactness = ew.exactness;
    rep.w_norm = norm2(problem.w);
    return rep;
}

/// kappa_c (eps_G + eps_w ||w||) / (L (1 - alpha)), the k -> infinity value of the bound.
inline double bound_limit(const CertificateReport& report, double w_norm) {
    if (!report.contractive()) throw BoundVacuousError("bound_limit: alpha >= 1, bound is vacuous");
    return report.kappa_c * (report.eps_Gstar + report.eps_w * w_norm) / (report.L * (1.0 - report.alpha_Gstar));
}

/// Bound evaluated at k = 0..K (K + 1 entries); entry k bounds E||x_k - x_dagger||.
inline Vector bound_curve(const CertificateReport& report, double rmsd0, double w_norm, std::size_t K) {
    if (!report.contractive()) throw BoundVacuousError("bound_curve: alpha >= 1, bound is vacuous");
    const double a = report.alpha_Gstar;
    const double scale =
        report.kappa_c * (report.eps_Gstar + report.eps_w * w_norm) / (report.L * (1.0 - a));
    Vector out(K + 1);
    double ak = 1.0;
    for (std::size_t k = 0; k <= K; ++k) {
        out[k] = ak * rmsd0 + (1.0 - ak) * scale;
        ak *= a;
    }
    return out;
}

/// Smallest k with alpha^k * rmsd0 <= target, from the noiseless bound.
inline std::size_t predicted_iterations(const CertificateReport& report, double rmsd0, double target) {
    if (!report.contractive()) throw BoundVacuousError("predicted_iterations: alpha >= 1");
    if (rmsd0 <= target) return 0;
    if (report.alpha_Gstar == 0.0) return 1;
    return static_cast<std::size_t>(std::ceil(std::log(target / rmsd0) / std::log(report.alpha_Gstar)));
}

struct DominationReport {
    bool holds = true;
    double slack = 0.0;
    std::vector<std::size_t> k;
    Vector empirical_mean;
    Vector bound;
    Vector margin; ///< bound * (1 + slack) - empirical_mean
    std::optional<std::size_t> first_violation;
    CertificateReport certificate;
};

/// Monte Carlo check that the mean Group-PGD error stays under the bound
/// (times 1 + slack) at every recorded iteration. Runs with eta = 1/L.
inline DominationReport verify_bound(const ProblemInstance& problem, const SymmetricSubset& subset,
                                     const SolverConfig& config, std::size_t replicates,
                                     std::optional<double> slack = std::nullopt, const CertifyOptions& opts = {}) {
    if (replicates == 0) throw std::invalid_argument("verify_bound: need at least one replicate");
    if (!problem.K.is_convex()) throw std::invalid_argument("verify_bound: only convex constraint sets are certified");
    DominationReport out;
    out.certificate = certify(problem, subset, opts);
    const CertificateReport& rep = out.certificate;
    if (!rep.all_exact()) {
        throw std::invalid_argument("verify_bound: certificate built from a sampled cone is only an estimate");
    }
    if (!rep.contractive()) throw BoundVacuousError("verify_bound: alpha >= 1, bound is vacuous");
    out.slack = slack.value_or(2.0 / std::sqrt(static_cast<double>(replicates)));

    SolverConfig c = config;
    c.step_size = 1.0 / rep.L;
    const EnsembleTrace ens = run_ensemble(problem, c, GroupPgdMode{subset}, replicates);
    const double rmsd0 = ens.mean_rmsd.front();
    const Vector curve = bound_curve(rep, rmsd0, rep.w_norm, ens.k.back());
    out.k = ens.k;
    out.empirical_mean = ens.mean_rmsd;
    for (std::size_t i = 0; i < ens.k.size(); ++i) {
        const double b = curve[ens.k[i]];
        out.bound.push_back(b);
        const double m = b * (1.0 + out.slack) - ens.mean_rmsd[i];
        out.margin.push_back(m);
        if (m < 0.0 && !out.first_violation) {
            out.first_violation = ens.k[i];
            out.holds = false;
        }
    }
    return out;
}

namespace detail {
inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}
} // namespace detail

/// Flat `key = value` block, one constant per line.
inline std::string format_report(const CertificateReport& r) {
    std::ostringstream os;
    auto line = [&](const char* key, double v) { os << key << " = " << detail::format_double(v) << '\n'; };
    line("L", r.L);
    line("mu_C", r.mu_C);
    os << "mu_C.exactness = " << to_string(r.mu_C_exactness) << '\n';
    line("mu_Gstar", r.mu_Gstar);
    os << "mu_Gstar.exactness = " << to_string(r.mu_Gstar_exactness) << '\n';
    os << "kappa_c = " << r.kappa_c << '\n';
    line("alpha_Gstar", r.alpha_Gstar);
    line("eps_Gstar", r.eps_Gstar);
    os << "eps_Gstar.exactness = " << to_string(r.eps_Gstar_exactness) << '\n';
    line("eps_w", r.eps_w);
    os << "eps_w.exactness = " << to_string(r.eps_w_exactness) << '\n';
    line("w_norm", r.w_norm);
    os << "subset.size = " << r.subset_size << '\n';
    os << "subset.radius = " << r.subset_radius << '\n';
    if (r.contractive()) {
        os << "bound = contractive\n";
        line("bound.limit", bound_limit(r, r.w_norm));
    } else {
        os << "bound = vacuous (alpha_Gstar >= 1)\n";
    }
    return os.str();
}

} // namespace gpgd
