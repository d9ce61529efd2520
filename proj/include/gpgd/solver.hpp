#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <future>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "gpgd/constraint.hpp"
#include "gpgd/errors.hpp"
#include "gpgd/linop.hpp"
#include "gpgd/problem.hpp"
#include "gpgd/symmetry.hpp"
#include "gpgd/vector_ops.hpp"

namespace gpgd {

struct SolverConfig {
    std::optional<double> step_size; ///< nullopt: eta = 1 / ||A^T A||
    std::size_t max_iters = 100;
    std::uint64_t seed = 0;
    std::size_t record_every = 1;
    std::optional<Vector> x0; ///< defaults to the zero vector
};

struct TraceRecord {
    std::size_t k = 0;
    double rmsd = 0.0;            ///< ||x_k - x_dagger||_2
    double rmsd_normalized = 0.0; ///< ||x_k - x_dagger||_2 / sqrt(d)
    double objective = 0.0;       ///< 0.5 ||A x_k - b||^2
    std::optional<std::size_t> action_index;
};

struct IterateTrace {
    std::vector<TraceRecord> records;
    std::vector<std::size_t> stage_starts; ///< iteration index at which each stage begins
    Vector final_iterate;
};

inline constexpr double kDivergenceNorm = 1e12;

/// P_K[x - eta A^T (A x - b)]
inline Vector pgd_step(std::span<const double> x, const LinearMap& A, std::span<const double> b,
                       const ConstraintSet& K, double eta) {
    detail::require_dims(x.size(), A.cols(), "pgd_step: iterate");
    detail::require_dims(b.size(), A.rows(), "pgd_step: observation");
    detail::require_dims(K.dimension(), A.cols(), "pgd_step: constraint set");
    if (!(eta > 0.0)) throw std::invalid_argument("pgd_step: eta must be positive");
    Vector r = A.apply(x);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
    const Vector g = A.apply_adjoint(r);
    Vector y(x.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] - eta * g[i];
    return project(K, y);
}

/// P_K[x - eta T^{-1} A^T (A T x - b)]; the gradient of f is taken at the
/// transformed point and pulled back.
inline Vector group_pgd_step(std::span<const double> x, const LinearMap& A, std::span<const double> b,
                             const ConstraintSet& K, double eta, const GroupAction& T) {
    detail::require_dims(x.size(), A.cols(), "group_pgd_step: iterate");
    detail::require_dims(b.size(), A.rows(), "group_pgd_step: observation");
    detail::require_dims(K.dimension(), A.cols(), "group_pgd_step: constraint set");
    detail::require_dims(T.dimension(), A.cols(), "group_pgd_step: action");
    if (!(eta > 0.0)) throw std::invalid_argument("group_pgd_step: eta must be positive");
    Vector r = A.apply(T.apply(x));
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
    const Vector g = T.apply_inverse(A.apply_adjoint(r));
    Vector y(x.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] - eta * g[i];
    return project(K, y);
}

inline double objective(const ProblemInstance& problem, std::span<const double> x) {
    const Vector r = subtract(problem.A.apply(x), problem.b);
    return 0.5 * dot(r, r);
}

/// Explicit step size, or 1/L with L from power iteration.
inline double resolve_step_size(const ProblemInstance& problem, const SolverConfig& config) {
    if (config.step_size) {
        if (!(*config.step_size > 0.0)) throw std::invalid_argument("SolverConfig: step_size must be positive");
        return *config.step_size;
    }
    const SpectralEstimate L = spectral_norm(problem.A, 1e-12, 20000, config.seed);
    if (!L.converged || !(L.value > 0.0)) {
        throw std::runtime_error("SolverConfig: automatic step size needs a converged, positive ||A^T A||");
    }
    return 1.0 / L.value;
}

struct PgdMode {};
struct GroupPgdMode {
    std::reference_wrapper<const SymmetricSubset> subset;
};
using SolverMode = std::variant<PgdMode, GroupPgdMode>;

namespace detail {

class TraceRecorder {
public:
    TraceRecorder(const ProblemInstance& problem, std::size_t record_every)
        : problem_(problem), record_every_(record_every == 0 ? 1 : record_every),
          sqrt_d_(std::sqrt(static_cast<double>(problem.dimension()))) {}

    void record(IterateTrace& trace, std::size_t k, std::span<const double> x, std::optional<std::size_t> action,
                bool force) const {
        if (!force && k % record_every_ != 0) return;
        TraceRecord rec;
        rec.k = k;
        rec.rmsd = distance(x, problem_.x_dagger);
        rec.rmsd_normalized = rec.rmsd / sqrt_d_;
        rec.objective = objective(problem_, x);
        rec.action_index = action;
        trace.records.push_back(rec);
    }

private:
    const ProblemInstance& problem_;
    std::size_t record_every_;
    double sqrt_d_;
};

inline void check_divergence(std::span<const double> x, std::size_t k) {
    if (!all_finite(x)) throw DivergenceError(k, "iterate became non-finite at iteration " + std::to_string(k));
    if (norm2(x) > kDivergenceNorm) {
        throw DivergenceError(k, "iterate norm exceeded 1e12 at iteration " + std::to_string(k));
    }
}

/// Runs `iterations` steps starting at global index `k0`, appending records.
inline void run_segment(const ProblemInstance& problem, const SolverMode& mode, double eta, std::size_t k0,
                        std::size_t iterations, std::size_t total, Rng& rng, Vector& x,
                        const TraceRecorder& recorder, IterateTrace& trace) {
    for (std::size_t i = 1; i <= iterations; ++i) {
        const std::size_t k = k0 + i;
        std::optional<std::size_t> action;
        if (const auto* g = std::get_if<GroupPgdMode>(&mode)) {
            const SampledAction s = sample_action(g->subset.get(), rng);
            x = group_pgd_step(x, problem.A, problem.b, problem.K, eta, s.action);
            action = s.index;
        } else {
            x = pgd_step(x, problem.A, problem.b, problem.K, eta);
        }
        check_divergence(x, k);
        recorder.record(trace, k, x, action, k == total);
    }
}

inline Vector initial_iterate(const ProblemInstance& problem, const SolverConfig& config) {
    if (config.x0) {
        detail::require_dims(config.x0->size(), problem.dimension(), "SolverConfig: x0");
        return *config.x0;
    }
    return Vector(problem.dimension(), 0.0);
}

} // namespace detail

/// Plain PGD or Group-PGD for `max_iters` steps; deterministic given the seed.
inline IterateTrace run(const ProblemInstance& problem, const SolverConfig& config, const SolverMode& mode) {
    if (const auto* g = std::get_if<GroupPgdMode>(&mode)) {
        detail::require_dims(g->subset.get().dimension(), problem.dimension(), "run: subset dimension");
    }
    const double eta = resolve_step_size(problem, config);
    Rng rng(config.seed);
    Vector x = detail::initial_iterate(problem, config);
    const detail::TraceRecorder recorder(problem, config.record_every);

    IterateTrace trace;
    trace.stage_starts.push_back(0);
    recorder.record(trace, 0, x, std::nullopt, true);
    detail::run_segment(problem, mode, eta, 0, config.max_iters, config.max_iters, rng, x, recorder, trace);
    trace.final_iterate = std::move(x);
    return trace;
}

struct Stage {
    std::size_t radius = 0;
    std::size_t iterations = 0;
};

/// Group-PGD over a sequence of shrinking symmetric subsets, each stage warm
/// started from the previous final iterate. The rng stream continues across
/// stages, so a one-stage schedule reproduces `run`.
inline IterateTrace run_multistage(const ProblemInstance& problem, const SolverConfig& config,
                                   const GroupAction& generator, const std::vector<Stage>& schedule) {
    if (schedule.empty()) throw std::invalid_argument("run_multistage: empty schedule");
    for (std::size_t i = 1; i < schedule.size(); ++i) {
        if (schedule[i].radius > schedule[i - 1].radius) {
            throw std::invalid_argument("run_multistage: subset radii must be non-increasing");
        }
    }
    detail::require_dims(generator.dimension(), problem.dimension(), "run_multistage: generator");
    const double eta = resolve_step_size(problem, config);
    Rng rng(config.seed);
    Vector x = detail::initial_iterate(problem, config);
    const detail::TraceRecorder recorder(problem, config.record_every);

    std::size_t total = 0;
    for (const auto& s : schedule) total += s.iterations;

    IterateTrace trace;
    recorder.record(trace, 0, x, std::nullopt, true);
    std::size_t k = 0;
    for (const auto& stage : schedule) {
        trace.stage_starts.push_back(k);
        const SymmetricSubset subset(generator, stage.radius);
        detail::run_segment(problem, GroupPgdMode{subset}, eta, k, stage.iterations, total, rng, x, recorder, trace);
        k += stage.iterations;
    }
    trace.final_iterate = std::move(x);
    return trace;
}

inline IterateTrace run_multistage(const ProblemInstance& problem, const SolverConfig& config,
                                   const std::vector<Stage>& schedule) {
    return run_multistage(problem, config, theta_generator(problem), schedule);
}

/// Seed for replicate `index`, derived from (base, index) through seed_seq.
inline std::uint64_t replicate_seed(std::uint64_t base, std::size_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(std::uint64_t{index} >> 32)};
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (std::uint64_t{out[0]} << 32) | out[1];
}

struct EnsembleTrace {
    std::vector<std::size_t> k;
    Vector mean_rmsd;
    Vector mean_rmsd_normalized;
    std::vector<IterateTrace> replicates;
};

/// Runs `replicates` independently seeded solves and averages rmsd per
/// recorded iteration. Replicates run concurrently; results are combined in
/// replicate order so the mean is reproducible.
inline EnsembleTrace run_ensemble(const ProblemInstance& problem, const SolverConfig& config, const SolverMode& mode,
                                  std::size_t replicates) {
    if (replicates == 0) throw std::invalid_argument("run_ensemble: need at least one replicate");
    SolverConfig base = config;
    base.step_size = resolve_step_size(problem, config);

    std::vector<IterateTrace> traces(replicates);
    const std::size_t workers = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    for (std::size_t start = 0; start < replicates; start += workers) {
        std::vector<std::future<IterateTrace>> batch;
        for (std::size_t r = start; r < std::min(replicates, start + workers); ++r) {
            SolverConfig c = base;
            c.seed = replicate_seed(config.seed, r);
            batch.push_back(std::async(workers > 1 ? std::launch::async : std::launch::deferred,
                                       [&problem, c, &mode] { return run(problem, c, mode); }));
        }
        for (std::size_t i = 0; i < batch.size(); ++i) traces[start + i] = batch[i].get();
    }

    EnsembleTrace out;
    const std::size_t n = traces.front().records.size();
    out.k.resize(n);
    out.mean_rmsd.assign(n, 0.0);
    out.mean_rmsd_normalized.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) out.k[i] = traces.front().records[i].k;
    // Running mean: replicates that agree give back their common value exactly.
    for (std::size_t r = 0; r < replicates; ++r) {
        const double inv = 1.0 / static_cast<double>(r + 1);
        for (std::size_t i = 0; i < n; ++i) {
            out.mean_rmsd[i] += (traces[r].records[i].rmsd - out.mean_rmsd[i]) * inv;
            out.mean_rmsd_normalized[i] += (traces[r].records[i].rmsd_normalized - out.mean_rmsd_normalized[i]) * inv;
        }
    }
    out.replicates = std::move(traces);
    return out;
}

} // namespace gpgd
