#pragma once

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "gpgd/bench.hpp"
#include "gpgd/certificate.hpp"
#include "gpgd/errors.hpp"
#include "gpgd/io.hpp"
#include "gpgd/solver.hpp"

/// Config-driven experiment harness behind the `gpgd` command line tool.
///
/// Config files are flat `dotted.key = value` lines; `#` starts a comment.
/// Unknown keys are rejected.
namespace gpgd::experiment {

enum ExitCode : int {
    kOk = 0,
    kFailure = 1,
    kParseError = 2,
    kDiverged = 3,
    kOversize = 4,
    kUnwritable = 5,
};

class ConfigError : public std::runtime_error {
public:
    ConfigError(std::size_t line, const std::string& msg)
        : std::runtime_error(line == 0 ? msg : "line " + std::to_string(line) + ": " + msg), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

struct ExperimentConfig {
    bench::ProblemSpec problem;
    std::optional<std::size_t> subset_radius = 2; ///< nullopt: smallest radius covering every angle
    std::size_t iters = 200;
    std::optional<double> step;                   ///< nullopt: 1/L
    std::size_t seeds = 20;
    std::uint64_t base_seed = 0;
    double tolerance = 1e-4;
    std::filesystem::path out_dir = "out";
    std::size_t record_every = 1;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(std::string_view v, std::size_t line, std::string_view key) {
    T out{};
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
        throw ConfigError(line, "invalid value '" + std::string(v) + "' for " + std::string(key));
    }
    return out;
}

} // namespace detail

inline ExperimentConfig parse_config(std::string_view text) {
    ExperimentConfig cfg;
    bench::RingSpec ring;
    bench::TexturedSpec textured;
    std::string phantom = "ring";
    std::string noise = "none";
    double sigma = 0.0;
    double scale = 1000.0;
    std::map<std::string, std::size_t> seen;

    using Setter = std::function<void(std::string_view, std::size_t, std::string_view)>;
    auto count = [](std::size_t& dst) {
        return Setter([&dst](std::string_view v, std::size_t line, std::string_view key) {
            dst = detail::parse_number<std::size_t>(v, line, key);
        });
    };
    auto seed = [](std::uint64_t& dst) {
        return Setter([&dst](std::string_view v, std::size_t line, std::string_view key) {
            dst = detail::parse_number<std::uint64_t>(v, line, key);
        });
    };
    auto real = [](double& dst) {
        return Setter([&dst](std::string_view v, std::size_t line, std::string_view key) {
            dst = detail::parse_number<double>(v, line, key);
        });
    };
    auto word = [](std::string& dst) {
        return Setter([&dst](std::string_view v, std::size_t, std::string_view) { dst = std::string(v); });
    };

    const std::map<std::string, Setter, std::less<>> setters{
        {"problem.n_r", count(cfg.problem.n_r)},
        {"problem.n_theta", count(cfg.problem.n_theta)},
        {"problem.angle_fraction", real(cfg.problem.angle_fraction)},
        {"problem.rays_per_angle", count(cfg.problem.rays_per_angle)},
        {"problem.operator_seed", seed(cfg.problem.operator_seed)},
        {"problem.phantom", word(phantom)},
        {"problem.ring.inner", real(ring.inner)},
        {"problem.ring.outer", real(ring.outer)},
        {"problem.ring.background", real(ring.background)},
        {"problem.ring.level", real(ring.level)},
        {"problem.textured.smoothness", count(textured.smoothness)},
        {"problem.textured.seed", seed(textured.seed)},
        {"problem.noise.model", word(noise)},
        {"problem.noise.sigma", real(sigma)},
        {"problem.noise.scale", real(scale)},
        {"problem.noise.seed", seed(cfg.problem.noise_seed)},
        {"subset.radius",
         [&cfg](std::string_view v, std::size_t line, std::string_view key) {
             if (v == "cover") cfg.subset_radius.reset();
             else cfg.subset_radius = detail::parse_number<std::size_t>(v, line, key);
         }},
        {"solver.iters", count(cfg.iters)},
        {"solver.step",
         [&cfg](std::string_view v, std::size_t line, std::string_view key) {
             if (v == "auto") cfg.step.reset();
             else cfg.step = detail::parse_number<double>(v, line, key);
         }},
        {"solver.seeds", count(cfg.seeds)},
        {"solver.base_seed", seed(cfg.base_seed)},
        {"solver.tolerance", real(cfg.tolerance)},
        {"output.directory", [&cfg](std::string_view v, std::size_t, std::string_view) { cfg.out_dir = std::string(v); }},
        {"output.record_every", count(cfg.record_every)},
    };

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError(line_no, "expected 'key = value'");
        const std::string_view key = detail::trim(line.substr(0, eq));
        const std::string_view value = detail::trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(line_no, "missing key");
        if (value.empty()) throw ConfigError(line_no, "missing value for " + std::string(key));
        const auto it = setters.find(key);
        if (it == setters.end()) throw ConfigError(line_no, "unknown key '" + std::string(key) + "'");
        if (const auto prev = seen.find(std::string(key)); prev != seen.end()) {
            throw ConfigError(line_no, "duplicate key '" + std::string(key) + "' (first set on line " +
                                           std::to_string(prev->second) + ")");
        }
        seen.emplace(std::string(key), line_no);
        it->second(value, line_no, key);
    }

    auto line_of = [&](const char* key) -> std::size_t {
        const auto it = seen.find(key);
        return it == seen.end() ? 0 : it->second;
    };
    auto positive = [&](std::size_t v, const char* key) {
        if (v == 0) throw ConfigError(line_of(key), std::string(key) + " must be positive");
    };
    positive(cfg.problem.n_r, "problem.n_r");
    positive(cfg.problem.n_theta, "problem.n_theta");
    positive(cfg.problem.rays_per_angle, "problem.rays_per_angle");
    positive(cfg.seeds, "solver.seeds");
    positive(cfg.record_every, "output.record_every");
    if (!(cfg.problem.angle_fraction > 0.0 && cfg.problem.angle_fraction <= 1.0)) {
        throw ConfigError(line_of("problem.angle_fraction"), "problem.angle_fraction must lie in (0, 1]");
    }
    if (cfg.step && !(*cfg.step > 0.0)) throw ConfigError(line_of("solver.step"), "solver.step must be positive");
    if (!(cfg.tolerance > 0.0)) throw ConfigError(line_of("solver.tolerance"), "solver.tolerance must be positive");

    if (phantom == "ring") {
        for (double v : {ring.background, ring.level}) {
            if (!(v >= 0.0 && v <= 1.0)) {
                throw ConfigError(line_of("problem.ring.level"), "ring intensities must lie in [0, 1]");
            }
        }
        cfg.problem.phantom = ring;
    } else if (phantom == "textured") {
        positive(textured.smoothness, "problem.textured.smoothness");
        cfg.problem.phantom = textured;
    } else {
        throw ConfigError(line_of("problem.phantom"), "problem.phantom must be 'ring' or 'textured'");
    }

    if (noise == "none") {
        cfg.problem.noise = bench::NoNoise{};
    } else if (noise == "gaussian") {
        if (!(sigma >= 0.0)) throw ConfigError(line_of("problem.noise.sigma"), "problem.noise.sigma must be >= 0");
        cfg.problem.noise = bench::GaussianNoise{sigma};
    } else if (noise == "poisson") {
        if (!(scale > 0.0)) throw ConfigError(line_of("problem.noise.scale"), "problem.noise.scale must be > 0");
        cfg.problem.noise = bench::PoissonNoise{scale};
    } else {
        throw ConfigError(line_of("problem.noise.model"), "problem.noise.model must be none, gaussian or poisson");
    }
    return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError(0, "cannot read config file " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

inline std::size_t resolve_radius(const ExperimentConfig& cfg, const ProblemInstance& problem) {
    if (cfg.subset_radius) return *cfg.subset_radius;
    return bench::covering_radius(problem.geometry->angles, problem.geometry->n_theta);
}

inline SolverConfig solver_config(const ExperimentConfig& cfg) {
    SolverConfig c;
    c.step_size = cfg.step;
    c.max_iters = cfg.iters;
    c.seed = cfg.base_seed;
    c.record_every = cfg.record_every;
    return c;
}

/// Bound column for a trace, or nullopt when the certificate is vacuous or
/// rests on a sampled cone.
inline std::optional<Vector> bound_column(const std::optional<CertificateReport>& rep, double rmsd0, std::size_t iters) {
    if (!rep || !rep->contractive() || !rep->all_exact()) return std::nullopt;
    return bound_curve(*rep, rmsd0, rep->w_norm, iters);
}

struct CommandOptions {
    std::filesystem::path config;
    std::optional<std::filesystem::path> out_override;
};

namespace detail {

struct Context {
    ExperimentConfig cfg;
    std::filesystem::path out_dir;
};

/// Shared error-to-exit-code mapping for every subcommand.
inline int guarded(const CommandOptions& opts, std::ostream& err,
                   const std::function<int(const Context&)>& body) {
    Context ctx;
    try {
        ctx.cfg = load_config(opts.config);
    } catch (const ConfigError& e) {
        err << "error: " << opts.config.string() << ": " << e.what() << '\n';
        return kParseError;
    }
    ctx.out_dir = opts.out_override.value_or(ctx.cfg.out_dir);
    try {
        return body(ctx);
    } catch (const DivergenceError& e) {
        err << "error: diverged: " << e.what() << '\n';
        return kDiverged;
    } catch (const SizeError& e) {
        err << "error: problem too large: " << e.what() << '\n';
        return kOversize;
    } catch (const io::WriteError& e) {
        err << "error: " << e.what() << '\n';
        return kUnwritable;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kFailure;
    }
}

inline std::optional<CertificateReport> try_certify(const ProblemInstance& problem, const SymmetricSubset& subset,
                                                    std::uint64_t seed) {
    if (problem.dimension() > kDefaultDenseCap) return std::nullopt;
    CertifyOptions opts;
    opts.seed = seed;
    return certify(problem, subset, opts);
}

} // namespace detail

/// Base-seed PGD and Group-PGD traces plus the certificate.
inline int cmd_run(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
    return detail::guarded(opts, err, [&](const detail::Context& ctx) {
        const ProblemInstance problem = bench::build_problem(ctx.cfg.problem);
        const SymmetricSubset subset(theta_generator(problem), resolve_radius(ctx.cfg, problem));
        const auto rep = detail::try_certify(problem, subset, ctx.cfg.base_seed);
        SolverConfig sc = solver_config(ctx.cfg);
        sc.step_size = sc.step_size ? sc.step_size : std::optional<double>(resolve_step_size(problem, sc));

        const IterateTrace pgd = run(problem, sc, PgdMode{});
        const IterateTrace group = run(problem, sc, GroupPgdMode{subset});
        const auto bound = bound_column(rep, group.records.front().rmsd, ctx.cfg.iters);

        const std::string pgd_csv = io::trace_csv(pgd, std::nullopt, false);
        const std::string group_csv = io::trace_csv(group, bound, true);
        const std::string cert = rep ? format_report(*rep) : "certificate = skipped (dimension above dense cap)\n";
        io::write_file_atomic(ctx.out_dir / "pgd.csv", pgd_csv);
        io::write_file_atomic(ctx.out_dir / "group_pgd.csv", group_csv);
        io::write_file_atomic(ctx.out_dir / "certificate.txt", cert);
        out << "final rmsd: pgd " << io::format_double(pgd.records.back().rmsd) << ", group_pgd "
            << io::format_double(group.records.back().rmsd) << '\n';
        out << "wrote " << (ctx.out_dir / "pgd.csv").string() << ", " << (ctx.out_dir / "group_pgd.csv").string()
            << ", " << (ctx.out_dir / "certificate.txt").string() << '\n';
        return int{kOk};
    });
}

/// Prints every constant of the bound with exactness flags.
inline int cmd_certify(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
    return detail::guarded(opts, err, [&](const detail::Context& ctx) {
        const ProblemInstance problem = bench::build_problem(ctx.cfg.problem);
        const SymmetricSubset subset(theta_generator(problem), resolve_radius(ctx.cfg, problem));
        CertifyOptions co;
        co.seed = ctx.cfg.base_seed;
        const CertificateReport rep = certify(problem, subset, co);
        const std::string text = format_report(rep);
        io::write_file_atomic(ctx.out_dir / "certificate.txt", text);
        out << text;
        if (!rep.contractive()) out << "notice: bound vacuous (alpha_Gstar >= 1); no rate is certified\n";
        return int{kOk};
    });
}

/// Seed-ensemble comparison of PGD and Group-PGD against the bound.
inline int cmd_compare(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
    return detail::guarded(opts, err, [&](const detail::Context& ctx) {
        const ProblemInstance problem = bench::build_problem(ctx.cfg.problem);
        const SymmetricSubset subset(theta_generator(problem), resolve_radius(ctx.cfg, problem));
        const auto rep = detail::try_certify(problem, subset, ctx.cfg.base_seed);
        SolverConfig sc = solver_config(ctx.cfg);
        sc.step_size = sc.step_size ? sc.step_size : std::optional<double>(resolve_step_size(problem, sc));

        // PGD draws no random numbers, so one replicate is the ensemble mean.
        const EnsembleTrace pgd = run_ensemble(problem, sc, PgdMode{}, 1);
        const EnsembleTrace group = run_ensemble(problem, sc, GroupPgdMode{subset}, ctx.cfg.seeds);
        const auto bound = bound_column(rep, group.mean_rmsd.front(), ctx.cfg.iters);

        std::ostringstream csv;
        csv << "iter,pgd_mean_rmsd,group_mean_rmsd,bound\n";
        for (std::size_t i = 0; i < group.k.size(); ++i) {
            csv << group.k[i] << ',' << io::format_double(pgd.mean_rmsd[i]) << ','
                << io::format_double(group.mean_rmsd[i]) << ',';
            if (bound) csv << io::format_double((*bound)[group.k[i]]);
            csv << '\n';
        }
        auto first_below = [&](const EnsembleTrace& e) -> std::string {
            for (std::size_t i = 0; i < e.k.size(); ++i)
                if (e.mean_rmsd[i] <= ctx.cfg.tolerance) return std::to_string(e.k[i]);
            return "never";
        };
        const std::string summary = "iterations_to_tolerance tolerance=" + io::format_double(ctx.cfg.tolerance) +
                                    " pgd=" + first_below(pgd) + " group_pgd=" + first_below(group) + "\n";
        io::write_file_atomic(ctx.out_dir / "compare.csv", csv.str());
        io::write_file_atomic(ctx.out_dir / "compare_summary.txt", summary);
        out << summary;
        return int{kOk};
    });
}

/// Ground-truth image as P2 graymap and full-precision CSV.
inline int cmd_phantom(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
    return detail::guarded(opts, err, [&](const detail::Context& ctx) {
        const auto& p = ctx.cfg.problem;
        const Vector x = bench::make_phantom(p);
        io::write_file_atomic(ctx.out_dir / "phantom.pgm", io::polar_pgm(x, p.n_r, p.n_theta));
        io::write_file_atomic(ctx.out_dir / "phantom.csv", io::polar_csv(x, p.n_r, p.n_theta));
        out << "wrote " << (ctx.out_dir / "phantom.pgm").string() << ", " << (ctx.out_dir / "phantom.csv").string()
            << '\n';
        return int{kOk};
    });
}

} // namespace gpgd::experiment
