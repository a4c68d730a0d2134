#include "blocktri/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

#include "blocktri/block_cholesky.hpp"
#include "blocktri/io.hpp"
#include "blocktri/kalman.hpp"
#include "blocktri/oracle.hpp"
#include "blocktri/residual.hpp"
#include "blocktri/schur_recursion.hpp"
#include "blocktri/synthgen.hpp"

namespace blocktri::cli {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

/// Raised for bad input that CLI11 cannot catch (exit code 2).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SolverOptions {
    Index n_star = 64;
    Index rho = 8;
    bool auto_crossover = false;
    int threads = 0;

    RecursionConfig config() const {
        RecursionConfig cfg;
        cfg.n_star = n_star;
        cfg.reduction_factor = rho;
        cfg.auto_crossover = auto_crossover;
        return cfg;
    }
};

void add_solver_options(CLI::App* cmd, SolverOptions& opt) {
    cmd->add_option("--n-star", opt.n_star, "Crossover block count N* for the serial base case")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--rho", opt.rho, "Target interior segment length")->check(CLI::PositiveNumber);
    cmd->add_flag("--auto-crossover", opt.auto_crossover,
                  "Recurse while a level yields at least two segments (ignores --n-star)");
    cmd->add_option("--threads", opt.threads, "Batch parallelism cap (default: BLOCKTRI_THREADS or all cores)")
        ->check(CLI::NonNegativeNumber);
}

/// A solved system with its phase timings.
struct SolveRun {
    BlockRhs<double> solution;
    double factor_ms = 0;
    double solve_ms = 0;
};

SolveRun run_recursive(const BlockTridiagonalMatrix<double>& A, const BlockRhs<double>& B,
                       const RecursionConfig& cfg) {
    auto t0 = Clock::now();
    const auto h = recursive_factorize(A, cfg);
    const double f = elapsed_ms(t0);
    t0 = Clock::now();
    BlockRhs<double> X = recursive_solve(h, B);
    return {std::move(X), f, elapsed_ms(t0)};
}

SolveRun run_serial(const BlockTridiagonalMatrix<double>& A, const BlockRhs<double>& B) {
    auto t0 = Clock::now();
    BlockTridiagonalMatrix<double> L = A;
    serial_factorize(L);
    const double f = elapsed_ms(t0);
    t0 = Clock::now();
    BlockRhs<double> X = B;
    serial_solve(L, X);
    return {std::move(X), f, elapsed_ms(t0)};
}

double max_abs(const BlockRhs<double>& X) {
    double m = 0;
    for (double v : X.arena().values()) m = std::max(m, std::abs(v));
    return m;
}

double max_abs_diff(const BlockRhs<double>& X, const BlockRhs<double>& Y) {
    double m = 0;
    const auto a = X.arena().values();
    const auto b = Y.arena().values();
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// --- generate ---------------------------------------------------------------

struct GenerateOptions {
    Index N = 0, n = 0, d = 1;
    std::uint64_t seed = 0;
    std::string out;
};

int cmd_generate(const GenerateOptions& o, std::ostream& out) {
    const auto sys = generate_spd_btd(o.N, o.n, o.d, o.seed);
    io::write_btd(o.out, sys.matrix, sys.rhs);
    out << "wrote " << o.out << " (N=" << o.N << ", n=" << o.n << ", d=" << o.d << ", seed=" << o.seed
        << ")\n";
    return kOk;
}

// --- solve ------------------------------------------------------------------

struct SolveOptions {
    std::string in, out;
    bool serial = false;
    SolverOptions solver;
};

int cmd_solve(const SolveOptions& o, std::ostream& out) {
    auto file = io::read_btd(o.in);
    if (!file.rhs) throw UsageError("solve: " + o.in + " has no right-hand side");
    file.matrix.symmetrize();
    const auto run = o.serial ? run_serial(file.matrix, *file.rhs)
                              : run_recursive(file.matrix, *file.rhs, o.solver.config());
    const auto res = residual_report(file.matrix, run.solution, *file.rhs);
    out << std::setprecision(6);
    out << "path: " << (o.serial ? "serial" : "recursive") << "\n"
        << "factor_ms: " << run.factor_ms << "\n"
        << "solve_ms: " << run.solve_ms << "\n"
        << std::scientific << std::setprecision(3) << "residual: " << res.absolute << "\n"
        << "relative_residual: " << res.relative << "\n";
    if (!o.out.empty()) io::write_btd(o.out, file.matrix, run.solution);
    return kOk;
}

// --- verify -----------------------------------------------------------------

struct VerifyOptions {
    std::string in;
    double tol = 1e-10;
    SolverOptions solver;
};

int cmd_verify(const VerifyOptions& o, std::ostream& out) {
    auto file = io::read_btd(o.in);
    file.matrix.symmetrize();
    const Index dim = file.matrix.dim();
    if (dim > oracle::kMaxDenseDim)
        throw UsageError("verify: N*n = " + std::to_string(dim) + " exceeds the dense oracle cap of " +
                         std::to_string(oracle::kMaxDenseDim));
    const BlockRhs<double> B = file.rhs ? *file.rhs
                                        : generate_spd_btd(file.matrix.num_blocks(),
                                                           file.matrix.block_size(), 1, 0)
                                              .rhs;
    const auto dense = assemble_dense(file.matrix);
    const auto reference = BlockRhs<double>::from_dense(oracle::dense_solve(dense, B.to_dense()),
                                                        file.matrix.block_size());
    const auto recursive = run_recursive(file.matrix, B, o.solver.config());
    const auto serial = run_serial(file.matrix, B);
    const double scale = std::max(max_abs(reference), 1e-300);
    const double err_recursive = max_abs_diff(recursive.solution, reference) / scale;
    const double err_serial = max_abs_diff(serial.solution, reference) / scale;
    const double err_paths = max_abs_diff(recursive.solution, serial.solution) / scale;
    const bool ok = err_recursive <= o.tol && err_serial <= o.tol;
    out << std::scientific << std::setprecision(3) << "recursive_vs_dense: " << err_recursive << "\n"
        << "serial_vs_dense: " << err_serial << "\n"
        << "recursive_vs_serial: " << err_paths << "\n"
        << "tolerance: " << o.tol << "\n"
        << "status: " << (ok ? "PASS" : "FAIL") << "\n";
    return ok ? kOk : kSolverError;
}

// --- bench ------------------------------------------------------------------

struct BenchOptions {
    std::string sweep = "nn65536";
    std::string shapes;
    int runs = 10;
    std::string format = "md";
    std::uint64_t seed = 0;
    double max_gib = 4.0;
    SolverOptions solver;
};

std::vector<std::pair<Index, Index>> parse_shapes(const std::string& text) {
    std::vector<std::pair<Index, Index>> shapes;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto x = item.find('x');
        if (x == std::string::npos) throw UsageError("bench: shape '" + item + "' is not NxN");
        try {
            shapes.emplace_back(std::stoll(item.substr(0, x)), std::stoll(item.substr(x + 1)));
        } catch (const std::exception&) {
            throw UsageError("bench: shape '" + item + "' is not NxN");
        }
        if (shapes.back().first < 1 || shapes.back().second < 1)
            throw UsageError("bench: shape '" + item + "' must be positive");
    }
    return shapes;
}

// Peak working set of the recursive path: input, working copy, interiors,
// intermediate factors and Schur complements, in units of N n^2 doubles.
double estimated_gib(Index N, Index n) {
    return 8.0 * 8.0 * double(N) * double(n) * double(n) / (1024.0 * 1024.0 * 1024.0);
}

struct BenchRow {
    Index N = 0, n = 0;
    bool skipped = false;
    double rec_factor = 0, rec_solve = 0, ser_factor = 0, ser_solve = 0, residual = 0;
};

int cmd_bench(const BenchOptions& o, std::ostream& out, std::ostream& err) {
    const auto shapes = o.shapes.empty() ? sweep_shapes(o.sweep) : parse_shapes(o.shapes);
    if (o.format != "csv" && o.format != "md") throw UsageError("bench: --format must be csv or md");
    const auto cfg = o.solver.config();

    std::vector<BenchRow> rows;
    for (const auto& [N, n] : shapes) {
        BenchRow row{N, n};
        const double gib = estimated_gib(N, n);
        if (gib > o.max_gib) {
            err << "warning: skipping (N=" << N << ", n=" << n << "): needs about " << std::fixed
                << std::setprecision(1) << gib << " GiB, cap is " << o.max_gib
                << " GiB (raise --max-gib to run it)\n";
            row.skipped = true;
            rows.push_back(row);
            continue;
        }
        const auto sys = generate_spd_btd(N, n, 1, o.seed);
        run_recursive(sys.matrix, sys.rhs, cfg); // warm-up, not timed
        run_serial(sys.matrix, sys.rhs);
        for (int r = 0; r < o.runs; ++r) {
            const auto rec = run_recursive(sys.matrix, sys.rhs, cfg);
            const auto ser = run_serial(sys.matrix, sys.rhs);
            row.rec_factor += rec.factor_ms;
            row.rec_solve += rec.solve_ms;
            row.ser_factor += ser.factor_ms;
            row.ser_solve += ser.solve_ms;
            if (r + 1 == o.runs) row.residual = residual_report(sys.matrix, rec.solution, sys.rhs).relative;
        }
        row.rec_factor /= o.runs;
        row.rec_solve /= o.runs;
        row.ser_factor /= o.runs;
        row.ser_solve /= o.runs;
        rows.push_back(row);
    }

    const auto num = [](double v, bool skipped, bool sci = false) {
        if (skipped) return std::string("NA");
        std::ostringstream s;
        if (sci)
            s << std::scientific << std::setprecision(2) << v;
        else
            s << std::fixed << std::setprecision(2) << v;
        return s.str();
    };
    if (o.format == "csv") {
        out << "N,n,phase,recursive_ms,serial_ms,relative_residual\n";
        for (const auto& r : rows) {
            out << r.N << ',' << r.n << ",Fact.," << num(r.rec_factor, r.skipped) << ','
                << num(r.ser_factor, r.skipped) << ',' << num(r.residual, r.skipped, true) << '\n';
            out << r.N << ',' << r.n << ",Solve," << num(r.rec_solve, r.skipped) << ','
                << num(r.ser_solve, r.skipped) << ',' << num(r.residual, r.skipped, true) << '\n';
        }
    } else {
        out << "Mean of " << o.runs << " runs (ms), FP64, " << batch_threads() << " thread(s)\n\n"
            << "| N | n | Phase | Recursive | Seq. | Rel. residual |\n"
            << "|---|---|-------|-----------|------|---------------|\n";
        for (const auto& r : rows) {
            out << "| " << r.N << " | " << r.n << " | Fact. | " << num(r.rec_factor, r.skipped) << " | "
                << num(r.ser_factor, r.skipped) << " | " << num(r.residual, r.skipped, true) << " |\n";
            out << "|   |   | Solve | " << num(r.rec_solve, r.skipped) << " | "
                << num(r.ser_solve, r.skipped) << " |   |\n";
        }
    }
    return kOk;
}

// --- kalman -----------------------------------------------------------------

struct KalmanOptions {
    Index n = 32, m = 128, N = 100;
    std::uint64_t seed = 0;
    double dt = 0.1;
    bool large_shape = false;
    std::string out;
    SolverOptions solver;
};

int cmd_kalman(KalmanOptions o, std::ostream& out) {
    if (o.large_shape) {
        o.n = 256;
        o.m = 1024;
        o.N = 100;
    }
    auto t0 = Clock::now();
    const auto model = kalman::generate_rotation_model(o.n, o.m, o.N, o.dt, o.seed);
    const double gen_ms = elapsed_ms(t0);
    t0 = Clock::now();
    const auto eq = kalman::build_normal_equations(model);
    const double init_ms = elapsed_ms(t0);
    const auto run = run_recursive(eq.matrix, eq.rhs, o.solver.config());
    const auto res = residual_report(eq.matrix, run.solution, eq.rhs);
    out << "model: n=" << o.n << " m=" << o.m << " N=" << o.N << " dt=" << o.dt << " seed=" << o.seed << "\n"
        << std::fixed << std::setprecision(3) << "generate_ms: " << gen_ms << "\n"
        << "init_ms: " << init_ms << "\n"
        << "factor_ms: " << run.factor_ms << "\n"
        << "solve_ms: " << run.solve_ms << "\n"
        << "total_ms: " << run.factor_ms + run.solve_ms << "\n"
        << std::scientific << std::setprecision(3) << "residual: " << res.absolute << "\n"
        << "relative_residual: " << res.relative << "\n";
    if (!o.out.empty()) io::write_btd(o.out, eq.matrix, eq.rhs);
    return kOk;
}

} // namespace

std::vector<std::pair<Index, Index>> sweep_shapes(const std::string& name) {
    if (name == "nn262144")
        return {{256, 1024}, {512, 512}, {1024, 256}, {2048, 128}, {4096, 64}, {8192, 32}};
    if (name == "nn65536") return {{256, 256}, {512, 128}, {1024, 64}, {2048, 32}};
    if (name == "nn16384") return {{128, 128}, {256, 64}, {512, 32}, {1024, 16}};
    throw UsageError("bench: unknown sweep '" + name + "' (expected nn262144, nn65536 or nn16384)");
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Block-tridiagonal SPD solver: recursive Schur-complement factorization"};
    app.name("blocktri");
    app.require_subcommand(1);

    GenerateOptions gen;
    auto* generate = app.add_subcommand("generate", "Write a random SPD block-tridiagonal system");
    generate->add_option("--N", gen.N, "Number of block rows")->required()->check(CLI::PositiveNumber);
    generate->add_option("--n", gen.n, "Block size")->required()->check(CLI::PositiveNumber);
    generate->add_option("--d", gen.d, "Right-hand side columns")->check(CLI::PositiveNumber);
    generate->add_option("--seed", gen.seed, "Random seed");
    generate->add_option("--out", gen.out, "Output BTD file")->required();

    SolveOptions sol;
    auto* solve = app.add_subcommand("solve", "Factor and solve a BTD file, report timings and residual");
    solve->add_option("--in", sol.in, "Input BTD file with right-hand side")->required();
    solve->add_option("--out", sol.out, "Write the matrix and solution X (in the RHS slot)");
    solve->add_flag("--serial", sol.serial, "Use the serial block-Cholesky sweep");
    add_solver_options(solve, sol.solver);

    VerifyOptions ver;
    auto* verify = app.add_subcommand("verify", "Cross-check recursive and serial solves against a dense oracle");
    verify->add_option("--in", ver.in, "Input BTD file (N*n <= 4096)")->required();
    verify->add_option("--tol", ver.tol, "Relative max-abs tolerance");
    add_solver_options(verify, ver.solver);

    BenchOptions ben;
    auto* bench = app.add_subcommand("bench", "Time recursive vs serial factor/solve over a shape sweep");
    bench->add_option("--sweep", ben.sweep, "Named sweep: nn262144, nn65536 or nn16384");
    bench->add_option("--shapes", ben.shapes, "Explicit shapes, e.g. 512x32,256x64 (overrides --sweep)");
    bench->add_option("--runs", ben.runs, "Timed runs per shape")->check(CLI::PositiveNumber);
    bench->add_option("--format", ben.format, "csv or md")->check(CLI::IsMember({"csv", "md"}));
    bench->add_option("--seed", ben.seed, "Random seed");
    bench->add_option("--max-gib", ben.max_gib, "Skip shapes whose estimated memory exceeds this");
    add_solver_options(bench, ben.solver);

    KalmanOptions kal;
    auto* kalman_cmd = app.add_subcommand("kalman", "Solve a synthetic Kalman MAP-smoothing problem");
    kalman_cmd->add_option("--n", kal.n, "State dimension (even)");
    kalman_cmd->add_option("--m", kal.m, "Observation dimension");
    kalman_cmd->add_option("--N", kal.N, "Horizon");
    kalman_cmd->add_option("--seed", kal.seed, "Random seed");
    kalman_cmd->add_option("--dt", kal.dt, "Sampling interval (seconds)");
    kalman_cmd->add_flag("--paper-shape", kal.large_shape, "Use n=256, m=1024, N=100");
    kalman_cmd->add_option("--out", kal.out, "Write the normal equations as a BTD file");
    add_solver_options(kalman_cmd, kal.solver);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kOk : kUsageError;
    }

    const std::string stage = app.get_subcommands().front()->get_name();
    try {
        if (*generate) return cmd_generate(gen, out);
        if (*solve) {
            set_batch_threads(sol.solver.threads);
            return cmd_solve(sol, out);
        }
        if (*verify) {
            set_batch_threads(ver.solver.threads);
            return cmd_verify(ver, out);
        }
        if (*bench) {
            set_batch_threads(ben.solver.threads);
            return cmd_bench(ben, out, err);
        }
        if (*kalman_cmd) {
            set_batch_threads(kal.solver.threads);
            return cmd_kalman(kal, out);
        }
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kUsageError;
    } catch (const InvalidDimensions& e) {
        err << "error: " << stage << ": " << e.what() << "\n";
        return kUsageError;
    } catch (const std::exception& e) {
        err << "error: " << stage << " failed: " << e.what() << "\n";
        return kSolverError;
    }
    return kUsageError;
}

} // namespace blocktri::cli
