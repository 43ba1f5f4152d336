#include "afem/driver.hpp"

#include "afem/parallel.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

namespace afem {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// denoising solves run to kRofTolFactor * hbar, nonlinear Laplace to hbar^2
constexpr double kRofTolFactor = 0.05;

[[noreturn]] void fail(const std::string& msg) {
    throw std::invalid_argument("driver: " + msg);
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void validate(const RunConfig& c) {
    if (c.problem == ProblemKind::PLaplace) {
        if (c.benchmark != BenchmarkKind::LShape)
            fail("the nonlinear Laplace problem pairs with the corner benchmark");
        if (!(c.sigma > 1.0)) fail("sigma > 1 required");
        if (c.alpha != 0.0) fail("alpha does not apply to the nonlinear Laplace problem");
        if (c.dual_space != DualSpace::NormalContinuous)
            fail("the nonlinear Laplace dual always uses the normal-continuous space");
    } else {
        if (c.benchmark == BenchmarkKind::LShape)
            fail("the denoising problem pairs with the square or disk data sets");
        if (!(c.alpha > 0.0)) fail("alpha > 0 required");
        if (c.sigma != 0.0) fail("sigma does not apply to the denoising problem");
        if (c.estimator != EstimatorChoice::Pd)
            fail("the residual estimator is only available for the nonlinear Laplace problem");
    }
    if (!(c.theta > 0.0 && c.theta <= 1.0)) fail("theta must lie in (0, 1]");
    if (c.max_dofs < 1) fail("max_dofs must be positive");
}

MeshPtr initial_for(const RunConfig& c) {
    switch (c.benchmark) {
        case BenchmarkKind::LShape:
            return std::make_shared<Triangulation>(initial_mesh(Domain::LShape));
        case BenchmarkKind::Square:
            // Neumann boundary: the flat data set keeps its natural boundary values.
            return std::make_shared<Triangulation>(
                with_boundary_label(initial_mesh(Domain::Square), BoundaryLabel::Neumann));
        case BenchmarkKind::Circle:
            return std::make_shared<Triangulation>(initial_mesh(Domain::Square));
    }
    fail("unknown benchmark");
}

Eigen::Vector2d element_mean(const FeFunction& p, int e) {
    Eigen::Vector2d m = Eigen::Vector2d::Zero();
    for (int k = 0; k < 3; ++k) m += vertex_value_vec(p, e, k);
    return m / 3.0;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("driver: cannot write " + path);
    return out;
}

// Legacy ASCII VTK: point scalar u, cell scalar indicator (squared, as
// marked), optional cell scalar ubar, cell vector p (element mean).
void write_vtk(const std::string& path, const Triangulation& mesh, const FeFunction& u,
               const Eigen::VectorXd& indicators2, const FeFunction& p, const FeFunction* ubar) {
    std::ofstream out = open_out(path);
    const int nn = mesh.node_count(), ne = mesh.element_count();
    out << "# vtk DataFile Version 3.0\nadaptive solve\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << nn << " double\n";
    for (int i = 0; i < nn; ++i)
        out << fmt17(mesh.nodes(i, 0)) << ' ' << fmt17(mesh.nodes(i, 1)) << " 0\n";
    out << "CELLS " << ne << ' ' << 4 * ne << '\n';
    for (int e = 0; e < ne; ++e)
        out << "3 " << mesh.elements(e, 0) << ' ' << mesh.elements(e, 1) << ' '
            << mesh.elements(e, 2) << '\n';
    out << "CELL_TYPES " << ne << '\n';
    for (int e = 0; e < ne; ++e) out << "5\n";
    out << "POINT_DATA " << nn << "\nSCALARS u double 1\nLOOKUP_TABLE default\n";
    for (int i = 0; i < nn; ++i) out << fmt17(u.coeffs[i]) << '\n';
    out << "CELL_DATA " << ne << "\nSCALARS indicator double 1\nLOOKUP_TABLE default\n";
    for (int e = 0; e < ne; ++e) out << fmt17(indicators2[e]) << '\n';
    if (ubar) {
        out << "SCALARS ubar double 1\nLOOKUP_TABLE default\n";
        for (int e = 0; e < ne; ++e) out << fmt17(ubar->coeffs[e]) << '\n';
    }
    out << "VECTORS p double\n";
    for (int e = 0; e < ne; ++e) {
        const Eigen::Vector2d m = element_mean(p, e);
        out << fmt17(m[0]) << ' ' << fmt17(m[1]) << " 0\n";
    }
    if (!out) throw std::runtime_error("driver: write failed for " + path);
}

std::string level_name(const char* stem, int level, const char* ext) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%03d.%s", stem, level, ext);
    return buf;
}

double sqrt_total(const EstimatorReport& rep) {
    return std::sqrt(std::max(0.0, rep.total2));
}

// Everything one refinement level produces that the loop needs afterwards.
struct LevelResult {
    SolveResult primal, dual;
    ConvergenceRecord record;
    Eigen::VectorXd mark2;          // indicators driving the marking
    FeFunction ubar;                // denoising only
    bool have_ubar = false;
};

LevelResult solve_level(const RunConfig& config, const MeshPtr& mesh,
                        const LShapeBenchmark& lbench, const RofBenchmark& rbench, int level,
                        const AdmmInit& warm_primal, const AdmmInit& warm_dual) {
    const bool plap = config.problem == ProblemKind::PLaplace;
    const double hbar = mesh_sizes(*mesh).hbar;

    AdmmConfig scfg;
    scfg.tau0 = 1.0;
    scfg.adapt = true;
    // Solver residuals scale the energy defect by roughly 3x, so the denoising
    // tolerance carries a safety factor: at h-bar itself the solver error
    // swamps the discretization error on fine meshes and flattens the
    // adaptive convergence rate.
    scfg.tol = plap ? hbar * hbar : kRofTolFactor * hbar;

    LevelResult out;
    EstimatorReport rep_pd, rep_res;
    if (plap) {
        const PLaplaceProblem prob = lshape_problem(mesh, config.sigma);
        out.primal = solve_primal(prob, scfg, warm_primal);
        out.dual = solve_dual(prob, scfg, warm_dual);
        out.record.e_primal = energy_primal(out.primal.solution, prob);
        const std::optional<double> d = energy_dual_lumped(out.dual.solution, prob);
        if (!d)
            throw std::runtime_error("driver: dual iterate violates the divergence constraint");
        out.record.d_dual = *d;
        rep_pd = estimator_pd(out.primal.solution, out.dual.solution, prob);
        if (config.estimator != EstimatorChoice::Pd)
            rep_res = estimator_residual(out.primal.solution, prob);
        out.record.error = quasi_norm_error(out.primal.solution, lbench);
        out.record.osc = data_oscillation(prob, lbench, out.dual.solution);
    } else {
        const RofData data = rof_project_data(mesh, rbench);
        const RofProblem prob = rof_problem(mesh, config.alpha, data.g_h, config.dual_space);
        out.primal = solve_primal(prob, scfg, warm_primal);
        out.dual = solve_dual(prob, scfg, warm_dual);
        out.record.e_primal = energy_primal(out.primal.solution, prob);
        const std::optional<double> d = energy_dual(out.dual.solution, prob);
        if (!d) throw std::runtime_error("driver: dual iterate left the constraint set");
        out.record.d_dual = *d;
        rep_pd = estimator_rof(out.primal.solution, out.dual.solution, prob);
        out.record.error =
            rbench.has_exact_solution() ? l2_error_exact(out.primal.solution, rbench) : kNan;
        out.record.osc = data.data_error;
        out.ubar = dual_reconstruction(out.dual.solution, prob);
        out.have_ubar = true;
        out.record.recon_error =
            rbench.has_exact_solution() ? l2_error_exact(out.ubar, rbench) : kNan;
        out.record.ubar_jump = interface_jump(out.ubar, rbench, 2.0 * hbar);
    }

    if (plap) {
        out.record.recon_error = kNan;
        out.record.ubar_jump = kNan;
    }
    out.record.level = level;
    out.record.ndof = mesh->node_count();
    out.record.hbar = hbar;
    out.record.min_indicator2 = rep_pd.indicators2.minCoeff();
    out.record.eta_pd = sqrt_total(rep_pd);
    out.record.eta_res =
        (plap && config.estimator != EstimatorChoice::Pd) ? sqrt_total(rep_res) : kNan;
    out.record.iters_primal = out.primal.state.iters;
    out.record.iters_dual = out.dual.state.iters;
    out.record.primal_converged = out.primal.state.converged;
    out.record.dual_converged = out.dual.state.converged;
    if (!out.primal.state.converged)
        std::fprintf(stderr, "afem: level %d primal solve stopped at the sweep limit (tol %.3g)\n",
                     level, scfg.tol);
    if (!out.dual.state.converged)
        std::fprintf(stderr, "afem: level %d dual solve stopped at the sweep limit (tol %.3g)\n",
                     level, scfg.tol);

    out.mark2 = (config.estimator == EstimatorChoice::Res ? rep_res : rep_pd)
                    .indicators2.cwiseMax(0.0);
    return out;
}

}  // namespace

std::vector<ConvergenceRecord> run(const RunConfig& config) {
    validate(config);
    namespace fs = std::filesystem;
    const bool writing = !config.out_dir.empty();
    if (writing) fs::create_directories(config.out_dir);

    const bool plap = config.problem == ProblemKind::PLaplace;
    LShapeBenchmark lbench;
    RofBenchmark rbench;
    if (plap)
        lbench = lshape_benchmark(config.sigma);
    else
        rbench = rof_benchmark(config.benchmark == BenchmarkKind::Square ? RofExample::Square
                                                                         : RofExample::Circle);

    std::vector<ConvergenceRecord> records;
    MeshPtr mesh = initial_for(config);
    AdmmInit warm_primal, warm_dual;
    for (int level = 0;; ++level) {
        const LevelResult lr =
            solve_level(config, mesh, lbench, rbench, level, warm_primal, warm_dual);
        records.push_back(lr.record);

        if (writing) {
            write_mesh_file(*mesh,
                            (fs::path(config.out_dir) / level_name("mesh", level, "txt")).string());
            write_vtk((fs::path(config.out_dir) / level_name("solution", level, "vtk")).string(),
                      *mesh, lr.primal.solution, lr.mark2, lr.dual.solution,
                      lr.have_ubar ? &lr.ubar : nullptr);
        }

        Triangulation fine;
        if (config.refine == RefineMode::Uniform) {
            fine = refine_uniform(*mesh);
        } else {
            const MarkedSet marked = dorfler_mark(lr.mark2, config.theta);
            if (marked.empty()) break;  // estimator vanished: nothing left to refine
            fine = refine(*mesh, marked);
        }
        if (fine.node_count() > config.max_dofs) break;

        MeshPtr fptr = std::make_shared<Triangulation>(std::move(fine));
        warm_primal.primary = prolong_p1(*fptr, lr.primal.state.primary);
        warm_primal.auxiliary = prolong_p0(*fptr, *mesh, lr.primal.state.auxiliary, 2);
        warm_primal.multiplier = prolong_p0(*fptr, *mesh, lr.primal.state.multiplier, 2);
        if (!plap && config.dual_space == DualSpace::Continuous)
            warm_dual.primary = prolong_p1vec(*fptr, lr.dual.state.primary);
        else
            warm_dual.primary = prolong_p1disc_vec(*fptr, *mesh, lr.dual.state.primary);
        warm_dual.auxiliary = prolong_p1disc_vec(*fptr, *mesh, lr.dual.state.auxiliary);
        warm_dual.multiplier = prolong_p1disc_vec(*fptr, *mesh, lr.dual.state.multiplier);
        mesh = std::move(fptr);
    }

    if (writing)
        write_convergence_csv(records, (fs::path(config.out_dir) / "convergence.csv").string());
    return records;
}

double fit_rate(const std::vector<ConvergenceRecord>& records,
                const std::function<double(const ConvergenceRecord&)>& field) {
    const int n = static_cast<int>(records.size());
    if (n < 4) fail("rate fit needs at least four records");
    const int start = n / 2;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const int m = n - start;
    for (int i = start; i < n; ++i) {
        const double v = field(records[i]);
        if (!(v > 0.0) || records[i].ndof < 1)
            fail("rate fit needs positive field values and dof counts");
        const double x = std::log(static_cast<double>(records[i].ndof));
        const double y = std::log(v);
        sx += x, sy += y, sxx += x * x, sxy += x * y;
    }
    const double denom = m * sxx - sx * sx;
    if (!(denom > 0.0)) fail("rate fit needs distinct dof counts");
    return (m * sxy - sx * sy) / denom;
}

namespace {
const char* kCsvHeader = "level,ndof,hbar,E_primal,D_dual,eta_pd,eta_res,error,osc,"
                         "iters_primal,iters_dual,eta_com";
}

void write_convergence_csv(const std::vector<ConvergenceRecord>& records,
                           const std::string& path) {
    std::ofstream out = open_out(path);
    out << kCsvHeader << '\n';
    for (const ConvergenceRecord& r : records) {
        const double eta_com = std::isnan(r.eta_res) ? r.eta_pd : std::min(r.eta_pd, r.eta_res);
        out << r.level << ',' << r.ndof << ',' << fmt17(r.hbar) << ',' << fmt17(r.e_primal) << ','
            << fmt17(r.d_dual) << ',' << fmt17(r.eta_pd) << ',' << fmt17(r.eta_res) << ','
            << fmt17(r.error) << ',' << fmt17(r.osc) << ',' << r.iters_primal << ','
            << r.iters_dual << ',' << fmt17(eta_com) << '\n';
    }
    if (!out) throw std::runtime_error("driver: write failed for " + path);
}

std::vector<ConvergenceRecord> read_convergence_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("driver: cannot read " + path);
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader)
        throw std::runtime_error("driver: unrecognized header in " + path);
    std::vector<ConvergenceRecord> records;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 12) throw std::runtime_error("driver: malformed row in " + path);
        try {
            ConvergenceRecord r;
            r.level = std::stoi(f[0]);
            r.ndof = std::stoi(f[1]);
            r.hbar = std::stod(f[2]);
            r.e_primal = std::stod(f[3]);
            r.d_dual = std::stod(f[4]);
            r.eta_pd = std::stod(f[5]);
            r.eta_res = std::stod(f[6]);
            r.error = std::stod(f[7]);
            r.osc = std::stod(f[8]);
            r.iters_primal = std::stoi(f[9]);
            r.iters_dual = std::stoi(f[10]);
            records.push_back(r);
        } catch (const std::exception&) {
            throw std::runtime_error("driver: malformed row in " + path);
        }
    }
    return records;
}

double reference_primal_energy(const RunConfig& config, int min_dofs,
                               const std::string& cache_dir) {
    validate(config);
    if (min_dofs < 1) fail("min_dofs must be positive");

    namespace fs = std::filesystem;
    const char* pn = config.problem == ProblemKind::PLaplace ? "plaplace" : "rof";
    const char* bn = config.benchmark == BenchmarkKind::LShape
                         ? "lshape"
                         : (config.benchmark == BenchmarkKind::Square ? "square" : "circle");
    const double par = config.problem == ProblemKind::PLaplace ? config.sigma : config.alpha;
    char key[160];
    std::snprintf(key, sizeof key, "reference_%s_%s_%.17g_%d.txt", pn, bn, par, min_dofs);
    fs::path cpath;
    if (!cache_dir.empty()) {
        fs::create_directories(cache_dir);
        cpath = fs::path(cache_dir) / key;
        std::ifstream in(cpath);
        double v = 0;
        if (in && (in >> v)) return v;
    }

    const bool plap = config.problem == ProblemKind::PLaplace;
    MeshPtr mesh = initial_for(config);
    AdmmInit warm;
    double tau = 1.0;
    double energy = 0.0;
    for (;;) {
        const bool last = mesh->node_count() >= min_dofs;
        const double hbar = mesh_sizes(*mesh).hbar;
        AdmmConfig scfg;
        scfg.tau0 = tau;
        // The balancing rule cannot hold a 1e-10 residual (it keeps kicking
        // tau around), so the final solve runs at the fixed, pre-balanced step.
        scfg.adapt = !last;
        scfg.tol = last ? 1e-10 : (plap ? hbar * hbar : kRofTolFactor * hbar);
        scfg.max_iters = last ? 400000 : 20000;

        SolveResult res;
        if (plap) {
            const PLaplaceProblem prob = lshape_problem(mesh, config.sigma);
            res = solve_primal(prob, scfg, warm);
            if (last) energy = energy_primal(res.solution, prob);
        } else {
            const RofData data = rof_project_data(mesh, rof_benchmark(config.benchmark ==
                                                                              BenchmarkKind::Square
                                                                          ? RofExample::Square
                                                                          : RofExample::Circle));
            const RofProblem prob = rof_problem(mesh, config.alpha, data.g_h, config.dual_space);
            res = solve_primal(prob, scfg, warm);
            if (last) energy = energy_primal(res.solution, prob);
        }
        if (last) {
            if (!res.state.converged)
                throw std::runtime_error("driver: reference solve did not reach tolerance");
            break;
        }
        tau = res.state.tau;
        MeshPtr fptr = std::make_shared<Triangulation>(refine_uniform(*mesh));
        warm.primary = prolong_p1(*fptr, res.state.primary);
        warm.auxiliary = prolong_p0(*fptr, *mesh, res.state.auxiliary, 2);
        warm.multiplier = prolong_p0(*fptr, *mesh, res.state.multiplier, 2);
        mesh = std::move(fptr);
    }

    if (!cpath.empty()) {
        std::ofstream out = open_out(cpath.string());
        out << fmt17(energy) << '\n';
        if (!out) throw std::runtime_error("driver: write failed for " + cpath.string());
    }
    return energy;
}

}  // namespace afem
