#pragma once

#include "afem/plaplace.hpp"
#include "afem/rof.hpp"

#include <functional>
#include <string>
#include <vector>

namespace afem {

enum class ProblemKind { PLaplace, Rof };
enum class BenchmarkKind { LShape, Square, Circle };
enum class RefineMode { Uniform, Adaptive };
enum class EstimatorChoice { Pd, Res, Both };

// One solve-estimate-mark-refine experiment.  The L-shape corner benchmark
// pairs with the nonlinear Laplace problem (sigma required); the square and
// disk data sets pair with the denoising problem (alpha required).
struct RunConfig {
    ProblemKind problem = ProblemKind::PLaplace;
    BenchmarkKind benchmark = BenchmarkKind::LShape;
    double sigma = 0.0;  // gradient exponent, nonlinear Laplace only
    double alpha = 0.0;  // fidelity weight, denoising only
    RefineMode refine = RefineMode::Adaptive;
    double theta = 0.5;  // bulk-criterion fraction
    EstimatorChoice estimator = EstimatorChoice::Pd;
    DualSpace dual_space = DualSpace::NormalContinuous;
    int max_dofs = 10000;
    std::string out_dir;  // empty: compute only, write nothing
};

// Per-level results.  eta_* store square roots of the summed squared
// indicators (the plotted quantities); error and eta_res are NaN when not
// available for the configuration.
struct ConvergenceRecord {
    int level = 0;
    int ndof = 0;  // number of mesh nodes
    double hbar = 0.0;
    double e_primal = 0.0;
    double d_dual = 0.0;
    double eta_pd = 0.0;
    double eta_res = 0.0;
    double error = 0.0;
    double osc = 0.0;
    int iters_primal = 0;
    int iters_dual = 0;
    bool primal_converged = true;
    bool dual_converged = true;
    // Diagnostics, not serialized to the CSV.  min_indicator2 is the smallest
    // raw (unclamped) squared gap indicator of the level; recon_error is the
    // scaled L2 distance of the dual reconstruction from the exact minimizer
    // (disk data only); ubar_jump sums the reconstruction's side jumps near
    // the data interface.  NaN where not applicable.
    double min_indicator2 = 0.0;
    double recon_error = 0.0;
    double ubar_jump = 0.0;
};

// Runs the refinement loop: solve primal and dual (warm-started from the
// previous level), assemble the estimator, record, mark (bulk criterion for
// adaptive, everything for uniform), refine.  Stops once the node count
// exceeds max_dofs or marking returns the empty set.  Solver non-convergence
// is flagged on the record and warned about, not fatal.  With a nonempty
// out_dir, writes convergence.csv, mesh_%03d.txt and solution_%03d.vtk.
std::vector<ConvergenceRecord> run(const RunConfig& config);

// least-squares slope of log(field) against log(ndof) over the last half of
// the records; needs at least four records
double fit_rate(const std::vector<ConvergenceRecord>& records,
                const std::function<double(const ConvergenceRecord&)>& field);

void write_convergence_csv(const std::vector<ConvergenceRecord>& records,
                           const std::string& path);
std::vector<ConvergenceRecord> read_convergence_csv(const std::string& path);

// Primal energy on a uniformly refined mesh with at least min_dofs nodes,
// solved to tolerance 1e-10; the value is cached in cache_dir keyed by the
// configuration, so repeated calls are free.
double reference_primal_energy(const RunConfig& config, int min_dofs,
                               const std::string& cache_dir);

}  // namespace afem
