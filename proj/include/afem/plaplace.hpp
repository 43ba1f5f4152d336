#pragma once

#include "afem/solver.hpp"
#include "afem/spaces.hpp"

#include <optional>

namespace afem {

// min (1/sigma) int |grad u|^sigma - int f_h u over piecewise affine u with
// prescribed boundary values, together with its dual maximization over
// elementwise affine fluxes p with div p = -f_h and continuous normal traces.
struct PLaplaceProblem {
    double sigma = 2.0;
    double sigma_prime = 2.0;
    MeshPtr mesh;
    FeFunction f_h;                     // P0
    Eigen::VectorXd dirichlet_values;   // nodal; used on Dirichlet nodes only
    std::vector<char> dirichlet_nodes;  // node mask from the boundary labels
};

PLaplaceProblem plaplace_problem(MeshPtr mesh, double sigma, FeFunction f_h,
                                 Eigen::VectorXd dirichlet_values);

// Singular corner benchmark on the L-shaped domain: u = r^delta sin(delta
// theta) with theta measured counterclockwise from the positive x-axis into
// [0, 3pi/2], delta = (6/5)(1 - 1/sigma).
struct LShapeBenchmark {
    double sigma = 2.0;
    double delta = 0.0;
    double u(const Eigen::Vector2d& x) const;
    Eigen::Vector2d grad_u(const Eigen::Vector2d& x) const;
    double f(const Eigen::Vector2d& x) const;  // singular at the origin
};

LShapeBenchmark lshape_benchmark(double sigma);

// Assembles the benchmark problem: f_h by elementwise means (deep subdivision
// on elements touching the singular corner), boundary data by interpolation of
// the exact solution.
PLaplaceProblem lshape_problem(MeshPtr mesh, double sigma);

// nodal interpolant of the exact solution (handy initializer / test object)
FeFunction lshape_interpolant(MeshPtr mesh, const LShapeBenchmark& bench);

// --- energies -------------------------------------------------------------

double energy_primal(const FeFunction& u, const PLaplaceProblem& prob);

// Value of the dual objective -(1/sigma') int I_h|p|^{sigma'} plus the
// boundary term sum_{S in Gamma_D} int_S (p.n) u_D; empty when the divergence
// constraint div p = -f_h is violated beyond 1e-10 on some element.
std::optional<double> energy_dual_lumped(const FeFunction& p, const PLaplaceProblem& prob);

// --- error estimation -------------------------------------------------------

// Lumped primal-dual gap indicators: eta2_T = int_T (1/sigma)|grad v|^sigma
// + (1/sigma') I_h|q|^{sigma'} - q . grad v, all terms integrated exactly.
// Throws when q violates the divergence constraint (worst element reported).
EstimatorReport estimator_pd(const FeFunction& v, const FeFunction& q,
                             const PLaplaceProblem& prob);

// Same density with |q|^{sigma'} integrated by subdivided quadrature instead
// of its nodal interpolant; dominated by the lumped version elementwise.
EstimatorReport estimator_pd_exact(const FeFunction& v, const FeFunction& q,
                                   const PLaplaceProblem& prob);

// Residual indicators: volume term |T| (|grad u|^{sigma-1} + h_T |f_T|)^{sigma'-2}
// h_T^2 f_T^2 plus, for each interior side, the patch-integrated gradient-jump
// term added to both adjacent elements.
EstimatorReport estimator_residual(const FeFunction& u, const PLaplaceProblem& prob);

// || |grad u|^{(sigma-2)/2} grad u - |grad u_h|^{(sigma-2)/2} grad u_h ||_L2,
// quadrature subdivided 4x (16x on elements touching the singular corner)
double quasi_norm_error(const FeFunction& u_h, const LShapeBenchmark& bench);

// ||p||_{sigma'}^{1/(sigma-1)} ||f - f_h||_{sigma'} (diagnostic, not part of
// the marking indicator)
double data_oscillation(const PLaplaceProblem& prob, const LShapeBenchmark& bench,
                        const FeFunction& p);

double lsigma_norm(const FeFunction& p, double exponent);  // (int |p|^s)^{1/s}

// --- solvers ----------------------------------------------------------------

// splitting of the primal energy: u-solve with the weighted stiffness matrix
// (factored once), elementwise radial updates for r = grad u, multiplier in
// the elementwise-constant vectors
SolveResult solve_primal(const PLaplaceProblem& prob, const AdmmConfig& config,
                         const AdmmInit& init = {});

// splitting of the dual energy: p-solve with hard divergence and continuity
// rows (Schur complement factored once, step size enters by scaling),
// nodewise radial updates for q, multiplier in elementwise affine vectors
SolveResult solve_dual(const PLaplaceProblem& prob, const AdmmConfig& config,
                       const AdmmInit& init = {});

// minimum-norm field satisfying div p = -f_h and the continuity rows; throws
// when the data is incompatible (e.g. pure-Neumann with nonzero mean f)
FeFunction feasible_dual_init(const PLaplaceProblem& prob);

}  // namespace afem
