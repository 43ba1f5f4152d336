#pragma once

#include "afem/solver.hpp"
#include "afem/spaces.hpp"

#include <optional>

namespace afem {

// Discrete space for the dual variable.
enum class DualSpace {
    Continuous,        // globally continuous nodal vector fields
    NormalContinuous,  // elementwise affine fields glued by normal-trace rows
};

enum class RofBc { NeumannAll, DirichletAll };

// min over piecewise affine v of int |grad v| + (alpha/2)||v - g_h||^2,
// alongside the maximization of -(1/(2 alpha))||div p + alpha g_h||^2 +
// (alpha/2)||g_h||^2 over fields of the chosen dual space with |p| <= 1.
// Under Neumann conditions the dual space carries a zero normal trace; under
// Dirichlet conditions the primal functions vanish on the boundary and the
// dual boundary trace is free.
struct RofProblem {
    double alpha = 1.0;
    FeFunction g_h;  // P0
    RofBc bc = RofBc::NeumannAll;
    DualSpace dual_space = DualSpace::NormalContinuous;
    MeshPtr mesh;
};

// the boundary condition is read off the mesh labels (which must be uniform)
RofProblem rof_problem(MeshPtr mesh, double alpha, FeFunction g_h, DualSpace dual_space);

// Characteristic-function data sets on (-1,1)^2: square inset with alpha=100
// under Neumann conditions, disk inset with alpha=10 under Dirichlet
// conditions; the disk case has the exact minimizer (3/5) chi_{|x|<=1/2}.
enum class RofExample { Square, Circle };

struct RofBenchmark {
    RofExample kind = RofExample::Square;
    double alpha = 100.0;
    bool inside(const Eigen::Vector2d& x) const;
    double g(const Eigen::Vector2d& x) const;
    bool has_exact_solution() const { return kind == RofExample::Circle; }
    double exact_u(const Eigen::Vector2d& x) const;  // throws for the square data
};

RofBenchmark rof_benchmark(RofExample kind);

// elementwise means of the 0/1 data with interface-adapted subdivision, plus
// the projection error ||g - g_h||
struct RofData {
    FeFunction g_h;
    double data_error = 0.0;
};
RofData rof_project_data(MeshPtr mesh, const RofBenchmark& bench, int max_depth = 10);

// --- energies -------------------------------------------------------------

double energy_primal(const FeFunction& u, const RofProblem& prob);

// empty when some vertex value leaves the unit ball by more than 1e-10 (the
// vertex maximum bounds the element maximum for affine fields); accepts both
// dual-space kinds
std::optional<double> energy_dual(const FeFunction& p, const RofProblem& prob);

// --- error estimation -------------------------------------------------------

// eta2_T = int_T (|grad v| - grad v . q)
//        + (1/(2 alpha)) int_T (div q - alpha (v - g_h))^2,
// both terms integrated exactly; throws when q violates the vertexwise unit
// bound (worst node reported)
EstimatorReport estimator_rof(const FeFunction& v, const FeFunction& q, const RofProblem& prob);

// elementwise (1/alpha) div p + g_h, an independent approximation of the
// primal minimizer recovered from the dual variable
FeFunction dual_reconstruction(const FeFunction& p, const RofProblem& prob);

// total side-jump sum |S| |[v]| of an elementwise constant field over interior
// sides whose midpoints lie within `width` of the data interface (oscillation
// diagnostic for the reconstruction)
double interface_jump(const FeFunction& v, const RofBenchmark& bench, double width);

// (alpha/2)^{1/2} ||u - u_h|| against the exact disk-data minimizer, with
// interface-adapted quadrature; accepts nodal (P1) and elementwise-constant
// (P0) approximations
double l2_error_exact(const FeFunction& u_h, const RofBenchmark& bench, int max_depth = 10);

// --- solvers ----------------------------------------------------------------

// splitting of the primal energy: u-solve with (alpha mass + tau weighted
// stiffness), elementwise soft-threshold updates for r = grad u; `gamma`
// selects the elementwise weight h_T^gamma of the coupling norm
SolveResult solve_primal(const RofProblem& prob, const AdmmConfig& config,
                         const AdmmInit& init = {}, double gamma = 0.0);

// splitting of the dual energy: p-solve with the divergence-fidelity
// quadratic over the chosen space, nodewise ball projections for q; the
// returned field is post-projected to satisfy the vertex bound exactly
SolveResult solve_dual(const RofProblem& prob, const AdmmConfig& config,
                       const AdmmInit& init = {});

// Extrapolated primal-dual iteration: dual ascent with elementwise constant
// fields and ball projection, proximal descent for u in the vertex-quadrature
// norm.  Fixed points are discrete primal minimizers; step size tau = sigma
// should satisfy tau^2 < mean mesh size.
struct PdState {
    Eigen::VectorXd u_prev, u;  // nodal
    Eigen::VectorXd p;          // elementwise constant vectors
};
PdState primal_dual_step(const PdState& state, double tau, const RofProblem& prob);

// runs the iteration from zero until the combined step residual drops under
// tol; solution in `solution`, dual iterate in state.auxiliary
SolveResult run_primal_dual(const RofProblem& prob, double tau, double tol, int max_iters);

}  // namespace afem
