#pragma once

#include "afem/spaces.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <functional>
#include <utility>
#include <vector>

namespace afem {

// Validation problems throw std::invalid_argument; numerical failures
// (non-convergence, singular systems) throw std::runtime_error.

// --- local minimizers ---------------------------------------------------------

// minimizer of kappa|r| + (1/2)|r - z|^2: radial soft threshold
Eigen::Vector2d shrink(const Eigen::Vector2d& z, double kappa);

// closest point of the unit ball
Eigen::Vector2d project_ball(const Eigen::Vector2d& z);

// minimizer of (1/sigma)|r|^sigma + weight*tau*((1/2)|r|^2 - r.z): the radius
// solves rho^(sigma-1) + weight*tau*rho = weight*tau*|z| (safeguarded Newton)
Eigen::Vector2d prox_power(const Eigen::Vector2d& z, double sigma, double weight, double tau);

// --- equality-constrained quadratic programs -----------------------------------

struct KktSolution {
    Eigen::VectorXd x;
    Eigen::VectorXd multipliers;  // one per kept constraint row
};

// indices of a maximal independent subset of the rows of C (QR-based); rows
// outside the subset are redundant and reported on stderr by the callers
std::vector<int> independent_rows(const SpMat& C);

// min (1/2) x.Hx - b.x  s.t.  Cx = d, via a sparse LU factorization of the
// KKT system with iterative refinement; redundant constraint rows are dropped.
class EqualityConstrainedQuadratic {
  public:
    EqualityConstrainedQuadratic(const SpMat& H, const SpMat& C);
    KktSolution solve(const Eigen::VectorXd& b, const Eigen::VectorXd& d) const;
    int dropped_rows() const { return dropped_; }

  private:
    SpMat K_;
    Eigen::SparseLU<SpMat> lu_;
    std::vector<int> kept_;
    int n_ = 0;
    int dropped_ = 0;
};

// Same problem with H = scale * diag(h): the Schur complement C diag(h)^-1 C^T
// is factored once and reused for every scale (the ADMM step size enters only
// through `scale`).
class DiagonalConstrainedQuadratic {
  public:
    DiagonalConstrainedQuadratic(Eigen::VectorXd h, const SpMat& C);
    KktSolution solve(const Eigen::VectorXd& b, const Eigen::VectorXd& d, double scale) const;

  private:
    Eigen::VectorXd inv_h_;
    SpMat C_;
    SpMat S_;                  // Schur complement, kept for one refinement pass per solve
    Eigen::VectorXd scale_inv_;  // Jacobi equilibration of S (graded meshes)
    Eigen::SimplicialLDLT<SpMat> schur_;
    std::vector<int> kept_;
};

// H block-diagonal with uniform block size (dense blocks); used when the
// quadratic couples the dofs of one element only.
class BlockDiagConstrainedQuadratic {
  public:
    BlockDiagConstrainedQuadratic(const std::vector<Eigen::MatrixXd>& blocks, const SpMat& C);
    KktSolution solve(const Eigen::VectorXd& b, const Eigen::VectorXd& d) const;

  private:
    std::vector<Eigen::MatrixXd> inv_blocks_;
    int block_ = 0;
    SpMat C_;
    SpMat S_;
    Eigen::VectorXd scale_inv_;
    Eigen::SimplicialLDLT<SpMat> schur_;
    std::vector<int> kept_;
};

// SPD solve with a subset of dofs held at prescribed values
class SpdWithFixedDofs {
  public:
    SpdWithFixedDofs(const SpMat& A, std::vector<char> fixed);
    Eigen::VectorXd solve(const Eigen::VectorXd& rhs, const Eigen::VectorXd& fixed_values) const;

  private:
    std::vector<char> fixed_;
    std::vector<int> index_;  // dof -> position among free dofs (-1 if fixed)
    SpMat A_ff_, A_fc_;
    Eigen::SimplicialLDLT<SpMat> ldlt_;
};

// --- alternating-direction driver ----------------------------------------------

struct AdmmConfig {
    double tau0 = 1.0;
    bool adapt = true;  // residual balancing on/off
    double tol = 1e-8;
    int max_iters = 20000;
};

// The three sub-steps of one sweep.  `metric` holds the diagonal weights of
// the norm measuring both residuals (plain or vertex-quadrature L2 of the
// auxiliary space).
struct AdmmProblem {
    std::function<Eigen::VectorXd(const Eigen::VectorXd& aux, const Eigen::VectorXd& mult,
                                  double tau)>
        primary_update;
    std::function<Eigen::VectorXd(const Eigen::VectorXd& primary)> couple;
    std::function<Eigen::VectorXd(const Eigen::VectorXd& coupled, const Eigen::VectorXd& mult,
                                  double tau)>
        auxiliary_update;
    Eigen::VectorXd metric;
    std::function<void(double tau)> tau_changed;  // optional refactorization hook
};

struct AdmmState {
    Eigen::VectorXd primary, auxiliary, multiplier;
    double tau = 1.0;
    bool converged = false;
    int iters = 0;
    std::vector<std::pair<double, double>> history;  // (primal, dual) residuals
};

// Sweeps: primary solve, coupled = B(primary), auxiliary local solve,
// multiplier ascent mult += tau*(coupled - auxiliary).  Stops when
// max(primal, dual residual) <= tol.  Step-size rule: tau doubles when the
// primal residual exceeds 10x the dual one (multiplier halved), halves in the
// mirrored case (multiplier doubled), at most one adjustment per 5 sweeps.
AdmmState admm_run(const AdmmProblem& problem, const AdmmConfig& config,
                   Eigen::VectorXd primary0, Eigen::VectorXd aux0, Eigen::VectorXd mult0);

// optional warm-start data for the problem-level solvers; empty vectors mean
// cold start
struct AdmmInit {
    Eigen::VectorXd primary, auxiliary, multiplier;
};

struct SolveResult {
    FeFunction solution;
    AdmmState state;
};

}  // namespace afem
