#pragma once

#include "afem/mesh.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <functional>
#include <memory>
#include <vector>

namespace afem {

using SpMat = Eigen::SparseMatrix<double>;
using MeshPtr = std::shared_ptr<const Triangulation>;

// Degree-of-freedom layouts:
//   P1        one coefficient per node
//   P0        one per element
//   P0Vec     2*e + c
//   P1Disc    3*e + k           (k = local vertex)
//   P1DiscVec 6*e + 2*k + c     (elementwise affine vector fields; the
//                                normal-continuous subspace is carved out by
//                                continuity_constraints)
//   P1Vec     2*node + c        (globally continuous vector fields)
enum class SpaceKind { P1, P0, P0Vec, P1Disc, P1DiscVec, P1Vec };

int dof_count(SpaceKind kind, const Triangulation& mesh);

// A coefficient vector bound to a space and a mesh.
struct FeFunction {
    SpaceKind kind = SpaceKind::P1;
    MeshPtr mesh;
    Eigen::VectorXd coeffs;
};

FeFunction make_function(SpaceKind kind, MeshPtr mesh, Eigen::VectorXd coeffs);
FeFunction zero_function(SpaceKind kind, MeshPtr mesh);

// Per-element squared error indicators plus their sum.
struct EstimatorReport {
    Eigen::VectorXd indicators2;
    double total2 = 0.0;
};

// --- local element geometry -------------------------------------------------

// rows are the constant gradients of the three nodal basis functions
Eigen::Matrix<double, 3, 2> p1_gradients(const Triangulation& mesh, int e);

// barycentric coordinates of x with respect to element e
Eigen::Vector3d barycentric(const Triangulation& mesh, int e, const Eigen::Vector2d& x);

// outward unit normal of side k (the one opposite local vertex k) of element e
Eigen::Vector2d outward_normal(const Triangulation& mesh, int e, int k);

// --- pointwise evaluation ---------------------------------------------------

double eval_p1(const FeFunction& u, int e, const Eigen::Vector2d& x);
double eval_p1disc(const FeFunction& v, int e, const Eigen::Vector2d& x);
Eigen::Vector2d eval_vec(const FeFunction& p, int e, const Eigen::Vector2d& x);

// vertex value of a vector field at local vertex k of element e
Eigen::Vector2d vertex_value_vec(const FeFunction& p, int e, int k);

// --- differential operators -------------------------------------------------

FeFunction gradient_p1(const FeFunction& u);   // P1 -> P0Vec
FeFunction divergence(const FeFunction& p);    // P1DiscVec or P1Vec -> P0

// --- inner products ----------------------------------------------------------

// exact L2 product of two fields of the same kind (P1, P1Disc, P1DiscVec, P1Vec,
// P0, P0Vec)
double l2_inner(const FeFunction& v, const FeFunction& w);

// vertex-quadrature ("lumped") product: sum over elements and vertices of
// (|T|/3) v(z) w(z); admits P1, P1Disc, P1Vec, P1DiscVec
double lumped_inner(const FeFunction& v, const FeFunction& w);

// L2 product with elementwise weight h_T^{d(2/alpha-1)}, d = 2
double weighted_inner(const FeFunction& p, const FeFunction& q, double alpha);

// the elementwise weights themselves
Eigen::VectorXd weight_vector(const Triangulation& mesh, double alpha);

// --- interpolation and projection -------------------------------------------

// elementwise nodal interpolation of a function evaluable inside each element
FeFunction nodal_lift(MeshPtr mesh,
                      const std::function<double(int, const Eigen::Vector2d&)>& f);

// elementwise mean computed with the order-5 rule, uniformly subdivided
// `depth` times (depth 0: single application)
FeFunction l2_project_p0(MeshPtr mesh, const std::function<double(const Eigen::Vector2d&)>& f,
                         int depth = 0);

// elementwise mean with adaptive subdivision of elements cut by the interface
// of the indicator-like data (cells where `inside` is not uniform are split
// recursively up to max_depth)
FeFunction l2_project_p0_interface(MeshPtr mesh,
                                   const std::function<double(const Eigen::Vector2d&)>& f,
                                   const std::function<bool(const Eigen::Vector2d&)>& inside,
                                   int max_depth);

// elementwise affine vector field matching the two normal-component moments of
// q on every side (moments by 2-point Gauss, exact for affine fields)
FeFunction bdm_interpolate(MeshPtr mesh,
                           const std::function<Eigen::Vector2d(const Eigen::Vector2d&)>& q);

// --- constraints --------------------------------------------------------------

// Rows enforcing normal continuity across interior sides plus zero normal
// trace on Neumann sides for P1DiscVec coefficients: two affine moments per
// constrained side.  Row count = 2 * (#interior + #Neumann sides).
SpMat continuity_constraints(const Triangulation& mesh);

// distinct outward unit normals of the Neumann sides meeting at each node
// (empty for nodes away from the Neumann boundary)
std::vector<std::vector<Eigen::Vector2d>> neumann_node_normals(const Triangulation& mesh);

// nodes lying on at least one Dirichlet side
std::vector<char> dirichlet_node_mask(const Triangulation& mesh);

// --- assembly -----------------------------------------------------------------

SpMat p1_mass(const Triangulation& mesh);                  // nn x nn, exact
Eigen::VectorXd p1_lumped_weights(const Triangulation& mesh);  // beta_z
SpMat p1_gradient_operator(const Triangulation& mesh);     // (2 ne) x nn
SpMat divergence_operator(const Triangulation& mesh, SpaceKind kind);  // ne x dofs
SpMat p1vec_to_disc(const Triangulation& mesh);            // (6 ne) x (2 nn)

// lumped diagonal weights per dof: |T|/3 for P1Disc / P1DiscVec dofs,
// beta_z per component for P1Vec
Eigen::VectorXd lumped_weights(const Triangulation& mesh, SpaceKind kind);

// element measure per dof of P0Vec (|T|, |T|)
Eigen::VectorXd p0vec_measures(const Triangulation& mesh);

// sum_T w_T |T| grad phi_i . grad phi_j  (w elementwise)
SpMat weighted_stiffness(const Triangulation& mesh, const Eigen::VectorXd& w);

// exact load vector (f_h, phi_i) for elementwise-constant f_h
Eigen::VectorXd p0_load_vector(const Triangulation& mesh, const Eigen::VectorXd& f);

// --- refinement transfer -------------------------------------------------------

// nodal interpolation onto a mesh produced by one refine() call from `coarse`
Eigen::VectorXd prolong_p1(const Triangulation& fine, const Eigen::VectorXd& coarse);
Eigen::VectorXd prolong_p1vec(const Triangulation& fine, const Eigen::VectorXd& coarse);
// injection along parent_element
Eigen::VectorXd prolong_p0(const Triangulation& fine, const Triangulation& coarse,
                           const Eigen::VectorXd& values, int components);
// affine re-evaluation at child vertices (exact embedding of elementwise
// affine fields, preserves normal continuity and vertexwise bounds)
Eigen::VectorXd prolong_p1disc_vec(const Triangulation& fine, const Triangulation& coarse,
                                   const Eigen::VectorXd& values);

}  // namespace afem
