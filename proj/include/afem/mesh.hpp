#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <string>
#include <vector>

namespace afem {

using NodeMatrix = Eigen::Matrix<double, Eigen::Dynamic, 2>;
using ElementMatrix = Eigen::Matrix<int, Eigen::Dynamic, 3>;

enum class BoundaryLabel { Dirichlet, Neumann };

struct BoundarySide {
    int a = -1;
    int b = -1;
    BoundaryLabel label = BoundaryLabel::Dirichlet;
};

// Conforming triangulation of a polygonal domain.  Element node triples are
// counterclockwise and the bisection (refinement) edge is the one opposite
// local vertex 0.  Meshes are immutable once built; refine() returns a new
// mesh carrying parent bookkeeping for transferring discrete fields between
// levels.
struct Triangulation {
    NodeMatrix nodes;
    ElementMatrix elements;
    std::vector<BoundarySide> boundary;

    // per-element bisection generation, zero for hand-built meshes
    Eigen::VectorXi generation;
    // endpoints of the edge a node was inserted on; (i, i) for original nodes
    Eigen::Matrix<int, Eigen::Dynamic, 2> node_parents;
    // element of the previous mesh this one descends from; -1 when hand-built
    Eigen::VectorXi parent_element;

    // derived side connectivity, filled by make_triangulation
    Eigen::Matrix<int, Eigen::Dynamic, 2> sides;          // node pairs, a < b
    Eigen::Matrix<int, Eigen::Dynamic, 2> side_elements;  // adjacent elements, -1 on the boundary
    ElementMatrix element_sides;                          // side opposite local vertex k
    std::vector<int> side_boundary;                       // index into boundary, -1 for interior sides

    int node_count() const { return static_cast<int>(nodes.rows()); }
    int element_count() const { return static_cast<int>(elements.rows()); }
    int side_count() const { return static_cast<int>(sides.rows()); }
};

// Validates the raw arrays (index ranges, counterclockwise elements, matching
// boundary list) and builds the side connectivity.  Throws std::invalid_argument
// on malformed input.
Triangulation make_triangulation(NodeMatrix nodes, ElementMatrix elements,
                                 std::vector<BoundarySide> boundary);
Triangulation make_triangulation(NodeMatrix nodes, ElementMatrix elements,
                                 std::vector<BoundarySide> boundary,
                                 Eigen::VectorXi generation,
                                 Eigen::Matrix<int, Eigen::Dynamic, 2> node_parents,
                                 Eigen::VectorXi parent_element);

enum class Domain { Square, LShape };

// Coarse meshes on (-1,1)^2 and on the L-shape (-1,1)^2 minus [0,1]x[-1,0].
// All bisection edges of a coarse mesh are diagonals shared by both of their
// neighbours, so repeated bisection stays conforming.  Boundary labels default
// to Dirichlet; relabel with with_boundary_label for pure Neumann problems.
Triangulation initial_mesh(Domain domain);
Triangulation with_boundary_label(const Triangulation& mesh, BoundaryLabel label);

using MarkedSet = std::vector<int>;

// Newest-vertex bisection of the marked elements plus conformity closure.
// Every marked element is bisected at least once; the mesh stays conforming
// and counterclockwise.  Node coordinates and indices of the input mesh are
// preserved, new midpoint nodes are appended.
Triangulation refine(const Triangulation& mesh, const MarkedSet& marked);
Triangulation refine_uniform(const Triangulation& mesh);

// Smallest index set M (ties toward smaller element index) with
//   sum_{T in M} eta_T^2 >= theta^2 * sum_T eta_T^2.
// Indicators must be nonnegative; an all-zero vector yields the empty set,
// which callers treat as the converged signal.
MarkedSet dorfler_mark(const Eigen::VectorXd& indicators, double theta);

struct MeshSizes {
    Eigen::VectorXd h;  // element diameters (longest edge)
    double hbar = 0.0;  // |nodes|^{-1/2}
};
MeshSizes mesh_sizes(const Triangulation& mesh);

double element_area(const Triangulation& mesh, int e);
double element_diameter(const Triangulation& mesh, int e);

// Plain text mesh format:
//   nodes N        followed by N lines "x y"
//   elements M     followed by M lines "i0 i1 i2"
//   boundary K     followed by K lines "i j D|N"
// Reals carry 17 significant digits so write/read round-trips bit-exactly.
std::string write_mesh_text(const Triangulation& mesh);
void write_mesh_file(const Triangulation& mesh, const std::string& path);
Triangulation read_mesh_text(std::istream& in);
Triangulation read_mesh_file(const std::string& path);

}  // namespace afem
