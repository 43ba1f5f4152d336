#include "afem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace afem {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument("mesh: " + msg); }

double signed_area2(const NodeMatrix& nodes, int a, int b, int c) {
    const double abx = nodes(b, 0) - nodes(a, 0), aby = nodes(b, 1) - nodes(a, 1);
    const double acx = nodes(c, 0) - nodes(a, 0), acy = nodes(c, 1) - nodes(a, 1);
    return abx * acy - acx * aby;
}

std::pair<int, int> sorted_pair(int a, int b) { return {std::min(a, b), std::max(a, b)}; }

}  // namespace

Triangulation make_triangulation(NodeMatrix nodes, ElementMatrix elements,
                                 std::vector<BoundarySide> boundary) {
    const int ne = static_cast<int>(elements.rows());
    Eigen::Matrix<int, Eigen::Dynamic, 2> parents(nodes.rows(), 2);
    for (int i = 0; i < nodes.rows(); ++i) parents.row(i) << i, i;
    return make_triangulation(std::move(nodes), std::move(elements), std::move(boundary),
                              Eigen::VectorXi::Zero(ne), std::move(parents),
                              Eigen::VectorXi::Constant(ne, -1));
}

Triangulation make_triangulation(NodeMatrix nodes, ElementMatrix elements,
                                 std::vector<BoundarySide> boundary,
                                 Eigen::VectorXi generation,
                                 Eigen::Matrix<int, Eigen::Dynamic, 2> node_parents,
                                 Eigen::VectorXi parent_element) {
    Triangulation m;
    m.nodes = std::move(nodes);
    m.elements = std::move(elements);
    m.boundary = std::move(boundary);
    m.generation = std::move(generation);
    m.node_parents = std::move(node_parents);
    m.parent_element = std::move(parent_element);

    const int nn = m.node_count();
    const int ne = m.element_count();
    if (nn < 3 || ne < 1) fail("too few nodes or elements");
    if (m.generation.size() != ne || m.parent_element.size() != ne ||
        m.node_parents.rows() != nn)
        fail("bookkeeping arrays do not match node/element counts");

    for (int e = 0; e < ne; ++e) {
        for (int k = 0; k < 3; ++k) {
            const int v = m.elements(e, k);
            if (v < 0 || v >= nn) fail("element node index out of range");
        }
        if (m.elements(e, 0) == m.elements(e, 1) || m.elements(e, 1) == m.elements(e, 2) ||
            m.elements(e, 0) == m.elements(e, 2))
            fail("degenerate element with repeated node");
        if (signed_area2(m.nodes, m.elements(e, 0), m.elements(e, 1), m.elements(e, 2)) <= 0.0)
            fail("element is not counterclockwise");
    }

    // enumerate sides; side k of an element is the one opposite local vertex k
    std::map<std::pair<int, int>, int> side_index;
    std::vector<std::array<int, 2>> side_nodes;
    std::vector<std::array<int, 2>> side_elems;
    m.element_sides.resize(ne, 3);
    for (int e = 0; e < ne; ++e) {
        for (int k = 0; k < 3; ++k) {
            const auto key = sorted_pair(m.elements(e, (k + 1) % 3), m.elements(e, (k + 2) % 3));
            auto it = side_index.find(key);
            int s;
            if (it == side_index.end()) {
                s = static_cast<int>(side_nodes.size());
                side_index.emplace(key, s);
                side_nodes.push_back({key.first, key.second});
                side_elems.push_back({e, -1});
            } else {
                s = it->second;
                if (side_elems[s][1] != -1) fail("side shared by more than two elements");
                side_elems[s][1] = e;
            }
            m.element_sides(e, k) = s;
        }
    }

    const int ns = static_cast<int>(side_nodes.size());
    m.sides.resize(ns, 2);
    m.side_elements.resize(ns, 2);
    for (int s = 0; s < ns; ++s) {
        m.sides.row(s) << side_nodes[s][0], side_nodes[s][1];
        m.side_elements.row(s) << side_elems[s][0], side_elems[s][1];
    }

    // boundary list must match the sides with a single adjacent element
    m.side_boundary.assign(ns, -1);
    for (int i = 0; i < static_cast<int>(m.boundary.size()); ++i) {
        const BoundarySide& bs = m.boundary[i];
        if (bs.a < 0 || bs.a >= nn || bs.b < 0 || bs.b >= nn) fail("boundary node index out of range");
        auto it = side_index.find(sorted_pair(bs.a, bs.b));
        if (it == side_index.end()) fail("boundary side is not an element side");
        if (m.side_elements(it->second, 1) != -1) fail("boundary side has two adjacent elements");
        if (m.side_boundary[it->second] != -1) fail("duplicate boundary side");
        m.side_boundary[it->second] = i;
    }
    for (int s = 0; s < ns; ++s)
        if (m.side_elements(s, 1) == -1 && m.side_boundary[s] == -1)
            fail("mesh has a hole: side with one element is missing from the boundary list");

    return m;
}

Triangulation initial_mesh(Domain domain) {
    if (domain == Domain::Square) {
        NodeMatrix nodes(4, 2);
        nodes << -1, -1, 1, -1, 1, 1, -1, 1;
        ElementMatrix elems(2, 3);
        // both bisection edges are the diagonal (0,2)
        elems << 1, 2, 0, 3, 0, 2;
        std::vector<BoundarySide> bnd = {{0, 1, BoundaryLabel::Dirichlet},
                                         {1, 2, BoundaryLabel::Dirichlet},
                                         {2, 3, BoundaryLabel::Dirichlet},
                                         {3, 0, BoundaryLabel::Dirichlet}};
        return make_triangulation(nodes, elems, bnd);
    }
    // L-shape: three unit squares around the reentrant corner at the origin,
    // each split by the diagonal that emanates from the corner.
    NodeMatrix nodes(8, 2);
    nodes << -1, -1, 0, -1, 0, 0, 1, 0, 1, 1, 0, 1, -1, 1, -1, 0;
    ElementMatrix elems(6, 3);
    elems << 1, 2, 0, 7, 0, 2, 7, 2, 6, 5, 6, 2, 3, 4, 2, 5, 2, 4;
    std::vector<BoundarySide> bnd;
    const int loop[8] = {0, 1, 2, 3, 4, 5, 6, 7};
    for (int i = 0; i < 8; ++i) bnd.push_back({loop[i], loop[(i + 1) % 8], BoundaryLabel::Dirichlet});
    return make_triangulation(nodes, elems, bnd);
}

Triangulation with_boundary_label(const Triangulation& mesh, BoundaryLabel label) {
    std::vector<BoundarySide> bnd = mesh.boundary;
    for (BoundarySide& b : bnd) b.label = label;
    return make_triangulation(mesh.nodes, mesh.elements, std::move(bnd), mesh.generation,
                              mesh.node_parents, mesh.parent_element);
}

Triangulation refine(const Triangulation& mesh, const MarkedSet& marked) {
    const int ne = mesh.element_count();
    const int ns = mesh.side_count();

    std::vector<char> marked_side(ns, 0);
    for (int e : marked) {
        if (e < 0 || e >= ne) fail("marked element index out of range");
        marked_side[mesh.element_sides(e, 0)] = 1;
    }

    // closure: an element with any marked side must have its bisection edge marked
    bool changed = true;
    while (changed) {
        changed = false;
        for (int e = 0; e < ne; ++e) {
            const int s0 = mesh.element_sides(e, 0);
            if (marked_side[s0]) continue;
            if (marked_side[mesh.element_sides(e, 1)] || marked_side[mesh.element_sides(e, 2)]) {
                marked_side[s0] = 1;
                changed = true;
            }
        }
    }

    // midpoint node per marked side, appended in side order
    const int nn = mesh.node_count();
    std::vector<int> midpoint(ns, -1);
    int new_nn = nn;
    for (int s = 0; s < ns; ++s)
        if (marked_side[s]) midpoint[s] = new_nn++;

    NodeMatrix nodes(new_nn, 2);
    nodes.topRows(nn) = mesh.nodes;
    Eigen::Matrix<int, Eigen::Dynamic, 2> node_parents(new_nn, 2);
    for (int i = 0; i < nn; ++i) node_parents.row(i) << i, i;
    for (int s = 0; s < ns; ++s) {
        if (midpoint[s] < 0) continue;
        const int a = mesh.sides(s, 0), b = mesh.sides(s, 1);
        nodes.row(midpoint[s]) = 0.5 * (mesh.nodes.row(a) + mesh.nodes.row(b));
        node_parents.row(midpoint[s]) << a, b;
    }

    std::vector<std::array<int, 3>> out_elems;
    std::vector<int> out_gen, out_parent;
    out_elems.reserve(2 * ne);

    // bisect (v0,v1,v2) at the midpoint of (v1,v2) into (m,v0,v1) and (m,v2,v0);
    // s12/s20/s01 are the containing side indices of the original mesh (-1 for
    // edges created by the bisection itself, which are never marked)
    auto emit = [&](auto&& self, int v0, int v1, int v2, int s12, int s20, int s01, int gen,
                    int parent) -> void {
        if (s12 < 0 || !marked_side[s12]) {
            out_elems.push_back({v0, v1, v2});
            out_gen.push_back(gen);
            out_parent.push_back(parent);
            return;
        }
        const int m = midpoint[s12];
        self(self, m, v0, v1, s01, -1, -1, gen + 1, parent);
        self(self, m, v2, v0, s20, -1, -1, gen + 1, parent);
    };
    for (int e = 0; e < ne; ++e)
        emit(emit, mesh.elements(e, 0), mesh.elements(e, 1), mesh.elements(e, 2),
             mesh.element_sides(e, 0), mesh.element_sides(e, 1), mesh.element_sides(e, 2),
             mesh.generation(e), e);

    std::vector<int> boundary_to_side(mesh.boundary.size(), -1);
    for (int s = 0; s < ns; ++s)
        if (mesh.side_boundary[s] >= 0) boundary_to_side[mesh.side_boundary[s]] = s;

    std::vector<BoundarySide> boundary;
    boundary.reserve(mesh.boundary.size());
    for (int i = 0; i < static_cast<int>(mesh.boundary.size()); ++i) {
        const BoundarySide& bs = mesh.boundary[i];
        const int s = boundary_to_side[i];
        if (s < 0) fail("boundary side lost during refinement");
        if (midpoint[s] < 0) {
            boundary.push_back(bs);
        } else {
            boundary.push_back({bs.a, midpoint[s], bs.label});
            boundary.push_back({midpoint[s], bs.b, bs.label});
        }
    }

    ElementMatrix elems(static_cast<int>(out_elems.size()), 3);
    Eigen::VectorXi gen(static_cast<int>(out_elems.size()));
    Eigen::VectorXi parent(static_cast<int>(out_elems.size()));
    for (int e = 0; e < elems.rows(); ++e) {
        elems.row(e) << out_elems[e][0], out_elems[e][1], out_elems[e][2];
        gen(e) = out_gen[e];
        parent(e) = out_parent[e];
    }
    return make_triangulation(std::move(nodes), std::move(elems), std::move(boundary),
                              std::move(gen), std::move(node_parents), std::move(parent));
}

Triangulation refine_uniform(const Triangulation& mesh) {
    MarkedSet all(mesh.element_count());
    std::iota(all.begin(), all.end(), 0);
    return refine(mesh, all);
}

MarkedSet dorfler_mark(const Eigen::VectorXd& indicators, double theta) {
    if (theta < 0.0 || theta > 1.0) fail("dorfler_mark: theta outside [0,1]");
    const int n = static_cast<int>(indicators.size());
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        if (indicators(i) < 0.0) fail("dorfler_mark: negative indicator");
        total += indicators(i) * indicators(i);
    }
    MarkedSet marked;
    if (total == 0.0) return marked;  // converged signal

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (indicators(a) != indicators(b)) return indicators(a) > indicators(b);
        return a < b;
    });
    const double target = theta * theta * total;
    double acc = 0.0;
    for (int i : order) {
        marked.push_back(i);
        acc += indicators(i) * indicators(i);
        if (acc >= target) break;
    }
    std::sort(marked.begin(), marked.end());
    return marked;
}

double element_area(const Triangulation& mesh, int e) {
    return 0.5 * signed_area2(mesh.nodes, mesh.elements(e, 0), mesh.elements(e, 1),
                              mesh.elements(e, 2));
}

double element_diameter(const Triangulation& mesh, int e) {
    double d = 0.0;
    for (int k = 0; k < 3; ++k) {
        const int a = mesh.elements(e, k), b = mesh.elements(e, (k + 1) % 3);
        d = std::max(d, (mesh.nodes.row(a) - mesh.nodes.row(b)).norm());
    }
    return d;
}

MeshSizes mesh_sizes(const Triangulation& mesh) {
    MeshSizes sz;
    sz.h.resize(mesh.element_count());
    for (int e = 0; e < mesh.element_count(); ++e) sz.h(e) = element_diameter(mesh, e);
    sz.hbar = 1.0 / std::sqrt(static_cast<double>(mesh.node_count()));
    return sz;
}

namespace {

void append_real(std::string& out, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    out += buf;
}

}  // namespace

std::string write_mesh_text(const Triangulation& mesh) {
    std::string out;
    out += "nodes " + std::to_string(mesh.node_count()) + "\n";
    for (int i = 0; i < mesh.node_count(); ++i) {
        append_real(out, mesh.nodes(i, 0));
        out += ' ';
        append_real(out, mesh.nodes(i, 1));
        out += '\n';
    }
    out += "elements " + std::to_string(mesh.element_count()) + "\n";
    for (int e = 0; e < mesh.element_count(); ++e)
        out += std::to_string(mesh.elements(e, 0)) + " " + std::to_string(mesh.elements(e, 1)) +
               " " + std::to_string(mesh.elements(e, 2)) + "\n";
    out += "boundary " + std::to_string(mesh.boundary.size()) + "\n";
    for (const BoundarySide& b : mesh.boundary)
        out += std::to_string(b.a) + " " + std::to_string(b.b) +
               (b.label == BoundaryLabel::Dirichlet ? " D\n" : " N\n");
    return out;
}

void write_mesh_file(const Triangulation& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("cannot open '" + path + "' for writing");
    out << write_mesh_text(mesh);
    if (!out) fail("write to '" + path + "' failed");
}

Triangulation read_mesh_text(std::istream& in) {
    auto expect_keyword = [&](const char* kw) {
        std::string word;
        if (!(in >> word) || word != kw) fail(std::string("expected keyword '") + kw + "'");
        long count = -1;
        if (!(in >> count) || count < 0) fail(std::string("bad count after '") + kw + "'");
        return count;
    };

    const long nn = expect_keyword("nodes");
    NodeMatrix nodes(nn, 2);
    for (long i = 0; i < nn; ++i)
        if (!(in >> nodes(i, 0) >> nodes(i, 1))) fail("bad node line");

    const long ne = expect_keyword("elements");
    ElementMatrix elems(ne, 3);
    for (long e = 0; e < ne; ++e)
        if (!(in >> elems(e, 0) >> elems(e, 1) >> elems(e, 2))) fail("bad element line");

    const long nb = expect_keyword("boundary");
    std::vector<BoundarySide> bnd(nb);
    for (long i = 0; i < nb; ++i) {
        std::string label;
        if (!(in >> bnd[i].a >> bnd[i].b >> label)) fail("bad boundary line");
        if (label == "D")
            bnd[i].label = BoundaryLabel::Dirichlet;
        else if (label == "N")
            bnd[i].label = BoundaryLabel::Neumann;
        else
            fail("unknown boundary label '" + label + "'");
    }
    return make_triangulation(std::move(nodes), std::move(elems), std::move(bnd));
}

Triangulation read_mesh_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open '" + path + "' for reading");
    return read_mesh_text(in);
}

}  // namespace afem
