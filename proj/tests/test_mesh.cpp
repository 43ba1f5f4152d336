#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "afem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

using namespace afem;

namespace {

double total_area(const Triangulation& m) {
    double a = 0.0;
    for (int e = 0; e < m.element_count(); ++e) a += element_area(m, e);
    return a;
}

// conformity: a side is on the boundary list iff it has exactly one element
void check_conforming(const Triangulation& m) {
    for (int s = 0; s < m.side_count(); ++s) {
        const bool one_elem = m.side_elements(s, 1) == -1;
        const bool listed = m.side_boundary[s] != -1;
        CHECK(one_elem == listed);
        CHECK(m.side_elements(s, 0) >= 0);
    }
    for (int e = 0; e < m.element_count(); ++e) CHECK(element_area(m, e) > 0.0);
}

// structured n x n node grid on (0,1)^2, all-Dirichlet boundary
Triangulation structured_grid(int n) {
    NodeMatrix nodes(n * n, 2);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            nodes.row(j * n + i) << double(i) / (n - 1), double(j) / (n - 1);
    ElementMatrix elems(2 * (n - 1) * (n - 1), 3);
    int e = 0;
    for (int j = 0; j < n - 1; ++j)
        for (int i = 0; i < n - 1; ++i) {
            const int p00 = j * n + i, p10 = p00 + 1, p01 = p00 + n, p11 = p01 + 1;
            elems.row(e++) << p00, p10, p11;
            elems.row(e++) << p00, p11, p01;
        }
    std::vector<BoundarySide> bnd;
    for (int i = 0; i < n - 1; ++i) bnd.push_back({i, i + 1, BoundaryLabel::Dirichlet});
    for (int j = 0; j < n - 1; ++j)
        bnd.push_back({j * n + n - 1, (j + 1) * n + n - 1, BoundaryLabel::Dirichlet});
    for (int i = n - 1; i > 0; --i)
        bnd.push_back({(n - 1) * n + i, (n - 1) * n + i - 1, BoundaryLabel::Dirichlet});
    for (int j = n - 1; j > 0; --j) bnd.push_back({j * n, (j - 1) * n, BoundaryLabel::Dirichlet});
    return make_triangulation(nodes, elems, bnd);
}

}  // namespace

TEST_CASE("coarse square mesh") {
    const Triangulation m = initial_mesh(Domain::Square);
    CHECK(m.node_count() == 4);
    CHECK(m.element_count() == 2);
    CHECK(m.boundary.size() == 4);
    CHECK(m.side_count() == 5);
    CHECK(total_area(m) == doctest::Approx(4.0).epsilon(1e-14));
    for (const BoundarySide& b : m.boundary) CHECK(b.label == BoundaryLabel::Dirichlet);
    check_conforming(m);
}

TEST_CASE("coarse L-shape mesh") {
    const Triangulation m = initial_mesh(Domain::LShape);
    CHECK(m.node_count() == 8);
    CHECK(m.element_count() == 6);
    CHECK(m.boundary.size() == 8);
    CHECK(total_area(m) == doctest::Approx(3.0).epsilon(1e-14));
    check_conforming(m);
    // reentrant corner is a node
    bool has_origin = false;
    for (int i = 0; i < m.node_count(); ++i)
        if (m.nodes(i, 0) == 0.0 && m.nodes(i, 1) == 0.0) has_origin = true;
    CHECK(has_origin);
}

TEST_CASE("boundary relabeling") {
    const Triangulation m = with_boundary_label(initial_mesh(Domain::Square), BoundaryLabel::Neumann);
    for (const BoundarySide& b : m.boundary) CHECK(b.label == BoundaryLabel::Neumann);
}

TEST_CASE("bisecting both square triangles splits the diagonal once") {
    const Triangulation m0 = initial_mesh(Domain::Square);
    const Triangulation m1 = refine(m0, {0, 1});
    CHECK(m1.element_count() == 4);
    CHECK(m1.node_count() == 5);
    // the new node is the midpoint of the shared diagonal
    CHECK(m1.nodes(4, 0) == 0.0);
    CHECK(m1.nodes(4, 1) == 0.0);
    CHECK(m1.node_parents(4, 0) == 0);
    CHECK(m1.node_parents(4, 1) == 2);
    CHECK(m1.boundary.size() == 4);  // diagonal is interior
    for (int e = 0; e < 4; ++e) {
        CHECK(m1.generation(e) == 1);
        CHECK(element_area(m1, e) == doctest::Approx(1.0).epsilon(1e-14));
    }
    std::vector<int> parents(m1.parent_element.data(), m1.parent_element.data() + 4);
    std::sort(parents.begin(), parents.end());
    CHECK(parents == std::vector<int>{0, 0, 1, 1});
    check_conforming(m1);
}

TEST_CASE("empty marking leaves the mesh unchanged") {
    const Triangulation m0 = initial_mesh(Domain::Square);
    const Triangulation m1 = refine(m0, {});
    CHECK(m1.node_count() == m0.node_count());
    CHECK(m1.element_count() == m0.element_count());
    CHECK((m1.elements.array() == m0.elements.array()).all());
    CHECK((m1.nodes.array() == m0.nodes.array()).all());
}

TEST_CASE("closure bisects the neighbour sharing the bisection edge") {
    const Triangulation m0 = initial_mesh(Domain::Square);
    const Triangulation m1 = refine(m0, {0});
    CHECK(m1.element_count() == 4);
    CHECK(m1.node_count() == 5);
    check_conforming(m1);
}

TEST_CASE("existing nodes never move") {
    Triangulation m = initial_mesh(Domain::LShape);
    const NodeMatrix coarse = m.nodes;
    m = refine(m, {0, 3});
    m = refine(m, {1, 2, 5});
    CHECK((m.nodes.topRows(coarse.rows()).array() == coarse.array()).all());
}

TEST_CASE("uniform bisection doubles the element count") {
    for (Domain dom : {Domain::Square, Domain::LShape}) {
        Triangulation m = initial_mesh(dom);
        const double area = total_area(m);
        for (int pass = 0; pass < 5; ++pass) {
            const int ne = m.element_count();
            const Triangulation fine = refine_uniform(m);
            CHECK(fine.element_count() == 2 * ne);
            CHECK(total_area(fine) == doctest::Approx(area).epsilon(1e-13));
            check_conforming(fine);
            // children never get longer edges than their parent
            const MeshSizes hc = mesh_sizes(m), hf = mesh_sizes(fine);
            for (int e = 0; e < fine.element_count(); ++e) {
                const int p = fine.parent_element(e);
                CHECK(p >= 0);
                CHECK(hf.h(e) <= hc.h(p) + 1e-14);
                CHECK(fine.generation(e) == m.generation(p) + 1);
            }
            m = fine;
        }
    }
}

TEST_CASE("greedy bulk marking") {
    Eigen::VectorXd eta(3);

    SUBCASE("largest indicator suffices") {
        eta << 3, 2, 1;  // 9 >= (1/4)*14
        CHECK(dorfler_mark(eta, 0.5) == MarkedSet{0});
    }
    SUBCASE("equal indicators, quarter of the mass") {
        Eigen::VectorXd ones = Eigen::VectorXd::Ones(4);
        CHECK(dorfler_mark(ones, 0.5) == MarkedSet{0});
    }
    SUBCASE("single positive indicator") {
        eta << 0, 0, 5;
        CHECK(dorfler_mark(eta, 0.1) == MarkedSet{2});
        CHECK(dorfler_mark(eta, 0.9) == MarkedSet{2});
    }
    SUBCASE("all-zero indicators signal convergence") {
        eta << 0, 0, 0;
        CHECK(dorfler_mark(eta, 0.5).empty());
    }
    SUBCASE("theta = 1 marks everything positive") {
        eta << 3, 2, 1;
        CHECK(dorfler_mark(eta, 1.0) == MarkedSet{0, 1, 2});
    }
    SUBCASE("invalid input") {
        eta << 1, 2, 3;
        CHECK_THROWS_AS(dorfler_mark(eta, 1.5), std::invalid_argument);
        CHECK_THROWS_AS(dorfler_mark(eta, -0.1), std::invalid_argument);
        eta << 1, -2, 3;
        CHECK_THROWS_AS(dorfler_mark(eta, 0.5), std::invalid_argument);
    }
}

TEST_CASE("marked set is minimal") {
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        Eigen::VectorXd eta(20);
        for (int i = 0; i < 20; ++i) eta(i) = unif(rng);
        const double theta = 0.3 + 0.5 * unif(rng);
        const MarkedSet marked = dorfler_mark(eta, theta);
        REQUIRE(!marked.empty());
        const double target = theta * theta * eta.squaredNorm();
        double acc = 0.0, weakest = 1e300;
        for (int i : marked) {
            acc += eta(i) * eta(i);
            weakest = std::min(weakest, eta(i) * eta(i));
        }
        CHECK(acc >= target);
        CHECK(acc - weakest < target);  // dropping any member breaks the bulk property
    }
}

TEST_CASE("element diameters and average mesh size") {
    const Triangulation m = initial_mesh(Domain::Square);
    const MeshSizes sz = mesh_sizes(m);
    CHECK(sz.h(0) == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-15));
    CHECK(sz.h(1) == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-15));
    CHECK(sz.hbar == doctest::Approx(0.5).epsilon(1e-15));

    const Triangulation grid = structured_grid(10);  // 100 nodes
    CHECK(grid.node_count() == 100);
    CHECK(mesh_sizes(grid).hbar == doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("text format round-trips bit-exactly") {
    // non-dyadic coordinates stress the 17-digit decimal representation
    Triangulation m = structured_grid(4);
    m = refine(m, {0, 5, 7});
    const std::string text = write_mesh_text(m);
    std::istringstream in(text);
    const Triangulation back = read_mesh_text(in);
    CHECK(back.node_count() == m.node_count());
    CHECK((back.nodes.array() == m.nodes.array()).all());
    CHECK((back.elements.array() == m.elements.array()).all());
    CHECK(write_mesh_text(back) == text);
}

TEST_CASE("mesh file io") {
    const std::string path = "test_mesh_io.tmp";
    Triangulation m = with_boundary_label(initial_mesh(Domain::LShape), BoundaryLabel::Neumann);
    m = refine(m, {2, 4});
    write_mesh_file(m, path);
    const Triangulation back = read_mesh_file(path);
    CHECK(write_mesh_text(back) == write_mesh_text(m));
    for (const BoundarySide& b : back.boundary) CHECK(b.label == BoundaryLabel::Neumann);
    std::remove(path.c_str());
    CHECK_THROWS_AS(read_mesh_file(path), std::invalid_argument);
}

TEST_CASE("malformed text input") {
    auto read = [](const std::string& text) {
        std::istringstream in(text);
        return read_mesh_text(in);
    };
    CHECK_THROWS_AS(read("points 3\n"), std::invalid_argument);
    CHECK_THROWS_AS(read("nodes -1\n"), std::invalid_argument);
    CHECK_THROWS_AS(read("nodes 3\n0 0\n1 0\n0 1\nelements 1\n0 1 x\n"), std::invalid_argument);
    CHECK_THROWS_AS(read("nodes 3\n0 0\n1 0\n0 1\nelements 1\n0 1 2\nboundary 3\n"
                         "0 1 D\n1 2 Q\n2 0 D\n"),
                    std::invalid_argument);
    // element index out of range is caught by validation
    CHECK_THROWS_AS(read("nodes 3\n0 0\n1 0\n0 1\nelements 1\n0 1 7\nboundary 0\n"),
                    std::invalid_argument);
}

TEST_CASE("construction rejects malformed meshes") {
    NodeMatrix nodes(4, 2);
    nodes << 0, 0, 1, 0, 1, 1, 0, 1;
    ElementMatrix elems(2, 3);
    std::vector<BoundarySide> bnd = {{0, 1, BoundaryLabel::Dirichlet},
                                     {1, 2, BoundaryLabel::Dirichlet},
                                     {2, 3, BoundaryLabel::Dirichlet},
                                     {3, 0, BoundaryLabel::Dirichlet}};

    SUBCASE("clockwise element") {
        elems << 1, 0, 2, 0, 2, 3;
        CHECK_THROWS_AS(make_triangulation(nodes, elems, bnd), std::invalid_argument);
    }
    SUBCASE("repeated node") {
        elems << 0, 1, 1, 0, 2, 3;
        CHECK_THROWS_AS(make_triangulation(nodes, elems, bnd), std::invalid_argument);
    }
    SUBCASE("node index out of range") {
        elems << 0, 1, 9, 0, 2, 3;
        CHECK_THROWS_AS(make_triangulation(nodes, elems, bnd), std::invalid_argument);
    }
    SUBCASE("boundary entry on an interior side") {
        elems << 0, 1, 2, 0, 2, 3;
        bnd.push_back({0, 2, BoundaryLabel::Dirichlet});
        CHECK_THROWS_AS(make_triangulation(nodes, elems, bnd), std::invalid_argument);
    }
    SUBCASE("duplicate boundary entry") {
        elems << 0, 1, 2, 0, 2, 3;
        bnd.push_back({1, 0, BoundaryLabel::Neumann});
        CHECK_THROWS_AS(make_triangulation(nodes, elems, bnd), std::invalid_argument);
    }
    SUBCASE("missing boundary side") {
        elems << 0, 1, 2, 0, 2, 3;
        bnd.pop_back();
        CHECK_THROWS_AS(make_triangulation(nodes, elems, bnd), std::invalid_argument);
    }
    SUBCASE("valid input passes") {
        elems << 0, 1, 2, 0, 2, 3;
        CHECK_NOTHROW(make_triangulation(nodes, elems, bnd));
    }
}

TEST_CASE("boundary labels survive refinement") {
    // bottom/right Neumann, top/left Dirichlet
    Triangulation m = initial_mesh(Domain::Square);
    std::vector<BoundarySide> bnd = m.boundary;
    bnd[0].label = BoundaryLabel::Neumann;
    bnd[1].label = BoundaryLabel::Neumann;
    m = make_triangulation(m.nodes, m.elements, bnd);
    m = refine_uniform(refine_uniform(m));  // second pass splits the outer sides
    int n_neu = 0, n_dir = 0;
    for (const BoundarySide& b : m.boundary) {
        const bool neumann = b.label == BoundaryLabel::Neumann;
        (neumann ? n_neu : n_dir)++;
        // neumann sides stay on {y = -1} or {x = 1}
        if (neumann) {
            const bool bottom = m.nodes(b.a, 1) == -1.0 && m.nodes(b.b, 1) == -1.0;
            const bool right = m.nodes(b.a, 0) == 1.0 && m.nodes(b.b, 0) == 1.0;
            CHECK((bottom || right));
        }
    }
    CHECK(n_neu == 4);
    CHECK(n_dir == 4);
}

TEST_CASE("random adaptive refinement keeps the mesh consistent") {
    std::mt19937 rng(7);
    Triangulation m = initial_mesh(Domain::LShape);
    for (int round = 0; round < 10; ++round) {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        MarkedSet marked;
        for (int e = 0; e < m.element_count(); ++e)
            if (unif(rng) < 0.3) marked.push_back(e);
        if (marked.empty()) marked.push_back(0);

        const Triangulation fine = refine(m, marked);
        check_conforming(fine);
        CHECK(total_area(fine) == doctest::Approx(3.0).epsilon(1e-12));
        CHECK(fine.node_count() > m.node_count());
        CHECK((fine.nodes.topRows(m.node_count()).array() == m.nodes.array()).all());

        // every marked element was bisected: it has >= 2 children, each strictly younger
        std::vector<int> child_count(m.element_count(), 0);
        for (int e = 0; e < fine.element_count(); ++e) {
            const int p = fine.parent_element(e);
            REQUIRE(p >= 0);
            REQUIRE(p < m.element_count());
            child_count[p]++;
            CHECK(fine.generation(e) >= m.generation(p));
        }
        for (int e : marked) {
            CHECK(child_count[e] >= 2);
        }
        // inserted nodes are midpoints of existing-node pairs
        for (int i = m.node_count(); i < fine.node_count(); ++i) {
            const int a = fine.node_parents(i, 0), b = fine.node_parents(i, 1);
            REQUIRE(a >= 0);
            REQUIRE(b >= 0);
            REQUIRE(a < m.node_count());
            REQUIRE(b < m.node_count());
            CHECK(fine.nodes(i, 0) == 0.5 * (m.nodes(a, 0) + m.nodes(b, 0)));
            CHECK(fine.nodes(i, 1) == 0.5 * (m.nodes(a, 1) + m.nodes(b, 1)));
        }
        m = fine;
    }
    CHECK(m.element_count() > 100);

    CHECK_THROWS_AS(refine(m, {m.element_count()}), std::invalid_argument);
}
