#include "afem/spaces.hpp"

#include "afem/parallel.hpp"
#include "afem/quadrature.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace afem {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument("spaces: " + msg); }

Eigen::Vector2d perp(const Eigen::Vector2d& v) { return {-v(1), v(0)}; }

Eigen::Vector2d node(const Triangulation& mesh, int i) { return mesh.nodes.row(i).transpose(); }

void require_same_space(const FeFunction& v, const FeFunction& w) {
    if (v.mesh.get() != w.mesh.get()) fail("functions live on different meshes");
    if (v.kind != w.kind) fail("functions live in different spaces");
}

// exact integral over element e of the product of two same-kind fields
double element_l2(const FeFunction& v, const FeFunction& w, int e) {
    const Triangulation& mesh = *v.mesh;
    const double area = element_area(mesh, e);
    auto affine_product = [area](const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
        return area / 12.0 * (a.sum() * b.sum() + a.dot(b));
    };
    switch (v.kind) {
        case SpaceKind::P0:
            return area * v.coeffs(e) * w.coeffs(e);
        case SpaceKind::P0Vec:
            return area * v.coeffs.segment<2>(2 * e).dot(w.coeffs.segment<2>(2 * e));
        case SpaceKind::P1: {
            Eigen::Vector3d a, b;
            for (int k = 0; k < 3; ++k) {
                a(k) = v.coeffs(mesh.elements(e, k));
                b(k) = w.coeffs(mesh.elements(e, k));
            }
            return affine_product(a, b);
        }
        case SpaceKind::P1Disc:
            return affine_product(v.coeffs.segment<3>(3 * e), w.coeffs.segment<3>(3 * e));
        case SpaceKind::P1DiscVec: {
            double s = 0.0;
            for (int c = 0; c < 2; ++c) {
                Eigen::Vector3d a, b;
                for (int k = 0; k < 3; ++k) {
                    a(k) = v.coeffs(6 * e + 2 * k + c);
                    b(k) = w.coeffs(6 * e + 2 * k + c);
                }
                s += affine_product(a, b);
            }
            return s;
        }
        case SpaceKind::P1Vec: {
            double s = 0.0;
            for (int c = 0; c < 2; ++c) {
                Eigen::Vector3d a, b;
                for (int k = 0; k < 3; ++k) {
                    a(k) = v.coeffs(2 * mesh.elements(e, k) + c);
                    b(k) = w.coeffs(2 * mesh.elements(e, k) + c);
                }
                s += affine_product(a, b);
            }
            return s;
        }
    }
    fail("unknown space kind");
}

// serial sum of per-element contributions filled in parallel; the reduction
// order is fixed so results do not depend on the thread count
template <class Fn>
double sum_over_elements(const Triangulation& mesh, Fn&& per_element) {
    const int ne = mesh.element_count();
    Eigen::VectorXd parts(ne);
    parallel_for(ne, [&](int e) { parts(e) = per_element(e); });
    double s = 0.0;
    for (int e = 0; e < ne; ++e) s += parts(e);
    return s;
}

}  // namespace

int dof_count(SpaceKind kind, const Triangulation& mesh) {
    switch (kind) {
        case SpaceKind::P1: return mesh.node_count();
        case SpaceKind::P0: return mesh.element_count();
        case SpaceKind::P0Vec: return 2 * mesh.element_count();
        case SpaceKind::P1Disc: return 3 * mesh.element_count();
        case SpaceKind::P1DiscVec: return 6 * mesh.element_count();
        case SpaceKind::P1Vec: return 2 * mesh.node_count();
    }
    fail("unknown space kind");
}

FeFunction make_function(SpaceKind kind, MeshPtr mesh, Eigen::VectorXd coeffs) {
    if (!mesh) fail("null mesh");
    if (coeffs.size() != dof_count(kind, *mesh)) fail("coefficient count does not match the space");
    return {kind, std::move(mesh), std::move(coeffs)};
}

FeFunction zero_function(SpaceKind kind, MeshPtr mesh) {
    if (!mesh) fail("null mesh");
    const int n = dof_count(kind, *mesh);
    return {kind, std::move(mesh), Eigen::VectorXd::Zero(n)};
}

Eigen::Matrix<double, 3, 2> p1_gradients(const Triangulation& mesh, int e) {
    const Eigen::Vector2d a = node(mesh, mesh.elements(e, 0));
    const Eigen::Vector2d b = node(mesh, mesh.elements(e, 1));
    const Eigen::Vector2d c = node(mesh, mesh.elements(e, 2));
    const double inv2A = 0.5 / element_area(mesh, e);
    Eigen::Matrix<double, 3, 2> g;
    g.row(0) = (perp(c - b) * inv2A).transpose();
    g.row(1) = (perp(a - c) * inv2A).transpose();
    g.row(2) = (perp(b - a) * inv2A).transpose();
    return g;
}

Eigen::Vector3d barycentric(const Triangulation& mesh, int e, const Eigen::Vector2d& x) {
    const Eigen::Matrix<double, 3, 2> g = p1_gradients(mesh, e);
    Eigen::Vector3d lam;
    for (int k = 0; k < 3; ++k) {
        const Eigen::Vector2d vk = node(mesh, mesh.elements(e, k));
        lam(k) = 1.0 + g.row(k).dot(x - vk);
    }
    return lam;
}

Eigen::Vector2d outward_normal(const Triangulation& mesh, int e, int k) {
    const Eigen::Vector2d s = node(mesh, mesh.elements(e, (k + 1) % 3));
    const Eigen::Vector2d t = node(mesh, mesh.elements(e, (k + 2) % 3));
    const Eigen::Vector2d edge = t - s;
    return Eigen::Vector2d(edge(1), -edge(0)) / edge.norm();
}

double eval_p1(const FeFunction& u, int e, const Eigen::Vector2d& x) {
    const Eigen::Vector3d lam = barycentric(*u.mesh, e, x);
    double s = 0.0;
    for (int k = 0; k < 3; ++k) s += lam(k) * u.coeffs(u.mesh->elements(e, k));
    return s;
}

double eval_p1disc(const FeFunction& v, int e, const Eigen::Vector2d& x) {
    const Eigen::Vector3d lam = barycentric(*v.mesh, e, x);
    return lam.dot(v.coeffs.segment<3>(3 * e));
}

Eigen::Vector2d vertex_value_vec(const FeFunction& p, int e, int k) {
    switch (p.kind) {
        case SpaceKind::P0Vec: return p.coeffs.segment<2>(2 * e);
        case SpaceKind::P1DiscVec: return p.coeffs.segment<2>(6 * e + 2 * k);
        case SpaceKind::P1Vec: return p.coeffs.segment<2>(2 * p.mesh->elements(e, k));
        default: fail("vertex_value_vec: not a vector space");
    }
}

Eigen::Vector2d eval_vec(const FeFunction& p, int e, const Eigen::Vector2d& x) {
    if (p.kind == SpaceKind::P0Vec) return p.coeffs.segment<2>(2 * e);
    const Eigen::Vector3d lam = barycentric(*p.mesh, e, x);
    Eigen::Vector2d s = Eigen::Vector2d::Zero();
    for (int k = 0; k < 3; ++k) s += lam(k) * vertex_value_vec(p, e, k);
    return s;
}

FeFunction gradient_p1(const FeFunction& u) {
    if (u.kind != SpaceKind::P1) fail("gradient_p1 expects a nodal function");
    const Triangulation& mesh = *u.mesh;
    Eigen::VectorXd g(2 * mesh.element_count());
    parallel_for(mesh.element_count(), [&](int e) {
        const Eigen::Matrix<double, 3, 2> dphi = p1_gradients(mesh, e);
        Eigen::Vector2d s = Eigen::Vector2d::Zero();
        for (int k = 0; k < 3; ++k) s += u.coeffs(mesh.elements(e, k)) * dphi.row(k).transpose();
        g.segment<2>(2 * e) = s;
    });
    return {SpaceKind::P0Vec, u.mesh, std::move(g)};
}

FeFunction divergence(const FeFunction& p) {
    if (p.kind != SpaceKind::P1DiscVec && p.kind != SpaceKind::P1Vec)
        fail("divergence expects an elementwise affine vector field");
    const Triangulation& mesh = *p.mesh;
    Eigen::VectorXd d(mesh.element_count());
    parallel_for(mesh.element_count(), [&](int e) {
        const Eigen::Matrix<double, 3, 2> dphi = p1_gradients(mesh, e);
        double s = 0.0;
        for (int k = 0; k < 3; ++k) s += dphi.row(k).dot(vertex_value_vec(p, e, k));
        d(e) = s;
    });
    return {SpaceKind::P0, p.mesh, std::move(d)};
}

double l2_inner(const FeFunction& v, const FeFunction& w) {
    require_same_space(v, w);
    return sum_over_elements(*v.mesh, [&](int e) { return element_l2(v, w, e); });
}

double lumped_inner(const FeFunction& v, const FeFunction& w) {
    require_same_space(v, w);
    const Triangulation& mesh = *v.mesh;
    auto values = [&](const FeFunction& f, int e, int k) -> double {
        switch (f.kind) {
            case SpaceKind::P1: return f.coeffs(mesh.elements(e, k));
            case SpaceKind::P1Disc: return f.coeffs(3 * e + k);
            default: fail("lumped_inner expects pointwise-evaluable affine fields");
        }
    };
    const bool vector = v.kind == SpaceKind::P1Vec || v.kind == SpaceKind::P1DiscVec;
    return sum_over_elements(mesh, [&](int e) {
        const double beta = element_area(mesh, e) / 3.0;
        double s = 0.0;
        for (int k = 0; k < 3; ++k)
            s += vector ? vertex_value_vec(v, e, k).dot(vertex_value_vec(w, e, k))
                        : values(v, e, k) * values(w, e, k);
        return beta * s;
    });
}

Eigen::VectorXd weight_vector(const Triangulation& mesh, double alpha) {
    const double expo = 4.0 / alpha - 2.0;
    Eigen::VectorXd w(mesh.element_count());
    for (int e = 0; e < mesh.element_count(); ++e)
        w(e) = std::pow(element_diameter(mesh, e), expo);
    return w;
}

double weighted_inner(const FeFunction& p, const FeFunction& q, double alpha) {
    require_same_space(p, q);
    const Eigen::VectorXd w = weight_vector(*p.mesh, alpha);
    return sum_over_elements(*p.mesh, [&](int e) { return w(e) * element_l2(p, q, e); });
}

FeFunction nodal_lift(MeshPtr mesh,
                      const std::function<double(int, const Eigen::Vector2d&)>& f) {
    const Triangulation& m = *mesh;
    Eigen::VectorXd c(3 * m.element_count());
    parallel_for(m.element_count(), [&](int e) {
        for (int k = 0; k < 3; ++k) c(3 * e + k) = f(e, node(m, m.elements(e, k)));
    });
    return {SpaceKind::P1Disc, std::move(mesh), std::move(c)};
}

FeFunction l2_project_p0(MeshPtr mesh, const std::function<double(const Eigen::Vector2d&)>& f,
                         int depth) {
    const Triangulation& m = *mesh;
    Eigen::VectorXd c(m.element_count());
    parallel_for(m.element_count(), [&](int e) {
        const Eigen::Vector2d a = node(m, m.elements(e, 0));
        const Eigen::Vector2d b = node(m, m.elements(e, 1));
        const Eigen::Vector2d d = node(m, m.elements(e, 2));
        c(e) = integrate_subdivided(a, b, d, f, depth) / element_area(m, e);
    });
    return {SpaceKind::P0, std::move(mesh), std::move(c)};
}

FeFunction l2_project_p0_interface(MeshPtr mesh,
                                   const std::function<double(const Eigen::Vector2d&)>& f,
                                   const std::function<bool(const Eigen::Vector2d&)>& inside,
                                   int max_depth) {
    const Triangulation& m = *mesh;
    Eigen::VectorXd c(m.element_count());
    parallel_for(m.element_count(), [&](int e) {
        const Eigen::Vector2d a = node(m, m.elements(e, 0));
        const Eigen::Vector2d b = node(m, m.elements(e, 1));
        const Eigen::Vector2d d = node(m, m.elements(e, 2));
        c(e) = integrate_interface(a, b, d, f, inside, max_depth) / element_area(m, e);
    });
    return {SpaceKind::P0, std::move(mesh), std::move(c)};
}

FeFunction bdm_interpolate(MeshPtr mesh,
                           const std::function<Eigen::Vector2d(const Eigen::Vector2d&)>& q) {
    const Triangulation& m = *mesh;
    Eigen::VectorXd c(6 * m.element_count());
    // 2-point Gauss positions on [0,1]
    const double ga = 0.5 - 0.5 / std::sqrt(3.0), gb = 0.5 + 0.5 / std::sqrt(3.0);
    parallel_for(m.element_count(), [&](int e) {
        // per side: two normal moments -> normal component at both endpoints
        Eigen::Matrix3d normal_at;  // (side k, endpoint in {k+1,k+2})
        Eigen::Matrix<double, 3, 2> normals;
        for (int k = 0; k < 3; ++k) {
            const Eigen::Vector2d s = node(m, m.elements(e, (k + 1) % 3));
            const Eigen::Vector2d t = node(m, m.elements(e, (k + 2) % 3));
            const double len = (t - s).norm();
            const Eigen::Vector2d n = outward_normal(m, e, k);
            normals.row(k) = n.transpose();
            double m1 = 0.0, m2 = 0.0;  // moments against the endpoint hat functions
            for (double g : {ga, gb}) {
                const Eigen::Vector2d x = (1.0 - g) * s + g * t;
                const double qn = q(x).dot(n);
                m1 += 0.5 * len * qn * (1.0 - g);
                m2 += 0.5 * len * qn * g;
            }
            normal_at(k, 0) = (4.0 * m1 - 2.0 * m2) / len;  // at vertex k+1
            normal_at(k, 1) = (-2.0 * m1 + 4.0 * m2) / len; // at vertex k+2
        }
        // vertex k lies on the sides opposite k+1 and k+2
        for (int k = 0; k < 3; ++k) {
            const int s1 = (k + 1) % 3, s2 = (k + 2) % 3;
            Eigen::Matrix2d N;
            N.row(0) = normals.row(s1);
            N.row(1) = normals.row(s2);
            Eigen::Vector2d rhs;
            rhs(0) = normal_at(s1, (k - s1 + 3) % 3 == 1 ? 0 : 1);
            rhs(1) = normal_at(s2, (k - s2 + 3) % 3 == 1 ? 0 : 1);
            const double det = N(0, 0) * N(1, 1) - N(0, 1) * N(1, 0);
            if (std::abs(det) < 1e-14) fail("bdm_interpolate: degenerate element");
            c.segment<2>(6 * e + 2 * k) = N.inverse() * rhs;
        }
    });
    return {SpaceKind::P1DiscVec, std::move(mesh), std::move(c)};
}

SpMat continuity_constraints(const Triangulation& mesh) {
    std::vector<Eigen::Triplet<double>> trip;
    int rows = 0;
    for (int s = 0; s < mesh.side_count(); ++s) {
        const int b = mesh.side_boundary[s];
        const bool interior = b == -1;
        const bool neumann = !interior && mesh.boundary[b].label == BoundaryLabel::Neumann;
        if (!interior && !neumann) continue;

        const int a_node = mesh.sides(s, 0), b_node = mesh.sides(s, 1);
        const Eigen::Vector2d edge = node(mesh, b_node) - node(mesh, a_node);
        const double len = edge.norm();
        const Eigen::Vector2d n = Eigen::Vector2d(edge(1), -edge(0)) / len;

        for (int which = 0; which < 2; ++which) {
            const int e = mesh.side_elements(s, which);
            if (e < 0) continue;
            const double sign = which == 0 ? 1.0 : -1.0;
            int la = -1, lb = -1;
            for (int k = 0; k < 3; ++k) {
                if (mesh.elements(e, k) == a_node) la = k;
                if (mesh.elements(e, k) == b_node) lb = k;
            }
            for (int c = 0; c < 2; ++c) {
                // moment against the hat at a_node, then at b_node
                trip.emplace_back(rows, 6 * e + 2 * la + c, sign * len * n(c) / 3.0);
                trip.emplace_back(rows, 6 * e + 2 * lb + c, sign * len * n(c) / 6.0);
                trip.emplace_back(rows + 1, 6 * e + 2 * la + c, sign * len * n(c) / 6.0);
                trip.emplace_back(rows + 1, 6 * e + 2 * lb + c, sign * len * n(c) / 3.0);
            }
        }
        rows += 2;
    }
    SpMat C(rows, 6 * mesh.element_count());
    C.setFromTriplets(trip.begin(), trip.end());
    C.makeCompressed();
    return C;
}

std::vector<std::vector<Eigen::Vector2d>> neumann_node_normals(const Triangulation& mesh) {
    std::vector<std::vector<Eigen::Vector2d>> out(mesh.node_count());
    for (int s = 0; s < mesh.side_count(); ++s) {
        const int b = mesh.side_boundary[s];
        if (b < 0 || mesh.boundary[b].label != BoundaryLabel::Neumann) continue;
        const int e = mesh.side_elements(s, 0);
        int k = 0;
        while (mesh.element_sides(e, k) != s) ++k;
        const Eigen::Vector2d n = outward_normal(mesh, e, k);
        for (int node_id : {mesh.sides(s, 0), mesh.sides(s, 1)}) {
            bool known = false;
            for (const Eigen::Vector2d& m : out[node_id])
                if ((m - n).norm() < 1e-12) known = true;
            if (!known) out[node_id].push_back(n);
        }
    }
    return out;
}

std::vector<char> dirichlet_node_mask(const Triangulation& mesh) {
    std::vector<char> mask(mesh.node_count(), 0);
    for (const BoundarySide& b : mesh.boundary)
        if (b.label == BoundaryLabel::Dirichlet) mask[b.a] = mask[b.b] = 1;
    return mask;
}

SpMat p1_mass(const Triangulation& mesh) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(9 * mesh.element_count());
    for (int e = 0; e < mesh.element_count(); ++e) {
        const double a12 = element_area(mesh, e) / 12.0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                trip.emplace_back(mesh.elements(e, i), mesh.elements(e, j),
                                  a12 * (i == j ? 2.0 : 1.0));
    }
    SpMat M(mesh.node_count(), mesh.node_count());
    M.setFromTriplets(trip.begin(), trip.end());
    M.makeCompressed();
    return M;
}

Eigen::VectorXd p1_lumped_weights(const Triangulation& mesh) {
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(mesh.node_count());
    for (int e = 0; e < mesh.element_count(); ++e) {
        const double a3 = element_area(mesh, e) / 3.0;
        for (int k = 0; k < 3; ++k) beta(mesh.elements(e, k)) += a3;
    }
    return beta;
}

SpMat p1_gradient_operator(const Triangulation& mesh) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(6 * mesh.element_count());
    for (int e = 0; e < mesh.element_count(); ++e) {
        const Eigen::Matrix<double, 3, 2> dphi = p1_gradients(mesh, e);
        for (int k = 0; k < 3; ++k)
            for (int c = 0; c < 2; ++c)
                trip.emplace_back(2 * e + c, mesh.elements(e, k), dphi(k, c));
    }
    SpMat B(2 * mesh.element_count(), mesh.node_count());
    B.setFromTriplets(trip.begin(), trip.end());
    B.makeCompressed();
    return B;
}

SpMat divergence_operator(const Triangulation& mesh, SpaceKind kind) {
    if (kind != SpaceKind::P1DiscVec && kind != SpaceKind::P1Vec)
        fail("divergence_operator: unsupported space");
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(6 * mesh.element_count());
    for (int e = 0; e < mesh.element_count(); ++e) {
        const Eigen::Matrix<double, 3, 2> dphi = p1_gradients(mesh, e);
        for (int k = 0; k < 3; ++k)
            for (int c = 0; c < 2; ++c) {
                const int col = kind == SpaceKind::P1DiscVec ? 6 * e + 2 * k + c
                                                             : 2 * mesh.elements(e, k) + c;
                trip.emplace_back(e, col, dphi(k, c));
            }
    }
    SpMat D(mesh.element_count(), dof_count(kind, mesh));
    D.setFromTriplets(trip.begin(), trip.end());
    D.makeCompressed();
    return D;
}

SpMat p1vec_to_disc(const Triangulation& mesh) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(6 * mesh.element_count());
    for (int e = 0; e < mesh.element_count(); ++e)
        for (int k = 0; k < 3; ++k)
            for (int c = 0; c < 2; ++c)
                trip.emplace_back(6 * e + 2 * k + c, 2 * mesh.elements(e, k) + c, 1.0);
    SpMat E(6 * mesh.element_count(), 2 * mesh.node_count());
    E.setFromTriplets(trip.begin(), trip.end());
    E.makeCompressed();
    return E;
}

Eigen::VectorXd lumped_weights(const Triangulation& mesh, SpaceKind kind) {
    switch (kind) {
        case SpaceKind::P1: return p1_lumped_weights(mesh);
        case SpaceKind::P1Vec: {
            const Eigen::VectorXd beta = p1_lumped_weights(mesh);
            Eigen::VectorXd w(2 * mesh.node_count());
            for (int i = 0; i < mesh.node_count(); ++i) w.segment<2>(2 * i).setConstant(beta(i));
            return w;
        }
        case SpaceKind::P1Disc:
        case SpaceKind::P1DiscVec: {
            const int per = kind == SpaceKind::P1Disc ? 3 : 6;
            Eigen::VectorXd w(per * mesh.element_count());
            for (int e = 0; e < mesh.element_count(); ++e)
                w.segment(per * e, per).setConstant(element_area(mesh, e) / 3.0);
            return w;
        }
        default: fail("lumped_weights: unsupported space");
    }
}

Eigen::VectorXd p0vec_measures(const Triangulation& mesh) {
    Eigen::VectorXd w(2 * mesh.element_count());
    for (int e = 0; e < mesh.element_count(); ++e)
        w.segment<2>(2 * e).setConstant(element_area(mesh, e));
    return w;
}

SpMat weighted_stiffness(const Triangulation& mesh, const Eigen::VectorXd& w) {
    if (w.size() != mesh.element_count()) fail("weighted_stiffness: weight count");
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(9 * mesh.element_count());
    for (int e = 0; e < mesh.element_count(); ++e) {
        const Eigen::Matrix<double, 3, 2> dphi = p1_gradients(mesh, e);
        const double scale = w(e) * element_area(mesh, e);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                trip.emplace_back(mesh.elements(e, i), mesh.elements(e, j),
                                  scale * dphi.row(i).dot(dphi.row(j)));
    }
    SpMat A(mesh.node_count(), mesh.node_count());
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();
    return A;
}

Eigen::VectorXd p0_load_vector(const Triangulation& mesh, const Eigen::VectorXd& f) {
    if (f.size() != mesh.element_count()) fail("p0_load_vector: value count");
    Eigen::VectorXd F = Eigen::VectorXd::Zero(mesh.node_count());
    for (int e = 0; e < mesh.element_count(); ++e) {
        const double a3 = element_area(mesh, e) / 3.0;
        for (int k = 0; k < 3; ++k) F(mesh.elements(e, k)) += a3 * f(e);
    }
    return F;
}

Eigen::VectorXd prolong_p1(const Triangulation& fine, const Eigen::VectorXd& coarse) {
    Eigen::VectorXd out(fine.node_count());
    for (int i = 0; i < fine.node_count(); ++i) {
        const int a = fine.node_parents(i, 0), b = fine.node_parents(i, 1);
        if (a >= coarse.size() || b >= coarse.size()) fail("prolong_p1: not a child mesh");
        out(i) = a == b ? coarse(a) : 0.5 * (coarse(a) + coarse(b));
    }
    return out;
}

Eigen::VectorXd prolong_p1vec(const Triangulation& fine, const Eigen::VectorXd& coarse) {
    Eigen::VectorXd out(2 * fine.node_count());
    for (int i = 0; i < fine.node_count(); ++i) {
        const int a = fine.node_parents(i, 0), b = fine.node_parents(i, 1);
        if (2 * a >= coarse.size() || 2 * b >= coarse.size()) fail("prolong_p1vec: not a child mesh");
        if (a == b)
            out.segment<2>(2 * i) = coarse.segment<2>(2 * a);
        else
            out.segment<2>(2 * i) = 0.5 * (coarse.segment<2>(2 * a) + coarse.segment<2>(2 * b));
    }
    return out;
}

Eigen::VectorXd prolong_p0(const Triangulation& fine, const Triangulation& coarse,
                           const Eigen::VectorXd& values, int components) {
    if (values.size() != components * coarse.element_count()) fail("prolong_p0: value count");
    Eigen::VectorXd out(components * fine.element_count());
    for (int e = 0; e < fine.element_count(); ++e) {
        const int p = fine.parent_element(e);
        if (p < 0 || p >= coarse.element_count()) fail("prolong_p0: not a child mesh");
        out.segment(components * e, components) = values.segment(components * p, components);
    }
    return out;
}

Eigen::VectorXd prolong_p1disc_vec(const Triangulation& fine, const Triangulation& coarse,
                                   const Eigen::VectorXd& values) {
    if (values.size() != 6 * coarse.element_count()) fail("prolong_p1disc_vec: value count");
    Eigen::VectorXd out(6 * fine.element_count());
    for (int e = 0; e < fine.element_count(); ++e) {
        const int p = fine.parent_element(e);
        if (p < 0 || p >= coarse.element_count()) fail("prolong_p1disc_vec: not a child mesh");
        for (int k = 0; k < 3; ++k) {
            const Eigen::Vector2d x = fine.nodes.row(fine.elements(e, k)).transpose();
            const Eigen::Vector3d lam = barycentric(coarse, p, x);
            Eigen::Vector2d v = Eigen::Vector2d::Zero();
            for (int j = 0; j < 3; ++j) v += lam(j) * values.segment<2>(6 * p + 2 * j);
            out.segment<2>(6 * e + 2 * k) = v;
        }
    }
    return out;
}

}  // namespace afem
