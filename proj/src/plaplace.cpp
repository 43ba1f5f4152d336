#include "afem/plaplace.hpp"

#include "afem/parallel.hpp"
#include "afem/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace afem {

namespace {

constexpr double kPi = 3.14159265358979323846;

[[noreturn]] void fail(const std::string& msg) {
    throw std::invalid_argument("plaplace: " + msg);
}

Eigen::Matrix<double, 3, 2> element_corners(const Triangulation& mesh, int e) {
    Eigen::Matrix<double, 3, 2> c;
    for (int k = 0; k < 3; ++k) c.row(k) = mesh.nodes.row(mesh.elements(e, k));
    return c;
}

bool touches_origin(const Triangulation& mesh, int e) {
    for (int k = 0; k < 3; ++k)
        if (mesh.nodes.row(mesh.elements(e, k)).norm() < 1e-14) return true;
    return false;
}

Eigen::Vector2d v_map(const Eigen::Vector2d& a, double sigma) {
    const double n = a.norm();
    if (n == 0.0) return Eigen::Vector2d::Zero();
    return std::pow(n, 0.5 * (sigma - 2.0)) * a;
}

// worst elementwise violation of div p = -f_h, relative to the local data size
// (the source can reach ~1/h on strongly graded meshes, so an absolute test
// would reject candidates whose area-weighted effect on the energies is nil)
std::pair<int, double> divergence_violation(const FeFunction& p, const PLaplaceProblem& prob) {
    const FeFunction dv = divergence(p);
    int worst = 0;
    double worst_val = 0.0;
    for (int e = 0; e < prob.mesh->element_count(); ++e) {
        const double fe = prob.f_h.coeffs(e);
        const double r = std::abs(dv.coeffs(e) + fe) / std::max(1.0, std::abs(fe));
        if (r > worst_val) {
            worst_val = r;
            worst = e;
        }
    }
    return {worst, worst_val};
}

// sum over Dirichlet sides of int_S (p.n) u_D, as a linear form on the
// elementwise affine vector dofs
Eigen::VectorXd dirichlet_pairing_form(const PLaplaceProblem& prob) {
    const Triangulation& mesh = *prob.mesh;
    Eigen::VectorXd ell = Eigen::VectorXd::Zero(dof_count(SpaceKind::P1DiscVec, mesh));
    for (int s = 0; s < mesh.side_count(); ++s) {
        const int bidx = mesh.side_boundary[s];
        if (bidx < 0 || mesh.boundary[bidx].label != BoundaryLabel::Dirichlet) continue;
        const int e = mesh.side_elements(s, 0);
        int k = 0;
        while (mesh.element_sides(e, k) != s) ++k;
        const int k1 = (k + 1) % 3, k2 = (k + 2) % 3;
        const int n1 = mesh.elements(e, k1), n2 = mesh.elements(e, k2);
        const double len = (mesh.nodes.row(n1) - mesh.nodes.row(n2)).norm();
        const Eigen::Vector2d nrm = outward_normal(mesh, e, k);
        const double u1 = prob.dirichlet_values(n1), u2 = prob.dirichlet_values(n2);
        for (int c = 0; c < 2; ++c) {
            ell(6 * e + 2 * k1 + c) += nrm(c) * len / 6.0 * (2.0 * u1 + u2);
            ell(6 * e + 2 * k2 + c) += nrm(c) * len / 6.0 * (u1 + 2.0 * u2);
        }
    }
    return ell;
}

SpMat dual_constraints(const Triangulation& mesh) {
    const SpMat div_op = divergence_operator(mesh, SpaceKind::P1DiscVec);
    const SpMat cont = continuity_constraints(mesh);
    SpMat C(div_op.rows() + cont.rows(), div_op.cols());
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(div_op.nonZeros() + cont.nonZeros());
    for (int k = 0; k < div_op.outerSize(); ++k)
        for (SpMat::InnerIterator it(div_op, k); it; ++it)
            trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    for (int k = 0; k < cont.outerSize(); ++k)
        for (SpMat::InnerIterator it(cont, k); it; ++it)
            trip.emplace_back(static_cast<int>(div_op.rows() + it.row()),
                              static_cast<int>(it.col()), it.value());
    C.setFromTriplets(trip.begin(), trip.end());
    C.makeCompressed();
    return C;
}

Eigen::VectorXd dual_constraint_rhs(const PLaplaceProblem& prob, int rows) {
    Eigen::VectorXd d = Eigen::VectorXd::Zero(rows);
    d.head(prob.mesh->element_count()) = -prob.f_h.coeffs;
    return d;
}

}  // namespace

PLaplaceProblem plaplace_problem(MeshPtr mesh, double sigma, FeFunction f_h,
                                 Eigen::VectorXd dirichlet_values) {
    if (!mesh) fail("null mesh");
    if (sigma <= 1.0) fail("sigma must exceed 1");
    if (f_h.kind != SpaceKind::P0 || f_h.mesh.get() != mesh.get()) fail("f_h must be P0 on the mesh");
    if (dirichlet_values.size() != mesh->node_count()) fail("boundary data size");
    PLaplaceProblem prob;
    prob.sigma = sigma;
    prob.sigma_prime = sigma / (sigma - 1.0);
    prob.mesh = mesh;
    prob.f_h = std::move(f_h);
    prob.dirichlet_values = std::move(dirichlet_values);
    prob.dirichlet_nodes = dirichlet_node_mask(*mesh);
    return prob;
}

LShapeBenchmark lshape_benchmark(double sigma) {
    if (sigma <= 1.0) fail("sigma must exceed 1");
    LShapeBenchmark b;
    b.sigma = sigma;
    b.delta = 1.2 * (1.0 - 1.0 / sigma);
    return b;
}

double LShapeBenchmark::u(const Eigen::Vector2d& x) const {
    const double r = x.norm();
    if (r == 0.0) return 0.0;
    double theta = std::atan2(x(1), x(0));
    if (theta < 0.0) theta += 2.0 * kPi;
    return std::pow(r, delta) * std::sin(delta * theta);
}

Eigen::Vector2d LShapeBenchmark::grad_u(const Eigen::Vector2d& x) const {
    const double r = x.norm();
    if (r == 0.0) return Eigen::Vector2d::Zero();
    double theta = std::atan2(x(1), x(0));
    if (theta < 0.0) theta += 2.0 * kPi;
    const Eigen::Vector2d e_r(std::cos(theta), std::sin(theta));
    const Eigen::Vector2d e_t(-std::sin(theta), std::cos(theta));
    return delta * std::pow(r, delta - 1.0) *
           (std::sin(delta * theta) * e_r + std::cos(delta * theta) * e_t);
}

double LShapeBenchmark::f(const Eigen::Vector2d& x) const {
    const double coef = -(2.0 - sigma) * std::pow(delta, sigma - 1.0) * (1.0 - delta);
    if (coef == 0.0) return 0.0;
    const double r = x.norm();
    double theta = std::atan2(x(1), x(0));
    if (theta < 0.0) theta += 2.0 * kPi;
    return coef * std::pow(r, (delta - 1.0) * (sigma - 1.0) - 1.0) * std::sin(delta * theta);
}

PLaplaceProblem lshape_problem(MeshPtr mesh, double sigma) {
    if (!mesh) fail("null mesh");
    const LShapeBenchmark bench = lshape_benchmark(sigma);
    const int ne = mesh->element_count();
    Eigen::VectorXd fvals(ne);
    parallel_for(ne, [&](int e) {
        const auto c = element_corners(*mesh, e);
        const int depth = touches_origin(*mesh, e) ? 5 : 1;
        const double integral = integrate_subdivided(
            c.row(0).transpose(), c.row(1).transpose(), c.row(2).transpose(),
            [&](const Eigen::Vector2d& x) { return bench.f(x); }, depth);
        fvals(e) = integral / element_area(*mesh, e);
    });
    Eigen::VectorXd ud(mesh->node_count());
    for (int i = 0; i < mesh->node_count(); ++i) ud(i) = bench.u(mesh->nodes.row(i).transpose());
    return plaplace_problem(mesh, sigma, make_function(SpaceKind::P0, mesh, std::move(fvals)),
                            std::move(ud));
}

FeFunction lshape_interpolant(MeshPtr mesh, const LShapeBenchmark& bench) {
    Eigen::VectorXd vals(mesh->node_count());
    for (int i = 0; i < mesh->node_count(); ++i) vals(i) = bench.u(mesh->nodes.row(i).transpose());
    return make_function(SpaceKind::P1, mesh, std::move(vals));
}

double energy_primal(const FeFunction& u, const PLaplaceProblem& prob) {
    if (u.kind != SpaceKind::P1 || u.mesh.get() != prob.mesh.get()) fail("primal energy: P1 on the problem mesh expected");
    const Triangulation& mesh = *prob.mesh;
    const int ne = mesh.element_count();
    Eigen::VectorXd partial(ne);
    parallel_for(ne, [&](int e) {
        const auto dN = p1_gradients(mesh, e);
        Eigen::Vector2d g = Eigen::Vector2d::Zero();
        double mean = 0.0;
        for (int k = 0; k < 3; ++k) {
            const double uz = u.coeffs(mesh.elements(e, k));
            g += uz * dN.row(k).transpose();
            mean += uz / 3.0;
        }
        const double area = element_area(mesh, e);
        partial(e) = area * (std::pow(g.norm(), prob.sigma) / prob.sigma -
                             prob.f_h.coeffs(e) * mean);
    });
    return partial.sum();
}

std::optional<double> energy_dual_lumped(const FeFunction& p, const PLaplaceProblem& prob) {
    if (p.kind != SpaceKind::P1DiscVec || p.mesh.get() != prob.mesh.get())
        fail("dual energy: elementwise affine vectors on the problem mesh expected");
    if (divergence_violation(p, prob).second > 1e-10) return std::nullopt;
    const Triangulation& mesh = *prob.mesh;
    const int ne = mesh.element_count();
    Eigen::VectorXd partial(ne);
    parallel_for(ne, [&](int e) {
        const double area = element_area(mesh, e);
        double lump = 0.0;
        for (int k = 0; k < 3; ++k)
            lump += std::pow(vertex_value_vec(p, e, k).norm(), prob.sigma_prime);
        partial(e) = -(area / 3.0) * lump / prob.sigma_prime;
    });
    return partial.sum() + dirichlet_pairing_form(prob).dot(p.coeffs);
}

EstimatorReport estimator_pd(const FeFunction& v, const FeFunction& q,
                             const PLaplaceProblem& prob) {
    if (v.kind != SpaceKind::P1 || q.kind != SpaceKind::P1DiscVec ||
        v.mesh.get() != prob.mesh.get() || q.mesh.get() != prob.mesh.get())
        fail("gap estimator: (P1, elementwise affine vector) pair expected");
    const auto [worst, violation] = divergence_violation(q, prob);
    if (violation > 1e-10)
        throw std::runtime_error("plaplace: dual candidate infeasible on element " +
                                 std::to_string(worst) + " (relative |div p + f| = " +
                                 std::to_string(violation) + ")");
    const Triangulation& mesh = *prob.mesh;
    const int ne = mesh.element_count();
    EstimatorReport rep;
    rep.indicators2.resize(ne);
    parallel_for(ne, [&](int e) {
        const auto dN = p1_gradients(mesh, e);
        Eigen::Vector2d g = Eigen::Vector2d::Zero();
        for (int k = 0; k < 3; ++k) g += v.coeffs(mesh.elements(e, k)) * dN.row(k).transpose();
        const double area = element_area(mesh, e);
        double lump = 0.0;
        Eigen::Vector2d mean = Eigen::Vector2d::Zero();
        for (int k = 0; k < 3; ++k) {
            const Eigen::Vector2d qz = vertex_value_vec(q, e, k);
            lump += std::pow(qz.norm(), prob.sigma_prime);
            mean += qz / 3.0;
        }
        rep.indicators2(e) = area * (std::pow(g.norm(), prob.sigma) / prob.sigma +
                                     lump / (3.0 * prob.sigma_prime) - mean.dot(g));
    });
    rep.total2 = rep.indicators2.sum();
    return rep;
}

EstimatorReport estimator_pd_exact(const FeFunction& v, const FeFunction& q,
                                   const PLaplaceProblem& prob) {
    EstimatorReport rep = estimator_pd(v, q, prob);  // validation + lumped values
    const Triangulation& mesh = *prob.mesh;
    const int ne = mesh.element_count();
    parallel_for(ne, [&](int e) {
        const auto dN = p1_gradients(mesh, e);
        Eigen::Vector2d g = Eigen::Vector2d::Zero();
        for (int k = 0; k < 3; ++k) g += v.coeffs(mesh.elements(e, k)) * dN.row(k).transpose();
        const double area = element_area(mesh, e);
        Eigen::Vector2d mean = Eigen::Vector2d::Zero();
        for (int k = 0; k < 3; ++k) mean += vertex_value_vec(q, e, k) / 3.0;
        const auto c = element_corners(mesh, e);
        const double power_int = integrate_subdivided(
            c.row(0).transpose(), c.row(1).transpose(), c.row(2).transpose(),
            [&](const Eigen::Vector2d& x) {
                return std::pow(eval_vec(q, e, x).norm(), prob.sigma_prime);
            },
            2);
        rep.indicators2(e) = area * (std::pow(g.norm(), prob.sigma) / prob.sigma - mean.dot(g)) +
                             power_int / prob.sigma_prime;
    });
    rep.total2 = rep.indicators2.sum();
    return rep;
}

EstimatorReport estimator_residual(const FeFunction& u, const PLaplaceProblem& prob) {
    if (u.kind != SpaceKind::P1 || u.mesh.get() != prob.mesh.get())
        fail("residual estimator: P1 on the problem mesh expected");
    const Triangulation& mesh = *prob.mesh;
    const int ne = mesh.element_count();
    const FeFunction grads = gradient_p1(u);
    const MeshSizes sizes = mesh_sizes(mesh);

    EstimatorReport rep;
    rep.indicators2 = Eigen::VectorXd::Zero(ne);
    for (int e = 0; e < ne; ++e) {
        const double f = prob.f_h.coeffs(e);
        if (f == 0.0) continue;
        const double h = sizes.h(e);
        const double gnorm = grads.coeffs.segment<2>(2 * e).norm();
        const double base = std::pow(gnorm, prob.sigma - 1.0) + h * std::abs(f);
        rep.indicators2(e) =
            element_area(mesh, e) * std::pow(base, prob.sigma_prime - 2.0) * h * h * f * f;
    }
    for (int s = 0; s < mesh.side_count(); ++s) {
        if (mesh.side_elements(s, 1) < 0) continue;
        const int ea = mesh.side_elements(s, 0), eb = mesh.side_elements(s, 1);
        const Eigen::Vector2d jump =
            grads.coeffs.segment<2>(2 * ea) - grads.coeffs.segment<2>(2 * eb);
        const double jn = jump.norm();
        if (jn == 0.0) continue;
        double patch = 0.0;
        for (int e : {ea, eb}) {
            const double gnorm = grads.coeffs.segment<2>(2 * e).norm();
            patch += element_area(mesh, e) * std::pow(gnorm + jn, prob.sigma - 2.0) * jn * jn;
        }
        rep.indicators2(ea) += patch;
        rep.indicators2(eb) += patch;
    }
    rep.total2 = rep.indicators2.sum();
    return rep;
}

double quasi_norm_error(const FeFunction& u_h, const LShapeBenchmark& bench) {
    if (u_h.kind != SpaceKind::P1) fail("quasi-norm error: P1 expected");
    const Triangulation& mesh = *u_h.mesh;
    const int ne = mesh.element_count();
    const FeFunction grads = gradient_p1(u_h);
    Eigen::VectorXd partial(ne);
    parallel_for(ne, [&](int e) {
        const Eigen::Vector2d vh = v_map(grads.coeffs.segment<2>(2 * e), bench.sigma);
        const auto c = element_corners(mesh, e);
        const int depth = touches_origin(mesh, e) ? 2 : 1;
        partial(e) = integrate_subdivided(
            c.row(0).transpose(), c.row(1).transpose(), c.row(2).transpose(),
            [&](const Eigen::Vector2d& x) {
                return (v_map(bench.grad_u(x), bench.sigma) - vh).squaredNorm();
            },
            depth);
    });
    return std::sqrt(partial.sum());
}

double lsigma_norm(const FeFunction& p, double exponent) {
    if (p.kind != SpaceKind::P1DiscVec && p.kind != SpaceKind::P0Vec && p.kind != SpaceKind::P1Vec)
        fail("norm: vector field expected");
    if (exponent < 1.0) fail("norm exponent below 1");
    const Triangulation& mesh = *p.mesh;
    const int ne = mesh.element_count();
    Eigen::VectorXd partial(ne);
    parallel_for(ne, [&](int e) {
        const auto c = element_corners(mesh, e);
        partial(e) = integrate_subdivided(
            c.row(0).transpose(), c.row(1).transpose(), c.row(2).transpose(),
            [&](const Eigen::Vector2d& x) {
                return std::pow(eval_vec(p, e, x).norm(), exponent);
            },
            1);
    });
    return std::pow(partial.sum(), 1.0 / exponent);
}

double data_oscillation(const PLaplaceProblem& prob, const LShapeBenchmark& bench,
                        const FeFunction& p) {
    const Triangulation& mesh = *prob.mesh;
    const int ne = mesh.element_count();
    Eigen::VectorXd partial(ne);
    parallel_for(ne, [&](int e) {
        const auto c = element_corners(mesh, e);
        const double fe = prob.f_h.coeffs(e);
        const int depth = touches_origin(mesh, e) ? 5 : 1;
        partial(e) = integrate_subdivided(
            c.row(0).transpose(), c.row(1).transpose(), c.row(2).transpose(),
            [&](const Eigen::Vector2d& x) {
                return std::pow(std::abs(bench.f(x) - fe), prob.sigma_prime);
            },
            depth);
    });
    const double osc = std::pow(partial.sum(), 1.0 / prob.sigma_prime);
    return std::pow(lsigma_norm(p, prob.sigma_prime), 1.0 / (prob.sigma - 1.0)) * osc;
}

SolveResult solve_primal(const PLaplaceProblem& prob, const AdmmConfig& config,
                         const AdmmInit& init) {
    const Triangulation& mesh = *prob.mesh;
    const int ne = mesh.element_count();
    const int nn = mesh.node_count();

    const Eigen::VectorXd w = weight_vector(mesh, prob.sigma);
    Eigen::VectorXd metric(2 * ne);
    for (int e = 0; e < ne; ++e)
        metric.segment<2>(2 * e).setConstant(element_area(mesh, e) * w(e));

    const SpMat B = p1_gradient_operator(mesh);
    const SpMat A = weighted_stiffness(mesh, w);
    const Eigen::VectorXd F = p0_load_vector(mesh, prob.f_h.coeffs);
    const SpdWithFixedDofs stiffness_solver(A, prob.dirichlet_nodes);

    AdmmProblem admm;
    admm.metric = metric;
    admm.primary_update = [&](const Eigen::VectorXd& r, const Eigen::VectorXd& lambda,
                              double tau) {
        const Eigen::VectorXd rhs =
            F - B.transpose() * metric.cwiseProduct(lambda - tau * r);
        return stiffness_solver.solve(rhs / tau, prob.dirichlet_values);
    };
    admm.couple = [&](const Eigen::VectorXd& u) { return Eigen::VectorXd(B * u); };
    admm.auxiliary_update = [&](const Eigen::VectorXd& coupled, const Eigen::VectorXd& lambda,
                                double tau) {
        Eigen::VectorXd r(2 * ne);
        parallel_for(ne, [&](int e) {
            const Eigen::Vector2d z =
                coupled.segment<2>(2 * e) + lambda.segment<2>(2 * e) / tau;
            r.segment<2>(2 * e) = prox_power(z, prob.sigma, w(e), tau);
        });
        return r;
    };

    Eigen::VectorXd u0 = init.primary.size() == nn ? init.primary : Eigen::VectorXd::Zero(nn);
    Eigen::VectorXd r0 =
        init.auxiliary.size() == 2 * ne ? init.auxiliary : Eigen::VectorXd::Zero(2 * ne);
    Eigen::VectorXd l0 =
        init.multiplier.size() == 2 * ne ? init.multiplier : Eigen::VectorXd::Zero(2 * ne);

    AdmmState st = admm_run(admm, config, std::move(u0), std::move(r0), std::move(l0));
    SolveResult result;
    result.solution = make_function(SpaceKind::P1, prob.mesh, st.primary);
    result.state = std::move(st);
    return result;
}

FeFunction feasible_dual_init(const PLaplaceProblem& prob) {
    const Triangulation& mesh = *prob.mesh;
    const int ne = mesh.element_count();
    std::vector<Eigen::MatrixXd> blocks(ne);
    for (int e = 0; e < ne; ++e) {
        Eigen::MatrixXd M = Eigen::MatrixXd::Zero(6, 6);
        const double area = element_area(mesh, e);
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k)
                for (int c = 0; c < 2; ++c)
                    M(2 * j + c, 2 * k + c) = area / 12.0 * (j == k ? 2.0 : 1.0);
        blocks[e] = M;
    }
    const SpMat C = dual_constraints(mesh);
    const Eigen::VectorXd d = dual_constraint_rhs(prob, static_cast<int>(C.rows()));
    BlockDiagConstrainedQuadratic solver(blocks, C);
    const Eigen::VectorXd p = solver.solve(Eigen::VectorXd::Zero(6 * ne), d).x;
    FeFunction out = make_function(SpaceKind::P1DiscVec, prob.mesh, p);
    // check the full row set: with incompatible data the solver drops a
    // dependent row and the defect hides in that row, not in the divergence
    const double resid = (C * p - d).lpNorm<Eigen::Infinity>() /
                         std::max(1.0, d.lpNorm<Eigen::Infinity>());
    if (resid > 1e-8 || divergence_violation(out, prob).second > 1e-8)
        throw std::runtime_error("plaplace: no feasible dual field (incompatible data)");
    return out;
}

SolveResult solve_dual(const PLaplaceProblem& prob, const AdmmConfig& config,
                       const AdmmInit& init) {
    const Triangulation& mesh = *prob.mesh;
    const int ne = mesh.element_count();
    const int nd = 6 * ne;

    const Eigen::VectorXd w = weight_vector(mesh, prob.sigma_prime);
    Eigen::VectorXd hvec = lumped_weights(mesh, SpaceKind::P1DiscVec);
    for (int e = 0; e < ne; ++e) hvec.segment<6>(6 * e) *= w(e);

    const SpMat C = dual_constraints(mesh);
    const Eigen::VectorXd d = dual_constraint_rhs(prob, static_cast<int>(C.rows()));
    const DiagonalConstrainedQuadratic p_solver(hvec, C);
    const Eigen::VectorXd ell = dirichlet_pairing_form(prob);

    AdmmProblem admm;
    admm.metric = hvec;
    admm.primary_update = [&](const Eigen::VectorXd& q, const Eigen::VectorXd& mu, double tau) {
        const Eigen::VectorXd b = ell - hvec.cwiseProduct(mu - tau * q);
        return p_solver.solve(b, d, tau).x;
    };
    admm.couple = [](const Eigen::VectorXd& p) { return p; };
    admm.auxiliary_update = [&](const Eigen::VectorXd& p, const Eigen::VectorXd& mu,
                                double tau) {
        Eigen::VectorXd q(nd);
        parallel_for(ne, [&](int e) {
            for (int k = 0; k < 3; ++k) {
                const int at = 6 * e + 2 * k;
                const Eigen::Vector2d z = p.segment<2>(at) + mu.segment<2>(at) / tau;
                q.segment<2>(at) = prox_power(z, prob.sigma_prime, w(e), tau);
            }
        });
        return q;
    };

    Eigen::VectorXd p0;
    if (init.primary.size() == nd) {
        p0 = init.primary;
    } else {
        p0 = feasible_dual_init(prob).coeffs;
    }
    Eigen::VectorXd q0 = init.auxiliary.size() == nd ? init.auxiliary : p0;
    Eigen::VectorXd m0 = init.multiplier.size() == nd ? init.multiplier
                                                      : Eigen::VectorXd::Zero(nd);

    AdmmState st = admm_run(admm, config, std::move(p0), std::move(q0), std::move(m0));
    SolveResult result;
    result.solution = make_function(SpaceKind::P1DiscVec, prob.mesh, st.primary);
    result.state = std::move(st);
    return result;
}

}  // namespace afem
