#include "afem/rof.hpp"

#include "afem/parallel.hpp"
#include "afem/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>

namespace afem {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument("rof: " + msg); }

constexpr double kFeasTol = 1e-10;

// int_T v^2 for affine v with vertex values a, b, c
double affine_square_integral(double area, double a, double b, double c) {
    const double s = a + b + c;
    return area / 12.0 * (s * s + a * a + b * b + c * c);
}

bool is_dual_kind(SpaceKind kind) {
    return kind == SpaceKind::P1Vec || kind == SpaceKind::P1DiscVec;
}

// vertex value of a dual field at local vertex k of element e, either kind
Eigen::Vector2d dual_vertex(const FeFunction& p, const Triangulation& mesh, int e, int k) {
    if (p.kind == SpaceKind::P1Vec) return p.coeffs.segment<2>(2 * mesh.elements(e, k));
    return p.coeffs.segment<2>(6 * e + 2 * k);
}

// worst vertexwise excess over the unit ball: (node description, excess)
std::pair<std::string, double> ball_violation(const FeFunction& p, const Triangulation& mesh) {
    double worst = 0.0;
    int we = 0, wk = 0;
    for (int e = 0; e < mesh.element_count(); ++e)
        for (int k = 0; k < 3; ++k) {
            const double excess = dual_vertex(p, mesh, e, k).norm() - 1.0;
            if (excess > worst) {
                worst = excess;
                we = e;
                wk = k;
            }
        }
    return {"node " + std::to_string(mesh.elements(we, wk)), worst};
}

void check_dual_field(const FeFunction& p, const RofProblem& prob) {
    if (!is_dual_kind(p.kind) || p.mesh.get() != prob.mesh.get())
        fail("vector field on the problem mesh expected");
}

double distance_to_interface(const RofBenchmark& bench, const Eigen::Vector2d& x) {
    if (bench.kind == RofExample::Circle) return std::abs(x.norm() - 0.5);
    return std::abs(std::max(std::abs(x(0)), std::abs(x(1))) - 0.5);
}

// zero normal trace for continuous fields: pin nodal components along the
// (axis-aligned) Neumann boundary, both at straight sides and corners
std::vector<char> neumann_pin_mask(const Triangulation& mesh) {
    std::vector<char> fixed(2 * mesh.node_count(), 0);
    const auto normals = neumann_node_normals(mesh);
    for (int z = 0; z < mesh.node_count(); ++z)
        for (const Eigen::Vector2d& n : normals[z]) {
            if (std::abs(n(0)) > 1e-12 && std::abs(n(1)) > 1e-12)
                fail("continuous dual space needs an axis-aligned Neumann boundary");
            fixed[2 * z + (std::abs(n(0)) > 0.5 ? 0 : 1)] = 1;
        }
    return fixed;
}

}  // namespace

RofProblem rof_problem(MeshPtr mesh, double alpha, FeFunction g_h, DualSpace dual_space) {
    if (!mesh) fail("null mesh");
    if (!(alpha > 0.0)) fail("alpha must be positive");
    if (g_h.kind != SpaceKind::P0 || g_h.mesh.get() != mesh.get())
        fail("data must be elementwise constant on the mesh");
    if (mesh->boundary.empty()) fail("mesh without boundary sides");
    const BoundaryLabel label = mesh->boundary.front().label;
    for (const BoundarySide& s : mesh->boundary)
        if (s.label != label) fail("boundary labels must be uniform");
    RofProblem prob;
    prob.alpha = alpha;
    prob.g_h = std::move(g_h);
    prob.bc = label == BoundaryLabel::Neumann ? RofBc::NeumannAll : RofBc::DirichletAll;
    prob.dual_space = dual_space;
    prob.mesh = std::move(mesh);
    return prob;
}

bool RofBenchmark::inside(const Eigen::Vector2d& x) const {
    if (kind == RofExample::Circle) return x.norm() <= 0.5;
    return std::max(std::abs(x(0)), std::abs(x(1))) <= 0.5;
}

double RofBenchmark::g(const Eigen::Vector2d& x) const { return inside(x) ? 1.0 : 0.0; }

double RofBenchmark::exact_u(const Eigen::Vector2d& x) const {
    if (kind != RofExample::Circle) fail("no exact solution for the square data");
    return inside(x) ? 0.6 : 0.0;
}

RofBenchmark rof_benchmark(RofExample kind) {
    RofBenchmark b;
    b.kind = kind;
    b.alpha = kind == RofExample::Circle ? 10.0 : 100.0;
    return b;
}

RofData rof_project_data(MeshPtr mesh, const RofBenchmark& bench, int max_depth) {
    if (!mesh) fail("null mesh");
    if (max_depth < 0) fail("negative subdivision depth");
    const auto g = [&](const Eigen::Vector2d& x) { return bench.g(x); };
    const auto ind = [&](const Eigen::Vector2d& x) { return bench.inside(x); };
    RofData data;
    data.g_h = l2_project_p0_interface(mesh, g, ind, max_depth);
    const int ne = mesh->element_count();
    Eigen::VectorXd partial(ne);
    parallel_for(ne, [&](int e) {
        Eigen::Matrix<double, 3, 2> c;
        for (int k = 0; k < 3; ++k) c.row(k) = mesh->nodes.row(mesh->elements(e, k));
        const double ge = data.g_h.coeffs(e);
        partial(e) = integrate_interface(
            c.row(0).transpose(), c.row(1).transpose(), c.row(2).transpose(),
            [&](const Eigen::Vector2d& x) {
                const double d = bench.g(x) - ge;
                return d * d;
            },
            ind, max_depth);
    });
    data.data_error = std::sqrt(partial.sum());
    return data;
}

double energy_primal(const FeFunction& u, const RofProblem& prob) {
    if (u.kind != SpaceKind::P1 || u.mesh.get() != prob.mesh.get())
        fail("primal energy: P1 on the problem mesh expected");
    const Triangulation& mesh = *prob.mesh;
    const int ne = mesh.element_count();
    Eigen::VectorXd partial(ne);
    parallel_for(ne, [&](int e) {
        const auto dN = p1_gradients(mesh, e);
        Eigen::Vector2d g = Eigen::Vector2d::Zero();
        double v[3];
        for (int k = 0; k < 3; ++k) {
            const double uz = u.coeffs(mesh.elements(e, k));
            g += uz * dN.row(k).transpose();
            v[k] = uz - prob.g_h.coeffs(e);
        }
        const double area = element_area(mesh, e);
        partial(e) = area * g.norm() +
                     0.5 * prob.alpha * affine_square_integral(area, v[0], v[1], v[2]);
    });
    return partial.sum();
}

std::optional<double> energy_dual(const FeFunction& p, const RofProblem& prob) {
    check_dual_field(p, prob);
    const Triangulation& mesh = *prob.mesh;
    if (ball_violation(p, mesh).second > kFeasTol) return std::nullopt;
    const FeFunction dv = divergence(p);
    double value = 0.0;
    for (int e = 0; e < mesh.element_count(); ++e) {
        const double area = element_area(mesh, e);
        const double ge = prob.g_h.coeffs(e);
        const double r = dv.coeffs(e) + prob.alpha * ge;
        value += area * (0.5 * prob.alpha * ge * ge - r * r / (2.0 * prob.alpha));
    }
    return value;
}

EstimatorReport estimator_rof(const FeFunction& v, const FeFunction& q,
                              const RofProblem& prob) {
    if (v.kind != SpaceKind::P1 || v.mesh.get() != prob.mesh.get())
        fail("estimator: P1 primal candidate on the problem mesh expected");
    check_dual_field(q, prob);
    const Triangulation& mesh = *prob.mesh;
    const auto [where, excess] = ball_violation(q, mesh);
    if (excess > kFeasTol)
        throw std::runtime_error("rof: dual candidate outside the unit ball at " + where +
                                 " (|q| - 1 = " + std::to_string(excess) + ")");
    const FeFunction dq = divergence(q);
    const int ne = mesh.element_count();
    EstimatorReport rep;
    rep.indicators2.resize(ne);
    parallel_for(ne, [&](int e) {
        const auto dN = p1_gradients(mesh, e);
        Eigen::Vector2d g = Eigen::Vector2d::Zero();
        for (int k = 0; k < 3; ++k) g += v.coeffs(mesh.elements(e, k)) * dN.row(k).transpose();
        Eigen::Vector2d qbar = Eigen::Vector2d::Zero();
        for (int k = 0; k < 3; ++k) qbar += dual_vertex(q, mesh, e, k) / 3.0;
        const double area = element_area(mesh, e);
        double c[3];
        for (int k = 0; k < 3; ++k)
            c[k] = dq.coeffs(e) -
                   prob.alpha * (v.coeffs(mesh.elements(e, k)) - prob.g_h.coeffs(e));
        rep.indicators2(e) = area * (g.norm() - g.dot(qbar)) +
                             affine_square_integral(area, c[0], c[1], c[2]) /
                                 (2.0 * prob.alpha);
    });
    rep.total2 = rep.indicators2.sum();
    return rep;
}

FeFunction dual_reconstruction(const FeFunction& p, const RofProblem& prob) {
    check_dual_field(p, prob);
    const FeFunction dv = divergence(p);
    return make_function(SpaceKind::P0, prob.mesh,
                         dv.coeffs / prob.alpha + prob.g_h.coeffs);
}

double interface_jump(const FeFunction& v, const RofBenchmark& bench, double width) {
    if (v.kind != SpaceKind::P0) fail("jump diagnostic: elementwise constants expected");
    if (!(width > 0.0)) fail("jump diagnostic: positive band width expected");
    const Triangulation& mesh = *v.mesh;
    double sum = 0.0;
    for (int s = 0; s < mesh.side_count(); ++s) {
        if (mesh.side_elements(s, 1) < 0) continue;
        const Eigen::Vector2d a = mesh.nodes.row(mesh.sides(s, 0)).transpose();
        const Eigen::Vector2d b = mesh.nodes.row(mesh.sides(s, 1)).transpose();
        if (distance_to_interface(bench, 0.5 * (a + b)) > width) continue;
        sum += (a - b).norm() *
               std::abs(v.coeffs(mesh.side_elements(s, 0)) - v.coeffs(mesh.side_elements(s, 1)));
    }
    return sum;
}

double l2_error_exact(const FeFunction& u_h, const RofBenchmark& bench, int max_depth) {
    if (u_h.kind != SpaceKind::P1 && u_h.kind != SpaceKind::P0)
        fail("error: nodal or elementwise-constant field expected");
    if (!bench.has_exact_solution()) fail("error: benchmark has no exact solution");
    const Triangulation& mesh = *u_h.mesh;
    const int ne = mesh.element_count();
    const auto ind = [&](const Eigen::Vector2d& x) { return bench.inside(x); };
    Eigen::VectorXd partial(ne);
    parallel_for(ne, [&](int e) {
        Eigen::Matrix<double, 3, 2> c;
        for (int k = 0; k < 3; ++k) c.row(k) = mesh.nodes.row(mesh.elements(e, k));
        partial(e) = integrate_interface(
            c.row(0).transpose(), c.row(1).transpose(), c.row(2).transpose(),
            [&](const Eigen::Vector2d& x) {
                const double approx =
                    u_h.kind == SpaceKind::P1 ? eval_p1(u_h, e, x) : u_h.coeffs(e);
                const double d = bench.exact_u(x) - approx;
                return d * d;
            },
            ind, max_depth);
    });
    return std::sqrt(0.5 * bench.alpha * partial.sum());
}

SolveResult solve_primal(const RofProblem& prob, const AdmmConfig& config,
                         const AdmmInit& init, double gamma) {
    if (gamma < 0.0) fail("negative coupling weight exponent");
    const Triangulation& mesh = *prob.mesh;
    const int ne = mesh.element_count();
    const int nn = mesh.node_count();

    const MeshSizes sizes = mesh_sizes(mesh);
    Eigen::VectorXd w = Eigen::VectorXd::Ones(ne);
    if (gamma != 0.0)
        for (int e = 0; e < ne; ++e) w(e) = std::pow(sizes.h(e), gamma);
    Eigen::VectorXd metric(2 * ne);
    for (int e = 0; e < ne; ++e)
        metric.segment<2>(2 * e).setConstant(element_area(mesh, e) * w(e));

    const SpMat M = p1_mass(mesh);
    const SpMat A = weighted_stiffness(mesh, w);
    const Eigen::VectorXd mg = p0_load_vector(mesh, prob.g_h.coeffs);
    const SpMat B = p1_gradient_operator(mesh);
    const std::vector<char> fixed = prob.bc == RofBc::DirichletAll
                                        ? dirichlet_node_mask(mesh)
                                        : std::vector<char>(nn, 0);

    std::unique_ptr<SpdWithFixedDofs> u_solver;
    const auto refactor = [&](double tau) {
        u_solver = std::make_unique<SpdWithFixedDofs>(SpMat(prob.alpha * M + tau * A), fixed);
    };
    refactor(config.tau0);

    AdmmProblem admm;
    admm.metric = metric;
    admm.tau_changed = refactor;
    admm.primary_update = [&](const Eigen::VectorXd& r, const Eigen::VectorXd& lambda,
                              double tau) {
        const Eigen::VectorXd rhs =
            prob.alpha * mg - B.transpose() * metric.cwiseProduct(lambda - tau * r);
        return u_solver->solve(rhs, Eigen::VectorXd());
    };
    admm.couple = [&](const Eigen::VectorXd& u) { return Eigen::VectorXd(B * u); };
    admm.auxiliary_update = [&](const Eigen::VectorXd& coupled, const Eigen::VectorXd& lambda,
                                double tau) {
        Eigen::VectorXd r(2 * ne);
        parallel_for(ne, [&](int e) {
            const Eigen::Vector2d z =
                coupled.segment<2>(2 * e) + lambda.segment<2>(2 * e) / tau;
            r.segment<2>(2 * e) = shrink(z, 1.0 / (tau * w(e)));
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

namespace {

SolveResult solve_dual_normal_continuous(const RofProblem& prob, const AdmmConfig& config,
                                         const AdmmInit& init) {
    const Triangulation& mesh = *prob.mesh;
    const int ne = mesh.element_count();
    const int nd = 6 * ne;

    const Eigen::VectorXd lumped = lumped_weights(mesh, SpaceKind::P1DiscVec);
    const SpMat C = continuity_constraints(mesh);
    const SpMat D = divergence_operator(mesh, SpaceKind::P1DiscVec);
    const Eigen::VectorXd d = Eigen::VectorXd::Zero(C.rows());

    // per-element divergence rows as dense 6-vectors
    std::vector<Eigen::VectorXd> div_row(ne, Eigen::VectorXd::Zero(6));
    for (int k = 0; k < D.outerSize(); ++k)
        for (SpMat::InnerIterator it(D, k); it; ++it)
            div_row[it.row()](it.col() - 6 * it.row()) = it.value();

    std::unique_ptr<BlockDiagConstrainedQuadratic> p_solver;
    const auto refactor = [&](double tau) {
        std::vector<Eigen::MatrixXd> blocks(ne);
        for (int e = 0; e < ne; ++e) {
            const double area = element_area(mesh, e);
            blocks[e] = (area / prob.alpha) * div_row[e] * div_row[e].transpose();
            blocks[e].diagonal().array() += tau * area / 3.0;
        }
        p_solver = std::make_unique<BlockDiagConstrainedQuadratic>(blocks, C);
    };
    refactor(config.tau0);

    AdmmProblem admm;
    admm.metric = lumped;
    admm.tau_changed = refactor;
    admm.primary_update = [&](const Eigen::VectorXd& q, const Eigen::VectorXd& mu, double tau) {
        Eigen::VectorXd b = -lumped.cwiseProduct(mu - tau * q);
        for (int e = 0; e < ne; ++e)
            b.segment<6>(6 * e) -=
                element_area(mesh, e) * prob.g_h.coeffs(e) * div_row[e];
        return p_solver->solve(b, d).x;
    };
    admm.couple = [](const Eigen::VectorXd& p) { return p; };
    admm.auxiliary_update = [&](const Eigen::VectorXd& p, const Eigen::VectorXd& mu,
                                double tau) {
        Eigen::VectorXd q(nd);
        parallel_for(3 * ne, [&](int zi) {
            const int at = 2 * zi;
            q.segment<2>(at) = project_ball(p.segment<2>(at) + mu.segment<2>(at) / tau);
        });
        return q;
    };

    Eigen::VectorXd p0 = init.primary.size() == nd ? init.primary : Eigen::VectorXd::Zero(nd);
    Eigen::VectorXd q0 = init.auxiliary.size() == nd ? init.auxiliary : p0;
    Eigen::VectorXd m0 =
        init.multiplier.size() == nd ? init.multiplier : Eigen::VectorXd::Zero(nd);

    AdmmState st = admm_run(admm, config, std::move(p0), std::move(q0), std::move(m0));
    // scaling keeps the normal-trace gluing, unlike a nodewise projection
    double vmax = 0.0;
    for (int zi = 0; zi < 3 * ne; ++zi) vmax = std::max(vmax, st.primary.segment<2>(2 * zi).norm());
    if (vmax > 1.0) st.primary /= vmax;
    SolveResult result;
    result.solution = make_function(SpaceKind::P1DiscVec, prob.mesh, st.primary);
    result.state = std::move(st);
    return result;
}

SolveResult solve_dual_continuous(const RofProblem& prob, const AdmmConfig& config,
                                  const AdmmInit& init) {
    const Triangulation& mesh = *prob.mesh;
    const int ne = mesh.element_count();
    const int nn = mesh.node_count();
    const int nd = 6 * ne;

    const Eigen::VectorXd lumped = lumped_weights(mesh, SpaceKind::P1DiscVec);
    const Eigen::VectorXd beta = lumped_weights(mesh, SpaceKind::P1Vec);
    const SpMat D = divergence_operator(mesh, SpaceKind::P1Vec);
    const SpMat E = p1vec_to_disc(mesh);
    Eigen::VectorXd areas(ne);
    for (int e = 0; e < ne; ++e) areas(e) = element_area(mesh, e);
    const SpMat fidelity =
        SpMat(D.transpose() * areas.asDiagonal() * D) / prob.alpha;
    const std::vector<char> fixed = prob.bc == RofBc::NeumannAll
                                        ? neumann_pin_mask(mesh)
                                        : std::vector<char>(2 * nn, 0);
    const Eigen::VectorXd b_data = -D.transpose() * areas.cwiseProduct(prob.g_h.coeffs);

    std::unique_ptr<SpdWithFixedDofs> p_solver;
    const auto refactor = [&](double tau) {
        SpMat H = fidelity;
        SpMat reg(2 * nn, 2 * nn);
        reg.setIdentity();
        reg.diagonal() = tau * beta;
        H += reg;
        p_solver = std::make_unique<SpdWithFixedDofs>(H, fixed);
    };
    refactor(config.tau0);

    AdmmProblem admm;
    admm.metric = lumped;
    admm.tau_changed = refactor;
    admm.primary_update = [&](const Eigen::VectorXd& q, const Eigen::VectorXd& mu, double tau) {
        const Eigen::VectorXd b =
            b_data - E.transpose() * lumped.cwiseProduct(mu - tau * q);
        return p_solver->solve(b, Eigen::VectorXd());
    };
    admm.couple = [&](const Eigen::VectorXd& p) { return Eigen::VectorXd(E * p); };
    admm.auxiliary_update = [&](const Eigen::VectorXd& coupled, const Eigen::VectorXd& mu,
                                double tau) {
        Eigen::VectorXd q(nd);
        parallel_for(3 * ne, [&](int zi) {
            const int at = 2 * zi;
            q.segment<2>(at) = project_ball(coupled.segment<2>(at) + mu.segment<2>(at) / tau);
        });
        return q;
    };

    Eigen::VectorXd p0 =
        init.primary.size() == 2 * nn ? init.primary : Eigen::VectorXd::Zero(2 * nn);
    Eigen::VectorXd q0 = init.auxiliary.size() == nd ? init.auxiliary : Eigen::VectorXd(E * p0);
    Eigen::VectorXd m0 =
        init.multiplier.size() == nd ? init.multiplier : Eigen::VectorXd::Zero(nd);

    AdmmState st = admm_run(admm, config, std::move(p0), std::move(q0), std::move(m0));
    for (int z = 0; z < nn; ++z)
        st.primary.segment<2>(2 * z) = project_ball(st.primary.segment<2>(2 * z));
    SolveResult result;
    result.solution = make_function(SpaceKind::P1Vec, prob.mesh, st.primary);
    result.state = std::move(st);
    return result;
}

}  // namespace

SolveResult solve_dual(const RofProblem& prob, const AdmmConfig& config, const AdmmInit& init) {
    SolveResult result = prob.dual_space == DualSpace::Continuous
                             ? solve_dual_continuous(prob, config, init)
                             : solve_dual_normal_continuous(prob, config, init);
    if (!energy_dual(result.solution, prob).has_value())
        throw std::runtime_error("rof: projected dual iterate failed the feasibility check");
    return result;
}

PdState primal_dual_step(const PdState& state, double tau, const RofProblem& prob) {
    if (!(tau > 0.0)) fail("step size must be positive");
    const Triangulation& mesh = *prob.mesh;
    const int ne = mesh.element_count();
    const int nn = mesh.node_count();
    if (state.u_prev.size() != nn || state.u.size() != nn || state.p.size() != 2 * ne)
        fail("state sizes disagree with the mesh");

    const SpMat B = p1_gradient_operator(mesh);
    const Eigen::VectorXd measures = p0vec_measures(mesh);
    const Eigen::VectorXd beta = p1_lumped_weights(mesh);

    const Eigen::VectorXd grad_ex = B * (2.0 * state.u - state.u_prev);
    PdState next;
    next.p.resize(2 * ne);
    for (int e = 0; e < ne; ++e)
        next.p.segment<2>(2 * e) =
            project_ball(state.p.segment<2>(2 * e) + tau * grad_ex.segment<2>(2 * e));

    SpMat H = SpMat(prob.alpha * p1_mass(mesh));
    SpMat reg(nn, nn);
    reg.setIdentity();
    reg.diagonal() = beta / tau;
    H += reg;
    const std::vector<char> fixed = prob.bc == RofBc::DirichletAll
                                        ? dirichlet_node_mask(mesh)
                                        : std::vector<char>(nn, 0);
    const SpdWithFixedDofs solver(H, fixed);
    const Eigen::VectorXd rhs = prob.alpha * p0_load_vector(mesh, prob.g_h.coeffs) -
                                B.transpose() * measures.cwiseProduct(next.p) +
                                beta.cwiseProduct(state.u) / tau;
    next.u = solver.solve(rhs, Eigen::VectorXd());
    next.u_prev = state.u;
    return next;
}

SolveResult run_primal_dual(const RofProblem& prob, double tau, double tol, int max_iters) {
    if (!(tau > 0.0) || !(tol > 0.0) || max_iters < 1)
        fail("step size, tolerance and iteration budget must be positive");
    const Triangulation& mesh = *prob.mesh;
    const Eigen::VectorXd measures = p0vec_measures(mesh);
    const Eigen::VectorXd beta = p1_lumped_weights(mesh);

    PdState state;
    state.u_prev = Eigen::VectorXd::Zero(mesh.node_count());
    state.u = state.u_prev;
    state.p = Eigen::VectorXd::Zero(2 * mesh.element_count());

    AdmmState st;
    st.tau = tau;
    for (int it = 1; it <= max_iters; ++it) {
        PdState next = primal_dual_step(state, tau, prob);
        const double du =
            std::sqrt((next.u - state.u).dot(beta.cwiseProduct(next.u - state.u))) / tau;
        const double dp =
            std::sqrt((next.p - state.p).dot(measures.cwiseProduct(next.p - state.p))) / tau;
        state = std::move(next);
        st.iters = it;
        st.history.emplace_back(du, dp);
        if (std::max(du, dp) <= tol) {
            st.converged = true;
            break;
        }
    }
    st.primary = state.u;
    st.auxiliary = state.p;
    SolveResult result;
    result.solution = make_function(SpaceKind::P1, prob.mesh, state.u);
    result.state = std::move(st);
    return result;
}

}  // namespace afem
