#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>

namespace afem {

// Seven-point order-5 rule on the reference triangle, stored as barycentric
// coordinates and weights summing to one.  All weights are positive, so
// integrating a pointwise-dominated integrand keeps the ordering.
struct TriangleRule {
    std::array<Eigen::Vector3d, 7> bary;
    std::array<double, 7> weight;
};

inline const TriangleRule& triangle_rule_order5() {
    static const TriangleRule rule = [] {
        TriangleRule r;
        const double s = std::sqrt(15.0);
        const double a1 = (6.0 - s) / 21.0, a2 = (6.0 + s) / 21.0;
        const double w1 = (155.0 - s) / 1200.0, w2 = (155.0 + s) / 1200.0;
        r.bary[0] = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
        r.weight[0] = 9.0 / 40.0;
        r.bary[1] = {a1, a1, 1.0 - 2.0 * a1};
        r.bary[2] = {a1, 1.0 - 2.0 * a1, a1};
        r.bary[3] = {1.0 - 2.0 * a1, a1, a1};
        r.weight[1] = r.weight[2] = r.weight[3] = w1;
        r.bary[4] = {a2, a2, 1.0 - 2.0 * a2};
        r.bary[5] = {a2, 1.0 - 2.0 * a2, a2};
        r.bary[6] = {1.0 - 2.0 * a2, a2, a2};
        r.weight[4] = r.weight[5] = r.weight[6] = w2;
        return r;
    }();
    return rule;
}

// Order-5 rule applied to one triangle with corners a, b, c.
template <typename Fn>
double integrate_triangle(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                          const Eigen::Vector2d& c, const Fn& f) {
    const double area =
        0.5 * std::abs((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
    const TriangleRule& rule = triangle_rule_order5();
    double sum = 0.0;
    for (int q = 0; q < 7; ++q) {
        const Eigen::Vector2d x =
            rule.bary[q](0) * a + rule.bary[q](1) * b + rule.bary[q](2) * c;
        sum += rule.weight[q] * f(x);
    }
    return area * sum;
}

// Uniform four-way subdivision (edge midpoints) to the given depth, order-5
// rule on every cell.  Depth 1 is the 4x subdivision, depth 2 the 16x one.
template <typename Fn>
double integrate_subdivided(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                            const Eigen::Vector2d& c, const Fn& f, int depth) {
    if (depth <= 0) return integrate_triangle(a, b, c, f);
    const Eigen::Vector2d ab = 0.5 * (a + b), bc = 0.5 * (b + c), ca = 0.5 * (c + a);
    return integrate_subdivided(a, ab, ca, f, depth - 1) +
           integrate_subdivided(ab, b, bc, f, depth - 1) +
           integrate_subdivided(ca, bc, c, f, depth - 1) +
           integrate_subdivided(ab, bc, ca, f, depth - 1);
}

// Four-way subdivision recursing only where `inside` changes sign across the
// cell (data interface), up to max_depth; smooth cells use the plain rule.
template <typename Fn, typename InsideFn>
double integrate_interface(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                           const Eigen::Vector2d& c, const Fn& f, const InsideFn& inside,
                           int max_depth) {
    if (max_depth > 0) {
        const Eigen::Vector2d probes[7] = {a,
                                           b,
                                           c,
                                           0.5 * (a + b),
                                           0.5 * (b + c),
                                           0.5 * (c + a),
                                           (a + b + c) / 3.0};
        const bool first = inside(probes[0]);
        bool mixed = false;
        for (int i = 1; i < 7 && !mixed; ++i) mixed = inside(probes[i]) != first;
        if (mixed) {
            const Eigen::Vector2d ab = 0.5 * (a + b), bc = 0.5 * (b + c), ca = 0.5 * (c + a);
            return integrate_interface(a, ab, ca, f, inside, max_depth - 1) +
                   integrate_interface(ab, b, bc, f, inside, max_depth - 1) +
                   integrate_interface(ca, bc, c, f, inside, max_depth - 1) +
                   integrate_interface(ab, bc, ca, f, inside, max_depth - 1);
        }
    }
    return integrate_triangle(a, b, c, f);
}

}  // namespace afem
