#include "afem/solver.hpp"

#include <Eigen/SparseQR>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace afem {

namespace {

[[noreturn]] void config_error(const std::string& msg) {
    throw std::invalid_argument("solver: " + msg);
}

[[noreturn]] void numeric_error(const std::string& msg) {
    throw std::runtime_error("solver: " + msg);
}

SpMat select_rows(const SpMat& C, const std::vector<int>& rows) {
    std::vector<Eigen::Triplet<double>> trip;
    std::vector<int> where(C.rows(), -1);
    for (int i = 0; i < static_cast<int>(rows.size()); ++i) where[rows[i]] = i;
    for (int k = 0; k < C.outerSize(); ++k)
        for (SpMat::InnerIterator it(C, k); it; ++it)
            if (where[it.row()] >= 0) trip.emplace_back(where[it.row()], it.col(), it.value());
    SpMat R(static_cast<int>(rows.size()), C.cols());
    R.setFromTriplets(trip.begin(), trip.end());
    R.makeCompressed();
    return R;
}

bool weak_diagonal(const Eigen::VectorXd& d) {
    if (d.size() == 0) return false;
    const double dmax = d.cwiseAbs().maxCoeff();
    return dmax <= 0.0 || d.cwiseAbs().minCoeff() <= 1e-12 * dmax;
}

// Symmetric Jacobi scaling for a Schur complement: on strongly graded meshes
// the raw diagonal spans many orders of magnitude and would trip the pivot
// check even though the equilibrated system is perfectly well conditioned.
Eigen::VectorXd equilibration(const SpMat& S) {
    const Eigen::VectorXd d = S.diagonal();
    Eigen::VectorXd sc(d.size());
    for (int i = 0; i < d.size(); ++i) sc(i) = d(i) > 0.0 ? 1.0 / std::sqrt(d(i)) : 1.0;
    return sc;
}

}  // namespace

Eigen::Vector2d shrink(const Eigen::Vector2d& z, double kappa) {
    if (kappa < 0.0) config_error("shrink: negative threshold");
    const double n = z.norm();
    if (n <= kappa) return Eigen::Vector2d::Zero();
    return (1.0 - kappa / n) * z;
}

Eigen::Vector2d project_ball(const Eigen::Vector2d& z) {
    const double n = z.norm();
    return n <= 1.0 ? z : Eigen::Vector2d(z / n);
}

Eigen::Vector2d prox_power(const Eigen::Vector2d& z, double sigma, double weight, double tau) {
    if (sigma <= 1.0) config_error("prox_power: sigma must exceed 1");
    if (weight <= 0.0 || tau <= 0.0) config_error("prox_power: weight and tau must be positive");
    const double zn = z.norm();
    if (zn == 0.0) return Eigen::Vector2d::Zero();

    const double a = weight * tau;
    auto g = [&](double rho) { return std::pow(rho, sigma - 1.0) + a * rho - a * zn; };

    double lo = 0.0, hi = zn;
    double rho = a * zn / (1.0 + a);  // exact for sigma = 2
    const double gtol = 1e-14 * (std::pow(zn, sigma - 1.0) + a * zn);
    for (int it = 0; it < 100; ++it) {
        const double val = g(rho);
        if (std::abs(val) <= gtol || hi - lo <= 1e-14 * zn) return (rho / zn) * z;
        (val > 0.0 ? hi : lo) = rho;
        const double slope = (sigma - 1.0) * std::pow(rho, sigma - 2.0) + a;
        double next = rho - val / slope;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        rho = next;
    }
    numeric_error("prox_power: radius iteration stalled");
}

std::vector<int> independent_rows(const SpMat& C) {
    if (C.rows() == 0) return {};
    SpMat Ct = SpMat(C.transpose());
    Ct.makeCompressed();
    Eigen::SparseQR<SpMat, Eigen::COLAMDOrdering<int>> qr;
    qr.compute(Ct);
    if (qr.info() != Eigen::Success) numeric_error("constraint rank analysis failed");
    const int rank = static_cast<int>(qr.rank());
    const auto& idx = qr.colsPermutation().indices();
    std::vector<int> rows(rank);
    for (int i = 0; i < rank; ++i) rows[i] = idx(i);
    std::sort(rows.begin(), rows.end());
    return rows;
}

EqualityConstrainedQuadratic::EqualityConstrainedQuadratic(const SpMat& H, const SpMat& C) {
    if (H.rows() != H.cols()) config_error("quadratic term is not square");
    if (C.rows() > 0 && C.cols() != H.cols()) config_error("constraint column count");
    n_ = static_cast<int>(H.rows());

    auto try_factor = [&](const SpMat& Cr) {
        const int m = static_cast<int>(Cr.rows());
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(H.nonZeros() + 2 * Cr.nonZeros());
        for (int k = 0; k < H.outerSize(); ++k)
            for (SpMat::InnerIterator it(H, k); it; ++it)
                trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                                  it.value());
        for (int k = 0; k < Cr.outerSize(); ++k)
            for (SpMat::InnerIterator it(Cr, k); it; ++it) {
                trip.emplace_back(n_ + static_cast<int>(it.row()), static_cast<int>(it.col()),
                                  it.value());
                trip.emplace_back(static_cast<int>(it.col()), n_ + static_cast<int>(it.row()),
                                  it.value());
            }
        K_.resize(n_ + m, n_ + m);
        K_.setFromTriplets(trip.begin(), trip.end());
        K_.makeCompressed();
        lu_.compute(K_);
        if (lu_.info() != Eigen::Success) return false;
        // a generic probe catches near-singular factorizations that LU lets through
        Eigen::VectorXd rhs(n_ + m);
        for (int i = 0; i < n_ + m; ++i) rhs(i) = std::sin(i + 1.0);
        Eigen::VectorXd s = lu_.solve(rhs);
        if (!s.allFinite()) return false;
        s += lu_.solve(rhs - K_ * s);
        return s.allFinite() && (rhs - K_ * s).norm() <= 1e-8 * rhs.norm();
    };

    kept_.resize(C.rows());
    for (int i = 0; i < C.rows(); ++i) kept_[i] = i;
    if (try_factor(C)) return;

    kept_ = independent_rows(C);
    dropped_ = static_cast<int>(C.rows() - kept_.size());
    if (dropped_ > 0) {
        std::fprintf(stderr, "solver: dropped %d redundant constraint rows\n", dropped_);
        if (try_factor(select_rows(C, kept_))) return;
    }
    numeric_error("singular saddle-point system");
}

KktSolution EqualityConstrainedQuadratic::solve(const Eigen::VectorXd& b,
                                                const Eigen::VectorXd& d) const {
    const int m = static_cast<int>(K_.rows()) - n_;
    if (b.size() != n_) config_error("linear term size");
    Eigen::VectorXd rhs(n_ + m);
    rhs.head(n_) = b;
    for (int i = 0; i < m; ++i) rhs(n_ + i) = d.size() == 0 ? 0.0 : d(kept_[i]);

    Eigen::VectorXd s = lu_.solve(rhs);
    const double scale = std::max(1.0, rhs.norm());
    for (int refine = 0; refine < 4; ++refine) {
        const Eigen::VectorXd r = rhs - K_ * s;
        if (r.norm() <= 1e-10 * scale) {
            KktSolution sol;
            sol.x = s.head(n_);
            sol.multipliers = s.tail(m);
            return sol;
        }
        s += lu_.solve(r);
    }
    numeric_error("saddle-point solve did not reach the residual tolerance");
}

DiagonalConstrainedQuadratic::DiagonalConstrainedQuadratic(Eigen::VectorXd h, const SpMat& C) {
    if (h.size() == 0) config_error("empty diagonal");
    if (h.size() != C.cols()) config_error("diagonal size does not match constraints");
    if (h.minCoeff() <= 0.0) config_error("diagonal must be positive");
    inv_h_ = h.cwiseInverse();
    C_ = C;
    C_.makeCompressed();
    if (C_.rows() == 0) return;  // unconstrained: plain diagonal solve

    for (int attempt = 0; attempt < 2; ++attempt) {
        S_ = C_ * inv_h_.asDiagonal() * SpMat(C_.transpose());
        S_.makeCompressed();
        scale_inv_ = equilibration(S_);
        schur_.compute(SpMat(scale_inv_.asDiagonal() * S_ * scale_inv_.asDiagonal()));
        if (schur_.info() == Eigen::Success && !weak_diagonal(schur_.vectorD())) {
            if (kept_.empty())
                for (int i = 0; i < C_.rows(); ++i) kept_.push_back(i);
            return;
        }
        if (attempt == 1) break;
        kept_ = independent_rows(C);
        const int dropped = static_cast<int>(C.rows() - kept_.size());
        if (dropped == 0) break;
        std::fprintf(stderr, "solver: dropped %d redundant constraint rows\n", dropped);
        C_ = select_rows(C, kept_);
    }
    numeric_error("constraint system is singular");
}

KktSolution DiagonalConstrainedQuadratic::solve(const Eigen::VectorXd& b,
                                                const Eigen::VectorXd& d, double scale) const {
    if (scale <= 0.0) config_error("scale must be positive");
    if (C_.rows() == 0) {
        KktSolution sol;
        sol.x = inv_h_.cwiseProduct(b) / scale;
        sol.multipliers.resize(0);
        return sol;
    }
    Eigen::VectorXd dk(C_.rows());
    for (int i = 0; i < C_.rows(); ++i) dk(i) = d.size() == 0 ? 0.0 : d(kept_[i]);
    const Eigen::VectorXd y = inv_h_.cwiseProduct(b);
    const Eigen::VectorXd rhs = C_ * y - scale * dk;
    auto schur_solve = [&](const Eigen::VectorXd& r) {
        return Eigen::VectorXd(scale_inv_.cwiseProduct(schur_.solve(scale_inv_.cwiseProduct(r))));
    };
    Eigen::VectorXd nu = schur_solve(rhs);
    nu += schur_solve(rhs - S_ * nu);  // constraint residuals stay near machine level
    KktSolution sol;
    sol.x = inv_h_.cwiseProduct(b - C_.transpose() * nu) / scale;
    sol.multipliers = nu;
    return sol;
}

BlockDiagConstrainedQuadratic::BlockDiagConstrainedQuadratic(
    const std::vector<Eigen::MatrixXd>& blocks, const SpMat& C) {
    if (blocks.empty()) config_error("no blocks");
    block_ = static_cast<int>(blocks.front().rows());
    if (static_cast<int>(blocks.size()) * block_ != C.cols())
        config_error("block sizes do not match constraints");

    inv_blocks_.reserve(blocks.size());
    std::vector<Eigen::Triplet<double>> trip;
    for (int i = 0; i < static_cast<int>(blocks.size()); ++i) {
        const Eigen::MatrixXd& Bk = blocks[i];
        if (Bk.rows() != block_ || Bk.cols() != block_) config_error("ragged blocks");
        inv_blocks_.push_back(Bk.inverse());
        const Eigen::MatrixXd& inv = inv_blocks_.back();
        if (!inv.allFinite()) numeric_error("singular diagonal block");
        for (int r = 0; r < block_; ++r)
            for (int c = 0; c < block_; ++c)
                trip.emplace_back(block_ * i + r, block_ * i + c, inv(r, c));
    }
    SpMat Hinv(C.cols(), C.cols());
    Hinv.setFromTriplets(trip.begin(), trip.end());

    C_ = C;
    C_.makeCompressed();
    if (C_.rows() == 0) return;
    for (int attempt = 0; attempt < 2; ++attempt) {
        S_ = C_ * Hinv * SpMat(C_.transpose());
        S_.makeCompressed();
        scale_inv_ = equilibration(S_);
        schur_.compute(SpMat(scale_inv_.asDiagonal() * S_ * scale_inv_.asDiagonal()));
        if (schur_.info() == Eigen::Success && !weak_diagonal(schur_.vectorD())) {
            if (kept_.empty())
                for (int i = 0; i < C_.rows(); ++i) kept_.push_back(i);
            return;
        }
        if (attempt == 1) break;
        kept_ = independent_rows(C);
        const int dropped = static_cast<int>(C.rows() - kept_.size());
        if (dropped == 0) break;
        std::fprintf(stderr, "solver: dropped %d redundant constraint rows\n", dropped);
        C_ = select_rows(C, kept_);
    }
    numeric_error("constraint system is singular");
}

KktSolution BlockDiagConstrainedQuadratic::solve(const Eigen::VectorXd& b,
                                                 const Eigen::VectorXd& d) const {
    auto apply_inv = [&](const Eigen::VectorXd& v) {
        Eigen::VectorXd out(v.size());
        for (int i = 0; i < static_cast<int>(inv_blocks_.size()); ++i)
            out.segment(block_ * i, block_) = inv_blocks_[i] * v.segment(block_ * i, block_);
        return out;
    };
    KktSolution sol;
    if (C_.rows() == 0) {
        sol.x = apply_inv(b);
        sol.multipliers.resize(0);
        return sol;
    }
    Eigen::VectorXd dk(C_.rows());
    for (int i = 0; i < C_.rows(); ++i) dk(i) = d.size() == 0 ? 0.0 : d(kept_[i]);
    const Eigen::VectorXd rhs = C_ * apply_inv(b) - dk;
    auto schur_solve = [&](const Eigen::VectorXd& r) {
        return Eigen::VectorXd(scale_inv_.cwiseProduct(schur_.solve(scale_inv_.cwiseProduct(r))));
    };
    Eigen::VectorXd nu = schur_solve(rhs);
    nu += schur_solve(rhs - S_ * nu);
    sol.x = apply_inv(b - C_.transpose() * nu);
    sol.multipliers = nu;
    return sol;
}

SpdWithFixedDofs::SpdWithFixedDofs(const SpMat& A, std::vector<char> fixed)
    : fixed_(std::move(fixed)) {
    if (A.rows() != A.cols()) config_error("matrix is not square");
    const int n = static_cast<int>(A.rows());
    if (static_cast<int>(fixed_.size()) != n) config_error("fixed mask size");

    index_.assign(n, -1);
    int nf = 0;
    for (int i = 0; i < n; ++i)
        if (!fixed_[i]) index_[i] = nf++;

    std::vector<Eigen::Triplet<double>> ff, fc;
    for (int k = 0; k < A.outerSize(); ++k)
        for (SpMat::InnerIterator it(A, k); it; ++it) {
            const int r = static_cast<int>(it.row()), c = static_cast<int>(it.col());
            if (fixed_[r]) continue;
            if (!fixed_[c])
                ff.emplace_back(index_[r], index_[c], it.value());
            else
                fc.emplace_back(index_[r], c, it.value());
        }
    A_ff_.resize(nf, nf);
    A_ff_.setFromTriplets(ff.begin(), ff.end());
    A_ff_.makeCompressed();
    A_fc_.resize(nf, n);
    A_fc_.setFromTriplets(fc.begin(), fc.end());
    A_fc_.makeCompressed();
    if (nf > 0) {
        ldlt_.compute(A_ff_);
        if (ldlt_.info() != Eigen::Success) numeric_error("factorization of the reduced system failed");
    }
}

Eigen::VectorXd SpdWithFixedDofs::solve(const Eigen::VectorXd& rhs,
                                        const Eigen::VectorXd& fixed_values) const {
    const int n = static_cast<int>(fixed_.size());
    if (rhs.size() != n) config_error("rhs size");
    Eigen::VectorXd xc = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i)
        if (fixed_[i]) xc(i) = fixed_values.size() == 0 ? 0.0 : fixed_values(i);

    const int nf = static_cast<int>(A_ff_.rows());
    Eigen::VectorXd x = xc;
    if (nf > 0) {
        Eigen::VectorXd bf(nf);
        for (int i = 0; i < n; ++i)
            if (!fixed_[i]) bf(index_[i]) = rhs(i);
        bf -= A_fc_ * xc;
        const Eigen::VectorXd xf = ldlt_.solve(bf);
        for (int i = 0; i < n; ++i)
            if (!fixed_[i]) x(i) = xf(index_[i]);
    }
    return x;
}

AdmmState admm_run(const AdmmProblem& problem, const AdmmConfig& config,
                   Eigen::VectorXd primary0, Eigen::VectorXd aux0, Eigen::VectorXd mult0) {
    if (config.tau0 <= 0.0 || config.tol <= 0.0) config_error("admm: tau0 and tol must be positive");
    if (aux0.size() != mult0.size() || aux0.size() != problem.metric.size())
        config_error("admm: auxiliary, multiplier and metric sizes disagree");

    AdmmState st;
    st.primary = std::move(primary0);
    st.auxiliary = std::move(aux0);
    st.multiplier = std::move(mult0);
    st.tau = config.tau0;

    auto rnorm = [&](const Eigen::VectorXd& v) {
        return std::sqrt(v.dot(problem.metric.cwiseProduct(v)));
    };

    int since_adjust = 0;
    for (int it = 1; it <= config.max_iters; ++it) {
        st.primary = problem.primary_update(st.auxiliary, st.multiplier, st.tau);
        const Eigen::VectorXd coupled = problem.couple(st.primary);
        const Eigen::VectorXd aux_new =
            problem.auxiliary_update(coupled, st.multiplier, st.tau);
        st.multiplier += st.tau * (coupled - aux_new);

        const double primal = rnorm(coupled - aux_new);
        const double dual = st.tau * rnorm(aux_new - st.auxiliary);
        st.auxiliary = aux_new;
        st.iters = it;
        st.history.emplace_back(primal, dual);

        if (std::max(primal, dual) <= config.tol) {
            st.converged = true;
            return st;
        }
        ++since_adjust;
        if (config.adapt && since_adjust >= 5) {
            double factor = 0.0;
            if (primal > 10.0 * dual)
                factor = 2.0;
            else if (dual > 10.0 * primal)
                factor = 0.5;
            if (factor != 0.0) {
                st.tau *= factor;
                st.multiplier /= factor;
                since_adjust = 0;
                if (problem.tau_changed) problem.tau_changed(st.tau);
            }
        }
    }
    return st;  // non-converged state, flagged by the caller
}

}  // namespace afem
