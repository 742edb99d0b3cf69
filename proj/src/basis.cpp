#include "mfpca/basis.hpp"

#include <cmath>
#include <stdexcept>

namespace mfpca {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<double> pSplineKnots(double a, double b, int K, int degree) {
    const int nIntervals = K - degree;
    if (nIntervals < 1)
        throw std::invalid_argument("BasisSystem: need K > degree for B-splines");
    std::vector<double> knots;
    for (int i = 0; i < degree; ++i) knots.push_back(a);
    for (int i = 0; i <= nIntervals; ++i)
        knots.push_back(a + (b - a) * static_cast<double>(i) / nIntervals);
    for (int i = 0; i < degree; ++i) knots.push_back(b);
    return knots;
}

// 5-point Gauss-Legendre nodes/weights on [-1,1]; exact to degree 9, which
// covers products of cubic splines.
const double kGaussNodes[5] = {-0.9061798459386640, -0.5384693101056831, 0.0,
                               0.5384693101056831, 0.9061798459386640};
const double kGaussWeights[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                 0.4786286704993665, 0.2369268850561891};

// Composite Gauss quadrature over the given breakpoints.
void gaussGrid(const std::vector<double>& breaks, Eigen::VectorXd& pts, Eigen::VectorXd& wts) {
    const std::size_t m = breaks.size() - 1;
    pts.resize(static_cast<Eigen::Index>(5 * m));
    wts.resize(static_cast<Eigen::Index>(5 * m));
    Eigen::Index k = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const double c = 0.5 * (breaks[i] + breaks[i + 1]);
        const double h = 0.5 * (breaks[i + 1] - breaks[i]);
        for (int g = 0; g < 5; ++g, ++k) {
            pts(k) = c + h * kGaussNodes[g];
            wts(k) = h * kGaussWeights[g];
        }
    }
}

std::vector<double> quadratureBreaks(const BasisSystem& basis, int axis) {
    if (basis.kind == BasisKind::BSpline || basis.kind == BasisKind::TensorBSpline) {
        const auto& kn = (axis == 0) ? basis.knots : basis.knots2;
        std::vector<double> breaks;
        for (double t : kn)
            if (breaks.empty() || t > breaks.back()) breaks.push_back(t);
        // >= 10 quadrature points per knot interval
        std::vector<double> refined;
        for (std::size_t i = 0; i + 1 < breaks.size(); ++i)
            for (int s = 0; s < 2; ++s)
                refined.push_back(breaks[i] + (breaks[i + 1] - breaks[i]) * s / 2.0);
        refined.push_back(breaks.back());
        return refined;
    }
    const auto& ax = basis.domain.axes[static_cast<std::size_t>(axis)];
    const int n = std::max(4 * basis.K, 64);
    std::vector<double> breaks(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i)
        breaks[static_cast<std::size_t>(i)] = ax(0) + (ax(ax.size() - 1) - ax(0)) * i / double(n);
    return breaks;
}

}  // namespace

BasisSystem BasisSystem::bspline(const Domain& domain, int K, int degree) {
    domain.validate();
    if (domain.dim() != 1)
        throw std::invalid_argument("BasisSystem::bspline: 1D domains only");
    BasisSystem b;
    b.kind = BasisKind::BSpline;
    b.domain = domain;
    b.K = K;
    b.degree = degree;
    const auto& ax = domain.axes[0];
    b.knots = pSplineKnots(ax(0), ax(ax.size() - 1), K, degree);
    return b;
}

BasisSystem BasisSystem::tensorBspline(const Domain& domain, int K1, int K2, int degree) {
    domain.validate();
    if (domain.dim() != 2)
        throw std::invalid_argument("BasisSystem::tensorBspline: 2D domains only");
    BasisSystem b;
    b.kind = BasisKind::TensorBSpline;
    b.domain = domain;
    b.K1 = K1;
    b.K2 = K2;
    b.K = K1 * K2;
    b.degree = degree;
    const auto& a1 = domain.axes[0];
    const auto& a2 = domain.axes[1];
    b.knots = pSplineKnots(a1(0), a1(a1.size() - 1), K1, degree);
    b.knots2 = pSplineKnots(a2(0), a2(a2.size() - 1), K2, degree);
    return b;
}

BasisSystem BasisSystem::fourier(const Domain& domain, int M) {
    domain.validate();
    if (domain.dim() != 1)
        throw std::invalid_argument("BasisSystem::fourier: 1D domains only");
    BasisSystem b;
    b.kind = BasisKind::Fourier;
    b.domain = domain;
    b.K = M;
    return b;
}

BasisSystem BasisSystem::legendre(const Domain& domain, int M) {
    domain.validate();
    if (domain.dim() != 1)
        throw std::invalid_argument("BasisSystem::legendre: 1D domains only");
    BasisSystem b;
    b.kind = BasisKind::Legendre;
    b.domain = domain;
    b.K = M;
    return b;
}

Eigen::MatrixXd fourierBasis1d(const Eigen::VectorXd& t, double a, double b, int M) {
    const double L = b - a;
    Eigen::MatrixXd out(t.size(), M);
    for (Eigen::Index i = 0; i < t.size(); ++i) {
        const double x = t(i) - a;
        for (int m = 0; m < M; ++m) {
            if (m == 0)
                out(i, m) = 1.0 / std::sqrt(L);
            else if (m % 2 == 1)
                out(i, m) = std::sqrt(2.0 / L) * std::sin(2.0 * kPi * ((m + 1) / 2) * x / L);
            else
                out(i, m) = std::sqrt(2.0 / L) * std::cos(2.0 * kPi * (m / 2) * x / L);
        }
    }
    return out;
}

Eigen::MatrixXd legendreBasis1d(const Eigen::VectorXd& t, int M) {
    Eigen::MatrixXd out(t.size(), M);
    for (Eigen::Index i = 0; i < t.size(); ++i) {
        const double x = t(i);
        double pPrev = 1.0, p = x;
        for (int m = 0; m < M; ++m) {
            double val;
            if (m == 0)
                val = 1.0;
            else if (m == 1)
                val = x;
            else {
                val = ((2.0 * m - 1.0) * x * p - (m - 1.0) * pPrev) / m;
                pPrev = p;
                p = val;
            }
            out(i, m) = val * std::sqrt((2.0 * m + 1.0) / 2.0);
        }
    }
    return out;
}

Eigen::MatrixXd bsplineDesign(const Eigen::VectorXd& t, const std::vector<double>& knots,
                              int degree) {
    const int nKnots = static_cast<int>(knots.size());
    const int K = nKnots - degree - 1;
    if (K < 1) throw std::invalid_argument("bsplineDesign: invalid knot vector");
    const double lo = knots.front();
    const double hi = knots.back();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(t.size(), K);
    std::vector<double> N(static_cast<std::size_t>(degree) + 1);
    for (Eigen::Index r = 0; r < t.size(); ++r) {
        double x = t(r);
        if (x < lo - 1e-12 || x > hi + 1e-12)
            throw std::invalid_argument("bsplineDesign: point outside knot span");
        x = std::min(std::max(x, lo), hi);
        // locate knot interval [knots[mu], knots[mu+1])
        int mu = degree;
        while (mu < K - 1 && x >= knots[static_cast<std::size_t>(mu) + 1]) ++mu;
        // Cox-de Boor triangle
        N[0] = 1.0;
        for (int d = 1; d <= degree; ++d) {
            double saved = 0.0;
            for (int j = 0; j < d; ++j) {
                const double left = knots[static_cast<std::size_t>(mu - d + 1 + j)];
                const double right = knots[static_cast<std::size_t>(mu + 1 + j)];
                const double denom = right - left;
                const double term = denom > 0.0 ? N[static_cast<std::size_t>(j)] / denom : 0.0;
                N[static_cast<std::size_t>(j)] = saved + (right - x) * term;
                saved = (x - left) * term;
            }
            N[static_cast<std::size_t>(d)] = saved;
        }
        for (int j = 0; j <= degree; ++j) {
            const int col = mu - degree + j;
            if (col >= 0 && col < K) out(r, col) = N[static_cast<std::size_t>(j)];
        }
    }
    return out;
}

Eigen::MatrixXd evalBasis(const BasisSystem& basis, const Domain& grid) {
    grid.validate();
    switch (basis.kind) {
        case BasisKind::BSpline:
            return bsplineDesign(grid.axes[0], basis.knots, basis.degree);
        case BasisKind::Fourier: {
            const auto& ax = basis.domain.axes[0];
            return fourierBasis1d(grid.axes[0], ax(0), ax(ax.size() - 1), basis.K);
        }
        case BasisKind::Legendre:
            return legendreBasis1d(grid.axes[0], basis.K);
        case BasisKind::TensorBSpline: {
            if (grid.dim() != 2)
                throw std::invalid_argument("evalBasis: tensor basis needs a 2D grid");
            const Eigen::MatrixXd B1 = bsplineDesign(grid.axes[0], basis.knots, basis.degree);
            const Eigen::MatrixXd B2 = bsplineDesign(grid.axes[1], basis.knots2, basis.degree);
            const Eigen::Index n1 = B1.rows(), n2 = B2.rows();
            Eigen::MatrixXd out(n1 * n2, basis.K);
            for (Eigen::Index i = 0; i < n1; ++i)
                for (Eigen::Index j = 0; j < n2; ++j)
                    for (int m1 = 0; m1 < basis.K1; ++m1)
                        for (int m2 = 0; m2 < basis.K2; ++m2)
                            out(i * n2 + j, m1 * basis.K2 + m2) = B1(i, m1) * B2(j, m2);
            return out;
        }
    }
    throw std::logic_error("evalBasis: unknown basis kind");
}

namespace {

Eigen::MatrixXd gram1d(const BasisSystem& basis, int axis) {
    Eigen::VectorXd pts, wts;
    gaussGrid(quadratureBreaks(basis, axis), pts, wts);
    Eigen::MatrixXd B;
    if (basis.kind == BasisKind::BSpline)
        B = bsplineDesign(pts, basis.knots, basis.degree);
    else if (basis.kind == BasisKind::TensorBSpline)
        B = bsplineDesign(pts, axis == 0 ? basis.knots : basis.knots2, basis.degree);
    else if (basis.kind == BasisKind::Fourier) {
        const auto& ax = basis.domain.axes[0];
        B = fourierBasis1d(pts, ax(0), ax(ax.size() - 1), basis.K);
    } else
        B = legendreBasis1d(pts, basis.K);
    return B.transpose() * wts.asDiagonal() * B;
}

}  // namespace

Eigen::MatrixXd gramMatrix(const BasisSystem& basis) {
    if (basis.kind == BasisKind::TensorBSpline) {
        const Eigen::MatrixXd G1 = gram1d(basis, 0);
        const Eigen::MatrixXd G2 = gram1d(basis, 1);
        Eigen::MatrixXd G(basis.K, basis.K);
        for (int a = 0; a < basis.K1; ++a)
            for (int b = 0; b < basis.K2; ++b)
                for (int c = 0; c < basis.K1; ++c)
                    for (int d = 0; d < basis.K2; ++d)
                        G(a * basis.K2 + b, c * basis.K2 + d) = G1(a, c) * G2(b, d);
        return 0.5 * (G + G.transpose());
    }
    Eigen::MatrixXd G = gram1d(basis, 0);
    return 0.5 * (G + G.transpose());
}

Eigen::MatrixXd differencePenalty(int K, int order) {
    Eigen::MatrixXd D = Eigen::MatrixXd::Identity(K, K);
    for (int q = 0; q < order; ++q) {
        const Eigen::Index r = D.rows();
        Eigen::MatrixXd Dq = D.bottomRows(r - 1) - D.topRows(r - 1);
        D = Dq;
    }
    return D.transpose() * D;
}

namespace {

struct FitCandidate {
    double lambda1 = 0.0, lambda2 = 0.0;
    double gcv = 0.0;
    Eigen::MatrixXd coefficients;  // N x K
};

std::vector<double> lambdaGrid() {
    std::vector<double> g;
    for (int i = 0; i < 20; ++i)
        g.push_back(std::pow(10.0, -8.0 + 16.0 * i / 19.0));
    return g;
}

// Solve (XtWX + P) theta = XtWY for all observations sharing the design;
// returns false if the system is singular and jitter is disallowed.
bool solvePenalized(const Eigen::MatrixXd& XtWX, const Eigen::MatrixXd& P,
                    const Eigen::MatrixXd& rhs, bool allowJitter, Eigen::MatrixXd& coef,
                    double& hatTrace) {
    const Eigen::Index K = XtWX.rows();
    Eigen::MatrixXd A = XtWX + P;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    double dmin = ldlt.vectorD().minCoeff();
    double dmax = ldlt.vectorD().maxCoeff();
    if (ldlt.info() != Eigen::Success || dmin <= 1e-13 * std::max(dmax, 1.0)) {
        if (!allowJitter) return false;
        A += (1e-12 * A.trace() / static_cast<double>(K)) *
             Eigen::MatrixXd::Identity(K, K);
        ldlt.compute(A);
        if (ldlt.info() != Eigen::Success) return false;
    }
    coef = ldlt.solve(rhs);
    hatTrace = (ldlt.solve(XtWX)).trace();
    return true;
}

}  // namespace

BasisExpansion fitPenalized(const ElementSample& element, const BasisSystem& basis,
                            const PenalizedFitOptions& opts) {
    element.validate();
    const Eigen::MatrixXd X = evalBasis(basis, element.domain);
    const Eigen::VectorXd q = quadratureWeights(element.domain);
    const Eigen::Index N = element.sampleSize();
    const int K = basis.K;

    // penalty building blocks
    Eigen::MatrixXd P1, P2;
    const bool tensor = basis.kind == BasisKind::TensorBSpline;
    if (tensor) {
        const Eigen::MatrixXd Pa = differencePenalty(basis.K1, opts.penaltyOrder);
        const Eigen::MatrixXd Pb = differencePenalty(basis.K2, opts.penaltyOrder);
        P1 = Eigen::MatrixXd::Zero(K, K);
        P2 = Eigen::MatrixXd::Zero(K, K);
        for (int a = 0; a < basis.K1; ++a)
            for (int c = 0; c < basis.K1; ++c)
                for (int b = 0; b < basis.K2; ++b) {
                    P1(a * basis.K2 + b, c * basis.K2 + b) += Pa(a, c);
                    if (a == c)
                        for (int d = 0; d < basis.K2; ++d)
                            P2(a * basis.K2 + b, a * basis.K2 + d) += Pb(b, d);
                }
    } else {
        P1 = differencePenalty(K, opts.penaltyOrder);
    }

    std::vector<std::pair<double, double>> candidates;
    if (opts.lambda) {
        candidates.push_back({*opts.lambda, *opts.lambda});
    } else {
        for (double l1 : lambdaGrid()) {
            if (tensor) {
                for (double l2 : lambdaGrid()) candidates.push_back({l1, l2});
            } else {
                candidates.push_back({l1, 0.0});
            }
        }
    }

    const bool masked = element.mask.has_value();
    Eigen::MatrixXd XtWX, rhs;
    if (!masked) {
        XtWX = X.transpose() * q.asDiagonal() * X;
        rhs = X.transpose() * q.asDiagonal() * element.values.transpose();  // K x N
    }

    FitCandidate best;
    bool haveBest = false;
    for (const auto& [l1, l2] : candidates) {
        const Eigen::MatrixXd P = tensor ? (l1 * P1 + l2 * P2).eval() : (l1 * P1).eval();
        const bool allowJitter = !(opts.lambda && *opts.lambda == 0.0);
        FitCandidate cand;
        cand.lambda1 = l1;
        cand.lambda2 = l2;
        if (!masked) {
            Eigen::MatrixXd coef;
            double hatTrace;
            if (!solvePenalized(XtWX, P, rhs, allowJitter, coef, hatTrace)) {
                if (opts.lambda) throw std::runtime_error("fitPenalized: singular fit at lambda=0");
                continue;
            }
            const Eigen::MatrixXd resid = element.values.transpose() - X * coef;  // G x N
            const double rss = (q.asDiagonal() * resid.cwiseProduct(resid)).sum();
            const double n = static_cast<double>(element.values.cols());
            const double denom = n - hatTrace;
            cand.gcv = denom > 0 ? static_cast<double>(N) * n * rss / (N * denom * denom)
                                 : std::numeric_limits<double>::infinity();
            cand.coefficients = coef.transpose();
        } else {
            cand.coefficients.resize(N, K);
            double gcvSum = 0.0;
            bool ok = true;
            for (Eigen::Index i = 0; i < N && ok; ++i) {
                std::vector<Eigen::Index> idx;
                for (Eigen::Index g = 0; g < element.values.cols(); ++g)
                    if ((*element.mask)(i, g)) idx.push_back(g);
                const Eigen::Index n = static_cast<Eigen::Index>(idx.size());
                Eigen::MatrixXd Xi(n, K);
                Eigen::VectorXd yi(n), wi(n);
                for (Eigen::Index r = 0; r < n; ++r) {
                    Xi.row(r) = X.row(idx[static_cast<std::size_t>(r)]);
                    yi(r) = element.values(i, idx[static_cast<std::size_t>(r)]);
                    wi(r) = q(idx[static_cast<std::size_t>(r)]);
                }
                const Eigen::MatrixXd XtWXi = Xi.transpose() * wi.asDiagonal() * Xi;
                const Eigen::MatrixXd rhsi = Xi.transpose() * wi.asDiagonal() * yi;
                Eigen::MatrixXd coef;
                double hatTrace;
                if (!solvePenalized(XtWXi, P, rhsi, allowJitter, coef, hatTrace)) {
                    if (opts.lambda)
                        throw std::runtime_error("fitPenalized: singular fit at lambda=0");
                    ok = false;
                    break;
                }
                const Eigen::VectorXd resid = yi - Xi * coef.col(0);
                const double rss = (wi.array() * resid.array().square()).sum();
                const double denom = static_cast<double>(n) - hatTrace;
                gcvSum += denom > 0 ? static_cast<double>(n) * rss / (denom * denom)
                                    : std::numeric_limits<double>::infinity();
                cand.coefficients.row(i) = coef.col(0).transpose();
            }
            if (!ok) continue;
            cand.gcv = gcvSum;
        }
        // ties broken toward larger lambda: grid is ascending, accept on <=
        if (!haveBest || cand.gcv <= best.gcv) {
            best = std::move(cand);
            haveBest = true;
        }
    }
    if (!haveBest) throw std::runtime_error("fitPenalized: no candidate produced a valid fit");

    BasisExpansion out;
    out.basis = basis;
    out.grid = element.domain;
    out.coefficients = best.coefficients;
    out.gram = gramMatrix(basis);
    out.lambda1 = best.lambda1;
    if (tensor) out.lambda2 = best.lambda2;
    return out;
}

}  // namespace mfpca
