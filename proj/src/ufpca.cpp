#include "mfpca/ufpca.hpp"

#include "mfpca/basis.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mfpca {

int truncationCount(const Eigen::VectorXd& eigenvalues, const Truncation& trunc,
                    Eigen::Index maxComponents) {
    const Eigen::Index avail = std::min<Eigen::Index>(eigenvalues.size(), maxComponents);
    if (trunc.M) return static_cast<int>(std::min<Eigen::Index>(*trunc.M, avail));
    if (trunc.pve) {
        const double total = eigenvalues.sum();
        if (total <= 0.0) return static_cast<int>(avail);
        double cum = 0.0;
        for (Eigen::Index m = 0; m < avail; ++m) {
            cum += eigenvalues(m);
            if (cum >= *trunc.pve * total - 1e-14) return static_cast<int>(m) + 1;
        }
    }
    return static_cast<int>(avail);
}

CovEigen covarianceEigen(const Eigen::MatrixXd& cov, const Domain& domain) {
    const Eigen::VectorXd w = quadratureWeights(domain);
    const Eigen::VectorXd s = w.cwiseSqrt();
    Eigen::MatrixXd A = s.asDiagonal() * cov * s.asDiagonal();
    A = 0.5 * (A + A.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A);
    if (eig.info() != Eigen::Success)
        throw std::runtime_error("covarianceEigen: eigendecomposition failed");

    const Eigen::Index G = cov.rows();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(G));
    for (Eigen::Index i = 0; i < G; ++i) order[static_cast<std::size_t>(i)] = G - 1 - i;

    const double lead = std::max(eig.eigenvalues().maxCoeff(), 0.0);
    CovEigen out;
    std::vector<double> vals;
    std::vector<Eigen::VectorXd> funs;
    for (Eigen::Index k : order) {
        double lam = std::max(eig.eigenvalues()(k), 0.0);
        if (lead > 0.0 && lam < 1e-10 * lead) continue;
        if (lead == 0.0) lam = 0.0;
        Eigen::VectorXd phi = eig.eigenvectors().col(k).cwiseQuotient(s);
        // deterministic sign: largest-magnitude value positive
        Eigen::Index gmax;
        phi.cwiseAbs().maxCoeff(&gmax);
        if (phi(gmax) < 0.0) phi = -phi;
        vals.push_back(lam);
        funs.push_back(phi);
        if (lead == 0.0) break;  // zero operator: single placeholder component
    }
    out.eigenvalues.resize(static_cast<Eigen::Index>(vals.size()));
    out.eigenfunctions.resize(static_cast<Eigen::Index>(vals.size()), G);
    for (std::size_t m = 0; m < vals.size(); ++m) {
        out.eigenvalues(static_cast<Eigen::Index>(m)) = vals[m];
        out.eigenfunctions.row(static_cast<Eigen::Index>(m)) = funs[m].transpose();
    }
    return out;
}

namespace {

std::vector<double> lambdaGrid20() {
    std::vector<double> g;
    for (int i = 0; i < 20; ++i) g.push_back(std::pow(10.0, -8.0 + 16.0 * i / 19.0));
    return g;
}

// Penalized least squares on pooled cell data: cells carry a count, a value
// sum and a sum of squares. Lambda by GCV, ties toward larger lambda.
Eigen::VectorXd pooledPenalizedCoefs(const Eigen::MatrixXd& X, const Eigen::VectorXd& cnt,
                                     const Eigen::VectorXd& sum, const Eigen::VectorXd& sumsq,
                                     const Eigen::MatrixXd& P) {
    const Eigen::Index K = X.cols();
    const Eigen::MatrixXd XtCX = X.transpose() * cnt.asDiagonal() * X;
    const Eigen::VectorXd rhs = X.transpose() * sum;
    const double n = cnt.sum();

    Eigen::VectorXd best;
    double bestGcv = std::numeric_limits<double>::infinity();
    for (double lam : lambdaGrid20()) {
        Eigen::MatrixXd A = XtCX + lam * P;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
        if (ldlt.info() != Eigen::Success ||
            ldlt.vectorD().minCoeff() <= 1e-13 * std::max(ldlt.vectorD().maxCoeff(), 1.0)) {
            A += (1e-12 * A.trace() / static_cast<double>(K)) * Eigen::MatrixXd::Identity(K, K);
            ldlt.compute(A);
            if (ldlt.info() != Eigen::Success) continue;
        }
        const Eigen::VectorXd theta = ldlt.solve(rhs);
        const double df = ldlt.solve(XtCX).trace();
        const Eigen::VectorXd f = X * theta;
        const double rss = (sumsq.array() - 2.0 * f.array() * sum.array() +
                            cnt.array() * f.array().square())
                               .sum();
        const double denom = n - df;
        const double gcv = denom > 0 ? n * rss / (denom * denom)
                                     : std::numeric_limits<double>::infinity();
        if (gcv <= bestGcv) {
            bestGcv = gcv;
            best = theta;
        }
    }
    if (best.size() == 0) throw std::runtime_error("pooledPenalizedCoefs: all fits singular");
    return best;
}

void finalizeResult(UFPCAResult& res, const Eigen::VectorXd& allEigenvalues) {
    const double total = allEigenvalues.sum();
    res.pve.resize(res.eigenvalues.size());
    for (Eigen::Index m = 0; m < res.eigenvalues.size(); ++m)
        res.pve(m) = total > 0 ? res.eigenvalues(m) / total : 0.0;
}

}  // namespace

UFPCAResult denseFpca(const ElementSample& element, const DenseFpcaOptions& opts) {
    element.validate();
    if (element.mask)
        throw std::invalid_argument("denseFpca: element has a mask; use sparseFpca");
    const Eigen::Index N = element.sampleSize();
    if (N < 2) throw std::invalid_argument("denseFpca: needs N >= 2");
    if (!element.values.allFinite())
        throw std::invalid_argument("denseFpca: non-finite values");

    const Eigen::Index G = element.values.cols();
    const Eigen::VectorXd mean = element.values.colwise().mean();
    const Eigen::MatrixXd Xc = element.values.rowwise() - mean.transpose();
    Eigen::MatrixXd cov = Xc.transpose() * Xc / static_cast<double>(N - 1);

    double sigma2 = 0.0;
    if (opts.smoothCovariance) {
        // tensor P-spline fit to the off-diagonal covariance entries
        Domain covDomain;
        covDomain.axes = {element.domain.axes[0], element.domain.axes[0]};
        BasisSystem tb = BasisSystem::tensorBspline(covDomain, opts.splineBasisSize,
                                                    opts.splineBasisSize);
        const Eigen::MatrixXd X = evalBasis(tb, covDomain);
        Eigen::VectorXd cnt(G * G), sum(G * G), sumsq(G * G);
        for (Eigen::Index a = 0; a < G; ++a)
            for (Eigen::Index b = 0; b < G; ++b) {
                const Eigen::Index k = a * G + b;
                const bool offDiag = a != b;
                cnt(k) = offDiag ? 1.0 : 0.0;
                sum(k) = offDiag ? cov(a, b) : 0.0;
                sumsq(k) = offDiag ? cov(a, b) * cov(a, b) : 0.0;
            }
        const Eigen::MatrixXd P = differencePenalty(tb.K1, 2).eval();
        Eigen::MatrixXd Pfull = Eigen::MatrixXd::Zero(tb.K, tb.K);
        for (int a = 0; a < tb.K1; ++a)
            for (int c = 0; c < tb.K1; ++c)
                for (int b = 0; b < tb.K2; ++b) Pfull(a * tb.K2 + b, c * tb.K2 + b) += P(a, c);
        for (int a = 0; a < tb.K1; ++a)
            for (int b = 0; b < tb.K2; ++b)
                for (int d = 0; d < tb.K2; ++d)
                    Pfull(a * tb.K2 + b, a * tb.K2 + d) += P(b, d);
        const Eigen::VectorXd theta = pooledPenalizedCoefs(X, cnt, sum, sumsq, Pfull);
        Eigen::VectorXd fitted = X * theta;
        Eigen::MatrixXd smooth(G, G);
        for (Eigen::Index a = 0; a < G; ++a)
            for (Eigen::Index b = 0; b < G; ++b) smooth(a, b) = fitted(a * G + b);
        smooth = 0.5 * (smooth + smooth.transpose()).eval();
        sigma2 = std::max(0.0, (cov.diagonal() - smooth.diagonal()).mean());
        cov = smooth;
    }

    CovEigen ce = covarianceEigen(cov, element.domain);
    const int M = truncationCount(ce.eigenvalues, opts.truncation,
                                  std::min<Eigen::Index>(N - 1, G));

    UFPCAResult res;
    res.domain = element.domain;
    res.mean = mean;
    res.eigenvalues = ce.eigenvalues.head(M);
    res.eigenfunctions = ce.eigenfunctions.topRows(M);
    res.noiseVariance = sigma2;
    const Eigen::VectorXd w = quadratureWeights(element.domain);
    res.scores = Xc * w.asDiagonal() * res.eigenfunctions.transpose();
    finalizeResult(res, ce.eigenvalues);
    return res;
}

UFPCAResult sparseFpca(const ElementSample& element, const SparseFpcaOptions& opts) {
    element.validate();
    if (!element.mask) throw std::invalid_argument("sparseFpca: element has no mask");
    if (element.domain.dim() != 1)
        throw std::invalid_argument("sparseFpca: 1D elements only");
    const Eigen::Index N = element.sampleSize();
    const Eigen::Index G = element.values.cols();
    const BoolMatrix& mask = *element.mask;

    // mean by penalized-spline fit to the pooled (t, value) pairs
    BasisSystem mb = BasisSystem::bspline(element.domain, opts.meanBasisSize);
    const Eigen::MatrixXd Bm = evalBasis(mb, element.domain);
    Eigen::VectorXd cnt = Eigen::VectorXd::Zero(G);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(G);
    Eigen::VectorXd sumsq = Eigen::VectorXd::Zero(G);
    for (Eigen::Index i = 0; i < N; ++i)
        for (Eigen::Index g = 0; g < G; ++g)
            if (mask(i, g)) {
                cnt(g) += 1.0;
                sum(g) += element.values(i, g);
                sumsq(g) += element.values(i, g) * element.values(i, g);
            }
    const Eigen::VectorXd thetaMean =
        pooledPenalizedCoefs(Bm, cnt, sum, sumsq, differencePenalty(mb.K, 2));
    const Eigen::VectorXd mean = Bm * thetaMean;

    // covariance by tensor P-spline fit to the pooled raw off-diagonal
    // cross-products of demeaned values
    Domain covDomain;
    covDomain.axes = {element.domain.axes[0], element.domain.axes[0]};
    BasisSystem cb = BasisSystem::tensorBspline(covDomain, opts.covBasisSize, opts.covBasisSize);
    const Eigen::MatrixXd Bc1 = bsplineDesign(element.domain.axes[0], cb.knots, cb.degree);
    Eigen::VectorXd ccnt = Eigen::VectorXd::Zero(G * G);
    Eigen::VectorXd csum = Eigen::VectorXd::Zero(G * G);
    Eigen::VectorXd csumsq = Eigen::VectorXd::Zero(G * G);
    Eigen::VectorXd dcnt = Eigen::VectorXd::Zero(G);
    Eigen::VectorXd dsum = Eigen::VectorXd::Zero(G);
    Eigen::VectorXd dsumsq = Eigen::VectorXd::Zero(G);
    for (Eigen::Index i = 0; i < N; ++i) {
        std::vector<Eigen::Index> idx;
        for (Eigen::Index g = 0; g < G; ++g)
            if (mask(i, g)) idx.push_back(g);
        for (Eigen::Index r : idx) {
            const double xr = element.values(i, r) - mean(r);
            dcnt(r) += 1.0;
            dsum(r) += xr * xr;
            dsumsq(r) += xr * xr * xr * xr;
            for (Eigen::Index s : idx) {
                if (r == s) continue;
                const double v = xr * (element.values(i, s) - mean(s));
                const Eigen::Index k = r * G + s;
                ccnt(k) += 1.0;
                csum(k) += v;
                csumsq(k) += v * v;
            }
        }
    }
    if ((ccnt.array() > 0.0).count() < cb.K)
        throw std::runtime_error("sparseFpca: insufficient design for covariance smoothing");

    // build tensor design only at occupied cells to keep the solve small
    std::vector<Eigen::Index> cells;
    for (Eigen::Index k = 0; k < G * G; ++k)
        if (ccnt(k) > 0.0) cells.push_back(k);
    Eigen::MatrixXd Xcells(static_cast<Eigen::Index>(cells.size()), cb.K);
    Eigen::VectorXd ccnt2(Xcells.rows()), csum2(Xcells.rows()), csumsq2(Xcells.rows());
    for (Eigen::Index r = 0; r < Xcells.rows(); ++r) {
        const Eigen::Index k = cells[static_cast<std::size_t>(r)];
        const Eigen::Index a = k / G, b = k % G;
        for (int m1 = 0; m1 < cb.K1; ++m1)
            for (int m2 = 0; m2 < cb.K2; ++m2)
                Xcells(r, m1 * cb.K2 + m2) = Bc1(a, m1) * Bc1(b, m2);
        ccnt2(r) = ccnt(k);
        csum2(r) = csum(k);
        csumsq2(r) = csumsq(k);
    }
    const Eigen::MatrixXd Pd = differencePenalty(cb.K1, 2);
    Eigen::MatrixXd Pfull = Eigen::MatrixXd::Zero(cb.K, cb.K);
    for (int a = 0; a < cb.K1; ++a)
        for (int c = 0; c < cb.K1; ++c)
            for (int b = 0; b < cb.K2; ++b) Pfull(a * cb.K2 + b, c * cb.K2 + b) += Pd(a, c);
    for (int a = 0; a < cb.K1; ++a)
        for (int b = 0; b < cb.K2; ++b)
            for (int d = 0; d < cb.K2; ++d) Pfull(a * cb.K2 + b, a * cb.K2 + d) += Pd(b, d);
    const Eigen::VectorXd thetaCov = pooledPenalizedCoefs(Xcells, ccnt2, csum2, csumsq2, Pfull);

    Eigen::MatrixXd cov(G, G);
    for (Eigen::Index a = 0; a < G; ++a) {
        for (Eigen::Index b = 0; b < G; ++b) {
            double v = 0.0;
            for (int m1 = 0; m1 < cb.K1; ++m1)
                for (int m2 = 0; m2 < cb.K2; ++m2)
                    v += thetaCov(m1 * cb.K2 + m2) * Bc1(a, m1) * Bc1(b, m2);
            cov(a, b) = v;
        }
    }
    cov = 0.5 * (cov + cov.transpose()).eval();

    // noise variance from the diagonal excess (smoothed raw diagonal vs
    // the off-diagonal covariance fit), floored at 0
    double sigma2 = 0.0;
    if (dcnt.minCoeff() > 0.0 || (dcnt.array() > 0.0).count() >= opts.meanBasisSize) {
        Eigen::VectorXd thetaDiag =
            pooledPenalizedCoefs(Bm, dcnt, dsum, dsumsq, differencePenalty(mb.K, 2));
        const Eigen::VectorXd rawDiag = Bm * thetaDiag;
        sigma2 = std::max(0.0, (rawDiag - cov.diagonal()).mean());
    }

    CovEigen ce = covarianceEigen(cov, element.domain);
    const int M = truncationCount(ce.eigenvalues, opts.truncation,
                                  std::min<Eigen::Index>(N - 1, G));

    UFPCAResult res;
    res.domain = element.domain;
    res.mean = mean;
    res.eigenvalues = ce.eigenvalues.head(M);
    res.eigenfunctions = ce.eigenfunctions.topRows(M);
    res.noiseVariance = sigma2;
    res.blupScores = true;

    // BLUP scores per observation from its own observed points. The ridge
    // is floored at a small fraction of the retained variance: with very few
    // points per curve the conditional expectation otherwise interpolates
    // truncation and estimation error into the trailing scores.
    const Eigen::VectorXd lam = res.eigenvalues;
    const double ridge = std::max(sigma2, 1e-2 * (M > 0 ? lam.sum() : 1.0));
    res.scores.resize(N, M);
    for (Eigen::Index i = 0; i < N; ++i) {
        std::vector<Eigen::Index> idx;
        for (Eigen::Index g = 0; g < G; ++g)
            if (mask(i, g)) idx.push_back(g);
        const Eigen::Index n = static_cast<Eigen::Index>(idx.size());
        Eigen::MatrixXd Phi(n, M);
        Eigen::VectorXd yc(n);
        for (Eigen::Index r = 0; r < n; ++r) {
            for (int m = 0; m < M; ++m) Phi(r, m) = res.eigenfunctions(m, idx[static_cast<std::size_t>(r)]);
            yc(r) = element.values(i, idx[static_cast<std::size_t>(r)]) - mean(idx[static_cast<std::size_t>(r)]);
        }
        Eigen::MatrixXd S = Phi * lam.asDiagonal() * Phi.transpose();
        S.diagonal().array() += ridge;
        res.scores.row(i) =
            (lam.asDiagonal() * Phi.transpose() * S.ldlt().solve(yc)).transpose();
    }
    finalizeResult(res, ce.eigenvalues);
    return res;
}

}  // namespace mfpca
