#include "mfpca/tensorfpca.hpp"

#include "mfpca/basis.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mfpca {

namespace {

struct SmoothOp {
    Eigen::MatrixXd eigvecs;
    Eigen::VectorXd eigvals;  // of Omega = D2^T D2, ascending

    explicit SmoothOp(Eigen::Index S) {
        const Eigen::MatrixXd omega = differencePenalty(static_cast<int>(S), 2);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(omega);
        eigvecs = eig.eigenvectors();
        eigvals = eig.eigenvalues().cwiseMax(0.0);
    }

    // GCV for v(lambda) = (I + lambda Omega)^{-1} z treated as a ridge
    // smoother with identity design.
    double selectLambda(const Eigen::VectorXd& z, const std::vector<double>& grid) const {
        const Eigen::VectorXd zt = eigvecs.transpose() * z;
        const double n = static_cast<double>(z.size());
        double best = grid.front();
        double bestGcv = std::numeric_limits<double>::infinity();
        for (double lam : grid) {
            const Eigen::ArrayXd shrink = 1.0 / (1.0 + lam * eigvals.array());
            const double rss = (zt.array() * (1.0 - shrink)).square().sum();
            const double tr = shrink.sum();
            const double denom = 1.0 - tr / n;
            const double gcv = denom > 0 ? (rss / n) / (denom * denom)
                                         : std::numeric_limits<double>::infinity();
            if (gcv <= bestGcv) {
                bestGcv = gcv;
                best = lam;
            }
        }
        return best;
    }

    Eigen::VectorXd apply(const Eigen::VectorXd& z, double lambda) const {
        const Eigen::ArrayXd shrink = 1.0 / (1.0 + lambda * eigvals.array());
        return eigvecs * (shrink * (eigvecs.transpose() * z).array()).matrix();
    }
};

Eigen::VectorXd leadingEigenvector(const Eigen::MatrixXd& A) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A);
    Eigen::VectorXd v = eig.eigenvectors().col(A.rows() - 1);
    Eigen::Index kmax;
    v.cwiseAbs().maxCoeff(&kmax);
    if (v(kmax) < 0.0) v = -v;
    return v;
}

}  // namespace

TensorPCAResult fcpTpa(const ElementSample& element, const TensorPCAOptions& opts) {
    element.validate();
    if (element.domain.dim() != 2)
        throw std::invalid_argument("fcpTpa: needs a 2D element");
    if (element.mask) throw std::invalid_argument("fcpTpa: dense stacks only");
    const Eigen::Index N = element.sampleSize();
    const Eigen::Index S1 = element.domain.axes[0].size();
    const Eigen::Index S2 = element.domain.axes[1].size();
    if (opts.M > std::min({N, S1, S2}))
        throw std::invalid_argument("fcpTpa: M exceeds min(N, S1, S2)");

    const Eigen::VectorXd mean = element.values.colwise().mean();
    Eigen::MatrixXd X = element.values.rowwise() - mean.transpose();  // N x S1*S2
    const Eigen::MatrixXd Xc = X;  // kept for projection scores

    const SmoothOp smoothV(S1), smoothW(S2);
    std::vector<double> grid;
    for (int i = 0; i < 20; ++i)
        grid.push_back(std::pow(10.0, std::log10(opts.lambdaMin) +
                                          (std::log10(opts.lambdaMax) -
                                           std::log10(opts.lambdaMin)) *
                                              i / 19.0));

    TensorPCAResult res;
    res.scale.resize(opts.M);
    res.subjectFactors.resize(N, opts.M);
    res.rowFactors.resize(S1, opts.M);
    res.colFactors.resize(S2, opts.M);

    const double xnorm0 = X.norm();
    for (int m = 0; m < opts.M; ++m) {
        // deterministic init from the mode covariances of the deflated stack
        Eigen::MatrixXd A1 = Eigen::MatrixXd::Zero(S1, S1);
        Eigen::MatrixXd A2 = Eigen::MatrixXd::Zero(S2, S2);
        for (Eigen::Index i = 0; i < N; ++i) {
            const Eigen::VectorXd xi = X.row(i).transpose();
            const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                 Eigen::RowMajor>>
                Xi(xi.data(), S1, S2);
            A1 += Xi * Xi.transpose();
            A2 += Xi.transpose() * Xi;
        }
        Eigen::VectorXd v = leadingEigenvector(A1);
        Eigen::VectorXd w = leadingEigenvector(A2);
        Eigen::VectorXd u = Eigen::VectorXd::Zero(N);

        double d = 0.0, dPrev = 0.0;
        bool converged = false;
        for (int it = 0; it < opts.maxIter; ++it) {
            // u <- X x2 v x3 w, normalized
            Eigen::VectorXd vw(S1 * S2);
            for (Eigen::Index s = 0; s < S1; ++s)
                for (Eigen::Index t = 0; t < S2; ++t) vw(s * S2 + t) = v(s) * w(t);
            u = X * vw;
            const double un = u.norm();
            if (un <= 1e-300) break;  // zero (deflated) tensor
            u /= un;

            // Y = X x1 u as an S1 x S2 matrix
            const Eigen::VectorXd y = X.transpose() * u;
            const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                 Eigen::RowMajor>>
                Ymat(y.data(), S1, S2);

            // v <- (I + lambda_v Omega_v)^{-1} (X x1 u x3 w), normalized
            Eigen::VectorXd zv = Ymat * w;
            const double lamV = opts.gcv ? smoothV.selectLambda(zv, grid) : opts.fixedLambda;
            v = smoothV.apply(zv, lamV);
            if (v.norm() <= 1e-300) break;
            v.normalize();

            // w <- (I + lambda_w Omega_w)^{-1} (X x1 u x2 v), normalized
            Eigen::VectorXd zw = Ymat.transpose() * v;
            const double lamW = opts.gcv ? smoothW.selectLambda(zw, grid) : opts.fixedLambda;
            w = smoothW.apply(zw, lamW);
            if (w.norm() <= 1e-300) break;
            w.normalize();

            d = v.transpose() * Ymat * w;
            if (it > 0 && std::abs(d - dPrev) <= opts.tol * std::max(std::abs(dPrev), 1e-300)) {
                converged = true;
                break;
            }
            dPrev = d;
        }
        if (!converged) res.converged = false;

        // deterministic signs: largest-magnitude entries of v, w positive
        Eigen::Index kmax;
        v.cwiseAbs().maxCoeff(&kmax);
        if (v(kmax) < 0.0) {
            v = -v;
            u = -u;
        }
        w.cwiseAbs().maxCoeff(&kmax);
        if (w(kmax) < 0.0) {
            w = -w;
            u = -u;
        }
        if (d < 0.0) {
            d = -d;
            u = -u;
        }

        res.scale(m) = d;
        res.subjectFactors.col(m) = u;
        res.rowFactors.col(m) = v;
        res.colFactors.col(m) = w;

        // deflate
        Eigen::VectorXd vw(S1 * S2);
        for (Eigen::Index s = 0; s < S1; ++s)
            for (Eigen::Index t = 0; t < S2; ++t) vw(s * S2 + t) = v(s) * w(t);
        X -= d * u * vw.transpose();
        if (X.norm() > xnorm0 * (1.0 + 1e-12)) res.converged = false;
    }

    // sort components by scale, nonincreasing
    std::vector<int> order(static_cast<std::size_t>(opts.M));
    for (int m = 0; m < opts.M; ++m) order[static_cast<std::size_t>(m)] = m;
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return res.scale(a) > res.scale(b); });
    {
        TensorPCAResult sorted = res;
        for (int m = 0; m < opts.M; ++m) {
            const int k = order[static_cast<std::size_t>(m)];
            sorted.scale(m) = res.scale(k);
            sorted.subjectFactors.col(m) = res.subjectFactors.col(k);
            sorted.rowFactors.col(m) = res.rowFactors.col(k);
            sorted.colFactors.col(m) = res.colFactors.col(k);
        }
        res = std::move(sorted);
    }

    // eigenimages, re-orthonormalized under quadrature (FCP-TPA factors are
    // not exactly orthogonal), with projection scores
    const Eigen::VectorXd q = quadratureWeights(element.domain);
    Eigen::MatrixXd Phi(opts.M, S1 * S2);
    for (int m = 0; m < opts.M; ++m) {
        Eigen::VectorXd img(S1 * S2);
        for (Eigen::Index s = 0; s < S1; ++s)
            for (Eigen::Index t = 0; t < S2; ++t)
                img(s * S2 + t) = res.rowFactors(s, m) * res.colFactors(t, m);
        // Gram-Schmidt against previous eigenimages
        for (int k = 0; k < m; ++k) {
            const double proj = (q.array() * img.array() * Phi.row(k).transpose().array()).sum();
            img -= proj * Phi.row(k).transpose();
        }
        const double nrm = std::sqrt((q.array() * img.array().square()).sum());
        if (nrm <= 1e-12) {
            img.setZero();
            img(m % (S1 * S2)) = 1.0 / std::sqrt(q(m % (S1 * S2)));
        } else {
            img /= nrm;
        }
        Eigen::Index gmax;
        img.cwiseAbs().maxCoeff(&gmax);
        if (img(gmax) < 0.0) img = -img;
        Phi.row(m) = img.transpose();
    }

    UFPCAResult uf;
    uf.domain = element.domain;
    uf.mean = mean;
    uf.eigenfunctions = Phi;
    uf.scores = Xc * q.asDiagonal() * Phi.transpose();
    uf.eigenvalues.resize(opts.M);
    for (int m = 0; m < opts.M; ++m)
        uf.eigenvalues(m) = uf.scores.col(m).squaredNorm() / static_cast<double>(N - 1);
    const double totalVar = (q.array() *
                             (Xc.colwise().squaredNorm().transpose().array() /
                              static_cast<double>(N - 1)))
                                .sum();
    uf.pve = totalVar > 0 ? (uf.eigenvalues / totalVar).eval()
                          : Eigen::VectorXd::Zero(opts.M).eval();
    res.asUfpca = std::move(uf);
    return res;
}

}  // namespace mfpca
