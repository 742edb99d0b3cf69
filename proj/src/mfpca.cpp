#include "mfpca/mfpca.hpp"

#include <cmath>
#include <stdexcept>

namespace mfpca {

UnivariateExpansion UnivariateExpansion::fromUfpca(const UFPCAResult& res) {
    UnivariateExpansion e;
    e.coefficients = res.scores;
    e.gram = Eigen::MatrixXd::Identity(res.eigenvalues.size(), res.eigenvalues.size());
    e.basisOnGrid = res.eigenfunctions;
    e.grid = res.domain;
    e.mean = res.mean;
    e.orthonormal = true;
    e.blupScores = res.blupScores;
    return e;
}

UnivariateExpansion UnivariateExpansion::fromBasisExpansion(const BasisExpansion& exp,
                                                            const Eigen::VectorXd& meanOnGrid) {
    UnivariateExpansion e;
    // demean in coefficient space so that Theta rows are centered
    e.coefficients = exp.coefficients.rowwise() - exp.coefficients.colwise().mean();
    e.gram = exp.gram;
    e.basisOnGrid = evalBasis(exp.basis, exp.grid).transpose();
    e.grid = exp.grid;
    e.mean = meanOnGrid;
    e.orthonormal = false;
    return e;
}

MultiGridFunction MFPCAResult::eigenfunction(int m) const {
    MultiGridFunction f;
    for (std::size_t j = 0; j < eigenfunctions.size(); ++j)
        f.elements.push_back({domains[j], eigenfunctions[j].row(m).transpose()});
    return f;
}

MFPCAResult mfpcaGeneral(const std::vector<UnivariateExpansion>& expansions,
                         const std::vector<double>& weights, const Truncation& trunc) {
    if (expansions.empty()) throw std::invalid_argument("mfpcaGeneral: no expansions");
    if (weights.size() != expansions.size())
        throw std::invalid_argument("mfpcaGeneral: weight count mismatch");
    const Eigen::Index N = expansions.front().coefficients.rows();
    Eigen::Index Kplus = 0;
    for (const auto& e : expansions) {
        if (e.coefficients.rows() != N)
            throw std::invalid_argument("mfpcaGeneral: expansions disagree on sample size");
        Kplus += e.coefficients.cols();
    }
    for (double w : weights)
        if (!(w > 0.0)) throw std::invalid_argument("mfpcaGeneral: weights must be positive");

    // stacked coefficient matrix and block-diagonal B, D
    Eigen::MatrixXd Theta(N, Kplus);
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(Kplus, Kplus);
    Eigen::VectorXd dsqrt(Kplus);
    std::vector<int> blocks;
    bool allOrthonormal = true;
    bool anyBlup = false;
    Eigen::Index off = 0;
    for (std::size_t j = 0; j < expansions.size(); ++j) {
        const auto& e = expansions[j];
        const Eigen::Index K = e.coefficients.cols();
        Theta.middleCols(off, K) = e.coefficients;
        B.block(off, off, K, K) = e.gram;
        dsqrt.segment(off, K).setConstant(std::sqrt(weights[j]));
        blocks.push_back(static_cast<int>(K));
        allOrthonormal = allOrthonormal && e.orthonormal;
        anyBlup = anyBlup || e.blupScores;
        off += K;
    }

    const Eigen::MatrixXd ThetaD = Theta * dsqrt.asDiagonal();
    Eigen::MatrixXd Qw = ThetaD.transpose() * ThetaD / static_cast<double>(N - 1);
    Qw = 0.5 * (Qw + Qw.transpose()).eval();

    // Cholesky whitening B = R R^T; symmetric problem R^T Qw R
    Eigen::MatrixXd R;
    bool identityB = allOrthonormal;
    if (identityB) {
        R = Eigen::MatrixXd::Identity(Kplus, Kplus);
    } else {
        Eigen::LLT<Eigen::MatrixXd> llt(B);
        if (llt.info() != Eigen::Success) {
            Eigen::MatrixXd Bj = B + (1e-12 * B.trace() / static_cast<double>(Kplus)) *
                                         Eigen::MatrixXd::Identity(Kplus, Kplus);
            llt.compute(Bj);
            if (llt.info() != Eigen::Success)
                throw std::runtime_error("mfpcaGeneral: Gram matrix not positive definite");
        }
        R = llt.matrixL();
    }

    Eigen::MatrixXd Sym = identityB ? Qw : (R.transpose() * Qw * R).eval();
    Sym = 0.5 * (Sym + Sym.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Sym);
    if (eig.info() != Eigen::Success)
        throw std::runtime_error("mfpcaGeneral: eigendecomposition failed");

    const double lead = std::max(eig.eigenvalues().maxCoeff(), 0.0);
    double totalVar = 0.0;
    for (Eigen::Index k = 0; k < Kplus; ++k) totalVar += std::max(eig.eigenvalues()(k), 0.0);

    std::vector<double> nus;
    std::vector<Eigen::VectorXd> cs;
    for (Eigen::Index k = Kplus - 1; k >= 0; --k) {
        const double nu = eig.eigenvalues()(k);
        if (nu <= 0.0 || (lead > 0.0 && nu < 1e-10 * lead)) break;
        Eigen::VectorXd c = identityB ? eig.eigenvectors().col(k).eval()
                                      : (R * eig.eigenvectors().col(k)).eval();
        nus.push_back(nu);
        cs.push_back(c);
    }
    if (nus.empty()) throw std::runtime_error("mfpcaGeneral: no positive eigenvalues");

    const int retained = static_cast<int>(nus.size());
    Eigen::VectorXd nuAll(retained);
    for (int m = 0; m < retained; ++m) nuAll(m) = nus[static_cast<std::size_t>(m)];
    const int M = truncationCount(nuAll, trunc, retained);

    MFPCAResult res;
    res.eigenvalues = nuAll.head(M);
    res.blockSizes = blocks;
    res.weights = weights;
    res.blupScores = anyBlup;
    res.eigenvectors.resize(Kplus, M);
    res.scores.resize(N, M);
    for (std::size_t j = 0; j < expansions.size(); ++j) {
        res.domains.push_back(expansions[j].grid);
        res.means.push_back(expansions[j].mean);
        res.eigenfunctions.push_back(
            Eigen::MatrixXd(M, expansions[j].basisOnGrid.cols()));
    }

    for (int m = 0; m < M; ++m) {
        Eigen::VectorXd c = cs[static_cast<std::size_t>(m)];
        // deterministic sign: largest-magnitude entry of c positive
        Eigen::Index kmax;
        c.cwiseAbs().maxCoeff(&kmax);
        if (c(kmax) < 0.0) c = -c;

        const double nu = nuAll(m);
        const double h = c.dot(Qw * c);  // equals nu for unit whitened eigenvectors
        const Eigen::VectorXd Qc = Qw * c;
        off = 0;
        for (std::size_t j = 0; j < expansions.size(); ++j) {
            const Eigen::Index K = expansions[j].coefficients.cols();
            const double factor = 1.0 / std::sqrt(weights[j] * nu * h);
            res.eigenfunctions[j].row(m) =
                factor * (Qc.segment(off, K).transpose() * expansions[j].basisOnGrid);
            off += K;
        }
        res.scores.col(m) = std::sqrt(nu / h) * (ThetaD * c);
        res.eigenvectors.col(m) = c;
    }

    res.pve.resize(M);
    for (int m = 0; m < M; ++m) res.pve(m) = totalVar > 0 ? nuAll(m) / totalVar : 0.0;
    for (int m = 0; m + 1 < M; ++m)
        if (nuAll(m) - nuAll(m + 1) < 1e-8 * nuAll(0)) res.degenerateSpectrum = true;
    return res;
}

MFPCAResult mfpcaFromScores(const std::vector<UFPCAResult>& uni, const Truncation& trunc) {
    std::vector<UnivariateExpansion> expansions;
    expansions.reserve(uni.size());
    for (const auto& u : uni) expansions.push_back(UnivariateExpansion::fromUfpca(u));
    return mfpcaGeneral(expansions, std::vector<double>(uni.size(), 1.0), trunc);
}

UnivariateFromMultivariate univariateFromMultivariate(const Eigen::VectorXd& nu,
                                                      const std::vector<Eigen::MatrixXd>& psi,
                                                      const std::vector<Domain>& domains,
                                                      int element) {
    const int M = static_cast<int>(nu.size());
    if (M == 0 || nu.minCoeff() <= 0.0)
        throw std::invalid_argument("univariateFromMultivariate: all nu must be positive");
    const auto& Psi = psi[static_cast<std::size_t>(element)];  // M x G_j
    const Eigen::VectorXd q = quadratureWeights(domains[static_cast<std::size_t>(element)]);

    // A_mn = sqrt(nu_m nu_n) <psi_m^(j), psi_n^(j)>
    const Eigen::MatrixXd Gpsi = Psi * q.asDiagonal() * Psi.transpose();
    const Eigen::VectorXd s = nu.cwiseSqrt();
    Eigen::MatrixXd A = s.asDiagonal() * Gpsi * s.asDiagonal();
    A = 0.5 * (A + A.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A);

    const double lead = std::max(eig.eigenvalues().maxCoeff(), 0.0);
    std::vector<int> keep;
    for (int k = M - 1; k >= 0; --k) {
        const double lam = eig.eigenvalues()(k);
        if (lam <= 0.0 || lam < 1e-10 * lead) break;
        keep.push_back(k);
    }
    const int Mj = static_cast<int>(keep.size());

    UnivariateFromMultivariate out;
    out.eigenvalues.resize(Mj);
    out.eigenfunctions.resize(Mj, Psi.cols());
    out.scoreMap.resize(Mj, M);
    for (int m = 0; m < Mj; ++m) {
        const int k = keep[static_cast<std::size_t>(m)];
        const double lam = eig.eigenvalues()(k);
        Eigen::VectorXd u = eig.eigenvectors().col(k);
        Eigen::VectorXd phi =
            (Psi.transpose() * (s.asDiagonal() * u)) / std::sqrt(lam);
        Eigen::Index gmax;
        phi.cwiseAbs().maxCoeff(&gmax);
        if (phi(gmax) < 0.0) {
            phi = -phi;
            u = -u;
        }
        out.eigenvalues(m) = lam;
        out.eigenfunctions.row(m) = phi.transpose();
        // xi_m = lam^{-1/2} sum_n sqrt(nu_n) u_n sum_k rho_k <psi_n, psi_k>
        out.scoreMap.row(m) =
            (u.transpose() * s.asDiagonal() * Gpsi) / std::sqrt(lam);
    }
    return out;
}

std::vector<double> estimateWeights(const MultiFunData& data) {
    data.validate();
    if (data.sampleSize() < 2) throw std::invalid_argument("estimateWeights: needs N >= 2");
    std::vector<double> w;
    for (const auto& e : data.elements) {
        const Eigen::Index N = e.sampleSize();
        const Eigen::Index G = e.values.cols();
        Eigen::VectorXd var(G);
        if (!e.mask) {
            const Eigen::VectorXd mean = e.values.colwise().mean();
            var = (e.values.rowwise() - mean.transpose()).colwise().squaredNorm() /
                  static_cast<double>(N - 1);
        } else {
            for (Eigen::Index g = 0; g < G; ++g) {
                double s = 0.0, s2 = 0.0;
                Eigen::Index cnt = 0;
                for (Eigen::Index i = 0; i < N; ++i)
                    if ((*e.mask)(i, g)) {
                        s += e.values(i, g);
                        s2 += e.values(i, g) * e.values(i, g);
                        ++cnt;
                    }
                var(g) = cnt >= 2 ? (s2 - s * s / cnt) / static_cast<double>(cnt - 1) : 0.0;
            }
        }
        const double integrated = quadratureWeights(e.domain).dot(var);
        if (integrated <= 0.0)
            throw std::runtime_error("estimateWeights: zero-variance element");
        w.push_back(1.0 / integrated);
    }
    return w;
}

MultiFunData reconstruct(const MFPCAResult& result, int M) {
    if (M < 0 || M > result.eigenvalues.size())
        throw std::invalid_argument("reconstruct: M exceeds retained components");
    const Eigen::Index N = result.scores.rows();
    MultiFunData out;
    for (std::size_t j = 0; j < result.eigenfunctions.size(); ++j) {
        ElementSample e;
        e.domain = result.domains[j];
        e.values = Eigen::VectorXd::Ones(N) * result.means[j].transpose();
        if (M > 0)
            e.values += result.scores.leftCols(M) * result.eigenfunctions[j].topRows(M);
        out.elements.push_back(std::move(e));
    }
    return out;
}

TruncationChoice selectTruncation(const std::vector<Eigen::VectorXd>& univariateEigenvalues,
                                  double pveTarget, int requestedM) {
    TruncationChoice choice;
    int sum = 0;
    for (const auto& lam : univariateEigenvalues) {
        const double total = lam.sum();
        int Mj = static_cast<int>(lam.size());
        if (total > 0.0) {
            double cum = 0.0;
            for (Eigen::Index m = 0; m < lam.size(); ++m) {
                cum += lam(m);
                if (cum >= pveTarget * total - 1e-14) {
                    Mj = static_cast<int>(m) + 1;
                    break;
                }
            }
        }
        choice.perElement.push_back(Mj);
        sum += Mj;
    }
    choice.multivariate = std::min(sum, requestedM);
    return choice;
}

MFPCAResult directOracle(const MultiFunData& data, const std::vector<double>& weights,
                         const Truncation& trunc) {
    data.validate();
    Eigen::Index Gtot = 0;
    for (const auto& e : data.elements) Gtot += e.values.cols();
    if (Gtot > 4000)
        throw std::invalid_argument("directOracle: total grid size exceeds dense limit");

    CenterResult cr = center(data);
    const Eigen::Index N = data.sampleSize();

    // stack sqrt(w_j) sqrt(quad) scaled values
    Eigen::MatrixXd Y(N, Gtot);
    Eigen::VectorXd scale(Gtot);
    Eigen::Index off = 0;
    for (std::size_t j = 0; j < data.elements.size(); ++j) {
        const auto& e = cr.centered.elements[j];
        const Eigen::VectorXd q = quadratureWeights(e.domain);
        const Eigen::VectorXd sc = std::sqrt(weights[j]) * q.cwiseSqrt().array();
        Y.middleCols(off, e.values.cols()) = e.values * sc.asDiagonal();
        scale.segment(off, e.values.cols()) = sc;
        off += e.values.cols();
    }

    // eigendecompose through the N x N inner-product matrix when smaller
    std::vector<double> nus;
    std::vector<Eigen::VectorXd> vecs;  // stacked, unit l2 norm
    double totalVar = 0.0;
    if (N < Gtot) {
        Eigen::MatrixXd K = Y * Y.transpose() / static_cast<double>(N - 1);
        K = 0.5 * (K + K.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(K);
        const double lead = std::max(eig.eigenvalues().maxCoeff(), 0.0);
        for (Eigen::Index k = 0; k < N; ++k) totalVar += std::max(eig.eigenvalues()(k), 0.0);
        for (Eigen::Index k = N - 1; k >= 0; --k) {
            const double nu = eig.eigenvalues()(k);
            if (nu <= 0.0 || nu < 1e-10 * lead) break;
            Eigen::VectorXd v = Y.transpose() * eig.eigenvectors().col(k);
            v.normalize();
            nus.push_back(nu);
            vecs.push_back(v);
        }
    } else {
        Eigen::MatrixXd C = Y.transpose() * Y / static_cast<double>(N - 1);
        C = 0.5 * (C + C.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(C);
        const double lead = std::max(eig.eigenvalues().maxCoeff(), 0.0);
        for (Eigen::Index k = 0; k < Gtot; ++k) totalVar += std::max(eig.eigenvalues()(k), 0.0);
        for (Eigen::Index k = Gtot - 1; k >= 0; --k) {
            const double nu = eig.eigenvalues()(k);
            if (nu <= 0.0 || nu < 1e-10 * lead) break;
            nus.push_back(nu);
            vecs.push_back(eig.eigenvectors().col(k));
        }
    }
    if (nus.empty()) throw std::runtime_error("directOracle: no positive eigenvalues");

    Eigen::VectorXd nuAll(static_cast<Eigen::Index>(nus.size()));
    for (std::size_t m = 0; m < nus.size(); ++m)
        nuAll(static_cast<Eigen::Index>(m)) = nus[m];
    const int M = truncationCount(nuAll, trunc, nuAll.size());

    MFPCAResult res;
    res.eigenvalues = nuAll.head(M);
    res.weights = weights;
    res.scores.resize(N, M);
    res.eigenvectors.resize(Gtot, M);
    for (std::size_t j = 0; j < data.elements.size(); ++j) {
        res.domains.push_back(data.elements[j].domain);
        res.means.push_back(cr.mean.elements[j].values);
        res.blockSizes.push_back(static_cast<int>(data.elements[j].values.cols()));
        res.eigenfunctions.push_back(Eigen::MatrixXd(M, data.elements[j].values.cols()));
    }
    for (int m = 0; m < M; ++m) {
        Eigen::VectorXd v = vecs[static_cast<std::size_t>(m)];
        Eigen::Index kmax;
        v.cwiseAbs().maxCoeff(&kmax);
        if (v(kmax) < 0.0) v = -v;
        res.scores.col(m) = Y * v;
        res.eigenvectors.col(m) = v;
        const Eigen::VectorXd psiStacked = v.cwiseQuotient(scale);
        off = 0;
        for (std::size_t j = 0; j < data.elements.size(); ++j) {
            const Eigen::Index G = data.elements[j].values.cols();
            res.eigenfunctions[j].row(m) = psiStacked.segment(off, G).transpose();
            off += G;
        }
    }
    res.pve.resize(M);
    for (int m = 0; m < M; ++m) res.pve(m) = totalVar > 0 ? nuAll(m) / totalVar : 0.0;
    return res;
}

}  // namespace mfpca
