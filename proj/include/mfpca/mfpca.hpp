#pragma once

#include "mfpca/basis.hpp"
#include "mfpca/ufpca.hpp"

#include <vector>

namespace mfpca {

// One element's univariate expansion, normalized to the form the block
// eigenproblem consumes: N x K coefficients, the basis Gram matrix and the
// basis functions evaluated on the data grid (rows = functions).
struct UnivariateExpansion {
    Eigen::MatrixXd coefficients;  // N x K_j
    Eigen::MatrixXd gram;          // K_j x K_j
    Eigen::MatrixXd basisOnGrid;   // K_j x G_j
    Domain grid;
    Eigen::VectorXd mean;          // grid values, used for reconstruction
    bool orthonormal = false;      // gram == identity (FPCA pathway)
    bool blupScores = false;

    static UnivariateExpansion fromUfpca(const UFPCAResult& res);
    static UnivariateExpansion fromBasisExpansion(const BasisExpansion& exp,
                                                  const Eigen::VectorXd& meanOnGrid);
};

struct MFPCAResult {
    Eigen::VectorXd eigenvalues;                  // nu, nonincreasing >= 0
    std::vector<Eigen::MatrixXd> eigenfunctions;  // per element, M x G_j
    std::vector<Domain> domains;
    Eigen::MatrixXd scores;        // N x M (rho)
    Eigen::MatrixXd eigenvectors;  // K_+ x M (c, per-element blocks stacked)
    std::vector<int> blockSizes;   // K_j per element
    std::vector<double> weights;   // w_j
    Eigen::VectorXd pve;
    std::vector<Eigen::VectorXd> means;  // per-element mean on grid
    bool degenerateSpectrum = false;     // near-equal adjacent eigenvalues
    bool blupScores = false;             // some element used BLUP scores

    MultiGridFunction eigenfunction(int m) const;
};

// Orthonormal-score pathway of the estimation algorithm:
// Z = (N-1)^{-1} Xi^T Xi, symmetric eigendecomposition, psi and rho
// assembled from the eigenvectors.
MFPCAResult mfpcaFromScores(const std::vector<UFPCAResult>& uni,
                            const Truncation& trunc = {});

// General pathway with arbitrary bases and weights: solves
// (N-1)^{-1} B D Theta^T Theta D c = nu c through the Cholesky-whitened
// symmetric problem, then applies the weighted psi/rho formulas.
MFPCAResult mfpcaGeneral(const std::vector<UnivariateExpansion>& expansions,
                         const std::vector<double>& weights, const Truncation& trunc = {});

// Reverse map: univariate spectrum of one element recovered from the
// multivariate one, plus the linear map taking rho to xi.
struct UnivariateFromMultivariate {
    Eigen::VectorXd eigenvalues;     // lambda^(j)
    Eigen::MatrixXd eigenfunctions;  // M_j x G_j
    Eigen::MatrixXd scoreMap;        // M_j x M, xi = scoreMap * rho
};
UnivariateFromMultivariate univariateFromMultivariate(const Eigen::VectorXd& nu,
                                                      const std::vector<Eigen::MatrixXd>& psi,
                                                      const std::vector<Domain>& domains,
                                                      int element);

// w_j = 1 / integrated pointwise sample variance.
std::vector<double> estimateWeights(const MultiFunData& data);

// mean + sum_{m<=M} rho_im psi_m, grid-valued.
MultiFunData reconstruct(const MFPCAResult& result, int M);

struct TruncationChoice {
    std::vector<int> perElement;
    int multivariate;
};
TruncationChoice selectTruncation(const std::vector<Eigen::VectorXd>& univariateEigenvalues,
                                  double pveTarget, int requestedM);

// Verification oracle: direct eigendecomposition of the pooled, quadrature-
// and weight-scaled sample covariance. Dense; total grid size is capped.
MFPCAResult directOracle(const MultiFunData& data, const std::vector<double>& weights,
                         const Truncation& trunc = {});

}  // namespace mfpca
