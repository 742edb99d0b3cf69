#pragma once

#include "mfpca/fundata.hpp"

#include <optional>

namespace mfpca {

// Truncation request: explicit component count or a pve target.
struct Truncation {
    std::optional<int> M;
    std::optional<double> pve;

    static Truncation count(int m) { return {m, std::nullopt}; }
    static Truncation varianceExplained(double p) { return {std::nullopt, p}; }
};

struct UFPCAResult {
    Domain domain;
    Eigen::VectorXd mean;            // grid values
    Eigen::VectorXd eigenvalues;     // nonincreasing, >= 0
    Eigen::MatrixXd eigenfunctions;  // M x grid size, quadrature-orthonormal
    Eigen::MatrixXd scores;          // N x M
    double noiseVariance = 0.0;
    Eigen::VectorXd pve;             // per component
    bool blupScores = false;         // conditional-expectation scores, not projections
};

struct DenseFpcaOptions {
    Truncation truncation = Truncation::varianceExplained(0.99);
    bool smoothCovariance = false;
    int splineBasisSize = 15;  // per axis, covariance smoothing
};

// Dense pathway: eigendecomposition of the quadrature-symmetrized sample
// covariance W^{1/2} C W^{1/2}; scores by quadrature projection. With
// smoothCovariance the covariance surface is fit by a tensor P-spline
// excluding the diagonal, and the noise variance comes from the positive
// diagonal excess.
UFPCAResult denseFpca(const ElementSample& element, const DenseFpcaOptions& opts = {});

struct SparseFpcaOptions {
    Truncation truncation = Truncation::varianceExplained(0.99);
    int meanBasisSize = 15;
    int covBasisSize = 10;  // per axis of the covariance surface
};

// PACE-style sparse pathway: penalized-spline mean and covariance from
// pooled points / raw off-diagonal cross-products, then BLUP scores per
// observation using its own observed points.
UFPCAResult sparseFpca(const ElementSample& element, const SparseFpcaOptions& opts = {});

// Shared helper: eigendecomposition of a covariance surface under the
// domain's quadrature; returns all components with eigenvalue above
// 1e-10 * leading.
struct CovEigen {
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd eigenfunctions;  // M x G
};
CovEigen covarianceEigen(const Eigen::MatrixXd& cov, const Domain& domain);

int truncationCount(const Eigen::VectorXd& eigenvalues, const Truncation& trunc,
                    Eigen::Index maxComponents);

}  // namespace mfpca
