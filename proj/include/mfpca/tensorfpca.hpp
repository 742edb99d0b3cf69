#pragma once

#include "mfpca/fundata.hpp"
#include "mfpca/ufpca.hpp"

namespace mfpca {

struct TensorPCAOptions {
    int M = 1;
    double lambdaMin = 1e-5;
    double lambdaMax = 1e5;
    bool gcv = true;           // smoothing parameters by GCV each sweep
    double fixedLambda = 0.0;  // used when gcv is false
    double tol = 1e-8;         // relative change of d
    int maxIter = 1000;
};

struct TensorPCAResult {
    Eigen::VectorXd scale;           // d_m, nonincreasing
    Eigen::MatrixXd subjectFactors;  // N x M (u, unit norm)
    Eigen::MatrixXd rowFactors;      // S1 x M (v, unit norm)
    Eigen::MatrixXd colFactors;      // S2 x M (w, unit norm)
    bool converged = true;

    // orthonormalized eigenimages with projection scores, ready for the
    // multivariate step
    UFPCAResult asUfpca;
};

// FCP-TPA regularized rank-one decomposition of an N x S1 x S2 stack
// (element rows flattened row-major). The element is demeaned internally;
// smoothing penalizes second differences in both image directions.
TensorPCAResult fcpTpa(const ElementSample& element, const TensorPCAOptions& opts);

}  // namespace mfpca
