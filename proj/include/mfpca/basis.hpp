#pragma once

#include "mfpca/fundata.hpp"

#include <optional>

namespace mfpca {

enum class BasisKind { BSpline, TensorBSpline, Fourier, Legendre };

// A finite basis system on a Domain. B-splines use equispaced knots with
// degree-many boundary repeats (P-spline convention); Fourier and Legendre
// are orthonormal on their construction interval.
struct BasisSystem {
    BasisKind kind;
    Domain domain;
    int K = 0;            // total number of functions
    int degree = 3;       // B-spline degree
    int K1 = 0, K2 = 0;   // tensor marginal sizes (TensorBSpline)
    std::vector<double> knots;   // full knot vector, 1D B-spline
    std::vector<double> knots2;  // second-axis knots, tensor

    static BasisSystem bspline(const Domain& domain, int K, int degree = 3);
    static BasisSystem tensorBspline(const Domain& domain, int K1, int K2, int degree = 3);
    static BasisSystem fourier(const Domain& domain, int M);
    static BasisSystem legendre(const Domain& domain, int M);
};

// Column m holds basis function m evaluated on the grid (rows follow the
// domain's row-major flattening).
Eigen::MatrixXd evalBasis(const BasisSystem& basis, const Domain& grid);

// Orthonormal 1D systems evaluated at arbitrary points.
Eigen::MatrixXd fourierBasis1d(const Eigen::VectorXd& t, double a, double b, int M);
Eigen::MatrixXd legendreBasis1d(const Eigen::VectorXd& t, int M);

// B-spline design matrix at arbitrary points for a full knot vector
// (Cox-de Boor recursion).
Eigen::MatrixXd bsplineDesign(const Eigen::VectorXd& t, const std::vector<double>& knots,
                              int degree);

// Pairwise scalar products <b_m, b_n> by quadrature on a refinement of the
// basis grid (>= 10 points per knot interval).
Eigen::MatrixXd gramMatrix(const BasisSystem& basis);

struct BasisExpansion {
    BasisSystem basis;
    Domain grid;                  // grid the data lives on
    Eigen::MatrixXd coefficients; // N x K
    Eigen::MatrixXd gram;         // K x K
    std::optional<double> lambda1, lambda2;  // selected smoothing parameters
};

struct PenalizedFitOptions {
    int penaltyOrder = 2;
    std::optional<double> lambda;  // fixed value; nullopt selects by GCV
};

// Order-q difference penalty matrix D_q^T D_q for K coefficients.
Eigen::MatrixXd differencePenalty(int K, int order);

// Per-observation penalized least squares with quadrature-weighted
// residuals; GCV over a 20-point log grid in [1e-8, 1e8], ties broken
// toward larger lambda. Tensor bases get a separate penalty per direction.
BasisExpansion fitPenalized(const ElementSample& element, const BasisSystem& basis,
                            const PenalizedFitOptions& opts = {});

}  // namespace mfpca
