#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "mfpca/basis.hpp"

#include <doctest.h>

#include <cmath>

using namespace mfpca;

// independent quadrature oracle: trapezoid on a very fine grid
static Eigen::MatrixXd gramOracle(const BasisSystem& basis, Eigen::Index n1,
                                  Eigen::Index n2 = 0) {
    Domain fine;
    const Domain& d = basis.domain;
    fine.axes.push_back(Eigen::VectorXd::LinSpaced(n1, d.axes[0](0), d.axes[0](d.axes[0].size() - 1)));
    if (d.dim() == 2)
        fine.axes.push_back(
            Eigen::VectorXd::LinSpaced(n2, d.axes[1](0), d.axes[1](d.axes[1].size() - 1)));
    const Eigen::MatrixXd B = evalBasis(basis, fine);
    const Eigen::VectorXd w = quadratureWeights(fine);
    return B.transpose() * w.asDiagonal() * B;
}

TEST_CASE("Fourier system is orthonormal on its interval") {
    const Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(4001, 0.0, 3.0);
    const Eigen::MatrixXd F = fourierBasis1d(t, 0.0, 3.0, 9);
    Domain d{{t}};
    const Eigen::VectorXd w = quadratureWeights(d);
    const Eigen::MatrixXd G = F.transpose() * w.asDiagonal() * F;
    CHECK((G - Eigen::MatrixXd::Identity(9, 9)).cwiseAbs().maxCoeff() < 1e-6);
    // constant term is 1/sqrt(length)
    CHECK(F(0, 0) == doctest::Approx(1.0 / std::sqrt(3.0)));
}

TEST_CASE("Legendre system is orthonormal on [-1,1] and matches known values") {
    const Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(4001, -1.0, 1.0);
    const Eigen::MatrixXd L = legendreBasis1d(t, 6);
    Domain d{{t}};
    const Eigen::VectorXd w = quadratureWeights(d);
    const Eigen::MatrixXd G = L.transpose() * w.asDiagonal() * L;
    CHECK((G - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-5);
    // P2(x) = (3x^2-1)/2, normalized by sqrt(5/2)
    const double x = t(1234);
    CHECK(L(1234, 2) == doctest::Approx(std::sqrt(2.5) * 0.5 * (3 * x * x - 1)).epsilon(1e-12));
}

TEST_CASE("B-spline design rows form a partition of unity") {
    const Domain d = Domain::interval(0.0, 1.0, 101);
    const BasisSystem b = BasisSystem::bspline(d, 12);
    const Eigen::MatrixXd B = evalBasis(b, d);
    CHECK((B.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
    CHECK((B.array() >= -1e-14).all());
}

TEST_CASE("Gram matrix matches a fine-grid quadrature oracle") {
    const Domain d = Domain::interval(0.0, 2.0, 50);
    const BasisSystem b = BasisSystem::bspline(d, 10);
    const Eigen::MatrixXd G = gramMatrix(b);
    const Eigen::MatrixXd O = gramOracle(b, 200001);
    CHECK((G - O).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((G - G.transpose()).cwiseAbs().maxCoeff() < 1e-14);
    // positive definite
    Eigen::LLT<Eigen::MatrixXd> llt(G);
    CHECK(llt.info() == Eigen::Success);
}

TEST_CASE("tensor Gram is the Kronecker product of the marginal Grams") {
    const Domain d = Domain::rectangle(0.0, 1.0, 20, 0.0, 0.5, 15);
    const BasisSystem b = BasisSystem::tensorBspline(d, 5, 4);
    const Eigen::MatrixXd G = gramMatrix(b);
    const Eigen::MatrixXd O = gramOracle(b, 2001, 1001);
    CHECK((G - O).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("tensor basis evaluation follows the row-major flattening") {
    const Domain d = Domain::rectangle(0.0, 1.0, 7, 0.0, 1.0, 5);
    const BasisSystem b = BasisSystem::tensorBspline(d, 4, 5);
    const Eigen::MatrixXd B = evalBasis(b, d);
    const BasisSystem b1 = BasisSystem::bspline(Domain{{d.axes[0]}}, 4);
    const BasisSystem b2 = BasisSystem::bspline(Domain{{d.axes[1]}}, 5);
    const Eigen::MatrixXd B1 = evalBasis(b1, Domain{{d.axes[0]}});
    const Eigen::MatrixXd B2 = evalBasis(b2, Domain{{d.axes[1]}});
    for (Eigen::Index i = 0; i < 7; ++i)
        for (Eigen::Index j = 0; j < 5; ++j)
            for (int m1 = 0; m1 < 4; ++m1)
                for (int m2 = 0; m2 < 5; ++m2)
                    CHECK(B(i * 5 + j, m1 * 5 + m2) ==
                          doctest::Approx(B1(i, m1) * B2(j, m2)).epsilon(1e-13));
}

TEST_CASE("second-order difference penalty annihilates affine coefficients") {
    const Eigen::MatrixXd P = differencePenalty(8, 2);
    Eigen::VectorXd lin(8);
    for (int i = 0; i < 8; ++i) lin(i) = 3.0 - 0.7 * i;
    CHECK((P * lin).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((P - P.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

static ElementSample sineSample(Eigen::Index N, Eigen::Index G, double noise,
                                unsigned seedBase = 0) {
    ElementSample e;
    e.domain = Domain::interval(0.0, 1.0, G);
    e.values.resize(N, G);
    for (Eigen::Index i = 0; i < N; ++i) {
        const double a = 1.0 + 0.1 * static_cast<double>(i);
        for (Eigen::Index g = 0; g < G; ++g) {
            const double t = e.domain.axes[0](g);
            double eps = 0.0;
            if (noise > 0.0) {
                // cheap deterministic pseudo-noise, fine for smoke checks
                const double u =
                    std::sin(12345.678 * static_cast<double>(i * G + g + seedBase + 1));
                eps = noise * u;
            }
            e.values(i, g) = a * std::sin(2.0 * M_PI * t) + eps;
        }
    }
    return e;
}

TEST_CASE("penalized fit with lambda=0 and rich basis reproduces smooth data") {
    const ElementSample e = sineSample(4, 60, 0.0);
    const BasisSystem b = BasisSystem::bspline(e.domain, 25);
    PenalizedFitOptions opts;
    opts.lambda = 1e-10;  // essentially unpenalized
    const BasisExpansion fit = fitPenalized(e, b, opts);
    const Eigen::MatrixXd fitted = fit.coefficients * evalBasis(b, e.domain).transpose();
    CHECK((fitted - e.values).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("larger fixed lambda yields rougher-penalty-smaller fits") {
    const ElementSample e = sineSample(3, 80, 0.3);
    const BasisSystem b = BasisSystem::bspline(e.domain, 20);
    const Eigen::MatrixXd P = differencePenalty(20, 2);
    auto roughness = [&](double lambda) {
        PenalizedFitOptions opts;
        opts.lambda = lambda;
        const BasisExpansion fit = fitPenalized(e, b, opts);
        double r = 0.0;
        for (Eigen::Index i = 0; i < fit.coefficients.rows(); ++i)
            r += fit.coefficients.row(i) * P * fit.coefficients.row(i).transpose();
        return r;
    };
    CHECK(roughness(1e2) < roughness(1e-2));
}

TEST_CASE("GCV picks a lambda inside the search grid and beats gross misfits") {
    const ElementSample e = sineSample(6, 80, 0.2, 99);
    const BasisSystem b = BasisSystem::bspline(e.domain, 20);
    const BasisExpansion fit = fitPenalized(e, b, {});
    REQUIRE(fit.lambda1.has_value());
    CHECK(*fit.lambda1 >= 1e-8);
    CHECK(*fit.lambda1 <= 1e8);
    // the selected fit should track the clean signal better than heavy oversmoothing
    const ElementSample clean = sineSample(6, 80, 0.0);
    PenalizedFitOptions heavy;
    heavy.lambda = 1e8;
    const Eigen::MatrixXd B = evalBasis(b, e.domain);
    const double errGcv =
        (fit.coefficients * B.transpose() - clean.values).norm();
    const double errHeavy =
        (fitPenalized(e, b, heavy).coefficients * B.transpose() - clean.values).norm();
    CHECK(errGcv < errHeavy);
}

TEST_CASE("masked fit equals the dense fit when every point is observed") {
    ElementSample e = sineSample(3, 40, 0.1, 7);
    const BasisSystem b = BasisSystem::bspline(e.domain, 12);
    PenalizedFitOptions opts;
    opts.lambda = 0.5;
    const BasisExpansion dense = fitPenalized(e, b, opts);
    e.mask = BoolMatrix::Constant(3, 40, true);
    const BasisExpansion masked = fitPenalized(e, b, opts);
    CHECK((dense.coefficients - masked.coefficients).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("fit on sparse observations recovers a smooth curve where unobserved") {
    ElementSample e = sineSample(1, 50, 0.0);
    BoolMatrix m = BoolMatrix::Constant(1, 50, false);
    for (Eigen::Index g = 0; g < 50; g += 2) m(0, g) = true;  // every other point
    e.mask = m;
    const BasisSystem b = BasisSystem::bspline(e.domain, 10);
    const BasisExpansion fit = fitPenalized(e, b, {});
    const Eigen::MatrixXd fitted = fit.coefficients * evalBasis(b, e.domain).transpose();
    const ElementSample truth = sineSample(1, 50, 0.0);
    CHECK((fitted - truth.values).cwiseAbs().maxCoeff() < 0.05);
}
