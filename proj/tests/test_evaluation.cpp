#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "mfpca/evaluation.hpp"

#include "mfpca/pipeline.hpp"
#include "mfpca/simgen.hpp"

#include <doctest.h>

#include <cmath>

using namespace mfpca;

namespace {

MultiGridFunction sine(const Domain& d, double amp, double freq) {
    return MultiGridFunction{{GridFunction{d, (amp * (freq * d.axes[0].array()).sin()).matrix()}}};
}

}  // namespace

TEST_CASE("sign alignment flips exactly when the inner product is negative") {
    const Domain d = Domain::interval(0.0, 1.0, 50);
    const MultiGridFunction f = sine(d, 1.0, 2.0);
    MultiGridFunction g = sine(d, 0.9, 2.0);
    const std::vector<double> w{1.0};
    CHECK(alignSign(f, g, w).elements[0].values.isApprox(g.elements[0].values, 0.0));
    g.elements[0].values = -g.elements[0].values;
    CHECK(alignSign(f, g, w).elements[0].values.isApprox(-g.elements[0].values, 0.0));
}

TEST_CASE("eigenvalue and eigenfunction errors match hand-computed values") {
    CHECK(errEigenvalue(2.0, 1.5) == doctest::Approx(0.0625));
    CHECK_THROWS(errEigenvalue(0.0, 1.0));

    const Domain d = Domain::interval(0.0, 1.0, 2001);
    const std::vector<double> w{1.0};
    const MultiGridFunction f = sine(d, 1.0, 2.0 * M_PI);
    CHECK(errEigenfunction(f, f, w) == doctest::Approx(0.0).epsilon(1e-14));
    MultiGridFunction g = f;
    g.elements[0].values = -g.elements[0].values;  // pure sign flip is no error
    CHECK(errEigenfunction(f, g, w) == doctest::Approx(0.0).epsilon(1e-14));
    // |sin| L2 norm on [0,1] is 1/sqrt(2); scaling by 1/2 gives ||f/2||^2 = 1/8
    g.elements[0].values = 0.5 * f.elements[0].values;
    CHECK(errEigenfunction(f, g, w) == doctest::Approx(0.125).epsilon(1e-4));
}

TEST_CASE("MRSE averages relative reconstruction errors and skips zero curves") {
    const Domain d = Domain::interval(0.0, 1.0, 11);
    MultiFunData x, xh;
    ElementSample e{d, Eigen::MatrixXd::Ones(2, 11), std::nullopt};
    x.elements = {e};
    xh.elements = {e};
    xh.elements[0].values.row(0) *= 0.5;  // relative squared error 0.25
    CHECK(mrse(x, xh, {1.0}) == doctest::Approx(0.125).epsilon(1e-12));

    x.elements[0].values.row(1).setZero();  // skipped
    xh.elements[0].values.row(1).setZero();
    CHECK(mrse(x, xh, {1.0}) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("bootstrap bands are ordered, anchored at the point estimate") {
    SimulationSpec s = SimulationSpec::setting1();
    s.N = 80;
    s.gridSizes = {30, 30};
    s.seed = 3;
    const MultiFunData data = simulate(s).data;
    PipelineConfig cfg;
    UnivariateConfig u;
    u.truncation = Truncation::count(6);
    cfg.univariate = {u, u};
    cfg.truncation = Truncation::count(3);
    const FitFunction fit = [&cfg](const MultiFunData& d2) { return fitPipeline(d2, cfg); };
    const MFPCAResult point = fit(data);
    const BandSet bands = bootstrapBands(data, fit, point, 40, {0.5, 0.95}, 11);
    CHECK(bands.replicates + bands.failures == 40);
    CHECK(bands.failures <= 4);

    int inside50 = 0, inside95 = 0, total = 0;
    for (std::size_t m = 0; m < bands.lower.size(); ++m)
        for (std::size_t j = 0; j < bands.lower[m].size(); ++j) {
            const auto& lo = bands.lower[m][j];
            const auto& up = bands.upper[m][j];
            const Eigen::VectorXd est =
                point.eigenfunctions[j].row(static_cast<Eigen::Index>(m)).transpose();
            for (Eigen::Index g = 0; g < lo.rows(); ++g) {
                CHECK(lo(g, 0) <= up(g, 0) + 1e-12);
                CHECK(lo(g, 1) <= lo(g, 0) + 1e-12);  // wider level nests the narrower
                CHECK(up(g, 1) >= up(g, 0) - 1e-12);
                inside50 += (est(g) >= lo(g, 0) && est(g) <= up(g, 0));
                inside95 += (est(g) >= lo(g, 1) && est(g) <= up(g, 1));
                ++total;
            }
        }
    // the point estimate sits near the middle of its own bootstrap distribution
    CHECK(static_cast<double>(inside95) / total > 0.9);
    CHECK(inside50 <= inside95);
}

TEST_CASE("bootstrap bands are deterministic in the seed") {
    SimulationSpec s = SimulationSpec::setting1();
    s.N = 40;
    s.gridSizes = {20, 20};
    s.seed = 21;
    const MultiFunData data = simulate(s).data;
    PipelineConfig cfg;
    UnivariateConfig u;
    u.truncation = Truncation::count(4);
    cfg.univariate = {u, u};
    cfg.truncation = Truncation::count(2);
    const FitFunction fit = [&cfg](const MultiFunData& d2) { return fitPipeline(d2, cfg); };
    const MFPCAResult point = fit(data);
    const BandSet a = bootstrapBands(data, fit, point, 10, {0.9}, 5);
    const BandSet b = bootstrapBands(data, fit, point, 10, {0.9}, 5);
    const BandSet c = bootstrapBands(data, fit, point, 10, {0.9}, 6);
    CHECK(a.lower[0][0].isApprox(b.lower[0][0], 0.0));
    CHECK(!a.lower[0][0].isApprox(c.lower[0][0], 0.0));
}

TEST_CASE("coverage experiment counts band inclusion of the truth") {
    // tiny configuration: the point is exercising the bookkeeping
    SimulationSpec s = SimulationSpec::setting1();
    s.N = 60;
    s.gridSizes = {25, 25};
    const auto truthFns = splitFourierBasis(s);
    PipelineConfig cfg;
    UnivariateConfig u;
    u.truncation = Truncation::count(6);
    cfg.univariate = {u, u};
    cfg.truncation = Truncation::count(2);
    const FitFunction fit = [&cfg](const MultiFunData& d2) { return fitPipeline(d2, cfg); };
    const SimulateFunction sim = [&s](std::uint64_t seed) {
        SimulationSpec c = s;
        c.seed = seed;
        return simulate(c).data;
    };
    const CoverageTable table = coverageExperiment(
        sim, {truthFns[0], truthFns[1]}, fit, 2, 4, 20, 0.95, 17);
    CHECK(table.datasets == 4);
    REQUIRE(table.aggregated.size() == 2);
    for (const auto& perElement : table.aggregated)
        for (double cov : perElement) {
            CHECK(cov >= 0.0);
            CHECK(cov <= 1.0);
        }
    // with M=8 well-separated components and N=60 the leading component's
    // bands should cover most of the truth even at this tiny scale
    CHECK(table.aggregated[0][0] > 0.5);
}
