#pragma once

#include "mfpca/mfpca.hpp"

#include <cstdint>
#include <functional>

namespace mfpca {

// Flip the estimate so <truth, estimate>_w >= 0; zero product leaves it
// unchanged.
MultiGridFunction alignSign(const MultiGridFunction& truth, const MultiGridFunction& estimate,
                            const std::vector<double>& weights);

double errEigenvalue(double nu, double nuHat);

// |||psi - psiHat|||^2 after sign alignment.
double errEigenfunction(const MultiGridFunction& truth, const MultiGridFunction& estimate,
                        const std::vector<double>& weights);

// N^{-1} sum |||x_i - xHat_i|||^2 / |||x_i|||^2; zero-norm observations
// are skipped.
double mrse(const MultiFunData& x, const MultiFunData& xHat, const std::vector<double>& weights);

struct BandSet {
    // [component][element]: rows = grid points, cols = levels
    std::vector<std::vector<Eigen::MatrixXd>> lower;
    std::vector<std::vector<Eigen::MatrixXd>> upper;
    std::vector<double> levels;
    int replicates = 0;
    int failures = 0;
};

// Refits the pipeline on subject resamples and takes pointwise percentile
// bands per component and element, after aligning each replicate to the
// point estimate's sign.
using FitFunction = std::function<MFPCAResult(const MultiFunData&)>;
BandSet bootstrapBands(const MultiFunData& data, const FitFunction& fit,
                       const MFPCAResult& pointEstimate, int B,
                       const std::vector<double>& levels, std::uint64_t seed);

struct CoverageTable {
    // [component][element]: per-grid-point coverage rates
    std::vector<std::vector<Eigen::VectorXd>> pointwise;
    // [component][element]: mean coverage
    std::vector<std::vector<double>> aggregated;
    int datasets = 0;
};

// Band inclusion of the true eigenfunctions (up to a sign change of the
// whole function) over R simulated datasets.
using SimulateFunction = std::function<MultiFunData(std::uint64_t seed)>;
CoverageTable coverageExperiment(const SimulateFunction& simulate,
                                 const std::vector<MultiGridFunction>& truth,
                                 const FitFunction& fit, int components, int datasets, int B,
                                 double level, std::uint64_t seed);

}  // namespace mfpca
