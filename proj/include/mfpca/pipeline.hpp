#pragma once

#include "mfpca/mfpca.hpp"
#include "mfpca/tensorfpca.hpp"

namespace mfpca {

// Per-element univariate expansion choice for the two-step estimator.
struct UnivariateConfig {
    enum class Type { Fpca, SparseFpca, Bspline, TensorBspline, FcpTpa };
    Type type = Type::Fpca;
    Truncation truncation = Truncation::varianceExplained(0.99);
    bool smoothCovariance = false;  // Fpca
    int K = 15;                     // Bspline
    int K1 = 10, K2 = 12;           // TensorBspline
    int penaltyOrder = 2;
    std::optional<double> lambda;   // fixed smoothing; nullopt = GCV
    int fcpComponents = 20;         // FcpTpa
};

struct PipelineConfig {
    std::vector<UnivariateConfig> univariate;
    Truncation truncation;  // multivariate M or pve
    enum class WeightRule { Unit, Estimate, Explicit };
    WeightRule weightRule = WeightRule::Unit;
    std::vector<double> explicitWeights;
};

UnivariateExpansion fitUnivariate(const ElementSample& element, const UnivariateConfig& cfg);

MFPCAResult fitPipeline(const MultiFunData& data, const PipelineConfig& cfg);

}  // namespace mfpca
