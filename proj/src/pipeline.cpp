#include "mfpca/pipeline.hpp"

#include <stdexcept>

namespace mfpca {

UnivariateExpansion fitUnivariate(const ElementSample& element, const UnivariateConfig& cfg) {
    switch (cfg.type) {
        case UnivariateConfig::Type::Fpca: {
            DenseFpcaOptions opts;
            opts.truncation = cfg.truncation;
            opts.smoothCovariance = cfg.smoothCovariance;
            return UnivariateExpansion::fromUfpca(denseFpca(element, opts));
        }
        case UnivariateConfig::Type::SparseFpca: {
            SparseFpcaOptions opts;
            opts.truncation = cfg.truncation;
            return UnivariateExpansion::fromUfpca(sparseFpca(element, opts));
        }
        case UnivariateConfig::Type::Bspline:
        case UnivariateConfig::Type::TensorBspline: {
            const BasisSystem basis =
                cfg.type == UnivariateConfig::Type::Bspline
                    ? BasisSystem::bspline(element.domain, cfg.K)
                    : BasisSystem::tensorBspline(element.domain, cfg.K1, cfg.K2);
            PenalizedFitOptions popts;
            popts.penaltyOrder = cfg.penaltyOrder;
            popts.lambda = cfg.lambda;
            const BasisExpansion exp = fitPenalized(element, basis, popts);
            const Eigen::VectorXd meanCoef = exp.coefficients.colwise().mean().transpose();
            const Eigen::VectorXd meanOnGrid = evalBasis(basis, element.domain) * meanCoef;
            return UnivariateExpansion::fromBasisExpansion(exp, meanOnGrid);
        }
        case UnivariateConfig::Type::FcpTpa: {
            TensorPCAOptions opts;
            opts.M = cfg.fcpComponents;
            return UnivariateExpansion::fromUfpca(fcpTpa(element, opts).asUfpca);
        }
    }
    throw std::logic_error("fitUnivariate: unknown type");
}

MFPCAResult fitPipeline(const MultiFunData& data, const PipelineConfig& cfg) {
    data.validate();
    const std::size_t p = data.elements.size();
    if (cfg.univariate.size() != p)
        throw std::invalid_argument("fitPipeline: one univariate config per element required");

    std::vector<double> weights;
    switch (cfg.weightRule) {
        case PipelineConfig::WeightRule::Unit:
            weights.assign(p, 1.0);
            break;
        case PipelineConfig::WeightRule::Estimate:
            weights = estimateWeights(data);
            break;
        case PipelineConfig::WeightRule::Explicit:
            if (cfg.explicitWeights.size() != p)
                throw std::invalid_argument("fitPipeline: explicit weight count mismatch");
            weights = cfg.explicitWeights;
            break;
    }

    std::vector<UnivariateExpansion> expansions;
    expansions.reserve(p);
    for (std::size_t j = 0; j < p; ++j)
        expansions.push_back(fitUnivariate(data.elements[j], cfg.univariate[j]));

    return mfpcaGeneral(expansions, weights, cfg.truncation);
}

}  // namespace mfpca
