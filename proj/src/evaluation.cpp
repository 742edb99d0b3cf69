#include "mfpca/evaluation.hpp"

#include "mfpca/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mfpca {

MultiGridFunction alignSign(const MultiGridFunction& truth, const MultiGridFunction& estimate,
                            const std::vector<double>& weights) {
    const double sp = scalarProduct(truth, estimate, weights);
    if (sp >= 0.0) return estimate;
    MultiGridFunction flipped = estimate;
    for (auto& e : flipped.elements) e.values = -e.values;
    return flipped;
}

double errEigenvalue(double nu, double nuHat) {
    if (nu <= 0.0) throw std::invalid_argument("errEigenvalue: nu must be positive");
    const double d = nu - nuHat;
    return d * d / (nu * nu);
}

double errEigenfunction(const MultiGridFunction& truth, const MultiGridFunction& estimate,
                        const std::vector<double>& weights) {
    const MultiGridFunction aligned = alignSign(truth, estimate, weights);
    MultiGridFunction diff = truth;
    for (std::size_t j = 0; j < diff.elements.size(); ++j)
        diff.elements[j].values -= aligned.elements[j].values;
    const double n = normOf(diff, weights);
    return n * n;
}

double mrse(const MultiFunData& x, const MultiFunData& xHat,
            const std::vector<double>& weights) {
    const Eigen::Index N = x.sampleSize();
    double total = 0.0;
    Eigen::Index used = 0;
    for (Eigen::Index i = 0; i < N; ++i) {
        const MultiGridFunction xi = x.observation(i);
        MultiGridFunction diff = xi;
        const MultiGridFunction hi = xHat.observation(i);
        for (std::size_t j = 0; j < diff.elements.size(); ++j)
            diff.elements[j].values -= hi.elements[j].values;
        const double denom = scalarProduct(xi, xi, weights);
        if (denom <= 0.0) continue;  // zero-norm observation skipped
        total += scalarProduct(diff, diff, weights) / denom;
        ++used;
    }
    if (used == 0) throw std::runtime_error("mrse: all observations have zero norm");
    return total / static_cast<double>(used);
}

namespace {

MultiFunData resample(const MultiFunData& data, const std::vector<Eigen::Index>& idx) {
    MultiFunData out;
    out.labels = data.labels;
    for (const auto& e : data.elements) {
        ElementSample r;
        r.domain = e.domain;
        r.values.resize(static_cast<Eigen::Index>(idx.size()), e.values.cols());
        if (e.mask) {
            BoolMatrix m(static_cast<Eigen::Index>(idx.size()), e.values.cols());
            for (std::size_t i = 0; i < idx.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = e.mask->row(idx[i]);
            r.mask = std::move(m);
        }
        for (std::size_t i = 0; i < idx.size(); ++i)
            r.values.row(static_cast<Eigen::Index>(i)) = e.values.row(idx[i]);
        out.elements.push_back(std::move(r));
    }
    return out;
}

// percentile with linear interpolation on the order statistics
double percentile(std::vector<double>& v, double p) {
    std::sort(v.begin(), v.end());
    const double pos = p * (static_cast<double>(v.size()) - 1.0);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - frac) + v[hi] * frac;
}

}  // namespace

BandSet bootstrapBands(const MultiFunData& data, const FitFunction& fit,
                       const MFPCAResult& pointEstimate, int B,
                       const std::vector<double>& levels, std::uint64_t seed) {
    if (B < 2) throw std::invalid_argument("bootstrapBands: B >= 2 required");
    const Eigen::Index N = data.sampleSize();
    const int M = static_cast<int>(pointEstimate.eigenvalues.size());
    const int p = static_cast<int>(pointEstimate.eigenfunctions.size());

    // replicate eigenfunction values: [m][j] is a (B_ok x G_j) matrix
    std::vector<std::vector<std::vector<Eigen::VectorXd>>> reps(
        static_cast<std::size_t>(M),
        std::vector<std::vector<Eigen::VectorXd>>(static_cast<std::size_t>(p)));

    CounterRng rng(seed, /*stream=*/31);
    int failures = 0;
    for (int b = 0; b < B; ++b) {
        std::vector<Eigen::Index> idx(static_cast<std::size_t>(N));
        for (Eigen::Index i = 0; i < N; ++i)
            idx[static_cast<std::size_t>(i)] =
                static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(N)));
        MFPCAResult repFit;
        try {
            repFit = fit(resample(data, idx));
        } catch (const std::exception&) {
            ++failures;
            continue;
        }
        const int Mrep = std::min<int>(M, static_cast<int>(repFit.eigenvalues.size()));
        for (int m = 0; m < Mrep; ++m) {
            const MultiGridFunction aligned = alignSign(
                pointEstimate.eigenfunction(m), repFit.eigenfunction(m), pointEstimate.weights);
            for (int j = 0; j < p; ++j)
                reps[static_cast<std::size_t>(m)][static_cast<std::size_t>(j)].push_back(
                    aligned.elements[static_cast<std::size_t>(j)].values);
        }
    }
    if (failures > B / 10)
        throw std::runtime_error("bootstrapBands: more than 10% of replicate fits failed");

    BandSet bands;
    bands.levels = levels;
    bands.replicates = B - failures;
    bands.failures = failures;
    bands.lower.resize(static_cast<std::size_t>(M));
    bands.upper.resize(static_cast<std::size_t>(M));
    for (int m = 0; m < M; ++m) {
        for (int j = 0; j < p; ++j) {
            const auto& r = reps[static_cast<std::size_t>(m)][static_cast<std::size_t>(j)];
            const Eigen::Index G = pointEstimate.eigenfunctions[static_cast<std::size_t>(j)].cols();
            Eigen::MatrixXd lo(G, static_cast<Eigen::Index>(levels.size()));
            Eigen::MatrixXd up(G, static_cast<Eigen::Index>(levels.size()));
            for (Eigen::Index g = 0; g < G; ++g) {
                std::vector<double> vals;
                vals.reserve(r.size());
                for (const auto& rep : r) vals.push_back(rep(g));
                for (std::size_t l = 0; l < levels.size(); ++l) {
                    const double a = (1.0 - levels[l]) / 2.0;
                    std::vector<double> tmp = vals;
                    lo(g, static_cast<Eigen::Index>(l)) = percentile(tmp, a);
                    up(g, static_cast<Eigen::Index>(l)) = percentile(tmp, 1.0 - a);
                }
            }
            bands.lower[static_cast<std::size_t>(m)].push_back(std::move(lo));
            bands.upper[static_cast<std::size_t>(m)].push_back(std::move(up));
        }
    }
    return bands;
}

CoverageTable coverageExperiment(const SimulateFunction& simulate,
                                 const std::vector<MultiGridFunction>& truth,
                                 const FitFunction& fit, int components, int datasets, int B,
                                 double level, std::uint64_t seed) {
    const int p = truth.front().numElements();
    CoverageTable table;
    table.datasets = 0;
    table.pointwise.resize(static_cast<std::size_t>(components));
    for (int m = 0; m < components; ++m)
        for (int j = 0; j < p; ++j)
            table.pointwise[static_cast<std::size_t>(m)].push_back(Eigen::VectorXd::Zero(
                truth.front().elements[static_cast<std::size_t>(j)].values.size()));

    for (int r = 0; r < datasets; ++r) {
        const MultiFunData data = simulate(seed + static_cast<std::uint64_t>(r));
        MFPCAResult est = fit(data);
        const BandSet bands =
            bootstrapBands(data, fit, est, B, {level}, seed * 1000003ULL + static_cast<std::uint64_t>(r));
        ++table.datasets;
        for (int m = 0; m < components && m < est.eigenvalues.size(); ++m) {
            // whole-function sign alignment of the truth to the estimate
            const MultiGridFunction alignedTruth =
                alignSign(est.eigenfunction(m), truth[static_cast<std::size_t>(m)], est.weights);
            for (int j = 0; j < p; ++j) {
                const auto& tv = alignedTruth.elements[static_cast<std::size_t>(j)].values;
                const auto& lo = bands.lower[static_cast<std::size_t>(m)][static_cast<std::size_t>(j)];
                const auto& up = bands.upper[static_cast<std::size_t>(m)][static_cast<std::size_t>(j)];
                for (Eigen::Index g = 0; g < tv.size(); ++g)
                    if (tv(g) >= lo(g, 0) && tv(g) <= up(g, 0))
                        table.pointwise[static_cast<std::size_t>(m)][static_cast<std::size_t>(j)](g) += 1.0;
            }
        }
    }
    table.aggregated.resize(static_cast<std::size_t>(components));
    for (int m = 0; m < components; ++m) {
        for (int j = 0; j < p; ++j) {
            auto& pw = table.pointwise[static_cast<std::size_t>(m)][static_cast<std::size_t>(j)];
            pw /= std::max(1, table.datasets);
            table.aggregated[static_cast<std::size_t>(m)].push_back(pw.mean());
        }
    }
    return table;
}

}  // namespace mfpca
