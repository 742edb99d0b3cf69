#include "mfpca/simgen.hpp"

#include "mfpca/basis.hpp"
#include "mfpca/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace mfpca {

SimulationSpec SimulationSpec::setting1() {
    SimulationSpec s;
    s.setting = Setting::SplitFourier;
    s.p = 2;
    s.splitPoints = {0.0, 1.0, 2.0};
    s.shifts = {0.0, -1.0};
    s.signs = {1, -1};
    s.M = 8;
    s.gridSizes = {100, 100};
    return s;
}

SimulationSpec SimulationSpec::setting2() {
    SimulationSpec s;
    s.setting = Setting::SplitFourier;
    s.p = 3;
    // base interval [0,3]; shifts reproduce T_1=[-1,0.5], T_2=[0,1], T_3=[1.5,2]
    s.splitPoints = {0.0, 1.5, 2.5, 3.0};
    s.shifts = {-1.0, -1.5, -1.0};
    s.signs = {1, -1, 1};
    s.M = 8;
    s.gridSizes = {50, 100, 50};
    return s;
}

SimulationSpec SimulationSpec::setting3() {
    SimulationSpec s;
    s.setting = Setting::TensorMixed;
    s.p = 2;
    s.M = 25;
    s.decay = EigenvalueDecay::TableExp;
    s.gridSizes = {100, 50, 200};  // image S1 x S2, then curve grid
    return s;
}

Eigen::VectorXd decayEigenvalues(EigenvalueDecay decay, int M) {
    Eigen::VectorXd nu(M);
    for (int m = 1; m <= M; ++m) {
        switch (decay) {
            case EigenvalueDecay::Exp:
                nu(m - 1) = std::exp(-(m + 1) / 2.0);
                break;
            case EigenvalueDecay::Lin:
                nu(m - 1) = static_cast<double>(M + 1 - m) / M;
                break;
            case EigenvalueDecay::TableExp:
                nu(m - 1) = std::exp(-(m - 1) / 2.0);
                break;
        }
    }
    return nu;
}

std::vector<MultiGridFunction> splitFourierBasis(const SimulationSpec& spec) {
    const int p = spec.p;
    if (static_cast<int>(spec.splitPoints.size()) != p + 1 ||
        static_cast<int>(spec.shifts.size()) != p ||
        static_cast<int>(spec.signs.size()) != p ||
        static_cast<int>(spec.gridSizes.size()) != p)
        throw std::invalid_argument("splitFourierBasis: inconsistent spec");
    for (int j = 0; j < p; ++j)
        if (!(spec.splitPoints[static_cast<std::size_t>(j)] <
              spec.splitPoints[static_cast<std::size_t>(j) + 1]))
            throw std::invalid_argument("splitFourierBasis: split points must increase");
    const double tEnd = spec.splitPoints.back();

    std::vector<MultiGridFunction> psi(static_cast<std::size_t>(spec.M));
    for (int j = 0; j < p; ++j) {
        const double a = spec.splitPoints[static_cast<std::size_t>(j)] +
                         spec.shifts[static_cast<std::size_t>(j)];
        const double b = spec.splitPoints[static_cast<std::size_t>(j) + 1] +
                         spec.shifts[static_cast<std::size_t>(j)];
        const Domain dom = Domain::interval(a, b, spec.gridSizes[static_cast<std::size_t>(j)]);
        const Eigen::VectorXd unshifted =
            dom.axes[0].array() - spec.shifts[static_cast<std::size_t>(j)];
        if (unshifted.minCoeff() < -1e-9 || unshifted.maxCoeff() > tEnd + 1e-9)
            throw std::invalid_argument("splitFourierBasis: grid outside shifted interval");
        const Eigen::MatrixXd F = fourierBasis1d(unshifted, 0.0, tEnd, spec.M);
        for (int m = 0; m < spec.M; ++m)
            psi[static_cast<std::size_t>(m)].elements.push_back(
                {dom, static_cast<double>(spec.signs[static_cast<std::size_t>(j)]) * F.col(m)});
    }
    return psi;
}

TensorMixedBasis tensorMixedBasis(const SimulationSpec& spec) {
    const int root = static_cast<int>(std::lround(std::sqrt(static_cast<double>(spec.M))));
    if (root * root != spec.M)
        throw std::invalid_argument("tensorMixedBasis: M must be a perfect square");
    if (spec.gridSizes.size() != 3)
        throw std::invalid_argument("tensorMixedBasis: needs grid sizes (S1, S2, curve)");

    CounterRng rng(spec.seed, /*stream=*/7);
    const double u1 = rng.uniform(0.2, 0.8);
    const double u2 = rng.uniform(0.2, 0.8);
    const double alpha = u1 / (u1 + u2);

    const Domain imageDom = Domain::rectangle(0.0, 1.0, spec.gridSizes[0], 0.0, 0.5,
                                              spec.gridSizes[1]);
    const Domain curveDom = Domain::interval(-1.0, 1.0, spec.gridSizes[2]);

    const Eigen::MatrixXd F1 = fourierBasis1d(imageDom.axes[0], 0.0, 1.0, root);
    const Eigen::MatrixXd F2 = fourierBasis1d(imageDom.axes[1], 0.0, 0.5, root);
    const Eigen::MatrixXd L = legendreBasis1d(curveDom.axes[0], spec.M);

    TensorMixedBasis out;
    out.alpha = alpha;
    const Eigen::Index S1 = spec.gridSizes[0], S2 = spec.gridSizes[1];
    for (int m = 0; m < spec.M; ++m) {
        const int m1 = m / root, m2 = m % root;
        Eigen::VectorXd img(S1 * S2);
        for (Eigen::Index i = 0; i < S1; ++i)
            for (Eigen::Index j = 0; j < S2; ++j)
                img(i * S2 + j) = std::sqrt(alpha) * F1(i, m1) * F2(j, m2);
        MultiGridFunction f;
        f.elements.push_back({imageDom, img});
        f.elements.push_back({curveDom, (std::sqrt(1.0 - alpha) * L.col(m)).eval()});
        out.functions.push_back(std::move(f));
    }
    return out;
}

SimulatedData sampleObservations(const std::vector<MultiGridFunction>& eigenfunctions,
                                 EigenvalueDecay decay, Eigen::Index N, double sigma2,
                                 std::uint64_t seed) {
    const int M = static_cast<int>(eigenfunctions.size());
    if (M == 0) throw std::invalid_argument("sampleObservations: no eigenfunctions");
    const int p = eigenfunctions.front().numElements();

    SimulatedData out;
    out.trueEigenvalues = decayEigenvalues(decay, M);
    out.trueEigenfunctions = eigenfunctions;

    CounterRng scoreRng = CounterRng(seed).split(1);
    out.trueScores.resize(N, M);
    for (Eigen::Index i = 0; i < N; ++i)
        for (int m = 0; m < M; ++m)
            out.trueScores(i, m) = std::sqrt(out.trueEigenvalues(m)) * scoreRng.normal();

    for (int j = 0; j < p; ++j) {
        const auto& dom = eigenfunctions.front().elements[static_cast<std::size_t>(j)].domain;
        Eigen::MatrixXd Psi(M, dom.size());
        for (int m = 0; m < M; ++m)
            Psi.row(m) = eigenfunctions[static_cast<std::size_t>(m)]
                             .elements[static_cast<std::size_t>(j)]
                             .values.transpose();
        ElementSample e;
        e.domain = dom;
        e.values = out.trueScores * Psi;
        if (sigma2 > 0.0) {
            CounterRng noiseRng = CounterRng(seed).split(100 + static_cast<std::uint64_t>(j));
            const double sd = std::sqrt(sigma2);
            for (Eigen::Index i = 0; i < N; ++i)
                for (Eigen::Index g = 0; g < e.values.cols(); ++g)
                    e.values(i, g) += sd * noiseRng.normal();
        }
        out.data.elements.push_back(std::move(e));
        out.data.labels.push_back("element" + std::to_string(j + 1));
    }
    return out;
}

MultiFunData sparsify(const MultiFunData& data, SparsityLevel level, std::uint64_t seed) {
    if (level == SparsityLevel::None) return data;
    const double lo = level == SparsityLevel::Medium ? 0.30 : 0.05;
    const double hi = level == SparsityLevel::Medium ? 0.50 : 0.10;

    MultiFunData out = data;
    for (std::size_t j = 0; j < data.elements.size(); ++j) {
        const auto& e = data.elements[j];
        const Eigen::Index N = e.sampleSize();
        const Eigen::Index G = e.values.cols();
        const Eigen::Index kLo = std::max<Eigen::Index>(
            1, static_cast<Eigen::Index>(std::ceil(lo * static_cast<double>(G))));
        const Eigen::Index kHi = std::max(
            kLo, static_cast<Eigen::Index>(std::floor(hi * static_cast<double>(G))));
        if (kLo > G) throw std::invalid_argument("sparsify: keep-range empty for tiny grid");
        BoolMatrix mask = BoolMatrix::Constant(N, G, false);
        CounterRng rng = CounterRng(seed).split(200 + j);
        std::vector<Eigen::Index> pos(static_cast<std::size_t>(G));
        for (Eigen::Index i = 0; i < N; ++i) {
            const Eigen::Index k =
                kLo + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(kHi - kLo + 1)));
            for (Eigen::Index g = 0; g < G; ++g) pos[static_cast<std::size_t>(g)] = g;
            // partial Fisher-Yates: first k entries are the kept positions
            for (Eigen::Index r = 0; r < k; ++r) {
                const Eigen::Index swap =
                    r + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(G - r)));
                std::swap(pos[static_cast<std::size_t>(r)], pos[static_cast<std::size_t>(swap)]);
                mask(i, pos[static_cast<std::size_t>(r)]) = true;
            }
        }
        out.elements[j].mask = std::move(mask);
    }
    return out;
}

SimulatedData simulate(const SimulationSpec& spec) {
    SimulatedData out;
    if (spec.setting == SimulationSpec::Setting::SplitFourier) {
        out = sampleObservations(splitFourierBasis(spec), spec.decay, spec.N, spec.sigma2,
                                 spec.seed);
    } else {
        out = sampleObservations(tensorMixedBasis(spec).functions, spec.decay, spec.N,
                                 spec.sigma2, spec.seed);
    }
    if (spec.sparsity != SparsityLevel::None)
        out.data = sparsify(out.data, spec.sparsity, spec.seed + 1);
    return out;
}

}  // namespace mfpca
