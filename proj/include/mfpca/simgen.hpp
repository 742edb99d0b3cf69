#pragma once

#include "mfpca/fundata.hpp"

#include <cstdint>

namespace mfpca {

enum class EigenvalueDecay {
    Exp,       // exp(-(m+1)/2)
    Lin,       // (M+1-m)/M
    TableExp,  // exp(-(m-1)/2), leading value 1
};

enum class SparsityLevel { None, Medium, High };

struct SimulationSpec {
    enum class Setting { SplitFourier, TensorMixed };
    Setting setting = Setting::SplitFourier;
    int p = 2;
    std::vector<double> splitPoints;  // 0 = T_1 < ... < T_{p+1} (SplitFourier)
    std::vector<double> shifts;       // eta_j
    std::vector<int> signs;           // sigma_j in {-1, +1}
    int M = 8;
    EigenvalueDecay decay = EigenvalueDecay::TableExp;
    Eigen::Index N = 250;
    double sigma2 = 0.0;
    std::vector<Eigen::Index> gridSizes;  // per element (two entries per 2D element)
    SparsityLevel sparsity = SparsityLevel::None;
    std::uint64_t seed = 1;

    // canned settings: 1 = two curves on [0,1], 2 = three curves on
    // staggered intervals, 3 = one image element plus one curve element
    static SimulationSpec setting1();
    static SimulationSpec setting2();
    static SimulationSpec setting3();
};

Eigen::VectorXd decayEigenvalues(EigenvalueDecay decay, int M);

// Split-Fourier construction: Fourier functions on the base interval cut
// at the split points, shifted and sign-flipped; orthonormal in H.
std::vector<MultiGridFunction> splitFourierBasis(const SimulationSpec& spec);

// Setting-3 construction: tensor Fourier eigenimages on
// [0,1]x[0,0.5] weighted sqrt(alpha), Legendre on [-1,1] weighted
// sqrt(1-alpha), alpha = u1/(u1+u2) with u ~ U(0.2, 0.8).
struct TensorMixedBasis {
    std::vector<MultiGridFunction> functions;
    double alpha;
};
TensorMixedBasis tensorMixedBasis(const SimulationSpec& spec);

struct SimulatedData {
    MultiFunData data;
    Eigen::MatrixXd trueScores;  // N x M
    Eigen::VectorXd trueEigenvalues;
    std::vector<MultiGridFunction> trueEigenfunctions;
};

// x_i = sum_m rho_im psi_m + noise, scores ~ N(0, nu_m), iid pointwise
// Gaussian noise with variance sigma2; bit-reproducible for fixed seed.
SimulatedData sampleObservations(const std::vector<MultiGridFunction>& eigenfunctions,
                                 EigenvalueDecay decay, Eigen::Index N, double sigma2,
                                 std::uint64_t seed);

// Convenience: build the spec's basis and sample from it (applies
// sparsification when requested).
SimulatedData simulate(const SimulationSpec& spec);

// Per observation and element, keep a uniform count in the complementary
// keep-range (medium: 30-50%, high: 5-10% of points), positions uniform
// without replacement; at least one point survives.
MultiFunData sparsify(const MultiFunData& data, SparsityLevel level, std::uint64_t seed);

}  // namespace mfpca
