#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace mfpca {

// Rectangular sampling domain, 1D or 2D. For 2D the grid is the Cartesian
// product of the two axes; values are flattened row-major with the first
// axis slowest. All modules share this convention.
struct Domain {
    std::vector<Eigen::VectorXd> axes;

    int dim() const { return static_cast<int>(axes.size()); }
    Eigen::Index size() const;
    double measure() const;
    void validate() const;

    static Domain interval(double a, double b, Eigen::Index n);
    static Domain rectangle(double a1, double b1, Eigen::Index n1,
                            double a2, double b2, Eigen::Index n2);
};

bool sameDomain(const Domain& a, const Domain& b, double tol = 1e-12);

// Composite trapezoid weights on the stored grid; 2D weights are the outer
// product of the axis weights, flattened row-major.
Eigen::VectorXd quadratureWeights(const Domain& domain);

// One element of a multivariate function (a single observation), evaluated
// on its grid.
struct GridFunction {
    Domain domain;
    Eigen::VectorXd values;
};

// A single multivariate function (p elements on their own domains).
struct MultiGridFunction {
    std::vector<GridFunction> elements;

    int numElements() const { return static_cast<int>(elements.size()); }
};

using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

// N observations of one element; rows are observations. The optional mask
// marks observed entries for sparse curves.
struct ElementSample {
    Domain domain;
    Eigen::MatrixXd values;  // N x grid size
    std::optional<BoolMatrix> mask;

    Eigen::Index sampleSize() const { return values.rows(); }
    void validate() const;
};

struct MultiFunData {
    std::vector<ElementSample> elements;
    std::vector<std::string> labels;

    int numElements() const { return static_cast<int>(elements.size()); }
    Eigen::Index sampleSize() const;
    void validate() const;

    MultiGridFunction observation(Eigen::Index i) const;
};

// Weighted scalar product across elements:
//   sum_j w_j * sum_grid quad * f^(j) * g^(j).
double scalarProduct(const MultiGridFunction& f, const MultiGridFunction& g,
                     const std::vector<double>& weights);
double scalarProduct(const MultiGridFunction& f, const MultiGridFunction& g);

double normOf(const MultiGridFunction& f, const std::vector<double>& weights);
double normOf(const MultiGridFunction& f);

// Pointwise demeaning per element; masked points are excluded from the
// mean. Throws if some grid point is observed in zero observations.
struct CenterResult {
    MultiFunData centered;
    MultiGridFunction mean;
};
CenterResult center(const MultiFunData& data);

}  // namespace mfpca
