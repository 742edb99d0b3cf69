#include "mfpca/fundata.hpp"

#include <cmath>
#include <stdexcept>

namespace mfpca {

Eigen::Index Domain::size() const {
    Eigen::Index s = 1;
    for (const auto& ax : axes) s *= ax.size();
    return s;
}

double Domain::measure() const {
    double m = 1.0;
    for (const auto& ax : axes) m *= ax(ax.size() - 1) - ax(0);
    return m;
}

void Domain::validate() const {
    if (axes.empty() || axes.size() > 2)
        throw std::invalid_argument("Domain: dimension must be 1 or 2");
    for (const auto& ax : axes) {
        if (ax.size() < 2)
            throw std::invalid_argument("Domain: every axis needs at least 2 points");
        for (Eigen::Index i = 1; i < ax.size(); ++i)
            if (!(ax(i) > ax(i - 1)))
                throw std::invalid_argument("Domain: axis points must be strictly increasing");
    }
}

Domain Domain::interval(double a, double b, Eigen::Index n) {
    Domain d;
    d.axes.push_back(Eigen::VectorXd::LinSpaced(n, a, b));
    d.validate();
    return d;
}

Domain Domain::rectangle(double a1, double b1, Eigen::Index n1,
                         double a2, double b2, Eigen::Index n2) {
    Domain d;
    d.axes.push_back(Eigen::VectorXd::LinSpaced(n1, a1, b1));
    d.axes.push_back(Eigen::VectorXd::LinSpaced(n2, a2, b2));
    d.validate();
    return d;
}

bool sameDomain(const Domain& a, const Domain& b, double tol) {
    if (a.axes.size() != b.axes.size()) return false;
    for (std::size_t k = 0; k < a.axes.size(); ++k) {
        if (a.axes[k].size() != b.axes[k].size()) return false;
        if ((a.axes[k] - b.axes[k]).cwiseAbs().maxCoeff() > tol) return false;
    }
    return true;
}

namespace {

Eigen::VectorXd trapezoidWeights(const Eigen::VectorXd& axis) {
    const Eigen::Index n = axis.size();
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        const double h = 0.5 * (axis(i + 1) - axis(i));
        w(i) += h;
        w(i + 1) += h;
    }
    return w;
}

}  // namespace

Eigen::VectorXd quadratureWeights(const Domain& domain) {
    domain.validate();
    Eigen::VectorXd w = trapezoidWeights(domain.axes[0]);
    if (domain.dim() == 2) {
        const Eigen::VectorXd w2 = trapezoidWeights(domain.axes[1]);
        Eigen::VectorXd out(w.size() * w2.size());
        for (Eigen::Index i = 0; i < w.size(); ++i)
            for (Eigen::Index j = 0; j < w2.size(); ++j)
                out(i * w2.size() + j) = w(i) * w2(j);
        return out;
    }
    return w;
}

void ElementSample::validate() const {
    domain.validate();
    if (values.cols() != domain.size())
        throw std::invalid_argument("ElementSample: values shape does not match grid size");
    if (mask) {
        if (mask->rows() != values.rows() || mask->cols() != values.cols())
            throw std::invalid_argument("ElementSample: mask shape mismatch");
        for (Eigen::Index i = 0; i < mask->rows(); ++i)
            if (!mask->row(i).any())
                throw std::invalid_argument("ElementSample: observation with no observed point");
    }
}

Eigen::Index MultiFunData::sampleSize() const {
    return elements.empty() ? 0 : elements.front().sampleSize();
}

void MultiFunData::validate() const {
    if (elements.empty())
        throw std::invalid_argument("MultiFunData: needs at least one element");
    const Eigen::Index n = elements.front().sampleSize();
    for (const auto& e : elements) {
        e.validate();
        if (e.sampleSize() != n)
            throw std::invalid_argument("MultiFunData: elements disagree on sample size");
    }
}

MultiGridFunction MultiFunData::observation(Eigen::Index i) const {
    MultiGridFunction f;
    for (const auto& e : elements)
        f.elements.push_back({e.domain, e.values.row(i).transpose()});
    return f;
}

double scalarProduct(const MultiGridFunction& f, const MultiGridFunction& g,
                     const std::vector<double>& weights) {
    if (f.elements.size() != g.elements.size() || f.elements.size() != weights.size())
        throw std::invalid_argument("scalarProduct: element/weight count mismatch");
    double total = 0.0;
    for (std::size_t j = 0; j < f.elements.size(); ++j) {
        if (weights[j] <= 0.0)
            throw std::invalid_argument("scalarProduct: weights must be positive");
        if (!sameDomain(f.elements[j].domain, g.elements[j].domain))
            throw std::invalid_argument("scalarProduct: domain mismatch");
        const Eigen::VectorXd q = quadratureWeights(f.elements[j].domain);
        total += weights[j] *
                 (q.array() * f.elements[j].values.array() * g.elements[j].values.array()).sum();
    }
    return total;
}

double scalarProduct(const MultiGridFunction& f, const MultiGridFunction& g) {
    return scalarProduct(f, g, std::vector<double>(f.elements.size(), 1.0));
}

double normOf(const MultiGridFunction& f, const std::vector<double>& weights) {
    return std::sqrt(std::max(0.0, scalarProduct(f, f, weights)));
}

double normOf(const MultiGridFunction& f) {
    return normOf(f, std::vector<double>(f.elements.size(), 1.0));
}

CenterResult center(const MultiFunData& data) {
    data.validate();
    if (data.sampleSize() < 2)
        throw std::invalid_argument("center: needs N >= 2");
    CenterResult out;
    out.centered = data;
    for (std::size_t j = 0; j < data.elements.size(); ++j) {
        const auto& e = data.elements[j];
        Eigen::VectorXd mean(e.values.cols());
        if (!e.mask) {
            mean = e.values.colwise().mean();
            out.centered.elements[j].values = e.values.rowwise() - mean.transpose();
        } else {
            for (Eigen::Index g = 0; g < e.values.cols(); ++g) {
                double s = 0.0;
                Eigen::Index cnt = 0;
                for (Eigen::Index i = 0; i < e.values.rows(); ++i)
                    if ((*e.mask)(i, g)) {
                        s += e.values(i, g);
                        ++cnt;
                    }
                if (cnt == 0)
                    throw std::runtime_error("center: grid point observed in zero observations");
                mean(g) = s / static_cast<double>(cnt);
            }
            for (Eigen::Index i = 0; i < e.values.rows(); ++i)
                for (Eigen::Index g = 0; g < e.values.cols(); ++g)
                    out.centered.elements[j].values(i, g) =
                        (*e.mask)(i, g) ? e.values(i, g) - mean(g) : 0.0;
        }
        out.mean.elements.push_back({e.domain, mean});
    }
    return out;
}

}  // namespace mfpca
