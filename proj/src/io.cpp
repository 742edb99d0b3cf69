#include "mfpca/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mfpca::io {

namespace fs = std::filesystem;
using nlohmann::json;

std::string formatDouble(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

static json axesToJson(const Domain& d) {
    json axes = json::array();
    for (const auto& a : d.axes) {
        json axis = json::array();
        for (Eigen::Index i = 0; i < a.size(); ++i) axis.push_back(a(i));
        axes.push_back(std::move(axis));
    }
    return axes;
}

static Domain axesFromJson(const json& axes) {
    Domain d;
    for (const auto& axis : axes) {
        Eigen::VectorXd a(axis.size());
        Eigen::Index i = 0;
        for (const auto& v : axis) a(i++) = v.get<double>();
        d.axes.push_back(std::move(a));
    }
    d.validate();
    return d;
}

void writeMatrixCsv(const fs::path& path, const Eigen::MatrixXd& m) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << formatDouble(m(i, j));
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

Eigen::MatrixXd readMatrixCsv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (!rows.empty() && row.size() != rows.front().size())
            throw std::runtime_error("ragged CSV: " + path.string());
        rows.push_back(std::move(row));
    }
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                      rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return m;
}

// long format for sparse elements: obs,t1[,t2],value (observed points only)
static void writeSparseCsv(const fs::path& path, const ElementSample& e) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    const bool twod = e.domain.dim() == 2;
    out << (twod ? "obs,t1,t2,value\n" : "obs,t1,value\n");
    const Eigen::Index n2 = twod ? e.domain.axes[1].size() : 1;
    for (Eigen::Index i = 0; i < e.values.rows(); ++i)
        for (Eigen::Index g = 0; g < e.values.cols(); ++g) {
            if (e.mask && !(*e.mask)(i, g)) continue;
            out << i << ',' << formatDouble(e.domain.axes[0](g / n2));
            if (twod) out << ',' << formatDouble(e.domain.axes[1](g % n2));
            out << ',' << formatDouble(e.values(i, g)) << '\n';
        }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

static Eigen::Index axisIndex(const Eigen::VectorXd& axis, double t) {
    Eigen::Index best = 0;
    (axis.array() - t).abs().minCoeff(&best);
    const double spacing = axis.size() > 1 ? (axis(axis.size() - 1) - axis(0)) /
                                                 static_cast<double>(axis.size() - 1)
                                           : 1.0;
    if (std::abs(axis(best) - t) > 0.5 * spacing + 1e-9)
        throw std::runtime_error("sparse CSV point off the declared grid");
    return best;
}

static ElementSample readSparseCsv(const fs::path& path, const Domain& domain, Eigen::Index N) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path.string());
    const bool twod = domain.dim() == 2;
    const Eigen::Index G = domain.size();
    ElementSample e{domain, Eigen::MatrixXd::Zero(N, G), BoolMatrix::Constant(N, G, false)};
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != static_cast<std::size_t>(twod ? 4 : 3))
            throw std::runtime_error("malformed sparse CSV row: " + path.string());
        const Eigen::Index i = std::stoll(cells[0]);
        if (i < 0 || i >= N) throw std::runtime_error("sparse CSV obs id out of range");
        Eigen::Index g = axisIndex(domain.axes[0], std::stod(cells[1]));
        if (twod)
            g = g * domain.axes[1].size() + axisIndex(domain.axes[1], std::stod(cells[2]));
        e.values(i, g) = std::stod(cells.back());
        (*e.mask)(i, g) = true;
    }
    return e;
}

void writeDataset(const fs::path& dir, const MultiFunData& data) {
    data.validate();
    fs::create_directories(dir);
    json manifest;
    manifest["type"] = "mfpca-dataset";
    manifest["n_observations"] = data.sampleSize();
    json elements = json::array();
    for (std::size_t j = 0; j < data.elements.size(); ++j) {
        const auto& e = data.elements[j];
        const std::string name = j < data.labels.size() && !data.labels[j].empty()
                                     ? data.labels[j]
                                     : "element" + std::to_string(j + 1);
        const std::string csv = "element" + std::to_string(j + 1) + ".csv";
        const bool sparse = e.mask.has_value();
        elements.push_back({{"name", name},
                            {"csv", csv},
                            {"sparse", sparse},
                            {"axes", axesToJson(e.domain)}});
        if (sparse)
            writeSparseCsv(dir / csv, e);
        else
            writeMatrixCsv(dir / csv, e.values);
    }
    manifest["elements"] = std::move(elements);
    std::ofstream out(dir / "manifest.json");
    out << manifest.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed: " + (dir / "manifest.json").string());
}

json loadJson(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path.string());
    json j;
    in >> j;
    return j;
}

MultiFunData readDataset(const fs::path& dir) {
    const json manifest = loadJson(dir / "manifest.json");
    if (manifest.value("type", "") != "mfpca-dataset")
        throw std::runtime_error("not a dataset manifest: " + (dir / "manifest.json").string());
    const Eigen::Index N = manifest.at("n_observations").get<Eigen::Index>();
    MultiFunData data;
    for (const auto& el : manifest.at("elements")) {
        const Domain domain = axesFromJson(el.at("axes"));
        const fs::path csv = dir / el.at("csv").get<std::string>();
        if (el.at("sparse").get<bool>()) {
            data.elements.push_back(readSparseCsv(csv, domain, N));
        } else {
            Eigen::MatrixXd values = readMatrixCsv(csv);
            if (values.rows() != N || values.cols() != domain.size())
                throw std::runtime_error("CSV shape disagrees with manifest: " + csv.string());
            data.elements.push_back({domain, std::move(values), std::nullopt});
        }
        data.labels.push_back(el.at("name").get<std::string>());
    }
    data.validate();
    return data;
}

void writeResult(const fs::path& dir, const MFPCAResult& result, const json& configEcho) {
    fs::create_directories(dir);
    json summary;
    summary["type"] = "mfpca-result";
    summary["eigenvalues"] = json::array();
    for (Eigen::Index m = 0; m < result.eigenvalues.size(); ++m)
        summary["eigenvalues"].push_back(result.eigenvalues(m));
    summary["pve"] = json::array();
    for (Eigen::Index m = 0; m < result.pve.size(); ++m) summary["pve"].push_back(result.pve(m));
    summary["weights"] = result.weights;
    summary["block_sizes"] = result.blockSizes;
    summary["degenerate_spectrum"] = result.degenerateSpectrum;
    summary["blup_scores"] = result.blupScores;
    summary["config"] = configEcho;
    std::ofstream out(dir / "summary.json");
    out << summary.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed: " + (dir / "summary.json").string());

    writeMatrixCsv(dir / "scores.csv", result.scores);
    for (std::size_t j = 0; j < result.eigenfunctions.size(); ++j) {
        const std::string tag = std::to_string(j + 1);
        writeMatrixCsv(dir / ("eigenfunctions_element" + tag + ".csv"),
                       result.eigenfunctions[j]);
        writeMatrixCsv(dir / ("mean_element" + tag + ".csv"),
                       result.means[j].transpose());
    }
}

void writeBands(const fs::path& dir, const BandSet& bands, const std::vector<Domain>& domains,
                const std::vector<double>& levels) {
    fs::create_directories(dir);
    json meta;
    meta["type"] = "mfpca-bands";
    meta["levels"] = levels;
    meta["replicates"] = bands.replicates;
    meta["failures"] = bands.failures;
    meta["components"] = bands.lower.size();
    std::ofstream out(dir / "bands.json");
    out << meta.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed: " + (dir / "bands.json").string());

    for (std::size_t m = 0; m < bands.lower.size(); ++m)
        for (std::size_t j = 0; j < bands.lower[m].size(); ++j) {
            const Domain& d = domains[j];
            const Eigen::Index n2 = d.dim() == 2 ? d.axes[1].size() : 1;
            std::ofstream csv(dir / ("band_c" + std::to_string(m + 1) + "_element" +
                                     std::to_string(j + 1) + ".csv"));
            csv << (d.dim() == 2 ? "t1,t2" : "t1");
            for (double lv : levels) csv << ",lower_" << lv;
            for (double lv : levels) csv << ",upper_" << lv;
            csv << '\n';
            for (Eigen::Index g = 0; g < d.size(); ++g) {
                csv << formatDouble(d.axes[0](g / n2));
                if (d.dim() == 2) csv << ',' << formatDouble(d.axes[1](g % n2));
                for (Eigen::Index l = 0; l < bands.lower[m][j].cols(); ++l)
                    csv << ',' << formatDouble(bands.lower[m][j](g, l));
                for (Eigen::Index l = 0; l < bands.upper[m][j].cols(); ++l)
                    csv << ',' << formatDouble(bands.upper[m][j](g, l));
                csv << '\n';
            }
            if (!csv) throw std::runtime_error("write failed: band CSV");
        }
}

}  // namespace mfpca::io
