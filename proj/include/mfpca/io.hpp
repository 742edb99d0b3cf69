#pragma once

#include "mfpca/evaluation.hpp"
#include "mfpca/mfpca.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace mfpca::io {

// All floats cross the text boundary at 17 significant digits so that a
// write/read round trip is bit-exact.
std::string formatDouble(double x);

void writeMatrixCsv(const std::filesystem::path& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd readMatrixCsv(const std::filesystem::path& path);

// Dataset layout: <dir>/manifest.json plus one CSV per element. Dense
// elements are N rows x grid-size columns; sparse elements use long format
// with header obs,t1[,t2],value and only the observed points.
void writeDataset(const std::filesystem::path& dir, const MultiFunData& data);
MultiFunData readDataset(const std::filesystem::path& dir);

// Fit output: summary.json (eigenvalues, pve, weights, flags, the caller's
// config echo) plus eigenfunctions_<element>.csv (rows = components),
// mean_<element>.csv and scores.csv.
void writeResult(const std::filesystem::path& dir, const MFPCAResult& result,
                 const nlohmann::json& configEcho);

// Bootstrap bands: per component and element, columns
// t1[,t2],lower_<level>...,upper_<level>... in band_c<m>_<element>.csv,
// plus bands.json with the levels and replicate accounting.
void writeBands(const std::filesystem::path& dir, const BandSet& bands,
                const std::vector<Domain>& domains, const std::vector<double>& levels);

nlohmann::json loadJson(const std::filesystem::path& path);

}  // namespace mfpca::io
