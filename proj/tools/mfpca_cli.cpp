// Command-line front end: simulate, fit, bootstrap, experiment, report.
#include "mfpca/evaluation.hpp"
#include "mfpca/io.hpp"
#include "mfpca/pipeline.hpp"
#include "mfpca/simgen.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mfpca;

namespace {

constexpr const char* kVersion = "1.0.0";

// distinct exit codes per failure class
constexpr int kExitSchema = 2;    // config violates the schema
constexpr int kExitMissing = 3;   // referenced file does not exist
constexpr int kExitFit = 4;       // numerical fit failed
constexpr int kExitOverwrite = 5; // output exists and --force not given

struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MissingFileError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void requireKeys(const json& obj, const std::string& ctx,
                 std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw SchemaError(ctx + ": expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (std::none_of(allowed.begin(), allowed.end(),
                         [&](const char* k) { return it.key() == k; }))
            throw SchemaError(ctx + ": unknown key '" + it.key() + "'");
    }
}

SimulationSpec parseSimulation(const json& sim, std::optional<std::uint64_t> seedOverride) {
    requireKeys(sim, "simulation",
                {"setting", "N", "sigma2", "decay", "sparsity", "M", "grid_sizes", "seed"});
    const int setting = sim.value("setting", 1);
    SimulationSpec s;
    switch (setting) {
        case 1: s = SimulationSpec::setting1(); break;
        case 2: s = SimulationSpec::setting2(); break;
        case 3: s = SimulationSpec::setting3(); break;
        default: throw SchemaError("simulation.setting: must be 1, 2 or 3");
    }
    if (sim.contains("N")) s.N = sim.at("N").get<Eigen::Index>();
    if (sim.contains("sigma2")) s.sigma2 = sim.at("sigma2").get<double>();
    if (sim.contains("M")) s.M = sim.at("M").get<int>();
    if (sim.contains("seed")) s.seed = sim.at("seed").get<std::uint64_t>();
    if (sim.contains("decay")) {
        const std::string d = sim.at("decay").get<std::string>();
        if (d == "exp") s.decay = EigenvalueDecay::Exp;
        else if (d == "lin") s.decay = EigenvalueDecay::Lin;
        else if (d == "table_exp") s.decay = EigenvalueDecay::TableExp;
        else throw SchemaError("simulation.decay: must be exp, lin or table_exp");
    }
    if (sim.contains("sparsity")) {
        const std::string sp = sim.at("sparsity").get<std::string>();
        if (sp == "none") s.sparsity = SparsityLevel::None;
        else if (sp == "medium") s.sparsity = SparsityLevel::Medium;
        else if (sp == "high") s.sparsity = SparsityLevel::High;
        else throw SchemaError("simulation.sparsity: must be none, medium or high");
    }
    if (sim.contains("grid_sizes")) {
        s.gridSizes.clear();
        for (const auto& g : sim.at("grid_sizes")) s.gridSizes.push_back(g.get<Eigen::Index>());
    }
    if (seedOverride) s.seed = *seedOverride;
    return s;
}

UnivariateConfig parseUnivariate(const json& u, const std::string& ctx) {
    requireKeys(u, ctx,
                {"type", "M", "pve", "smooth_covariance", "K", "K1", "K2", "penalty_order",
                 "lambda", "components"});
    UnivariateConfig cfg;
    const std::string type = u.value("type", "fpca");
    if (type == "fpca") cfg.type = UnivariateConfig::Type::Fpca;
    else if (type == "sparse_fpca") cfg.type = UnivariateConfig::Type::SparseFpca;
    else if (type == "bspline") cfg.type = UnivariateConfig::Type::Bspline;
    else if (type == "tensor_bspline") cfg.type = UnivariateConfig::Type::TensorBspline;
    else if (type == "fcp_tpa") cfg.type = UnivariateConfig::Type::FcpTpa;
    else throw SchemaError(ctx + ".type: unknown type '" + type + "'");
    if (u.contains("M") && u.contains("pve"))
        throw SchemaError(ctx + ": give M or pve, not both");
    if (u.contains("M")) cfg.truncation = Truncation::count(u.at("M").get<int>());
    if (u.contains("pve")) cfg.truncation = Truncation::varianceExplained(u.at("pve").get<double>());
    cfg.smoothCovariance = u.value("smooth_covariance", false);
    if (u.contains("K")) cfg.K = u.at("K").get<int>();
    if (u.contains("K1")) cfg.K1 = u.at("K1").get<int>();
    if (u.contains("K2")) cfg.K2 = u.at("K2").get<int>();
    if (u.contains("penalty_order")) cfg.penaltyOrder = u.at("penalty_order").get<int>();
    if (u.contains("lambda")) cfg.lambda = u.at("lambda").get<double>();
    if (u.contains("components")) cfg.fcpComponents = u.at("components").get<int>();
    return cfg;
}

PipelineConfig parsePipeline(const json& config, std::size_t numElements) {
    PipelineConfig cfg;
    if (config.contains("univariate")) {
        const json& arr = config.at("univariate");
        if (!arr.is_array()) throw SchemaError("univariate: expected an array");
        for (std::size_t j = 0; j < arr.size(); ++j)
            cfg.univariate.push_back(
                parseUnivariate(arr[j], "univariate[" + std::to_string(j) + "]"));
    }
    if (cfg.univariate.empty())
        cfg.univariate.assign(numElements, UnivariateConfig{});
    else if (cfg.univariate.size() == 1 && numElements > 1)
        cfg.univariate.assign(numElements, cfg.univariate.front());
    else if (cfg.univariate.size() != numElements)
        throw SchemaError("univariate: " + std::to_string(cfg.univariate.size()) +
                          " entries for " + std::to_string(numElements) + " elements");
    if (config.contains("mfpca")) {
        const json& m = config.at("mfpca");
        requireKeys(m, "mfpca", {"M", "pve", "weights"});
        if (m.contains("M") && m.contains("pve"))
            throw SchemaError("mfpca: give M or pve, not both");
        if (m.contains("M")) cfg.truncation = Truncation::count(m.at("M").get<int>());
        if (m.contains("pve"))
            cfg.truncation = Truncation::varianceExplained(m.at("pve").get<double>());
        if (m.contains("weights")) {
            const json& w = m.at("weights");
            if (w.is_string()) {
                const std::string ws = w.get<std::string>();
                if (ws == "unit") cfg.weightRule = PipelineConfig::WeightRule::Unit;
                else if (ws == "estimate") cfg.weightRule = PipelineConfig::WeightRule::Estimate;
                else throw SchemaError("mfpca.weights: must be unit, estimate or an array");
            } else if (w.is_array()) {
                cfg.weightRule = PipelineConfig::WeightRule::Explicit;
                for (const auto& v : w) cfg.explicitWeights.push_back(v.get<double>());
            } else {
                throw SchemaError("mfpca.weights: must be unit, estimate or an array");
            }
        }
    }
    return cfg;
}

struct Cli {
    std::string configPath;
    std::string outDir;
    std::optional<std::uint64_t> seed;
    int jobs = 1;
    bool force = false;

    json config;  // loaded document

    json echo(const std::string& command) const {
        json e;
        e["version"] = kVersion;
        e["command"] = command;
        if (seed) e["seed"] = *seed;
        e["jobs"] = jobs;
        e["config"] = config;
        return e;
    }
};

void loadConfig(Cli& cli, std::initializer_list<const char*> topLevelKeys) {
    if (cli.configPath.empty()) throw SchemaError("--config is required");
    if (!fs::exists(cli.configPath)) throw MissingFileError("config not found: " + cli.configPath);
    cli.config = io::loadJson(cli.configPath);
    requireKeys(cli.config, "config", topLevelKeys);
}

fs::path prepareOutDir(const Cli& cli, const std::string& primaryArtifact) {
    fs::path out = cli.outDir;
    if (out.empty() && cli.config.contains("output")) {
        requireKeys(cli.config.at("output"), "output", {"directory"});
        out = cli.config.at("output").value("directory", "");
    }
    if (out.empty()) throw SchemaError("no output directory (--out or output.directory)");
    if (fs::exists(out / primaryArtifact) && !cli.force)
        throw std::runtime_error("refusing to overwrite " + (out / primaryArtifact).string() +
                                 " (use --force)");
    fs::create_directories(out);
    return out;
}

void writeRunLog(const fs::path& dir, const json& echo) {
    std::ofstream out(dir / "run.json");
    out << echo.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed: " + (dir / "run.json").string());
}

MultiFunData loadInputData(const Cli& cli) {
    const bool hasDataset = cli.config.contains("dataset");
    const bool hasSim = cli.config.contains("simulation");
    if (hasDataset == hasSim)
        throw SchemaError("config needs exactly one of dataset / simulation");
    if (hasDataset) {
        const std::string path = cli.config.at("dataset").is_string()
                                     ? cli.config.at("dataset").get<std::string>()
                                     : throw SchemaError("dataset: expected a path string");
        if (!fs::exists(fs::path(path) / "manifest.json"))
            throw MissingFileError("dataset not found: " + path);
        return io::readDataset(path);
    }
    return simulate(parseSimulation(cli.config.at("simulation"), cli.seed)).data;
}

int cmdSimulate(const Cli& cli) {
    const SimulationSpec spec = parseSimulation(cli.config.at("simulation"), cli.seed);
    const fs::path out = prepareOutDir(cli, "manifest.json");
    io::writeDataset(out, simulate(spec).data);
    writeRunLog(out, cli.echo("simulate"));
    std::cout << "dataset written to " << out.string() << '\n';
    return 0;
}

int cmdFit(const Cli& cli) {
    const MultiFunData data = loadInputData(cli);
    const PipelineConfig cfg = parsePipeline(cli.config, data.elements.size());
    const fs::path out = prepareOutDir(cli, "summary.json");
    const MFPCAResult result = fitPipeline(data, cfg);
    io::writeResult(out, result, cli.echo("fit"));
    writeRunLog(out, cli.echo("fit"));
    std::cout << "fit written to " << out.string() << " (" << result.eigenvalues.size()
              << " components)\n";
    return 0;
}

int cmdBootstrap(const Cli& cli) {
    const MultiFunData data = loadInputData(cli);
    const PipelineConfig cfg = parsePipeline(cli.config, data.elements.size());
    int B = 100;
    std::vector<double> levels{0.95};
    if (cli.config.contains("bootstrap")) {
        const json& b = cli.config.at("bootstrap");
        requireKeys(b, "bootstrap", {"B", "levels"});
        B = b.value("B", 100);
        if (b.contains("levels")) {
            levels.clear();
            for (const auto& l : b.at("levels")) levels.push_back(l.get<double>());
        }
    }
    const fs::path out = prepareOutDir(cli, "bands.json");
    const MFPCAResult result = fitPipeline(data, cfg);
    const FitFunction fit = [&cfg](const MultiFunData& d) { return fitPipeline(d, cfg); };
    const BandSet bands = bootstrapBands(data, fit, result, B, levels, cli.seed.value_or(1));
    io::writeResult(out, result, cli.echo("bootstrap"));
    io::writeBands(out, bands, result.domains, levels);
    writeRunLog(out, cli.echo("bootstrap"));
    std::cout << "bands written to " << out.string() << " (" << bands.failures
              << " failed replicates)\n";
    return 0;
}

// ---- experiment -----------------------------------------------------------

struct ReplicateRow {
    int rep;
    std::uint64_t seed;
    std::string scenario;
    double mrsePct;
    double errNu1;
    double errPsi1;
};

void runParallel(int jobs, int count, const std::function<void(int)>& work) {
    jobs = std::max(1, jobs);
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(jobs));
    for (int t = 0; t < jobs; ++t)
        pool.emplace_back([&, t] {
            try {
                for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) work(i);
            } catch (...) {
                errors[static_cast<std::size_t>(t)] = std::current_exception();
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

double reconstructionMrsePct(const SimulatedData& truthData, const MFPCAResult& result,
                             const std::vector<double>& weights) {
    const MultiFunData recon = reconstruct(result, static_cast<int>(result.eigenvalues.size()));
    return 100.0 * mrse(truthData.data, recon, weights);
}

ReplicateRow evaluateReplicate(int rep, const SimulationSpec& spec, const PipelineConfig& cfg,
                               const std::string& scenario) {
    SimulationSpec s = spec;
    s.seed = spec.seed + static_cast<std::uint64_t>(rep);
    const SimulatedData sim = simulate(s);
    const MFPCAResult result = fitPipeline(sim.data, cfg);
    const std::vector<double> unit(sim.data.elements.size(), 1.0);
    ReplicateRow row;
    row.rep = rep;
    row.seed = s.seed;
    row.scenario = scenario;
    // for sparse data the reconstruction error is measured against the
    // noiseless full curves, so regenerate those
    SimulationSpec dense = s;
    dense.sparsity = SparsityLevel::None;
    dense.sigma2 = 0.0;
    const SimulatedData truth = simulate(dense);
    row.mrsePct = reconstructionMrsePct(truth, result, unit);
    row.errNu1 = errEigenvalue(truth.trueEigenvalues(0), result.eigenvalues(0));
    row.errPsi1 = errEigenfunction(truth.trueEigenfunctions[0], result.eigenfunction(0), unit);
    return row;
}

void writeExperimentRows(const fs::path& out, const std::vector<ReplicateRow>& rows,
                         const json& echo) {
    std::ofstream csv(out / "results.csv");
    csv << "rep,seed,scenario,mrse_pct,err_nu1,err_psi1\n";
    for (const auto& r : rows)
        csv << r.rep << ',' << r.seed << ',' << r.scenario << ','
            << io::formatDouble(r.mrsePct) << ',' << io::formatDouble(r.errNu1) << ','
            << io::formatDouble(r.errPsi1) << '\n';
    if (!csv) throw std::runtime_error("write failed: results.csv");
    writeRunLog(out, echo);
}

int cmdExperiment(const Cli& cli) {
    const json& ex = cli.config.at("experiment");
    requireKeys(ex, "experiment",
                {"name", "replicates", "N", "sigma2", "B", "datasets", "grid_sizes", "M",
                 "components", "level"});
    const std::string name = ex.value("name", "");
    const int reps = ex.value("replicates", 10);
    const std::uint64_t baseSeed = cli.seed.value_or(1);

    std::vector<std::pair<std::string, std::pair<SimulationSpec, PipelineConfig>>> scenarios;
    auto densePipeline = [](int M, bool smooth, std::size_t p) {
        PipelineConfig cfg;
        UnivariateConfig u;
        u.truncation = Truncation::count(M);
        u.smoothCovariance = smooth;
        cfg.univariate.assign(p, u);
        cfg.truncation = Truncation::count(M);
        return cfg;
    };

    if (name == "setting1") {
        for (double sigma2 : {0.0, 0.25}) {
            SimulationSpec s = SimulationSpec::setting1();
            s.N = ex.value("N", 250);
            s.decay = EigenvalueDecay::TableExp;
            s.sigma2 = sigma2;
            s.seed = baseSeed;
            scenarios.push_back({"sigma2=" + std::to_string(sigma2),
                                 {s, densePipeline(s.M, sigma2 > 0.0, 2)}});
        }
    } else if (name == "setting2") {
        for (const char* sp : {"none", "medium", "high"}) {
            SimulationSpec s = SimulationSpec::setting2();
            s.N = ex.value("N", 150);
            s.sigma2 = 0.0;
            s.seed = baseSeed;
            s.sparsity = sp == std::string("none") ? SparsityLevel::None
                         : sp == std::string("medium") ? SparsityLevel::Medium
                                                       : SparsityLevel::High;
            PipelineConfig cfg;
            UnivariateConfig u;
            u.type = s.sparsity == SparsityLevel::None ? UnivariateConfig::Type::Fpca
                                                       : UnivariateConfig::Type::SparseFpca;
            u.truncation = Truncation::count(s.M);
            cfg.univariate.assign(3, u);
            cfg.truncation = Truncation::count(s.M);
            scenarios.push_back({std::string("sparsity=") + sp, {s, cfg}});
        }
    } else if (name == "setting3") {
        for (const char* pathway : {"splines", "fcp_tpa"}) {
            for (double sigma2 : {0.0, 0.25}) {
                SimulationSpec s = SimulationSpec::setting3();
                s.N = ex.value("N", 100);
                s.sigma2 = sigma2;
                s.seed = baseSeed;
                s.gridSizes = {50, 25, 100};
                PipelineConfig cfg;
                UnivariateConfig img, crv;
                if (pathway == std::string("splines")) {
                    img.type = UnivariateConfig::Type::TensorBspline;
                    img.K1 = 10;
                    img.K2 = 12;
                    crv.type = UnivariateConfig::Type::Bspline;
                    crv.K = 15;
                } else {
                    img.type = UnivariateConfig::Type::FcpTpa;
                    img.fcpComponents = 20;
                    crv.type = UnivariateConfig::Type::Fpca;
                    crv.truncation = Truncation::count(15);
                    crv.smoothCovariance = sigma2 > 0.0;
                }
                cfg.univariate = {img, crv};
                cfg.truncation = Truncation::count(s.M);
                scenarios.push_back(
                    {std::string(pathway) + ",sigma2=" + std::to_string(sigma2), {s, cfg}});
            }
        }
    } else if (name == "sensitivity") {
        for (double pve : {0.75, 0.90, 0.95, 0.99, 1.0}) {
            SimulationSpec s = SimulationSpec::setting1();
            s.N = ex.value("N", 250);
            s.sigma2 = 0.0;
            s.seed = baseSeed;
            PipelineConfig cfg;
            UnivariateConfig u;
            u.truncation = pve >= 1.0 ? Truncation::count(s.M)
                                      : Truncation::varianceExplained(pve);
            cfg.univariate.assign(2, u);
            cfg.truncation = Truncation::count(s.M);
            scenarios.push_back({"pve=" + std::to_string(pve), {s, cfg}});
        }
    } else if (name == "coverage") {
        // separate shape: runs the coverage study and emits coverage.csv
        const fs::path out = prepareOutDir(cli, "coverage.csv");
        SimulationSpec s = SimulationSpec::setting3();
        s.N = ex.value("N", 100);
        s.sigma2 = 0.0;
        s.gridSizes = {50, 25, 100};
        const TensorMixedBasis basis = tensorMixedBasis(s);
        PipelineConfig cfg;
        UnivariateConfig img, crv;
        img.type = UnivariateConfig::Type::TensorBspline;
        img.K1 = 10;
        img.K2 = 12;
        crv.type = UnivariateConfig::Type::Bspline;
        crv.K = 15;
        cfg.univariate = {img, crv};
        cfg.truncation = Truncation::count(ex.value("components", 3));
        // the basis (and hence the truth) stays fixed across datasets; only
        // the score/noise seed varies
        const SimulateFunction sim = [&basis, s](std::uint64_t seed) {
            return sampleObservations(basis.functions, s.decay, s.N, s.sigma2, seed).data;
        };
        const FitFunction fit = [cfg](const MultiFunData& d) { return fitPipeline(d, cfg); };
        std::vector<MultiGridFunction> truth(
            basis.functions.begin(),
            basis.functions.begin() + ex.value("components", 3));
        const CoverageTable table =
            coverageExperiment(sim, truth, fit, ex.value("components", 3),
                               ex.value("datasets", 50), ex.value("B", 50),
                               ex.value("level", 0.95), baseSeed);
        std::ofstream csv(out / "coverage.csv");
        csv << "component,element,mean_coverage\n";
        for (std::size_t m = 0; m < table.aggregated.size(); ++m)
            for (std::size_t j = 0; j < table.aggregated[m].size(); ++j)
                csv << m + 1 << ',' << j + 1 << ','
                    << io::formatDouble(table.aggregated[m][j]) << '\n';
        if (!csv) throw std::runtime_error("write failed: coverage.csv");
        writeRunLog(out, cli.echo("experiment"));
        std::cout << "coverage written to " << out.string() << '\n';
        return 0;
    } else {
        throw SchemaError("experiment.name: must be setting1, setting2, setting3, "
                          "sensitivity or coverage");
    }

    const fs::path out = prepareOutDir(cli, "results.csv");
    std::vector<ReplicateRow> rows(scenarios.size() * static_cast<std::size_t>(reps));
    runParallel(cli.jobs, static_cast<int>(rows.size()), [&](int i) {
        const std::size_t sc = static_cast<std::size_t>(i) / static_cast<std::size_t>(reps);
        const int rep = i % reps;
        rows[static_cast<std::size_t>(i)] =
            evaluateReplicate(rep, scenarios[sc].second.first, scenarios[sc].second.second,
                              scenarios[sc].first);
    });
    writeExperimentRows(out, rows, cli.echo("experiment"));
    std::cout << "experiment written to " << out.string() << " (" << rows.size() << " rows)\n";
    return 0;
}

int cmdReport(const Cli& cli) {
    fs::path in = cli.configPath;
    if (fs::is_directory(in)) in /= "results.csv";
    if (!fs::exists(in)) throw MissingFileError("results not found: " + in.string());

    std::ifstream csv(in);
    std::string line;
    std::getline(csv, line);  // header
    std::map<std::string, std::vector<std::array<double, 3>>> byScenario;
    while (std::getline(csv, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        // scenario labels may themselves contain a comma (pathway,sigma2=..)
        if (cells.size() < 6) throw std::runtime_error("malformed results row");
        const std::size_t tail = cells.size() - 3;
        std::string scenario = cells[2];
        for (std::size_t k = 3; k < tail; ++k) scenario += "," + cells[k];
        byScenario[scenario].push_back({std::stod(cells[tail]), std::stod(cells[tail + 1]),
                                        std::stod(cells[tail + 2])});
    }

    auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        const std::size_t n = v.size();
        return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    };

    const fs::path out = prepareOutDir(cli, "report.csv");
    std::ofstream rep(out / "report.csv");
    rep << "scenario,replicates,median_mrse_pct,median_err_nu1,median_err_psi1\n";
    std::cout << "scenario  reps  median MRSE%  median Err(nu1)  median Err(psi1)\n";
    for (const auto& [scenario, rows] : byScenario) {
        std::vector<double> m, n1, p1;
        for (const auto& r : rows) {
            m.push_back(r[0]);
            n1.push_back(r[1]);
            p1.push_back(r[2]);
        }
        rep << '"' << scenario << "\"," << rows.size() << ',' << io::formatDouble(median(m))
            << ',' << io::formatDouble(median(n1)) << ',' << io::formatDouble(median(p1))
            << '\n';
        std::cout << scenario << "  " << rows.size() << "  " << median(m) << "  " << median(n1)
                  << "  " << median(p1) << '\n';
    }
    if (!rep) throw std::runtime_error("write failed: report.csv");
    writeRunLog(out, cli.echo("report"));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multivariate functional principal component analysis"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    Cli cli;
    std::uint64_t seedValue = 0;
    bool seedGiven = false;
    for (auto* sub : {app.add_subcommand("simulate", "Generate a synthetic dataset"),
                      app.add_subcommand("fit", "Run the two-step estimator"),
                      app.add_subcommand("bootstrap", "Fit plus bootstrap bands"),
                      app.add_subcommand("experiment", "Replicated simulation study"),
                      app.add_subcommand("report", "Aggregate experiment results")}) {
        sub->add_option("--config", cli.configPath, "JSON config (report: results dir)")
            ->envname("MFPCA_CONFIG");
        sub->add_option("--out", cli.outDir, "output directory")->envname("MFPCA_OUT");
        sub->add_option("--seed", seedValue, "RNG seed override")
            ->envname("MFPCA_SEED")
            ->each([&seedGiven](const std::string&) { seedGiven = true; });
        sub->add_option("--jobs", cli.jobs, "worker threads")->envname("MFPCA_JOBS");
        sub->add_flag("--force", cli.force, "overwrite existing outputs")
            ->envname("MFPCA_FORCE");
    }

    CLI11_PARSE(app, argc, argv);
    if (seedGiven) cli.seed = seedValue;
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        if (command == "report") return cmdReport(cli);
        loadConfig(cli, {"dataset", "simulation", "univariate", "mfpca", "bootstrap",
                         "experiment", "output"});
        if (command == "simulate") {
            if (!cli.config.contains("simulation"))
                throw SchemaError("simulate: config needs a simulation block");
            return cmdSimulate(cli);
        }
        if (command == "fit") return cmdFit(cli);
        if (command == "bootstrap") return cmdBootstrap(cli);
        if (command == "experiment") {
            if (!cli.config.contains("experiment"))
                throw SchemaError("experiment: config needs an experiment block");
            return cmdExperiment(cli);
        }
    } catch (const SchemaError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitSchema;
    } catch (const MissingFileError& e) {
        std::cerr << "missing file: " << e.what() << '\n';
        return kExitMissing;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitSchema;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitSchema;
    } catch (const std::runtime_error& e) {
        const std::string msg = e.what();
        if (msg.find("refusing to overwrite") != std::string::npos) {
            std::cerr << msg << '\n';
            return kExitOverwrite;
        }
        std::cerr << "fit error: " << msg << '\n';
        return kExitFit;
    }
    return 0;
}
