#include "crackseg/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "crackseg/checkpoint.hpp"
#include "crackseg/dataset.hpp"
#include "crackseg/parallel.hpp"
#include "crackseg/serialization.hpp"

namespace crackseg {

namespace fs = std::filesystem;
using nlohmann::json;

// --- Config ----------------------------------------------------------------------

std::vector<std::uint64_t> ExperimentConfig::resolved_seeds() const {
    if (!seeds.empty()) return seeds;
    std::vector<std::uint64_t> out;
    for (int i = 1; i <= runs; ++i) out.push_back(static_cast<std::uint64_t>(i));
    return out;
}

void ExperimentConfig::validate() const {
    if (train_manifest.empty()) throw ConfigError("experiment needs a train_manifest");
    if (runs < 1) throw ConfigError("runs must be positive");
    if (!seeds.empty()) {
        if (seeds.size() != static_cast<std::size_t>(runs)) {
            throw ConfigError("expected " + std::to_string(runs) + " seeds, got " + std::to_string(seeds.size()));
        }
        if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
            throw ConfigError("seeds must be distinct");
        }
    }
    augment.validate();
    training.validate();
    loss.validate();
    if (tta == TtaChoice::fixed) tta_plan.validate();
    if (tta == TtaChoice::off && !also_without_tta) {
        throw ConfigError("also_without_tta=false requires a TTA plan");
    }
}

std::string ExperimentConfig::to_json() const {
    json j;
    j["name"] = name;
    j["train_manifest"] = train_manifest.generic_string();
    json tests = json::array();
    for (const auto& t : test_manifests) tests.push_back(t.generic_string());
    j["test_manifests"] = tests;
    j["runs"] = runs;
    j["seeds"] = resolved_seeds();
    j["model"] = model;
    j["augment"] = augment;
    j["training"] = training;
    j["loss"] = loss;
    if (tta == TtaChoice::off) {
        j["tta"] = "off";
    } else if (tta == TtaChoice::automatic) {
        j["tta"] = "auto";
    } else {
        j["tta"] = tta_plan;
    }
    j["also_without_tta"] = also_without_tta;
    if (pretrained) j["pretrained"] = pretrained->generic_string();
    j["distance_metric"] = to_string(distance_metric);
    j["save_predictions"] = save_predictions;
    return j.dump(2);
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
    ExperimentConfig c;
    try {
        const json j = json::parse(text);
        if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
        static const std::set<std::string> known = {
            "name",    "train_manifest", "test_manifests", "runs",    "seeds",           "model",
            "augment", "training",       "loss",           "tta",     "also_without_tta", "pretrained",
            "distance_metric", "save_predictions"};
        for (const auto& [k, v] : j.items()) {
            if (!known.count(k)) throw ConfigError("unknown key '" + k + "' in experiment config");
        }
        c.name = j.value("name", c.name);
        if (j.contains("train_manifest")) c.train_manifest = j.at("train_manifest").get<std::string>();
        if (j.contains("test_manifests")) {
            for (const auto& t : j.at("test_manifests")) c.test_manifests.emplace_back(t.get<std::string>());
        }
        c.runs = j.value("runs", c.runs);
        if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        if (j.contains("model")) j.at("model").get_to(c.model);
        if (j.contains("augment")) j.at("augment").get_to(c.augment);
        if (j.contains("training")) j.at("training").get_to(c.training);
        if (j.contains("loss")) j.at("loss").get_to(c.loss);
        if (j.contains("tta")) {
            const auto& t = j.at("tta");
            if (t.is_null() || (t.is_string() && t.get<std::string>() == "off")) {
                c.tta = TtaChoice::off;
            } else if (t.is_string() && t.get<std::string>() == "auto") {
                c.tta = TtaChoice::automatic;
            } else if (t.is_string()) {
                c.tta = TtaChoice::fixed;
                c.tta_plan = parse_tta_plan(t.get<std::string>());
            } else {
                c.tta = TtaChoice::fixed;
                t.get_to(c.tta_plan);
            }
        }
        c.also_without_tta = j.value("also_without_tta", c.also_without_tta);
        if (j.contains("pretrained")) c.pretrained = fs::path(j.at("pretrained").get<std::string>());
        if (j.contains("distance_metric")) {
            c.distance_metric = parse_distance_metric(j.at("distance_metric").get<std::string>());
        }
        c.save_predictions = j.value("save_predictions", c.save_predictions);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed experiment config: ") + e.what());
    }
    c.validate();
    return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return from_json(ss.str());
}

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex16(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string read_text(const fs::path& p) {
    std::ifstream is(p);
    if (!is) throw Error("cannot read " + p.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    const fs::path tmp = p.string() + ".tmp";
    {
        std::ofstream os(tmp);
        if (!os) throw Error("cannot write " + p.string());
        os << text;
    }
    fs::rename(tmp, p);
}

}  // namespace

std::string ExperimentConfig::hash() const { return hex16(fnv1a(json::parse(to_json()).dump())); }

// --- Statistics ------------------------------------------------------------------

MeanStd mean_std(const std::vector<double>& values) {
    if (values.empty()) throw Error("mean_std: empty series");
    MeanStd r;
    r.n = values.size();
    double sum = 0;
    for (double v : values) sum += v;
    r.mean = sum / static_cast<double>(r.n);
    if (r.n < 2) {
        r.stdev = std::nan("");
        return r;
    }
    double ss = 0;
    for (double v : values) ss += (v - r.mean) * (v - r.mean);
    r.stdev = std::sqrt(ss / static_cast<double>(r.n - 1));
    return r;
}

void summarize(RunSummary& summary) {
    for (auto& row : summary.rows) {
        std::vector<double> o, d, c;
        for (const auto& r : row.runs) {
            o.push_back(r.ois);
            d.push_back(r.ods);
            c.push_back(r.cods);
        }
        row.ois = mean_std(o);
        row.ods = mean_std(d);
        row.cods = mean_std(c);
    }
}

// --- Runner ----------------------------------------------------------------------

namespace {

struct TestSet {
    DatasetManifest manifest;
    std::vector<ManifestEntry> entries;
    std::vector<LoadedPair> pairs;
};

ColorMode model_color(const ModelConfig& m) { return m.input_channels == 3 ? ColorMode::rgb : ColorMode::grayscale; }

TtaPlan plan_for(const ExperimentConfig& cfg, const DatasetManifest& m) {
    if (cfg.tta == TtaChoice::fixed) return cfg.tta_plan;
    try {
        switch (parse_dataset_kind(m.name)) {
            case DatasetKind::deepcrack_db: return deepcrack_plan();
            case DatasetKind::crkwh100:
            case DatasetKind::stone331: return wide_plan();
            default: return cfd_plan();
        }
    } catch (const ConfigError&) {
        return cfd_plan();
    }
}

std::string safe_name(const std::string& s) {
    std::string out;
    for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
    return out.empty() ? "unnamed" : out;
}

struct Evaluation {
    std::string test_set;
    bool tta = false;
    MetricReport report;
};

std::vector<Evaluation> read_run(const fs::path& run_dir, std::string* train_set, std::uint64_t* seed) {
    const json j = json::parse(read_text(run_dir / "run.json"));
    if (train_set) *train_set = j.at("train_set").get<std::string>();
    if (seed) *seed = j.at("seed").get<std::uint64_t>();
    std::vector<Evaluation> out;
    for (const auto& e : j.at("evaluations")) {
        out.push_back({e.at("test_set").get<std::string>(), e.at("tta").get<bool>(),
                       load_report(run_dir / e.at("report").get<std::string>())});
    }
    return out;
}

void add_to_summary(RunSummary& s, const std::string& train_set, std::uint64_t seed,
                    const std::vector<Evaluation>& evals) {
    for (const auto& e : evals) {
        auto it = std::find_if(s.rows.begin(), s.rows.end(), [&](const SummaryRow& r) {
            return r.train_set == train_set && r.test_set == e.test_set && r.tta == e.tta;
        });
        if (it == s.rows.end()) {
            s.rows.push_back({train_set, e.test_set, e.tta, {}, {}, {}, {}, {}});
            it = s.rows.end() - 1;
        }
        it->seeds.push_back(seed);
        it->runs.push_back(e.report);
    }
}

}  // namespace

RunSummary run_experiment(const ExperimentConfig& cfg, const fs::path& out_root, const ExperimentOptions& options) {
    cfg.validate();
    if (cfg.test_manifests.empty()) throw ConfigError("experiment needs at least one test manifest");
    auto log = [&](const std::string& msg) {
        if (options.log) options.log(msg);
    };
    const std::string hash = cfg.hash();
    const fs::path exp_dir = out_root / hash;
    fs::create_directories(exp_dir);
    const fs::path cfg_path = exp_dir / "config.json";
    if (!fs::exists(cfg_path)) write_text(cfg_path, cfg.to_json() + "\n");

    const ColorMode color = model_color(cfg.model);
    const DatasetManifest train_manifest = DatasetManifest::load(cfg.train_manifest);
    std::vector<TestSet> tests;
    for (const auto& p : cfg.test_manifests) {
        TestSet t;
        t.manifest = DatasetManifest::load(p);
        t.entries = t.manifest.entries_for(Split::test);
        if (t.entries.empty()) throw ConfigError("test manifest " + p.string() + " has no test entries");
        tests.push_back(std::move(t));
    }
    std::vector<TrainingSample> train_samples;
    bool loaded = false;
    std::optional<WeightArchive> pretrained;
    if (cfg.pretrained) pretrained = WeightArchive::load(*cfg.pretrained);

    RunSummary summary;
    summary.config_hash = hash;
    for (const std::uint64_t seed : cfg.resolved_seeds()) {
        const fs::path run_dir = exp_dir / ("seed-" + std::to_string(seed));
        if (fs::exists(run_dir / "run.json")) {
            log("seed " + std::to_string(seed) + ": already complete, loading");
            std::string train_set;
            add_to_summary(summary, train_manifest.name, seed, read_run(run_dir, &train_set, nullptr));
            continue;
        }
        try {
            if (!loaded) {
                std::vector<TrainingSample> base;
                for (const auto& e : train_manifest.entries_for(Split::train)) {
                    LoadedPair p = load_pair(e, color);
                    base.push_back({std::move(p.image), std::move(p.mask)});
                }
                if (base.empty()) throw ConfigError("train manifest has no training entries");
                train_samples = expand_d4(base);
                for (auto& t : tests) {
                    t.pairs.resize(t.entries.size());
                    parallel_for(t.entries.size(), [&](std::size_t i) { t.pairs[i] = load_pair(t.entries[i], color); });
                }
                loaded = true;
            }
            fs::create_directories(run_dir);
            Model model(cfg.model);
            initialize(model, seed, pretrained ? &*pretrained : nullptr);
            TrainConfig tc = cfg.training;
            tc.run_seed = seed;
            const TrainResult tr = train(model, train_samples, cfg.augment, tc, cfg.loss,
                                         [&](const EpochRecord& r, Model&) {
                                             log("seed " + std::to_string(seed) + " epoch " +
                                                 std::to_string(r.epoch) + " loss " + std::to_string(r.mean_loss));
                                             return true;
                                         });
            write_loss_trace(run_dir / "loss.csv", tr.trace);
            save_checkpoint(run_dir / "checkpoint.crkw", model);

            std::vector<Evaluation> evals;
            json evals_json = json::array();
            const ThresholdGrid grid = ThresholdGrid::standard();
            for (const auto& t : tests) {
                std::vector<bool> states;
                if (cfg.also_without_tta || cfg.tta == TtaChoice::off) states.push_back(false);
                if (cfg.tta != TtaChoice::off) states.push_back(true);
                for (const bool use_tta : states) {
                    const TtaPlan plan = plan_for(cfg, t.manifest);
                    const fs::path eval_dir =
                        run_dir / "eval" / safe_name(t.manifest.name) / (use_tta ? "tta" : "plain");
                    if (cfg.save_predictions) fs::create_directories(eval_dir / "predictions");
                    std::vector<ImageCurve> curves(t.pairs.size());
                    parallel_for(t.pairs.size(), [&](std::size_t i) {
                        const auto& pair = t.pairs[i];
                        const ProbabilityMap pred =
                            use_tta ? predict_tta(model, pair.image, plan) : predict_padded(model, pair.image);
                        const std::string stem = t.entries[i].image.stem().string();
                        if (cfg.save_predictions) write_probability_png(eval_dir / "predictions" / (stem + ".png"), pred);
                        curves[i] = f1_curve(pred, pair.mask, grid, t.manifest.tolerance,
                                             pair.region ? &*pair.region : nullptr, cfg.distance_metric);
                        curves[i].image = stem;
                    });
                    const MetricReport report = aggregate(curves, grid);
                    write_curves_csv(eval_dir / "curves.csv", curves, grid);
                    save_report(eval_dir / "report.json", report);
                    evals.push_back({t.manifest.name, use_tta, report});
                    evals_json.push_back({{"test_set", t.manifest.name},
                                          {"tta", use_tta},
                                          {"tta_plan", use_tta ? json(plan) : json(nullptr)},
                                          {"report", fs::relative(eval_dir / "report.json", run_dir).generic_string()}});
                    log("seed " + std::to_string(seed) + " " + t.manifest.name + (use_tta ? " tta" : "") +
                        ": OIS " + std::to_string(report.ois) + " ODS " + std::to_string(report.ods) + " cODS " +
                        std::to_string(report.cods));
                }
            }
            json run = {{"seed", seed}, {"train_set", train_manifest.name}, {"evaluations", evals_json}};
            write_text(run_dir / "run.json", run.dump(2) + "\n");
            add_to_summary(summary, train_manifest.name, seed, evals);
        } catch (const std::exception& e) {
            throw Error("run with seed " + std::to_string(seed) + " failed: " + e.what());
        }
    }
    summarize(summary);
    return summary;
}

RunSummary load_summary(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw Error("not a directory: " + dir.string());
    std::vector<fs::path> exp_dirs;
    if (fs::exists(dir / "config.json")) {
        exp_dirs.push_back(dir);
    } else {
        for (const auto& de : fs::directory_iterator(dir)) {
            if (de.is_directory() && fs::exists(de.path() / "config.json")) exp_dirs.push_back(de.path());
        }
        std::sort(exp_dirs.begin(), exp_dirs.end());
    }
    if (exp_dirs.empty()) throw Error("no experiment results under " + dir.string());
    RunSummary s;
    for (const auto& exp : exp_dirs) {
        const ExperimentConfig cfg = ExperimentConfig::from_json(read_text(exp / "config.json"));
        s.config_hash += (s.config_hash.empty() ? "" : ",") + exp.filename().string();
        for (const std::uint64_t seed : cfg.resolved_seeds()) {
            const fs::path run_dir = exp / ("seed-" + std::to_string(seed));
            if (!fs::exists(run_dir / "run.json")) continue;
            std::string train_set;
            const auto evals = read_run(run_dir, &train_set, nullptr);
            add_to_summary(s, train_set, seed, evals);
        }
    }
    if (s.rows.empty()) throw Error("no completed runs under " + dir.string());
    summarize(s);
    return s;
}

// --- Reports ---------------------------------------------------------------------

ReportFormat parse_report_format(const std::string& s) {
    if (s == "markdown-table" || s == "markdown") return ReportFormat::markdown_table;
    if (s == "csv") return ReportFormat::csv;
    if (s == "json") return ReportFormat::json;
    throw ConfigError("unknown report format '" + s + "' (markdown-table | csv | json)");
}

std::string format_mean_std(const MeanStd& v, double scale) {
    char buf[64];
    if (std::isnan(v.stdev)) {
        std::snprintf(buf, sizeof buf, "%.2f±n/a", v.mean * scale);
    } else {
        std::snprintf(buf, sizeof buf, "%.2f±%.2f", v.mean * scale, v.stdev * scale);
    }
    return buf;
}

namespace {

std::string full(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_full(const std::string& s) { return s == "nan" ? std::nan("") : std::stod(s); }

}  // namespace

std::string report(const RunSummary& summary, ReportFormat format) {
    std::ostringstream os;
    switch (format) {
        case ReportFormat::markdown_table:
            os << "| Train | Test | TTA | Runs | OIS (%) | ODS (%) | cODS (%) |\n";
            os << "|---|---|---|---|---|---|---|\n";
            for (const auto& r : summary.rows) {
                os << "| " << r.train_set << " | " << r.test_set << " | " << (r.tta ? "yes" : "no") << " | "
                   << r.runs.size() << " | " << format_mean_std(r.ois) << " | " << format_mean_std(r.ods) << " | "
                   << format_mean_std(r.cods) << " |\n";
            }
            break;
        case ReportFormat::csv:
            os << "train,test,tta,runs,ois_mean,ois_std,ods_mean,ods_std,cods_mean,cods_std\n";
            for (const auto& r : summary.rows) {
                os << r.train_set << ',' << r.test_set << ',' << (r.tta ? 1 : 0) << ',' << r.ois.n << ','
                   << full(r.ois.mean) << ',' << full(r.ois.stdev) << ',' << full(r.ods.mean) << ','
                   << full(r.ods.stdev) << ',' << full(r.cods.mean) << ',' << full(r.cods.stdev) << '\n';
            }
            break;
        case ReportFormat::json: {
            json rows = json::array();
            for (const auto& r : summary.rows) {
                auto ms = [](const MeanStd& m) {
                    return json{{"mean", m.mean}, {"std", std::isnan(m.stdev) ? json(nullptr) : json(m.stdev)}};
                };
                json per_run = json::array();
                for (std::size_t i = 0; i < r.runs.size(); ++i) {
                    per_run.push_back({{"seed", r.seeds[i]},
                                       {"ois", r.runs[i].ois},
                                       {"ods", r.runs[i].ods},
                                       {"cods", r.runs[i].cods},
                                       {"ods_threshold", r.runs[i].ods_threshold},
                                       {"cods_threshold", r.runs[i].cods_threshold}});
                }
                rows.push_back({{"train", r.train_set},
                                {"test", r.test_set},
                                {"tta", r.tta},
                                {"runs", r.runs.size()},
                                {"ois", ms(r.ois)},
                                {"ods", ms(r.ods)},
                                {"cods", ms(r.cods)},
                                {"per_run", per_run}});
            }
            os << json{{"config", summary.config_hash}, {"rows", rows}}.dump(2) << '\n';
            break;
        }
    }
    return os.str();
}

std::vector<SummaryRow> parse_summary_csv(const std::string& text) {
    std::vector<SummaryRow> rows;
    std::istringstream is(text);
    std::string line;
    bool header = true;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (header) {
            header = false;
            continue;
        }
        std::vector<std::string> f;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) f.push_back(cell);
        if (f.size() != 10) throw Error("summary CSV: expected 10 columns in '" + line + "'");
        SummaryRow r;
        r.train_set = f[0];
        r.test_set = f[1];
        r.tta = f[2] == "1";
        const auto n = static_cast<std::size_t>(std::stoul(f[3]));
        r.ois = {parse_full(f[4]), parse_full(f[5]), n};
        r.ods = {parse_full(f[6]), parse_full(f[7]), n};
        r.cods = {parse_full(f[8]), parse_full(f[9]), n};
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace crackseg
