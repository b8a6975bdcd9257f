#include "stresslab/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace stresslab {

namespace {

constexpr const char* kManifestFormat = "stresslab-run-v1";

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                    "#9467bd", "#ff7f0e", "#8c564b"};
constexpr std::size_t kPaletteSize = 6;

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

void check_positive(const std::optional<int>& v, const char* name) {
    if (v && *v < 1) {
        throw std::invalid_argument(std::string(name) + " override must be >= 1");
    }
}

std::string xml_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (const char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string svg_coord(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_text(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

// Labels stay unique even when the same spec appears twice in one report.
std::vector<std::string> unique_labels(const std::vector<RunRecord>& records) {
    std::vector<std::string> labels;
    labels.reserve(records.size());
    std::map<std::string, int> seen;
    for (const auto& record : records) {
        const std::string base = record.label();
        const int n = ++seen[base];
        labels.push_back(n == 1 ? base : base + "#" + std::to_string(n));
    }
    return labels;
}

}  // namespace

void ExperimentSpec::validate() const {
    if (scenario.empty()) throw std::invalid_argument("scenario must be set");
    if (solver != "ge" && solver != "mcts" && solver != "drl") {
        throw std::invalid_argument("solver must be one of: ge, mcts, drl");
    }
    if (budget != "desk" && budget != "paper") {
        throw std::invalid_argument("budget must be desk or paper");
    }
    check_positive(iterations, "iterations");
    check_positive(batch_size, "batch_size");
    check_positive(ba_iterations, "ba_iterations");
    check_positive(ba_batch_size, "ba_batch_size");
    check_positive(ba_epochs_per_step, "ba_epochs_per_step");
    if (ge_granularity && *ge_granularity <= 0.0) {
        throw std::invalid_argument("ge_granularity override must be positive");
    }
}

nlohmann::json ExperimentSpec::to_json() const {
    nlohmann::json j;
    j["scenario"] = scenario;
    j["solver"] = solver;
    j["robustify"] = robustify;
    j["seed"] = seed;
    j["budget"] = budget;
    if (iterations) j["iterations"] = *iterations;
    if (batch_size) j["batch_size"] = *batch_size;
    if (ba_iterations) j["ba_iterations"] = *ba_iterations;
    if (ba_batch_size) j["ba_batch_size"] = *ba_batch_size;
    if (ba_epochs_per_step) j["ba_epochs_per_step"] = *ba_epochs_per_step;
    if (ge_granularity) j["ge_granularity"] = *ge_granularity;
    if (mcts_c) j["mcts_c"] = *mcts_c;
    if (mcts_k) j["mcts_k"] = *mcts_k;
    if (mcts_alpha) j["mcts_alpha"] = *mcts_alpha;
    if (learning_rate) j["learning_rate"] = *learning_rate;
    if (clip_range) j["clip_range"] = *clip_range;
    if (kl_coef) j["kl_coef"] = *kl_coef;
    if (!output_dir.empty()) j["output_dir"] = output_dir;
    if (save_solver_state) j["save_solver_state"] = true;
    return j;
}

ExperimentSpec ExperimentSpec::from_json(const nlohmann::json& j) {
    ExperimentSpec spec;
    spec.scenario = j.at("scenario").get<std::string>();
    spec.solver = j.at("solver").get<std::string>();
    spec.robustify = j.value("robustify", false);
    spec.seed = j.value("seed", std::uint64_t{0});
    spec.budget = j.value("budget", std::string("desk"));
    auto opt_int = [&j](const char* key, std::optional<int>& out) {
        if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<int>();
    };
    auto opt_double = [&j](const char* key, std::optional<double>& out) {
        if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<double>();
    };
    opt_int("iterations", spec.iterations);
    opt_int("batch_size", spec.batch_size);
    opt_int("ba_iterations", spec.ba_iterations);
    opt_int("ba_batch_size", spec.ba_batch_size);
    opt_int("ba_epochs_per_step", spec.ba_epochs_per_step);
    opt_double("ge_granularity", spec.ge_granularity);
    opt_double("mcts_c", spec.mcts_c);
    opt_double("mcts_k", spec.mcts_k);
    opt_double("mcts_alpha", spec.mcts_alpha);
    opt_double("learning_rate", spec.learning_rate);
    opt_double("clip_range", spec.clip_range);
    opt_double("kl_coef", spec.kl_coef);
    spec.output_dir = j.value("output_dir", std::string());
    spec.save_solver_state = j.value("save_solver_state", false);
    spec.validate();
    return spec;
}

ResolvedParams resolve_params(const ExperimentSpec& spec) {
    spec.validate();
    const bool paper_scale = spec.budget == "paper";
    const int iterations = spec.iterations.value_or(paper_scale ? 100 : 30);
    const int batch_size = spec.batch_size.value_or(paper_scale ? 500 : 100);

    ResolvedParams params;
    params.ge.iterations = iterations;
    params.ge.batch_size = batch_size;
    params.mcts.iterations = iterations;
    params.mcts.batch_size = batch_size;
    params.drl.iterations = iterations;
    params.drl.batch_size = batch_size;
    if (spec.ge_granularity) {
        const Vec6 g = Vec6::Constant(*spec.ge_granularity);
        params.ge.granularity = g;
        params.mcts.granularity = g;
    }
    if (spec.mcts_c) params.mcts.c_explore = *spec.mcts_c;
    if (spec.mcts_k) params.mcts.k_dpw = *spec.mcts_k;
    if (spec.mcts_alpha) params.mcts.alpha_dpw = *spec.mcts_alpha;

    params.ba.iterations = spec.ba_iterations.value_or(paper_scale ? 100 : 20);
    params.ba.batch_size = spec.ba_batch_size.value_or(paper_scale ? 5000 : 500);
    if (spec.ba_epochs_per_step) params.ba.epochs_per_step = *spec.ba_epochs_per_step;
    if (spec.learning_rate) {
        params.drl.optim.learning_rate = *spec.learning_rate;
        params.ba.optim.learning_rate = *spec.learning_rate;
    }
    if (spec.clip_range) {
        params.drl.optim.clip_range = *spec.clip_range;
        params.ba.optim.clip_range = *spec.clip_range;
    }
    if (spec.kl_coef) {
        params.drl.optim.kl_coef = *spec.kl_coef;
        params.ba.optim.kl_coef = *spec.kl_coef;
    }

    params.ge.validate();
    params.mcts.validate();
    params.drl.validate();
    return params;
}

ScenarioConfig resolve_scenario(const std::string& scenario) {
    if (scenario == "easy" || scenario == "medium" || scenario == "hard") {
        return preset(scenario);
    }
    std::error_code ec;
    if (std::filesystem::exists(scenario, ec)) {
        auto config = ScenarioConfig::from_json(nlohmann::json::parse(read_text_file(scenario)));
        config.validate();
        return config;
    }
    throw std::invalid_argument("unknown scenario '" + scenario +
                                "': expected easy, medium, hard, or a path to a config json");
}

std::string RunRecord::label() const {
    std::string s = scenario_config.name.empty() ? spec.scenario : scenario_config.name;
    s += "-" + spec.solver;
    if (spec.robustify) s += "+ba";
    s += "-s" + std::to_string(spec.seed);
    return s;
}

std::string series_csv(const std::vector<IterationRecord>& series) {
    std::string out = "iteration,best_reward,found_failure,wall_ms\n";
    for (const auto& record : series) {
        out += std::to_string(record.iteration);
        out += ',';
        if (record.found_failure) out += format_double(record.best_reward);
        out += ',';
        out += record.found_failure ? '1' : '0';
        out += ',';
        out += std::to_string(record.wall_ms);
        out += '\n';
    }
    return out;
}

std::vector<IterationRecord> parse_series_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "iteration,best_reward,found_failure,wall_ms") {
        throw std::invalid_argument("series csv: missing or unexpected header");
    }
    std::vector<IterationRecord> series;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != 4) throw std::invalid_argument("series csv: malformed row: " + line);
        IterationRecord record;
        record.iteration = std::stoi(fields[0]);
        record.found_failure = fields[2] == "1";
        record.best_reward = fields[1].empty() ? -std::numeric_limits<double>::infinity()
                                               : std::stod(fields[1]);
        record.wall_ms = std::stoll(fields[3]);
        series.push_back(record);
    }
    return series;
}

std::string series_csv_without_wall(const std::string& csv_text) {
    std::istringstream in(csv_text);
    std::string line, out;
    while (std::getline(in, line)) {
        const std::size_t pos = line.rfind(',');
        out += pos == std::string::npos ? line : line.substr(0, pos);
        out += '\n';
    }
    return out;
}

nlohmann::json run_manifest(const RunRecord& record) {
    nlohmann::json j;
    j["format"] = kManifestFormat;
    j["spec"] = record.spec.to_json();
    j["scenario"] = record.scenario_config.to_json();

    const ResolvedParams params = resolve_params(record.spec);
    nlohmann::json resolved;
    if (record.spec.solver == "ge") {
        resolved["iterations"] = params.ge.iterations;
        resolved["batch_size"] = params.ge.batch_size;
    } else if (record.spec.solver == "mcts") {
        resolved["iterations"] = params.mcts.iterations;
        resolved["batch_size"] = params.mcts.batch_size;
        resolved["c_explore"] = params.mcts.c_explore;
        resolved["k_dpw"] = params.mcts.k_dpw;
        resolved["alpha_dpw"] = params.mcts.alpha_dpw;
    } else {
        resolved["iterations"] = params.drl.iterations;
        resolved["batch_size"] = params.drl.batch_size;
        resolved["learning_rate"] = params.drl.optim.learning_rate;
        resolved["clip_range"] = params.drl.optim.clip_range;
        resolved["kl_coef"] = params.drl.optim.kl_coef;
        resolved["hidden"] = params.drl.hidden;
    }
    if (record.spec.robustify) {
        nlohmann::json ba;
        ba["iterations"] = params.ba.iterations;
        ba["batch_size"] = params.ba.batch_size;
        if (params.ba.epochs_per_step) ba["epochs_per_step"] = *params.ba.epochs_per_step;
        resolved["ba"] = ba;
    }
    j["resolved"] = resolved;

    nlohmann::json results;
    results["found"] = record.best_failure.has_value();
    if (record.best_failure) {
        results["best_reward"] = record.best_failure->total_reward;
        results["best_length"] = record.best_failure->length();
        results["expert_reward"] = record.best_failure->total_reward;
    } else {
        results["best_reward"] = nullptr;
        results["best_length"] = nullptr;
        results["expert_reward"] = nullptr;
    }
    results["rollouts"] = record.rollouts;
    results["robustified_reward"] =
        record.robustified_reward ? nlohmann::json(*record.robustified_reward) : nlohmann::json();
    results["ba_skipped"] = record.ba_skipped;
    j["results"] = results;
    j["artifacts"] = record.artifacts;
    return j;
}

RunRecord run_experiment(const ExperimentSpec& spec) {
    return run_experiment(spec, resolve_scenario(spec.scenario));
}

RunRecord run_experiment(const ExperimentSpec& spec, const ScenarioConfig& config) {
    spec.validate();
    config.validate();
    const ResolvedParams params = resolve_params(spec);
    const CrosswalkSim sim(config);

    RunRecord record;
    record.spec = spec;
    record.scenario_config = config;

    namespace fs = std::filesystem;
    const bool persist = !spec.output_dir.empty();
    if (persist) fs::create_directories(spec.output_dir);
    auto emit = [&](const std::string& name, const std::string& text) {
        if (!persist) return;
        write_text_file((fs::path(spec.output_dir) / name).string(), text);
        record.artifacts.push_back(name);
    };

    Rng master(spec.seed);
    if (spec.solver == "ge") {
        GEResult result = explore(sim, params.ge, master);
        record.series = std::move(result.log);
        record.best_failure = std::move(result.best_failure);
        record.rollouts = result.rollouts;
        if (spec.save_solver_state) emit("pool.json", result.pool.to_json().dump() + "\n");
    } else if (spec.solver == "mcts") {
        MCTSResult result = search(sim, params.mcts, master);
        record.series = std::move(result.log);
        record.best_failure = std::move(result.best_failure);
        record.rollouts = result.rollouts;
        emit("tree_stats.json", tree_stats(*result.tree).to_json().dump(2) + "\n");
    } else {
        DRLResult result = drl_solve(sim, params.drl, master);
        record.series = std::move(result.log);
        record.best_failure = std::move(result.best_failure);
        record.rollouts = result.rollouts;
        if (spec.save_solver_state) emit("policy.json", result.policy->to_json().dump() + "\n");
    }

    if (spec.robustify) {
        if (!record.best_failure) {
            record.ba_skipped = true;
        } else {
            Rng ba_rng = master.derive(0xba5eba11ull);
            BAResult result = backwards_algorithm(sim, *record.best_failure, params.ba, ba_rng);
            record.ba_series = std::move(result.log);
            record.robustified_reward = result.robustified.total_reward;
            record.robustified = std::move(result.robustified);
            record.rollouts += result.rollouts;
            if (spec.save_solver_state) {
                emit("robustified_policy.json", result.policy->to_json().dump() + "\n");
            }
        }
    }

    emit("series.csv", series_csv(record.series));
    if (!record.ba_series.empty()) emit("ba_series.csv", series_csv(record.ba_series));
    if (record.best_failure) {
        emit("best_trajectory.csv", record.best_failure->to_csv());
        emit("best_trajectory.json", record.best_failure->to_json().dump(2) + "\n");
    }
    if (record.robustified) {
        emit("robustified_trajectory.csv", record.robustified->to_csv());
        emit("robustified_trajectory.json", record.robustified->to_json().dump(2) + "\n");
    }
    if (persist) {
        write_text_file((fs::path(spec.output_dir) / "manifest.json").string(),
                        run_manifest(record).dump(2) + "\n");
    }
    return record;
}

RunRecord run_from_manifest(const nlohmann::json& manifest) {
    if (manifest.value("format", std::string()) != kManifestFormat) {
        throw std::invalid_argument("unrecognized run manifest format");
    }
    ExperimentSpec spec = ExperimentSpec::from_json(manifest.at("spec"));
    spec.output_dir.clear();
    const ScenarioConfig config = ScenarioConfig::from_json(manifest.at("scenario"));
    return run_experiment(spec, config);
}

RunRecord load_run(const std::string& dir) {
    namespace fs = std::filesystem;
    const auto manifest =
        nlohmann::json::parse(read_text_file((fs::path(dir) / "manifest.json").string()));
    if (manifest.value("format", std::string()) != kManifestFormat) {
        throw std::invalid_argument("unrecognized run manifest format in " + dir);
    }
    RunRecord record;
    record.spec = ExperimentSpec::from_json(manifest.at("spec"));
    record.scenario_config = ScenarioConfig::from_json(manifest.at("scenario"));
    const auto& results = manifest.at("results");
    record.rollouts = results.at("rollouts").get<std::uint64_t>();
    record.ba_skipped = results.value("ba_skipped", false);
    if (results.contains("robustified_reward") && !results.at("robustified_reward").is_null()) {
        record.robustified_reward = results.at("robustified_reward").get<double>();
    }
    if (manifest.contains("artifacts")) {
        record.artifacts = manifest.at("artifacts").get<std::vector<std::string>>();
    }
    auto has_artifact = [&](const std::string& name) {
        return std::find(record.artifacts.begin(), record.artifacts.end(), name) !=
               record.artifacts.end();
    };
    auto artifact_path = [&](const std::string& name) { return (fs::path(dir) / name).string(); };
    record.series = parse_series_csv(read_text_file(artifact_path("series.csv")));
    if (has_artifact("ba_series.csv")) {
        record.ba_series = parse_series_csv(read_text_file(artifact_path("ba_series.csv")));
    }
    if (has_artifact("best_trajectory.json")) {
        record.best_failure = Trajectory::from_json(
            nlohmann::json::parse(read_text_file(artifact_path("best_trajectory.json"))));
    }
    if (has_artifact("robustified_trajectory.json")) {
        record.robustified = Trajectory::from_json(
            nlohmann::json::parse(read_text_file(artifact_path("robustified_trajectory.json"))));
    }
    return record;
}

std::string report_csv(const std::vector<RunRecord>& records) {
    if (records.empty()) throw std::invalid_argument("report needs at least one run");
    const auto labels = unique_labels(records);
    std::string out = "iteration";
    for (const auto& label : labels) out += "," + label;
    out += '\n';
    std::size_t rows = 0;
    for (const auto& record : records) rows = std::max(rows, record.series.size());
    for (std::size_t i = 0; i < rows; ++i) {
        out += std::to_string(i + 1);
        for (const auto& record : records) {
            out += ',';
            if (i < record.series.size() && record.series[i].found_failure) {
                out += format_double(record.series[i].best_reward);
            }
        }
        out += '\n';
    }
    return out;
}

std::string report_svg(const std::vector<RunRecord>& records) {
    if (records.empty()) throw std::invalid_argument("report needs at least one run");
    const auto labels = unique_labels(records);

    const double width = 960.0, height = 560.0;
    const double left = 70.0, right = width - 240.0;
    const double top = 46.0, bottom = height - 58.0;
    const double plot_w = right - left, plot_h = bottom - top;

    std::size_t max_iter = 1;
    double y_min = std::numeric_limits<double>::infinity();
    double y_max = -std::numeric_limits<double>::infinity();
    auto include = [&](double v) {
        y_min = std::min(y_min, v);
        y_max = std::max(y_max, v);
    };
    for (const auto& record : records) {
        max_iter = std::max(max_iter, record.series.size());
        for (const auto& it : record.series) {
            if (it.found_failure) include(it.best_reward);
        }
        if (record.robustified_reward) include(*record.robustified_reward);
    }
    if (y_min > y_max) {
        y_min = -1.0;
        y_max = 0.0;
    }
    if (y_max - y_min < 1e-9) {
        y_min -= 1.0;
        y_max += 1.0;
    }
    const double pad = 0.05 * (y_max - y_min);
    y_min -= pad;
    y_max += pad;

    auto sx = [&](double iter) {
        if (max_iter <= 1) return left + 0.5 * plot_w;
        return left + (iter - 1.0) / (static_cast<double>(max_iter) - 1.0) * plot_w;
    };
    auto sy = [&](double v) { return top + (y_max - v) / (y_max - y_min) * plot_h; };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    svg << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"#ffffff\"/>\n";
    svg << "<text x=\"" << svg_coord(left) << "\" y=\"24\" font-family=\"monospace\" "
           "font-size=\"15\" fill=\"#111111\">best failure reward by iteration "
           "(dashed: robustified)</text>\n";

    for (int k = 0; k <= 4; ++k) {
        const double v = y_min + (y_max - y_min) * k / 4.0;
        const double y = sy(v);
        svg << "<line x1=\"" << svg_coord(left) << "\" y1=\"" << svg_coord(y) << "\" x2=\""
            << svg_coord(right) << "\" y2=\"" << svg_coord(y)
            << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
        svg << "<text x=\"" << svg_coord(left - 8.0) << "\" y=\"" << svg_coord(y + 4.0)
            << "\" font-family=\"monospace\" font-size=\"11\" fill=\"#333333\" "
               "text-anchor=\"end\">"
            << tick_text(v) << "</text>\n";
    }
    const std::size_t x_step = std::max<std::size_t>(1, max_iter / 6);
    for (std::size_t i = 1; i <= max_iter; i += x_step) {
        const double x = sx(static_cast<double>(i));
        svg << "<line x1=\"" << svg_coord(x) << "\" y1=\"" << svg_coord(bottom) << "\" x2=\""
            << svg_coord(x) << "\" y2=\"" << svg_coord(bottom + 5.0)
            << "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
        svg << "<text x=\"" << svg_coord(x) << "\" y=\"" << svg_coord(bottom + 20.0)
            << "\" font-family=\"monospace\" font-size=\"11\" fill=\"#333333\" "
               "text-anchor=\"middle\">"
            << i << "</text>\n";
    }
    svg << "<line x1=\"" << svg_coord(left) << "\" y1=\"" << svg_coord(top) << "\" x2=\""
        << svg_coord(left) << "\" y2=\"" << svg_coord(bottom)
        << "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
    svg << "<line x1=\"" << svg_coord(left) << "\" y1=\"" << svg_coord(bottom) << "\" x2=\""
        << svg_coord(right) << "\" y2=\"" << svg_coord(bottom)
        << "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
    svg << "<text x=\"" << svg_coord(left + plot_w / 2.0) << "\" y=\""
        << svg_coord(height - 14.0)
        << "\" font-family=\"monospace\" font-size=\"12\" fill=\"#333333\" "
           "text-anchor=\"middle\">iteration</text>\n";

    for (std::size_t r = 0; r < records.size(); ++r) {
        const auto& record = records[r];
        const char* color = kPalette[r % kPaletteSize];
        std::vector<std::pair<double, double>> points;
        for (const auto& it : record.series) {
            if (it.found_failure) {
                points.emplace_back(sx(static_cast<double>(it.iteration)), sy(it.best_reward));
            }
        }
        if (points.size() >= 2) {
            svg << "<polyline fill=\"none\" stroke=\"" << color
                << "\" stroke-width=\"1.5\" points=\"";
            for (const auto& [x, y] : points) svg << svg_coord(x) << "," << svg_coord(y) << " ";
            svg << "\"/>\n";
        }
        if (!points.empty()) {
            svg << "<circle cx=\"" << svg_coord(points.back().first) << "\" cy=\""
                << svg_coord(points.back().second) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        }
        if (record.robustified_reward) {
            const double y = sy(*record.robustified_reward);
            svg << "<line x1=\"" << svg_coord(left) << "\" y1=\"" << svg_coord(y) << "\" x2=\""
                << svg_coord(right) << "\" y2=\"" << svg_coord(y) << "\" stroke=\"" << color
                << "\" stroke-width=\"1.5\" stroke-dasharray=\"6,4\"/>\n";
        }
    }

    double legend_y = top + 6.0;
    const double legend_x = right + 14.0;
    for (std::size_t r = 0; r < records.size(); ++r) {
        const auto& record = records[r];
        const char* color = kPalette[r % kPaletteSize];
        const bool found = std::any_of(record.series.begin(), record.series.end(),
                                       [](const IterationRecord& it) { return it.found_failure; });
        svg << "<line x1=\"" << svg_coord(legend_x) << "\" y1=\"" << svg_coord(legend_y)
            << "\" x2=\"" << svg_coord(legend_x + 24.0) << "\" y2=\"" << svg_coord(legend_y)
            << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << svg_coord(legend_x + 30.0) << "\" y=\"" << svg_coord(legend_y + 4.0)
            << "\" font-family=\"monospace\" font-size=\"11\" fill=\"#111111\">"
            << xml_escape(labels[r]) << (found ? "" : " (no failure)") << "</text>\n";
        legend_y += 18.0;
        if (record.robustified_reward) {
            svg << "<line x1=\"" << svg_coord(legend_x) << "\" y1=\"" << svg_coord(legend_y)
                << "\" x2=\"" << svg_coord(legend_x + 24.0) << "\" y2=\"" << svg_coord(legend_y)
                << "\" stroke=\"" << color
                << "\" stroke-width=\"2\" stroke-dasharray=\"6,4\"/>\n";
            svg << "<text x=\"" << svg_coord(legend_x + 30.0) << "\" y=\""
                << svg_coord(legend_y + 4.0)
                << "\" font-family=\"monospace\" font-size=\"11\" fill=\"#111111\">"
                << xml_escape(labels[r]) << " robustified</text>\n";
            legend_y += 18.0;
        }
    }

    svg << "</svg>\n";
    return svg.str();
}

void write_report(const std::vector<RunRecord>& records, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    namespace fs = std::filesystem;
    write_text_file((fs::path(out_dir) / "report.csv").string(), report_csv(records));
    write_text_file((fs::path(out_dir) / "report.svg").string(), report_svg(records));
}

}  // namespace stresslab
