#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include <gdlm/day_tensor.hpp>
#include <gdlm/diffusion.hpp>
#include <gdlm/distance_table.hpp>
#include <gdlm/errors.hpp>
#include <gdlm/evaluate.hpp>
#include <gdlm/forecast.hpp>
#include <gdlm/model_io.hpp>
#include <gdlm/sensor_graph.hpp>
#include <gdlm/series.hpp>
#include <gdlm/training.hpp>

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require_input_file(const std::string& path, const std::string& what) {
    if (!fs::exists(path))
        throw UsageError("missing " + what + " file: " + path);
}

double parse_auto_or_value(const std::string& s, const std::string& flag) {
    if (s == "auto") return -1.0;
    try {
        size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw UsageError("--" + flag + " expects a number or 'auto', got '" + s + "'");
    }
}

std::vector<int> parse_horizons_minutes(const std::string& s) {
    std::vector<int> out;
    size_t pos = 0;
    while (pos <= s.size()) {
        size_t comma = s.find(',', pos);
        std::string tok = s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        if (tok.empty()) throw UsageError("empty entry in --horizons list");
        try {
            size_t used = 0;
            int v = std::stoi(tok, &used);
            if (used != tok.size() || v <= 0) throw std::invalid_argument(tok);
            out.push_back(v);
        } catch (const std::exception&) {
            throw UsageError("--horizons entries must be positive minutes, got '" + tok + "'");
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (out.empty()) throw UsageError("--horizons list is empty");
    return out;
}

std::vector<int> horizons_to_steps(const std::vector<int>& minutes, int ts_minutes) {
    std::vector<int> steps;
    for (int h : minutes) {
        if (h % ts_minutes != 0)
            throw UsageError("horizon " + std::to_string(h) + " min is not a multiple of the " +
                             std::to_string(ts_minutes) + "-minute sampling interval");
        steps.push_back(h / ts_minutes);
    }
    return steps;
}

/// Reorders the columns of a loaded series to the model's sensor order.
gdlm::SpeedSeries align_to_model(const gdlm::SpeedSeries& s, const gdlm::TrainedModel& model) {
    if (s.sensor_ids == model.sensor_ids) return s;
    std::vector<int> sel(model.N(), -1);
    std::string missing;
    for (int i = 0; i < model.N(); ++i) {
        for (int j = 0; j < s.n_sensors(); ++j)
            if (s.sensor_ids[j] == model.sensor_ids[i]) {
                sel[i] = j;
                break;
            }
        if (sel[i] < 0) {
            if (!missing.empty()) missing += ", ";
            missing += model.sensor_ids[i];
        }
    }
    std::string extra;
    for (int j = 0; j < s.n_sensors(); ++j) {
        bool used = false;
        for (int i = 0; i < model.N(); ++i)
            if (sel[i] == j) used = true;
        if (!used) {
            if (!extra.empty()) extra += ", ";
            extra += s.sensor_ids[j];
        }
    }
    if (!missing.empty() || !extra.empty()) {
        std::string msg = "sensor ids do not match the model";
        if (!missing.empty()) msg += "; missing: " + missing;
        if (!extra.empty()) msg += "; unexpected: " + extra;
        throw UsageError(msg);
    }
    gdlm::SpeedSeries out;
    out.sensor_ids = model.sensor_ids;
    out.stamps_min = s.stamps_min;
    out.ts_minutes = s.ts_minutes;
    out.values.resize(s.values.rows(), model.N());
    for (int i = 0; i < model.N(); ++i) out.values.col(i) = s.values.col(sel[i]);
    return out;
}

std::string fmt(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

struct TrainArgs {
    std::string speeds, distances, output;
    std::string kappa = "auto", sigma = "auto";
    double epsilon = 0.01;
    int K = 5;
    double train_fraction = 0.8;
    int downsample_factor = 1;
    bool no_wrap = false;
    std::uint64_t seed = 0;
    int threads = 0;
    int restarts = 3;
    int max_iters = 200;
    double grad_tol = 1e-6;
};

int cmd_train(const TrainArgs& a) {
    require_input_file(a.speeds, "speeds");
    require_input_file(a.distances, "distances");
    auto t_start = std::chrono::steady_clock::now();

    gdlm::DistanceTable table = gdlm::load_distances(a.distances);
    gdlm::SpeedSeries series = gdlm::load_speeds(a.speeds);
    if (a.downsample_factor > 1) series = gdlm::downsample(series, a.downsample_factor);

    Eigen::MatrixXd distAll = gdlm::all_pairs_shortest(table);
    Eigen::MatrixXd distM = gdlm::select_sensors(distAll, table.sensor_ids, series.sensor_ids);

    std::vector<std::string> warnings;
    gdlm::DayTensor tensor = gdlm::to_day_tensor(series, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
    auto [train_days, test_days] = gdlm::split_days(tensor, a.train_fraction);
    std::cout << "days: " << train_days.m << " train, " << test_days.m << " test ("
              << tensor.T << " slots of " << tensor.ts_minutes << " min)\n";

    gdlm::NormStats norm = gdlm::fit_norm(train_days);
    gdlm::DayTensor normalized = gdlm::apply_norm(train_days, norm);

    gdlm::GraphConfig gcfg;
    gcfg.kappa = parse_auto_or_value(a.kappa, "kappa");
    gcfg.sigma = parse_auto_or_value(a.sigma, "sigma");
    gcfg.epsilon = a.epsilon;
    gcfg.K = a.K;
    gdlm::SensorGraph graph = gdlm::build_graph(distM, gcfg);
    gdlm::DiffusionGrid grid = gdlm::build_grid(graph, gcfg);
    std::cout << "graph: N=" << graph.size() << " kappa=" << fmt(graph.kappa)
              << " sigma=" << fmt(graph.sigma) << " taus=[" << fmt(grid.taus.front()) << " .. "
              << fmt(grid.taus.back()) << "] K=" << grid.K() << '\n';

    gdlm::TrainConfig tcfg;
    tcfg.opt.max_iters = a.max_iters;
    tcfg.opt.grad_tol = a.grad_tol;
    tcfg.opt.restarts = a.restarts;
    tcfg.wrap = !a.no_wrap;
    tcfg.seed = a.seed;
    tcfg.threads = a.threads;
    gdlm::GraphMeta meta{graph.kappa, graph.sigma, gcfg.epsilon};
    gdlm::TrainedModel model = gdlm::train(normalized, grid, norm, tcfg, meta);

    int converged = 0;
    std::vector<int> iters(model.n_slots());
    std::string stragglers;
    for (int t = 0; t < model.n_slots(); ++t) {
        converged += model.slot_converged[t] ? 1 : 0;
        iters[t] = model.slot_iterations[t];
        if (!model.slot_converged[t]) {
            if (!stragglers.empty()) stragglers += ", ";
            stragglers += std::to_string(t);
        }
    }
    std::sort(iters.begin(), iters.end());
    std::cout << "slots converged: " << converged << "/" << model.n_slots()
              << " (iterations median " << iters[iters.size() / 2] << ", max " << iters.back()
              << ")\n";
    if (!stragglers.empty())
        std::cout << "slots stopped at the iteration cap: " << stragglers << '\n';

    gdlm::save_model(a.output, model);
    auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    std::cout << "model written to " << a.output << " (" << fmt(secs) << " s)\n";
    return kExitOk;
}

struct PredictArgs {
    std::string model, speeds, output;
    std::string horizons;
    bool variance = false;
};

int cmd_predict(const PredictArgs& a) {
    require_input_file(a.model, "model");
    require_input_file(a.speeds, "speeds");
    std::vector<int> minutes = parse_horizons_minutes(a.horizons);

    gdlm::TrainedModel model = gdlm::load_model(a.model);
    gdlm::SpeedSeries window = align_to_model(gdlm::load_speeds(a.speeds), model);
    if (window.n_rows() < 1) throw UsageError("speeds window has no rows");
    std::vector<int> steps = horizons_to_steps(minutes, model.ts_minutes);

    const long last = window.n_rows() - 1;
    std::int64_t stamp = window.stamps_min[last];
    if (stamp % model.ts_minutes != 0)
        throw gdlm::ConfigError("conditioning timestamp is not aligned to the " +
                                std::to_string(model.ts_minutes) + "-minute slot grid");
    int slot = static_cast<int>((stamp % 1440) / model.ts_minutes);
    Eigen::VectorXd x = window.values.row(last).transpose();

    gdlm::Forecast fc = gdlm::forecast(model, x, slot, steps, a.variance);

    std::ofstream out(a.output);
    if (!out) throw gdlm::IoError("cannot write " + a.output);
    out << "timestamp,horizon_min,sensor_id,prediction";
    if (a.variance) out << ",variance";
    out << '\n';
    for (size_t q = 0; q < steps.size(); ++q) {
        std::string ts = gdlm::format_timestamp_minutes(stamp + minutes[q]);
        for (int i = 0; i < model.N(); ++i) {
            out << ts << ',' << minutes[q] << ',' << model.sensor_ids[i] << ','
                << fmt(fc.means[q](i));
            if (a.variance) out << ',' << fmt(fc.cov_diag[q](i));
            out << '\n';
        }
    }
    if (!out) throw gdlm::IoError("write failed for " + a.output);
    std::cout << "predictions written to " << a.output << '\n';
    return kExitOk;
}

struct EvaluateArgs {
    std::string model, speeds, output_dir;
    std::string horizons;
    bool unmasked_primary = false;
    bool baseline_only = false;
    int threads = 0;
};

int cmd_evaluate(const EvaluateArgs& a) {
    require_input_file(a.model, "model");
    require_input_file(a.speeds, "speeds");
    std::vector<int> minutes = parse_horizons_minutes(a.horizons);

    gdlm::TrainedModel model = gdlm::load_model(a.model);
    gdlm::SpeedSeries series = align_to_model(gdlm::load_speeds(a.speeds), model);
    std::vector<std::string> warnings;
    gdlm::DayTensor test = gdlm::to_day_tensor(series, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
    std::vector<int> steps = horizons_to_steps(minutes, model.ts_minutes);

    gdlm::EvalReport rep =
        gdlm::rmse(model, test, steps, !a.unmasked_primary, a.baseline_only, a.threads);
    for (const auto& w : rep.warnings) std::cerr << "warning: " << w << '\n';

    fs::create_directories(a.output_dir);
    gdlm::write_report_csv(a.output_dir + "/report.csv", rep);
    gdlm::write_report_json(a.output_dir + "/report.json", rep, model.ts_minutes);
    gdlm::write_slot_rmse_csv(a.output_dir + "/slot_rmse.csv", rep, model.ts_minutes);
    gdlm::write_diagnostics_csv(a.output_dir + "/diagnostics.csv", rep.diagnostics);

    std::cout << "horizon_min";
    if (!a.baseline_only) std::cout << " rmse_model";
    std::cout << " rmse_baseline (masked)\n";
    for (const auto& hr : rep.horizons) {
        std::cout << hr.minutes;
        if (!hr.has_points) {
            std::cout << " (no evaluation points)\n";
            continue;
        }
        if (!a.baseline_only) std::cout << ' ' << fmt(hr.rmse_model_masked);
        std::cout << ' ' << fmt(hr.rmse_baseline_masked) << '\n';
    }
    std::cout << "reports written to " << a.output_dir << '\n';
    return kExitOk;
}

struct DiagnosticsArgs {
    std::string model, output;
};

int cmd_diagnostics(const DiagnosticsArgs& a) {
    require_input_file(a.model, "model");
    gdlm::TrainedModel model = gdlm::load_model(a.model);
    auto rows = gdlm::diagnostics_series(model);
    if (!a.output.empty()) {
        gdlm::write_diagnostics_csv(a.output, rows);
        std::cout << "diagnostics written to " << a.output << '\n';
    } else {
        std::cout << "slot minutes_of_day c_data pi_ratio\n";
        for (const auto& r : rows)
            std::cout << r.t << ' ' << r.minutes_of_day << ' ' << fmt(r.c_data) << ' '
                      << fmt(r.pi_ratio) << (r.ratio_floored ? " (floored)" : "") << '\n';
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Graph-prior dynamic linear model for daily-periodic traffic forecasting"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Flat key=value config file; command-line flags override");
    app.allow_config_extras(false);

    TrainArgs ta;
    CLI::App* train = app.add_subcommand("train", "Fit per-slot transitions and hyperparameters");
    train->add_option("--speeds", ta.speeds, "Speed CSV (timestamp + one column per sensor)")
        ->required();
    train->add_option("--distances", ta.distances, "Directed edge list CSV from,to,distance")
        ->required();
    train->add_option("--output", ta.output, "Model file to write")->required();
    train->add_option("--kappa", ta.kappa, "Distance threshold in meters, or 'auto'");
    train->add_option("--sigma", ta.sigma, "Kernel width in meters, or 'auto'");
    train->add_option("--epsilon", ta.epsilon, "Extreme-kernel tolerance in (0,1)");
    train->add_option("--K", ta.K, "Number of diffusion periods");
    train->add_option("--train-fraction", ta.train_fraction, "Fraction of days used for training");
    train->add_option("--downsample-factor", ta.downsample_factor,
                      "Average this many consecutive samples before training");
    train->add_flag("--no-wrap", ta.no_wrap, "Skip the cross-midnight transition slot");
    train->add_option("--seed", ta.seed, "Random seed for optimizer restarts");
    train->add_option("--threads", ta.threads, "Worker threads (0 = all cores)");
    train->add_option("--restarts", ta.restarts, "Optimizer restarts per slot");
    train->add_option("--max-iters", ta.max_iters, "Optimizer iteration cap per restart");
    train->add_option("--grad-tol", ta.grad_tol, "Optimizer gradient tolerance");

    PredictArgs pa;
    CLI::App* predict = app.add_subcommand("predict", "Forecast from the last snapshot of a window");
    predict->add_option("--model", pa.model, "Trained model file")->required();
    predict->add_option("--speeds", pa.speeds, "Speed CSV; the last row conditions the forecast")
        ->required();
    predict->add_option("--output", pa.output, "Predictions CSV to write")->required();
    predict->add_option("--horizons", pa.horizons, "Comma-separated horizons in minutes")
        ->required();
    predict->add_flag("--variance", pa.variance, "Add a predictive-variance column");

    EvaluateArgs ea;
    CLI::App* evaluate = app.add_subcommand("evaluate", "RMSE against a test range");
    evaluate->add_option("--model", ea.model, "Trained model file")->required();
    evaluate->add_option("--speeds", ea.speeds, "Test-range speed CSV")->required();
    evaluate->add_option("--output-dir", ea.output_dir, "Directory for report files")->required();
    evaluate->add_option("--horizons", ea.horizons, "Comma-separated horizons in minutes")
        ->required();
    evaluate->add_flag("--unmasked", ea.unmasked_primary,
                       "Make the unmasked RMSE the primary metric (both are always reported)");
    evaluate->add_flag("--baseline-only", ea.baseline_only, "Evaluate only the persistence baseline");
    evaluate->add_option("--threads", ea.threads, "Worker threads (0 = all cores)");

    DiagnosticsArgs da;
    CLI::App* diagnostics = app.add_subcommand("diagnostics", "Per-slot contribution and mixing curves");
    diagnostics->add_option("--model", da.model, "Trained model file")->required();
    diagnostics->add_option("--output", da.output, "Diagnostics CSV (prints to stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "gdlm: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (train->parsed()) return cmd_train(ta);
        if (predict->parsed()) return cmd_predict(pa);
        if (evaluate->parsed()) return cmd_evaluate(ea);
        if (diagnostics->parsed()) return cmd_diagnostics(da);
        std::cerr << "gdlm: no command given\n";
        return kExitUsage;
    } catch (const UsageError& e) {
        std::cerr << "gdlm: error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "gdlm: error: " << e.what() << '\n';
        return kExitRuntime;
    }
}
