// spill: command-line front end for the simulation lab and the refinement pipeline.
//
// Exit codes: 0 success, 1 invalid input or flags, 2 runtime failure.

#include <csignal>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <omp.h>
#include <pthread.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "spill/core.hpp"
#include "spill/error.hpp"
#include "spill/pipeline.hpp"
#include "spill/refine.hpp"
#include "spill/report.hpp"
#include "spill/simlab.hpp"
#include "spill/stub_server.hpp"
#include "spill/synthetic.hpp"
#include "spill/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace spill;

namespace {

struct Globals {
    std::uint64_t seed = 0;
    std::size_t concurrency = 0;
    std::string out;
    std::string format = "json";
    std::vector<std::string> argv;
};

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Report goes to --out (or stdout); the manifest sits next to it.
void emit(const Globals& g, std::string_view command, const std::string& body, const json& config, const json& seeds) {
    if (g.out.empty()) {
        std::cout << body;
        return;
    }
    write_text_file(g.out, body);
    json manifest{{"tool", "spill"},
                  {"version", kVersion},
                  {"command", command},
                  {"argv", g.argv},
                  {"config", config},
                  {"seeds", seeds},
                  {"report", fs::path(g.out).filename().string()},
                  {"format", g.format},
                  {"created_at", utc_timestamp()}};
    write_text_file(g.out + ".manifest.json", manifest.dump(2) + "\n");
}

// Rows go to stdout when the report has a file of its own, to stderr otherwise.
std::ostream& human(const Globals& g) { return g.out.empty() ? std::cerr : std::cout; }

std::string eval_csv(const std::vector<std::pair<std::string, EvalReport>>& rows) {
    std::ostringstream out;
    out.precision(17);
    out << "name,nmi_mean,nmi_std,acc_mean,acc_std,runs\n";
    for (const auto& [name, e] : rows) {
        out << name << ',' << e.nmi_mean << ',' << e.nmi_std << ',' << e.acc_mean << ',' << e.acc_std << ',' << e.runs
            << '\n';
    }
    return out.str();
}

// ---- simulate ---------------------------------------------------------------

struct SimulateOpts {
    std::string dist = "normal";
    std::size_t k = 0;
    std::vector<std::string> strategies{"rd"};
    std::string replacement = "without";
    std::size_t runs = 50;
    std::size_t dim = 128;
    std::size_t clusters = 3;
    std::size_t size_min = 50;
    std::size_t size_max = 250;
    std::string axis;
    std::vector<std::size_t> values;
    std::string csv;
};

int run_simulate(const Globals& g, const SimulateOpts& o) {
    SimulationSpec base = SimulationSpec::table1(parse_distribution(o.dist));
    base.k = o.k;
    base.replacement = parse_replacement(o.replacement);
    base.runs = o.runs;
    base.dim = o.dim;
    base.num_clusters = o.clusters;
    base.size_range = {o.size_min, o.size_max};
    base.rng_seed = g.seed;

    const SweepAxis axis = o.axis.empty() ? SweepAxis::K : parse_axis(o.axis);
    std::vector<std::size_t> values = o.values;
    if (values.empty()) {
        if (!o.axis.empty()) throw ValidationError("--axis needs --values");
        values = {axis == SweepAxis::K ? o.k : o.dim};
    }
    std::vector<Strategy> strategies;
    for (const auto& s : o.strategies) strategies.push_back(parse_strategy(s));

    // every point is checked before anything runs
    for (Strategy s : strategies) {
        for (std::size_t v : values) {
            SimulationSpec spec = base;
            spec.strategy = s;
            (axis == SweepAxis::K ? spec.k : spec.dim) = v;
            spec.validate();
        }
    }

    SweepReport report;
    report.axis = axis;
    for (Strategy s : strategies) {
        SimulationSpec spec = base;
        spec.strategy = s;
        auto part = run_sweep(spec, axis, values);
        report.base_spec = part.base_spec;
        for (auto& p : part.points) report.points.push_back(std::move(p));
    }
    if (strategies.size() > 1) report.base_spec["strategy"] = o.strategies;

    auto& os = human(g);
    char buf[200];
    for (const auto& p : report.points) {
        std::snprintf(buf, sizeof buf, "%s=%-4g %-4s  var %7.2f (%5.2f)  NMI %6.2f (%5.2f)  Acc %6.2f (%5.2f)\n",
                      to_string(axis).data(), p.axis_value, to_string(p.strategy).data(), p.var_mean, p.var_std,
                      p.nmi_mean, p.nmi_std, p.acc_mean, p.acc_std);
        os << buf;
    }

    const std::string csv = sweep_csv(report);
    if (!o.csv.empty()) write_text_file(o.csv, csv);
    json body = to_json(report);
    const std::string text = g.format == "csv" ? csv : render_json_document(body, "sweep");
    json config = report.base_spec;
    config["axis"] = to_string(axis);
    config["values"] = values;
    config["strategies"] = o.strategies;
    emit(g, "simulate", text, config, {{"rng_seed", g.seed}});
    return 0;
}

// ---- pipeline / sweep-hparams -------------------------------------------------

struct PipelineOpts {
    std::string data;
    std::string ablation = "full";
    std::size_t l_top = kDefaultLTop;
    std::size_t l_random = kDefaultLRandom;
    std::string selector = "oracle";
    std::string endpoint;
    std::string model;
    std::optional<std::size_t> max_in_flight;
    std::size_t max_retries = 2;
    long timeout_ms = 60000;
    double temperature = 0.0;
    std::string api_key_env = "SPILL_API_KEY";
    std::optional<std::uint64_t> shuffle_seed;
    std::size_t runs = 5;
    std::optional<std::size_t> clusters;
    std::size_t restarts = 10;
    bool reselect = false;
    std::string candidates_out;
    std::string selections_out;
    std::string refined_out;
    // sweep-hparams only
    std::vector<std::size_t> values{2, 4, 6, 8, 10, 12, 14, 16, 18, 20};
    std::size_t total_l = 20;
};

PipelineConfig make_config(const Globals& g, const PipelineOpts& o) {
    PipelineConfig c;
    c.l_top = o.l_top;
    c.l_random = o.l_random;
    c.ablation = parse_ablation(o.ablation);
    c.runs = o.runs;
    c.num_clusters = o.clusters;
    c.rng_seed = g.seed;
    c.kmeans.restarts = o.restarts;
    c.reselect_per_run = o.reselect;
    auto& s = c.selector;
    s.kind = parse_selector_kind(o.selector);
    s.endpoint = o.endpoint;
    s.model_name = o.model;
    s.max_in_flight = o.max_in_flight ? *o.max_in_flight : (g.concurrency ? g.concurrency : s.max_in_flight);
    s.max_retries = o.max_retries;
    s.request_timeout = std::chrono::milliseconds(o.timeout_ms);
    s.temperature = o.temperature;
    s.api_key_env = o.api_key_env;
    s.shuffle_seed = o.shuffle_seed ? *o.shuffle_seed : g.seed;
    return c;
}

int run_pipeline_cmd(const Globals& g, const PipelineOpts& o) {
    const auto ds = load_dataset(o.data);
    const auto cfg = make_config(g, o);
    cfg.validate(ds);
    const auto result = run_pipeline(ds, cfg);

    if (!o.candidates_out.empty()) save_candidate_sets(result.candidates, o.candidates_out);
    if (!o.selections_out.empty()) save_selections(result.outcomes, o.selections_out);
    if (!o.refined_out.empty()) {
        if (!result.refined) throw ValidationError("--refined-out needs a pooled ablation");
        save_refined(ds, *result.refined, o.refined_out);
    }

    auto& os = human(g);
    os << to_string(cfg.ablation) << "  ";
    if (result.eval) {
        os << format_table_row(*result.eval) << '\n';
    } else {
        os << "clustered " << ds.size() << " utterances into " << result.num_clusters << " clusters (no labels)\n";
    }
    if (result.stats) {
        char buf[120];
        std::snprintf(buf, sizeof buf, "selection: correct %.2f%%  mean count %.2f\n", result.stats->correct_ratio,
                      result.stats->mean_selection_count);
        os << buf;
    }
    if (result.fallback_count || result.error_count) {
        std::cerr << "warning: " << result.fallback_count << " seeds fell back to an empty selection after unparsable "
                  << "replies, " << result.error_count << " failed on transport errors\n";
    }

    json body = to_json(result, cfg);
    std::string text;
    if (g.format == "csv") {
        if (!result.eval) throw ValidationError("--format csv needs a labeled dataset");
        text = eval_csv({{std::string(to_string(cfg.ablation)), *result.eval}});
    } else {
        text = render_json_document(body, "pipeline");
    }
    json config = to_json(cfg);
    config["data"] = o.data;
    emit(g, "pipeline", text, config,
         {{"rng_seed", cfg.rng_seed},
          {"cluster_seed", derive_seed(cfg.rng_seed, {1})},
          {"shuffle_seed", cfg.selector.shuffle_seed}});
    return 0;
}

int run_sweep_cmd(const Globals& g, const PipelineOpts& o) {
    const auto ds = load_dataset(o.data);
    const auto cfg = make_config(g, o);
    const auto sweep = sweep_hparams(ds, cfg, o.values, o.total_l);
    human(g) << hparam_table(sweep);

    std::string text;
    if (g.format == "csv") {
        std::vector<std::pair<std::string, EvalReport>> rows{{"plain", sweep.plain}};
        for (const auto& r : sweep.rows) rows.push_back({"l_top=" + std::to_string(r.l_top), r.eval});
        text = eval_csv(rows);
    } else {
        text = render_json_document(to_json(sweep), "hparam_sweep");
    }
    json config = to_json(cfg);
    config["data"] = o.data;
    config["l_top_values"] = o.values;
    config["total_l"] = o.total_l;
    emit(g, "sweep-hparams", text, config, {{"rng_seed", cfg.rng_seed}, {"shuffle_seed", cfg.selector.shuffle_seed}});
    return 0;
}

// ---- eval / stats -------------------------------------------------------------

struct EvalOpts {
    std::string data;
    std::size_t runs = 5;
    std::optional<std::size_t> clusters;
    std::size_t restarts = 10;
};

int run_eval(const Globals& g, const EvalOpts& o) {
    const auto ds = load_dataset(o.data);
    const auto truth = label_codes(ds);
    const std::size_t m = resolve_num_clusters(ds, o.clusters);
    KMeansOptions km;
    km.restarts = o.restarts;
    const auto report = evaluate(ds.embeddings().values(), truth, m, o.runs, g.seed, km);
    human(g) << format_table_row(report) << '\n';
    const std::string text =
        g.format == "csv" ? eval_csv({{"eval", report}}) : render_json_document(to_json(report), "eval_report");
    emit(g, "eval", text, {{"data", o.data}, {"runs", o.runs}, {"num_clusters", m}, {"restarts", o.restarts}},
         {{"rng_seed", g.seed}});
    return 0;
}

struct StatsOpts {
    std::string data;
    std::string selections;
};

int run_stats(const Globals& g, const StatsOpts& o) {
    const auto ds = load_dataset(o.data);
    const auto outcomes = load_selections(o.selections);
    const auto s = selection_stats(outcomes, ds);
    char buf[160];
    std::snprintf(buf, sizeof buf, "correct %.2f%%  mean count %.2f  (%zu of %zu selections over %zu seeds)\n",
                  s.correct_ratio, s.mean_selection_count, s.total_correct, s.total_selected, s.seeds);
    human(g) << buf;
    std::string text;
    if (g.format == "csv") {
        std::ostringstream out;
        out.precision(17);
        out << "correct_ratio,mean_selection_count,total_selected,total_correct,seeds\n"
            << s.correct_ratio << ',' << s.mean_selection_count << ',' << s.total_selected << ',' << s.total_correct
            << ',' << s.seeds << '\n';
        text = out.str();
    } else {
        text = render_json_document(to_json(s), "selection_stats");
    }
    emit(g, "stats", text, {{"data", o.data}, {"selections", o.selections}}, json::object());
    return 0;
}

// ---- synth / serve-stub -------------------------------------------------------

int run_synth(const Globals& g, GaussianIntentsSpec spec) {
    if (g.out.empty()) throw ValidationError("synth needs --out");
    spec.seed = g.seed;
    const auto ds = make_gaussian_intents(spec);
    save_dataset(ds, g.out);
    json config{{"intents", spec.intents},
                {"per_intent", spec.per_intent},
                {"dim", spec.dim},
                {"center_spread", spec.center_spread},
                {"noise", spec.noise}};
    json manifest{{"tool", "spill"},
                  {"version", kVersion},
                  {"command", "synth"},
                  {"argv", g.argv},
                  {"config", config},
                  {"seeds", {{"rng_seed", g.seed}}},
                  {"report", fs::path(g.out).filename().string()},
                  {"created_at", utc_timestamp()}};
    write_text_file(g.out + ".manifest.json", manifest.dump(2) + "\n");
    std::cout << "wrote " << ds.size() << " utterances to " << g.out << '\n';
    return 0;
}

struct ServeOpts {
    std::string data;
    int port = 8000;
};

int run_serve(const ServeOpts& o) {
    const auto ds = load_dataset(o.data);
    auto handler = label_oracle_handler(ds);

    // server threads inherit the blocked mask; the main thread waits for the signal
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    StubChatServer server(std::move(handler), o.port);
    std::cout << "serving label-oracle replies for " << ds.size() << " utterances at " << server.endpoint()
              << std::endl;
    int sig = 0;
    sigwait(&set, &sig);
    server.stop();
    std::cout << "stopped after " << server.requests() << " requests\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-stage selection and pooling for embedding-based intent clustering"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    for (int i = 0; i < argc; ++i) g.argv.emplace_back(argv[i]);
    app.add_option("--seed", g.seed, "Base RNG seed")->capture_default_str();
    app.add_option("--concurrency", g.concurrency, "Worker threads (OpenMP and in-flight requests)")
        ->check(CLI::PositiveNumber);
    app.add_option("--out", g.out, "Report path (stdout when omitted); a .manifest.json is written next to it");
    app.add_option("--format", g.format, "Report format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();

    std::function<int()> action;

    SimulateOpts sim;
    auto* simulate = app.add_subcommand("simulate", "Pooling experiments on synthetic clusters");
    simulate->add_option("--dist", sim.dist)->check(CLI::IsMember({"normal", "lognormal"}))->capture_default_str();
    simulate->add_option("--k", sim.k, "Partners pooled with each point")->capture_default_str();
    simulate->add_option("--strategy", sim.strategies, "rd, topk or both (comma separated)")
        ->delimiter(',')
        ->check(CLI::IsMember({"rd", "topk"}))
        ->capture_default_str();
    simulate->add_option("--replacement", sim.replacement)
        ->check(CLI::IsMember({"with", "without"}))
        ->capture_default_str();
    simulate->add_option("--runs", sim.runs)->check(CLI::PositiveNumber)->capture_default_str();
    simulate->add_option("--dim", sim.dim)->check(CLI::PositiveNumber)->capture_default_str();
    simulate->add_option("--clusters", sim.clusters)->check(CLI::PositiveNumber)->capture_default_str();
    simulate->add_option("--size-min", sim.size_min)->capture_default_str();
    simulate->add_option("--size-max", sim.size_max)->capture_default_str();
    simulate->add_option("--axis", sim.axis, "Sweep axis")->check(CLI::IsMember({"k", "dim"}));
    simulate->add_option("--values", sim.values, "Sweep values (comma separated)")->delimiter(',');
    simulate->add_option("--csv", sim.csv, "Also write the sweep as CSV");
    simulate->callback([&] { action = [&] { return run_simulate(g, sim); }; });

    PipelineOpts pl;
    auto add_pipeline_options = [&pl](CLI::App* cmd) {
        cmd->add_option("--data", pl.data, "Dataset (JSON Lines)")->required()->check(CLI::ExistingFile);
        cmd->add_option("--ablation", pl.ablation)
            ->check(CLI::IsMember({"plain", "stage1", "full", "ground-truth"}))
            ->capture_default_str();
        cmd->add_option("--selector", pl.selector)
            ->check(CLI::IsMember({"remote", "oracle", "passthrough"}))
            ->capture_default_str();
        cmd->add_option("--endpoint", pl.endpoint, "Chat-completions URL for --selector remote");
        cmd->add_option("--model", pl.model, "Model name for --selector remote");
        cmd->add_option("--max-in-flight", pl.max_in_flight, "Concurrent requests (default: --concurrency or 4)");
        cmd->add_option("--max-retries", pl.max_retries)->capture_default_str();
        cmd->add_option("--timeout-ms", pl.timeout_ms)->check(CLI::PositiveNumber)->capture_default_str();
        cmd->add_option("--temperature", pl.temperature)->capture_default_str();
        cmd->add_option("--api-key-env", pl.api_key_env, "Environment variable holding the API key")
            ->capture_default_str();
        cmd->add_option("--shuffle-seed", pl.shuffle_seed, "Candidate shuffle seed (default: --seed)");
        cmd->add_option("--runs", pl.runs, "Clustering runs")->check(CLI::PositiveNumber)->capture_default_str();
        cmd->add_option("--clusters", pl.clusters, "Cluster count (default: number of labels)");
        cmd->add_option("--restarts", pl.restarts, "k-means restarts")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        cmd->add_flag("--reselect-per-run", pl.reselect, "Redo remote selection for every clustering run");
    };

    auto* pipeline = app.add_subcommand("pipeline", "Refine embeddings and cluster them");
    add_pipeline_options(pipeline);
    pipeline->add_option("--l-top", pl.l_top)->capture_default_str();
    pipeline->add_option("--l-random", pl.l_random)->capture_default_str();
    pipeline->add_option("--candidates-out", pl.candidates_out, "Dump candidate sets (JSONL)");
    pipeline->add_option("--selections-out", pl.selections_out, "Dump selections (JSONL)");
    pipeline->add_option("--refined-out", pl.refined_out, "Dump refined embeddings (JSONL)");
    pipeline->callback([&] { action = [&] { return run_pipeline_cmd(g, pl); }; });

    auto* sweep = app.add_subcommand("sweep-hparams", "Compare l_top values at a fixed candidate budget");
    add_pipeline_options(sweep);
    sweep->add_option("--values", pl.values, "l_top values (comma separated)")->delimiter(',')->capture_default_str();
    sweep->add_option("--total-l", pl.total_l, "Candidate budget L")->check(CLI::PositiveNumber)->capture_default_str();
    sweep->callback([&] { action = [&] { return run_sweep_cmd(g, pl); }; });

    EvalOpts ev;
    auto* eval = app.add_subcommand("eval", "Cluster a labeled dataset as is and score it");
    eval->add_option("--data", ev.data)->required()->check(CLI::ExistingFile);
    eval->add_option("--runs", ev.runs)->check(CLI::PositiveNumber)->capture_default_str();
    eval->add_option("--clusters", ev.clusters);
    eval->add_option("--restarts", ev.restarts)->check(CLI::PositiveNumber)->capture_default_str();
    eval->callback([&] { action = [&] { return run_eval(g, ev); }; });

    StatsOpts st;
    auto* stats = app.add_subcommand("stats", "Selection accuracy and size from a selections dump");
    stats->add_option("--data", st.data)->required()->check(CLI::ExistingFile);
    stats->add_option("--selections", st.selections)->required()->check(CLI::ExistingFile);
    stats->callback([&] { action = [&] { return run_stats(g, st); }; });

    GaussianIntentsSpec syn;
    auto* synth = app.add_subcommand("synth", "Write a labeled Gaussian-intents dataset");
    synth->add_option("--intents", syn.intents)->check(CLI::PositiveNumber)->capture_default_str();
    synth->add_option("--per-intent", syn.per_intent)->check(CLI::PositiveNumber)->capture_default_str();
    synth->add_option("--dim", syn.dim)->check(CLI::PositiveNumber)->capture_default_str();
    synth->add_option("--spread", syn.center_spread, "Std of intent centers")->capture_default_str();
    synth->add_option("--noise", syn.noise, "Std around each center")->capture_default_str();
    synth->callback([&] { action = [&] { return run_synth(g, syn); }; });

    ServeOpts sv;
    auto* serve = app.add_subcommand("serve-stub", "Serve label-oracle chat completions for a dataset");
    serve->add_option("--data", sv.data)->required()->check(CLI::ExistingFile);
    serve->add_option("--port", sv.port)->check(CLI::Range(0, 65535))->capture_default_str();
    serve->callback([&] { action = [&] { return run_serve(sv); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    if (g.concurrency) omp_set_num_threads(static_cast<int>(g.concurrency));
    try {
        return action();
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
