#include "spill/pipeline.hpp"

#include <cstdio>
#include <sstream>

#include "spill/error.hpp"
#include "spill/refine.hpp"

namespace spill {

using nlohmann::json;

std::string_view to_string(Ablation a) {
    switch (a) {
        case Ablation::Plain: return "plain";
        case Ablation::Stage1Only: return "stage1";
        case Ablation::Full: return "full";
        case Ablation::GroundTruth: return "ground-truth";
    }
    return "?";
}

Ablation parse_ablation(std::string_view s) {
    if (s == "plain") return Ablation::Plain;
    if (s == "stage1" || s == "stage1-only") return Ablation::Stage1Only;
    if (s == "full") return Ablation::Full;
    if (s == "ground-truth" || s == "groundtruth") return Ablation::GroundTruth;
    throw ValidationError("unknown ablation '" + std::string(s) + "'");
}

void PipelineConfig::validate(const LabeledDataset& ds) const {
    if (runs == 0) throw ValidationError("runs must be positive");
    if (ablation != Ablation::Plain) check_candidate_budget(ds.size(), l_top, l_random);
    if (ablation == Ablation::Full) selector.validate();
    if (ablation == Ablation::GroundTruth || (ablation == Ablation::Full && selector.kind == SelectorKind::Oracle)) {
        label_codes(ds);  // throws when labels are missing
    }
    resolve_num_clusters(ds, num_clusters);
}

json to_json(const PipelineConfig& c) {
    json j{{"l_top", c.l_top},
           {"l_random", c.l_random},
           {"runs", c.runs},
           {"rng_seed", c.rng_seed},
           {"ablation", to_string(c.ablation)},
           {"reselect_per_run", c.reselect_per_run},
           {"kmeans",
            {{"restarts", c.kmeans.restarts},
             {"max_iters", c.kmeans.max_iters},
             {"tol", c.kmeans.tol},
             {"local_trials", c.kmeans.local_trials}}}};
    j["num_clusters"] = c.num_clusters ? json(*c.num_clusters) : json("from-labels");
    if (c.ablation == Ablation::Full) j["selector"] = to_json(c.selector);
    return j;
}

namespace {

SelectorConfig effective_selector(const PipelineConfig& cfg) {
    SelectorConfig s = cfg.selector;
    if (cfg.ablation == Ablation::Stage1Only) s.kind = SelectorKind::PassThrough;
    if (cfg.ablation == Ablation::GroundTruth) s.kind = SelectorKind::Oracle;
    return s;
}

void count_failures(PipelineResult& r) {
    r.fallback_count = 0;
    r.error_count = 0;
    for (const auto& o : r.outcomes) {
        r.fallback_count += o.parse_status == ParseStatus::FallbackNone;
        r.error_count += o.parse_status == ParseStatus::Error;
    }
}

}  // namespace

PipelineResult run_pipeline(const LabeledDataset& ds, const PipelineConfig& cfg, const TransportFactory& factory) {
    cfg.validate(ds);
    PipelineResult r;
    r.ablation = cfg.ablation;
    r.num_clusters = resolve_num_clusters(ds, cfg.num_clusters);
    const bool labeled = validate_labels(ds).fully_labeled;
    const std::uint64_t cluster_seed = derive_seed(cfg.rng_seed, {1});

    std::vector<int> truth;
    if (labeled) truth = label_codes(ds);

    if (cfg.ablation == Ablation::Plain) {
        const Matrix& x = ds.embeddings().values();
        if (labeled) r.eval = evaluate(x, truth, r.num_clusters, cfg.runs, cluster_seed, cfg.kmeans);
        Rng rng(derive_seed(cluster_seed, {0}));
        r.assignment = kmeans(x, r.num_clusters, rng, cfg.kmeans).labels;
        return r;
    }

    r.candidates = build_all_candidate_sets(ds, cfg.l_top, cfg.l_random);
    SelectorConfig selector = effective_selector(cfg);

    if (!cfg.reselect_per_run || selector.kind != SelectorKind::Remote) {
        r.outcomes = select_all(r.candidates, selector, ds, factory);
        r.refined = refine_dataset(ds, r.outcomes);
        const Matrix& x = r.refined->embeddings.values();
        if (labeled) r.eval = evaluate(x, truth, r.num_clusters, cfg.runs, cluster_seed, cfg.kmeans);
        Rng rng(derive_seed(cluster_seed, {0}));
        r.assignment = kmeans(x, r.num_clusters, rng, cfg.kmeans).labels;
    } else {
        // One selection pass per run; artifacts and stats come from the first.
        EvalReport agg;
        agg.runs = cfg.runs;
        std::vector<double> nmis, accs;
        for (std::size_t run = 0; run < cfg.runs; ++run) {
            SelectorConfig s = selector;
            s.shuffle_seed = derive_seed(selector.shuffle_seed, {run});
            auto outcomes = select_all(r.candidates, s, ds, factory);
            auto refined = refine_dataset(ds, outcomes);
            Rng rng(derive_seed(cluster_seed, {run}));
            const auto a = kmeans(refined.embeddings.values(), r.num_clusters, rng, cfg.kmeans);
            if (run == 0) {
                r.outcomes = std::move(outcomes);
                r.refined = std::move(refined);
                r.assignment = a.labels;
            }
            if (labeled) {
                const RunScore sc{100.0 * nmi(truth, a.labels), 100.0 * accuracy_hungarian(truth, a.labels)};
                agg.per_run.push_back(sc);
                nmis.push_back(sc.nmi);
                accs.push_back(sc.acc);
            }
        }
        if (labeled) {
            const auto n = mean_std(nmis);
            const auto a = mean_std(accs);
            agg.nmi_mean = n.mean;
            agg.nmi_std = n.std;
            agg.acc_mean = a.mean;
            agg.acc_std = a.std;
            r.eval = agg;
        }
    }
    count_failures(r);
    if (labeled) r.stats = selection_stats(r.outcomes, ds);
    return r;
}

json to_json(const PipelineResult& r, const PipelineConfig& cfg) {
    json j{{"ablation", to_string(r.ablation)},
           {"num_clusters", r.num_clusters},
           {"config", to_json(cfg)},
           {"fallbacks", r.fallback_count},
           {"errors", r.error_count}};
    j["eval"] = r.eval ? to_json(*r.eval) : json(nullptr);
    j["selection_stats"] = r.stats ? to_json(*r.stats) : json(nullptr);
    if (!r.eval) j["assignment"] = r.assignment;
    return j;
}

HparamSweep sweep_hparams(const LabeledDataset& ds, const PipelineConfig& cfg,
                          std::span<const std::size_t> l_top_values, std::size_t total_l,
                          const TransportFactory& factory) {
    if (l_top_values.empty()) throw ValidationError("sweep needs at least one l_top value");
    if (cfg.ablation == Ablation::Plain) throw ValidationError("hyperparameter sweep needs a pooled ablation");
    label_codes(ds);
    check_candidate_budget(ds.size(), total_l, 0);
    for (std::size_t v : l_top_values) {
        if (v > total_l) {
            throw ValidationError("l_top=" + std::to_string(v) + " exceeds L=" + std::to_string(total_l));
        }
    }

    HparamSweep sweep;
    sweep.total_l = total_l;
    PipelineConfig plain = cfg;
    plain.ablation = Ablation::Plain;
    sweep.plain = *run_pipeline(ds, plain, factory).eval;

    double best_score = -1.0;
    for (std::size_t v : l_top_values) {
        PipelineConfig c = cfg;
        c.l_top = v;
        c.l_random = total_l - v;
        auto res = run_pipeline(ds, c, factory);
        HparamRow row{v, total_l - v, *res.eval, res.stats};
        const double score = 0.5 * (row.eval.nmi_mean + row.eval.acc_mean);
        if (score > best_score) {
            best_score = score;
            sweep.best = sweep.rows.size();
        }
        sweep.rows.push_back(std::move(row));
    }
    return sweep;
}

json to_json(const HparamSweep& s) {
    json rows = json::array();
    for (std::size_t i = 0; i < s.rows.size(); ++i) {
        const auto& r = s.rows[i];
        rows.push_back({{"l_top", r.l_top},
                        {"l_random", r.l_random},
                        {"eval", to_json(r.eval)},
                        {"selection_stats", r.stats ? to_json(*r.stats) : json(nullptr)},
                        {"best", i == s.best}});
    }
    return {
        {"total_l", s.total_l}, {"plain", to_json(s.plain)}, {"rows", rows}, {"best_l_top", s.rows.at(s.best).l_top}};
}

std::string hparam_table(const HparamSweep& s) {
    std::ostringstream out;
    char buf[160];
    out << "l_top  l_random  NMI mean (std)   Acc mean (std)\n";
    std::snprintf(buf, sizeof buf, "plain  -         %6.2f (%5.2f)   %6.2f (%5.2f)\n", s.plain.nmi_mean,
                  s.plain.nmi_std, s.plain.acc_mean, s.plain.acc_std);
    out << buf;
    for (std::size_t i = 0; i < s.rows.size(); ++i) {
        const auto& r = s.rows[i];
        std::snprintf(buf, sizeof buf, "%-6zu %-9zu %6.2f (%5.2f)   %6.2f (%5.2f)%s\n", r.l_top, r.l_random,
                      r.eval.nmi_mean, r.eval.nmi_std, r.eval.acc_mean, r.eval.acc_std, i == s.best ? "  *best" : "");
        out << buf;
    }
    return out.str();
}

}  // namespace spill
