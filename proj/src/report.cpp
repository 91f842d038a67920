#include "spill/report.hpp"

#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "spill/error.hpp"

namespace spill {

using nlohmann::json;

std::string_view to_string(Distribution d) { return d == Distribution::Normal ? "normal" : "lognormal"; }
std::string_view to_string(Strategy s) { return s == Strategy::Rd ? "rd" : "topk"; }
std::string_view to_string(Replacement r) { return r == Replacement::With ? "with" : "without"; }
std::string_view to_string(SweepAxis a) { return a == SweepAxis::K ? "k" : "dim"; }

Distribution parse_distribution(std::string_view s) {
    if (s == "normal") return Distribution::Normal;
    if (s == "lognormal" || s == "log-normal") return Distribution::LogNormal;
    throw ValidationError("unknown distribution '" + std::string(s) + "'");
}
Strategy parse_strategy(std::string_view s) {
    if (s == "rd") return Strategy::Rd;
    if (s == "topk") return Strategy::TopK;
    throw ValidationError("unknown strategy '" + std::string(s) + "'");
}
Replacement parse_replacement(std::string_view s) {
    if (s == "with") return Replacement::With;
    if (s == "without") return Replacement::Without;
    throw ValidationError("unknown replacement mode '" + std::string(s) + "'");
}
SweepAxis parse_axis(std::string_view s) {
    if (s == "k") return SweepAxis::K;
    if (s == "dim") return SweepAxis::Dim;
    throw ValidationError("unknown sweep axis '" + std::string(s) + "'");
}

std::string format_table_row(const EvalReport& r) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "NMI %.2f (%.2f)  Acc %.2f (%.2f)", r.nmi_mean, r.nmi_std, r.acc_mean, r.acc_std);
    return buf;
}

double TrialResult::variance() const {
    if (est_variance_per_cluster.empty()) return 0.0;
    return std::accumulate(est_variance_per_cluster.begin(), est_variance_per_cluster.end(), 0.0) /
           static_cast<double>(est_variance_per_cluster.size());
}

json to_json(const EvalReport& r) {
    json runs = json::array();
    for (const auto& s : r.per_run) runs.push_back({{"nmi", s.nmi}, {"acc", s.acc}});
    return {{"nmi_mean", r.nmi_mean}, {"nmi_std", r.nmi_std}, {"acc_mean", r.acc_mean},
            {"acc_std", r.acc_std},   {"runs", r.runs},       {"per_run", runs}};
}

EvalReport eval_report_from_json(const json& j) {
    EvalReport r;
    r.nmi_mean = j.at("nmi_mean").get<double>();
    r.nmi_std = j.at("nmi_std").get<double>();
    r.acc_mean = j.at("acc_mean").get<double>();
    r.acc_std = j.at("acc_std").get<double>();
    r.runs = j.at("runs").get<std::size_t>();
    for (const auto& s : j.at("per_run")) r.per_run.push_back({s.at("nmi").get<double>(), s.at("acc").get<double>()});
    return r;
}

json to_json(const TrialResult& t) {
    return {{"est_variance_per_cluster", t.est_variance_per_cluster},
            {"nmi", t.nmi},
            {"acc", t.acc},
            {"k", t.k},
            {"dim", t.dim},
            {"strategy", to_string(t.strategy)},
            {"distribution", to_string(t.distribution)}};
}

TrialResult trial_from_json(const json& j) {
    TrialResult t;
    t.est_variance_per_cluster = j.at("est_variance_per_cluster").get<std::vector<double>>();
    t.nmi = j.at("nmi").get<double>();
    t.acc = j.at("acc").get<double>();
    t.k = j.at("k").get<std::size_t>();
    t.dim = j.at("dim").get<std::size_t>();
    t.strategy = parse_strategy(j.at("strategy").get<std::string>());
    t.distribution = parse_distribution(j.at("distribution").get<std::string>());
    return t;
}

json to_json(const std::vector<TrialResult>& trials) {
    json arr = json::array();
    for (const auto& t : trials) arr.push_back(to_json(t));
    return {{"trials", arr}};
}

json to_json(const SweepReport& s) {
    json pts = json::array();
    for (const auto& p : s.points) {
        json trials = json::array();
        for (const auto& t : p.trials) trials.push_back(to_json(t));
        pts.push_back({{"axis_value", p.axis_value},
                       {"strategy", to_string(p.strategy)},
                       {"distribution", to_string(p.distribution)},
                       {"k", p.k},
                       {"dim", p.dim},
                       {"var_mean", p.var_mean},
                       {"var_std", p.var_std},
                       {"nmi_mean", p.nmi_mean},
                       {"nmi_std", p.nmi_std},
                       {"acc_mean", p.acc_mean},
                       {"acc_std", p.acc_std},
                       {"trials", trials}});
    }
    return {{"axis", to_string(s.axis)}, {"base_spec", s.base_spec}, {"points", pts}};
}

SweepReport sweep_report_from_json(const json& j) {
    SweepReport s;
    s.axis = parse_axis(j.at("axis").get<std::string>());
    s.base_spec = j.at("base_spec");
    for (const auto& p : j.at("points")) {
        SweepPoint pt;
        pt.axis_value = p.at("axis_value").get<double>();
        pt.strategy = parse_strategy(p.at("strategy").get<std::string>());
        pt.distribution = parse_distribution(p.at("distribution").get<std::string>());
        pt.k = p.at("k").get<std::size_t>();
        pt.dim = p.at("dim").get<std::size_t>();
        pt.var_mean = p.at("var_mean").get<double>();
        pt.var_std = p.at("var_std").get<double>();
        pt.nmi_mean = p.at("nmi_mean").get<double>();
        pt.nmi_std = p.at("nmi_std").get<double>();
        pt.acc_mean = p.at("acc_mean").get<double>();
        pt.acc_std = p.at("acc_std").get<double>();
        for (const auto& t : p.at("trials")) pt.trials.push_back(trial_from_json(t));
        s.points.push_back(std::move(pt));
    }
    return s;
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::string render_json_document(const json& body, std::string_view kind) {
    json doc = json::object();
    doc["schema_version"] = kReportSchemaVersion;
    doc["kind"] = kind;
    for (auto it = body.begin(); it != body.end(); ++it) doc[it.key()] = it.value();
    return doc.dump(2) + "\n";
}

void write_json_document(const json& body, std::string_view kind, const std::filesystem::path& path) {
    write_text_file(path, render_json_document(body, kind));
}

json read_json_document(const std::filesystem::path& path, std::string_view expected_kind) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open report '" + path.string() + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError("invalid report JSON in '" + path.string() + "': " + e.what());
    }
    if (doc.value("schema_version", -1) != kReportSchemaVersion) {
        throw ValidationError("unsupported report schema_version in '" + path.string() + "'");
    }
    if (doc.value("kind", std::string{}) != expected_kind) {
        throw ValidationError("report '" + path.string() + "' is not of kind '" + std::string(expected_kind) + "'");
    }
    return doc;
}

void save_report(const EvalReport& r, const std::filesystem::path& path) {
    write_json_document(to_json(r), "eval_report", path);
}
void save_report(const std::vector<TrialResult>& trials, const std::filesystem::path& path) {
    write_json_document(to_json(trials), "trial_results", path);
}
void save_report(const SweepReport& s, const std::filesystem::path& path) {
    write_json_document(to_json(s), "sweep", path);
}

EvalReport load_eval_report(const std::filesystem::path& path) {
    return eval_report_from_json(read_json_document(path, "eval_report"));
}
std::vector<TrialResult> load_trial_results(const std::filesystem::path& path) {
    std::vector<TrialResult> out;
    const json doc = read_json_document(path, "trial_results");
    for (const auto& t : doc.at("trials")) out.push_back(trial_from_json(t));
    return out;
}
SweepReport load_sweep_report(const std::filesystem::path& path) {
    return sweep_report_from_json(read_json_document(path, "sweep"));
}

std::string sweep_csv(const SweepReport& s) {
    std::ostringstream out;
    out << "axis_value,strategy,k,var_mean,var_std,nmi_mean,nmi_std,acc_mean,acc_std\n";
    out.precision(17);
    for (const auto& p : s.points) {
        out << p.axis_value << ',' << to_string(p.strategy) << ',' << p.k << ',' << p.var_mean << ',' << p.var_std
            << ',' << p.nmi_mean << ',' << p.nmi_std << ',' << p.acc_mean << ',' << p.acc_std << '\n';
    }
    return out.str();
}

}  // namespace spill
