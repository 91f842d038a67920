/**
 * @file report.hpp
 * @brief Report value types and their JSON / CSV serialization.
 *
 * Every report is written as a single JSON document carrying a
 * `schema_version` and a `kind` field. NMI and Acc inside EvalReport and
 * SweepPoint are percentages; TrialResult keeps raw fractions in [0, 1].
 */
#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace spill {

inline constexpr int kReportSchemaVersion = 1;

enum class Distribution { Normal, LogNormal };
enum class Strategy { Rd, TopK };
enum class Replacement { With, Without };
enum class SweepAxis { K, Dim };

std::string_view to_string(Distribution d);
std::string_view to_string(Strategy s);
std::string_view to_string(Replacement r);
std::string_view to_string(SweepAxis a);
Distribution parse_distribution(std::string_view s);
Strategy parse_strategy(std::string_view s);
Replacement parse_replacement(std::string_view s);
SweepAxis parse_axis(std::string_view s);

struct RunScore {
    double nmi = 0.0;
    double acc = 0.0;
    bool operator==(const RunScore&) const = default;
};

/// Clustering metrics over repeated k-means runs (percent units).
struct EvalReport {
    double nmi_mean = 0.0;
    double nmi_std = 0.0;
    double acc_mean = 0.0;
    double acc_std = 0.0;
    std::size_t runs = 0;
    std::vector<RunScore> per_run;

    bool operator==(const EvalReport&) const = default;
};

/// "NMI mean (std)  Acc mean (std)" with two decimals.
std::string format_table_row(const EvalReport& r);

/// One simulation trial.
struct TrialResult {
    std::vector<double> est_variance_per_cluster;
    double nmi = 0.0;
    double acc = 0.0;
    std::size_t k = 0;
    std::size_t dim = 0;
    Strategy strategy = Strategy::Rd;
    Distribution distribution = Distribution::Normal;

    /// Mean of est_variance_per_cluster.
    double variance() const;
    bool operator==(const TrialResult&) const = default;
};

/// Aggregate of `runs` trials at one sweep axis value.
struct SweepPoint {
    double axis_value = 0.0;
    Strategy strategy = Strategy::Rd;
    Distribution distribution = Distribution::Normal;
    std::size_t k = 0;
    std::size_t dim = 0;
    double var_mean = 0.0;
    double var_std = 0.0;
    double nmi_mean = 0.0;
    double nmi_std = 0.0;
    double acc_mean = 0.0;
    double acc_std = 0.0;
    std::vector<TrialResult> trials;

    bool operator==(const SweepPoint&) const = default;
};

struct SweepReport {
    SweepAxis axis = SweepAxis::K;
    nlohmann::json base_spec = nlohmann::json::object();
    std::vector<SweepPoint> points;

    bool operator==(const SweepReport&) const = default;
};

nlohmann::json to_json(const EvalReport& r);
nlohmann::json to_json(const TrialResult& t);
nlohmann::json to_json(const std::vector<TrialResult>& trials);
nlohmann::json to_json(const SweepReport& s);
EvalReport eval_report_from_json(const nlohmann::json& j);
TrialResult trial_from_json(const nlohmann::json& j);
SweepReport sweep_report_from_json(const nlohmann::json& j);

/// Writes `body` (an object) with schema_version and kind fields added.
void write_json_document(const nlohmann::json& body, std::string_view kind, const std::filesystem::path& path);
/// Reads a document and checks schema_version and kind.
nlohmann::json read_json_document(const std::filesystem::path& path, std::string_view expected_kind);
/// Canonical text used by write_json_document (2-space indent, trailing newline).
std::string render_json_document(const nlohmann::json& body, std::string_view kind);

void save_report(const EvalReport& r, const std::filesystem::path& path);
void save_report(const std::vector<TrialResult>& trials, const std::filesystem::path& path);
void save_report(const SweepReport& s, const std::filesystem::path& path);
EvalReport load_eval_report(const std::filesystem::path& path);
std::vector<TrialResult> load_trial_results(const std::filesystem::path& path);
SweepReport load_sweep_report(const std::filesystem::path& path);

/// Columns: axis_value,strategy,k,var_mean,var_std,nmi_mean,nmi_std,acc_mean,acc_std
std::string sweep_csv(const SweepReport& s);

/// Writes `text` to `path`, throwing IoError on failure.
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace spill
