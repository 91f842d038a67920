#include "spill/core.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "spill/error.hpp"

namespace spill {

using nlohmann::json;

EmbeddingMatrix EmbeddingMatrix::create(std::vector<std::string> ids, Matrix values) {
    if (ids.size() != values.rows) {
        throw ValidationError("embedding matrix has " + std::to_string(values.rows) + " rows but " +
                              std::to_string(ids.size()) + " ids");
    }
    if (values.rows > 0 && values.cols == 0) {
        throw ValidationError("embedding dimension must be positive");
    }
    EmbeddingMatrix m;
    m.index_.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (!m.index_.emplace(ids[i], i).second) {
            throw ValidationError("duplicate id '" + ids[i] + "'");
        }
        for (double v : values.row(i)) {
            if (!std::isfinite(v)) {
                throw ValidationError("non-finite embedding value for id '" + ids[i] + "'");
            }
        }
    }
    m.ids_ = std::move(ids);
    m.values_ = std::move(values);
    return m;
}

std::optional<std::size_t> EmbeddingMatrix::find(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::size_t EmbeddingMatrix::index_of(std::string_view id) const {
    if (auto i = find(id)) return *i;
    throw ValidationError("unknown utterance id '" + std::string(id) + "'");
}

LabeledDataset LabeledDataset::create(std::vector<Utterance> utterances, EmbeddingMatrix embeddings,
                                      std::optional<std::size_t> num_clusters) {
    if (utterances.size() != embeddings.size()) {
        throw ValidationError("dataset has " + std::to_string(utterances.size()) + " utterances but " +
                              std::to_string(embeddings.size()) + " embedding rows");
    }
    if (utterances.size() < 2) {
        throw ValidationError("dataset needs at least 2 utterances");
    }
    for (std::size_t i = 0; i < utterances.size(); ++i) {
        const auto& u = utterances[i];
        if (u.text.empty()) throw ValidationError("empty text for id '" + u.id + "'");
        if (embeddings.ids()[i] != u.id) {
            throw ValidationError("embedding row " + std::to_string(i) + " is '" + embeddings.ids()[i] +
                                  "' but utterance is '" + u.id + "'");
        }
    }
    if (num_clusters && (*num_clusters == 0 || *num_clusters > utterances.size())) {
        throw ValidationError("num_clusters must be in 1..N");
    }
    LabeledDataset ds;
    ds.utterances_ = std::move(utterances);
    ds.embeddings_ = std::move(embeddings);
    ds.num_clusters_ = num_clusters;
    return ds;
}

LabeledDataset parse_dataset_jsonl(std::string_view content, std::string_view source) {
    std::vector<Utterance> utterances;
    std::vector<double> values;
    std::vector<std::string> ids;
    std::set<std::string> seen;
    std::size_t dim = 0;

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= content.size()) {
        std::size_t end = content.find('\n', pos);
        if (end == std::string_view::npos) end = content.size();
        std::string_view line = content.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
            if (end == content.size()) break;
            continue;
        }
        const std::string where = std::string(source) + ":" + std::to_string(line_no);

        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ValidationError(where + ": invalid JSON: " + e.what());
        } catch (const json::out_of_range& e) {
            throw ValidationError(where + ": non-finite embedding value (" + e.what() + ")");
        }
        if (!rec.is_object()) throw ValidationError(where + ": record is not an object");
        if (!rec.contains("id") || !rec["id"].is_string()) throw ValidationError(where + ": missing string 'id'");
        Utterance u;
        u.id = rec["id"].get<std::string>();
        if (u.id.empty()) throw ValidationError(where + ": empty id");
        if (!seen.insert(u.id).second) throw ValidationError(where + ": duplicate id '" + u.id + "'");
        if (!rec.contains("text") || !rec["text"].is_string()) {
            throw ValidationError(where + ": missing string 'text' for id '" + u.id + "'");
        }
        u.text = rec["text"].get<std::string>();
        if (u.text.empty()) throw ValidationError(where + ": empty text for id '" + u.id + "'");
        if (rec.contains("label") && !rec["label"].is_null()) {
            if (!rec["label"].is_string()) throw ValidationError(where + ": 'label' must be a string");
            u.label = rec["label"].get<std::string>();
        }
        if (!rec.contains("embedding") || !rec["embedding"].is_array()) {
            throw ValidationError(where + ": missing array 'embedding' for id '" + u.id + "'");
        }
        const auto& emb = rec["embedding"];
        if (utterances.empty()) {
            dim = emb.size();
            if (dim == 0) throw ValidationError(where + ": empty embedding for id '" + u.id + "'");
        } else if (emb.size() != dim) {
            throw ValidationError(where + ": dimension mismatch for id '" + u.id + "': expected " +
                                  std::to_string(dim) + ", got " + std::to_string(emb.size()));
        }
        for (const auto& v : emb) {
            if (!v.is_number()) throw ValidationError(where + ": non-numeric embedding entry for id '" + u.id + "'");
            const double d = v.get<double>();
            if (!std::isfinite(d)) throw ValidationError(where + ": non-finite embedding value for id '" + u.id + "'");
            values.push_back(d);
        }
        ids.push_back(u.id);
        utterances.push_back(std::move(u));
    }
    if (utterances.empty()) throw ValidationError(std::string(source) + ": empty dataset");

    Matrix m;
    m.rows = utterances.size();
    m.cols = dim;
    m.data = std::move(values);
    return LabeledDataset::create(std::move(utterances), EmbeddingMatrix::create(std::move(ids), std::move(m)));
}

LabeledDataset load_dataset(const std::filesystem::path& path, DatasetFormat format) {
    if (format != DatasetFormat::JsonLines) throw ValidationError("unsupported dataset format");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open dataset '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_dataset_jsonl(buf.str(), path.string());
}

namespace {

void write_jsonl(const LabeledDataset& ds, const EmbeddingMatrix& rows, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto& u = ds.utterance(i);
        json rec;
        rec["id"] = u.id;
        rec["text"] = u.text;
        if (u.label) rec["label"] = *u.label;
        auto r = rows.row(i);
        rec["embedding"] = std::vector<double>(r.begin(), r.end());
        out << rec.dump() << '\n';
    }
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace

void save_dataset(const LabeledDataset& ds, const std::filesystem::path& path) {
    write_jsonl(ds, ds.embeddings(), path);
}

void save_refined(const LabeledDataset& ds, const RefinedEmbeddings& refined, const std::filesystem::path& path) {
    if (refined.embeddings.ids() != ds.embeddings().ids()) {
        throw ValidationError("refined embeddings do not match the dataset ids");
    }
    write_jsonl(ds, refined.embeddings, path);
}

LabelSummary validate_labels(const LabeledDataset& ds) {
    LabelSummary s;
    for (const auto& u : ds.utterances()) {
        if (u.label) {
            ++s.counts[*u.label];
            ++s.labeled;
        }
    }
    s.fully_labeled = ds.size() > 0 && s.labeled == ds.size();
    return s;
}

std::vector<int> label_codes(const LabeledDataset& ds) {
    const auto summary = validate_labels(ds);
    if (!summary.fully_labeled) {
        throw ValidationError("operation requires gold labels but " + std::to_string(ds.size() - summary.labeled) +
                              " utterances are unlabeled");
    }
    std::map<std::string, int> code;
    int next = 0;
    for (const auto& [label, _] : summary.counts) code[label] = next++;
    std::vector<int> out;
    out.reserve(ds.size());
    for (const auto& u : ds.utterances()) out.push_back(code.at(*u.label));
    return out;
}

std::size_t resolve_num_clusters(const LabeledDataset& ds, std::optional<std::size_t> override_m) {
    std::size_t m = 0;
    if (override_m) {
        m = *override_m;
    } else if (ds.num_clusters()) {
        m = *ds.num_clusters();
    } else {
        const auto summary = validate_labels(ds);
        if (summary.counts.empty()) {
            throw ValidationError("cluster count not given and dataset has no labels");
        }
        m = summary.counts.size();
    }
    if (m == 0 || m > ds.size()) throw ValidationError("cluster count must be in 1..N");
    return m;
}

}  // namespace spill
