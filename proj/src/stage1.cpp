#include "spill/stage1.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>

#include <json.hpp>

#include "spill/error.hpp"
#include "spill/kernels.hpp"

namespace spill {

std::string_view to_string(Provenance p) { return p == Provenance::Top ? "top" : "chunk"; }

std::vector<Neighbor> distances_from(const LabeledDataset& ds, std::size_t seed_row) {
    const auto& emb = ds.embeddings();
    if (seed_row >= emb.size()) throw ValidationError("seed row out of range");
    std::vector<double> sq(emb.size());
    kernels::serial::squared_distances_to(emb.values(), emb.row(seed_row), sq);

    std::vector<Neighbor> out;
    out.reserve(emb.size() - 1);
    for (std::size_t i = 0; i < emb.size(); ++i) {
        if (i != seed_row) out.push_back({i, std::sqrt(sq[i])});
    }
    const auto& ids = emb.ids();
    std::sort(out.begin(), out.end(), [&](const Neighbor& a, const Neighbor& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        return ids[a.row] < ids[b.row];
    });
    return out;
}

std::vector<Neighbor> distances_from(const LabeledDataset& ds, std::string_view seed_id) {
    return distances_from(ds, ds.embeddings().index_of(seed_id));
}

std::vector<std::size_t> chunk_positions(std::size_t n, std::size_t l_random) {
    if (l_random == 0) return {};
    if (n < l_random) {
        throw ValidationError("chunk sampling needs at least " + std::to_string(l_random) + " candidates, got " +
                              std::to_string(n));
    }
    const std::size_t base = n / l_random;
    const std::size_t extra = n % l_random;
    std::vector<std::size_t> starts;
    starts.reserve(l_random);
    std::size_t pos = 0;
    for (std::size_t c = 0; c < l_random; ++c) {
        starts.push_back(pos);
        pos += base + (c < extra ? 1 : 0);
    }
    return starts;
}

std::vector<Neighbor> chunk_sample(std::span<const Neighbor> sorted_rest, std::size_t l_random) {
    std::vector<Neighbor> out;
    for (std::size_t p : chunk_positions(sorted_rest.size(), l_random)) out.push_back(sorted_rest[p]);
    return out;
}

void check_candidate_budget(std::size_t n, std::size_t l_top, std::size_t l_random) {
    const std::size_t total = l_top + l_random;
    if (total == 0) throw ValidationError("l_top + l_random must be at least 1");
    if (n < 1 || total > n - 1) {
        throw ValidationError("dataset of " + std::to_string(n) +
                              " utterances is too small for L=" + std::to_string(total) + " candidates");
    }
}

CandidateSet build_candidate_set(const LabeledDataset& ds, std::size_t seed_row, std::size_t l_top,
                                 std::size_t l_random) {
    check_candidate_budget(ds.size(), l_top, l_random);
    const auto sorted = distances_from(ds, seed_row);
    const auto& ids = ds.embeddings().ids();

    CandidateSet cs;
    cs.seed_id = ids[seed_row];
    cs.seed_row = seed_row;
    cs.l_top = l_top;
    cs.l_random = l_random;
    cs.entries.reserve(l_top + l_random);
    for (std::size_t j = 0; j < l_top; ++j) {
        cs.entries.push_back({ids[sorted[j].row], sorted[j].row, sorted[j].distance, Provenance::Top});
    }
    const std::span<const Neighbor> rest(sorted.data() + l_top, sorted.size() - l_top);
    for (const auto& nb : chunk_sample(rest, l_random)) {
        cs.entries.push_back({ids[nb.row], nb.row, nb.distance, Provenance::Chunk});
    }
    return cs;
}

CandidateSet build_candidate_set(const LabeledDataset& ds, std::string_view seed_id, std::size_t l_top,
                                 std::size_t l_random) {
    return build_candidate_set(ds, ds.embeddings().index_of(seed_id), l_top, l_random);
}

std::vector<CandidateSet> build_all_candidate_sets(const LabeledDataset& ds, std::size_t l_top, std::size_t l_random) {
    check_candidate_budget(ds.size(), l_top, l_random);
    std::vector<CandidateSet> sets(ds.size());
    const auto n = static_cast<std::int64_t>(ds.size());
#pragma omp parallel for schedule(dynamic, 16)
    for (std::int64_t i = 0; i < n; ++i) {
        sets[static_cast<std::size_t>(i)] = build_candidate_set(ds, static_cast<std::size_t>(i), l_top, l_random);
    }
    return sets;
}

void save_candidate_sets(std::span<const CandidateSet> sets, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    for (const auto& cs : sets) {
        nlohmann::json cands = nlohmann::json::array();
        for (const auto& e : cs.entries) {
            cands.push_back({{"id", e.id}, {"distance", e.distance}, {"provenance", to_string(e.provenance)}});
        }
        out << nlohmann::json{{"seed", cs.seed_id}, {"candidates", cands}}.dump() << '\n';
    }
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace spill
