#include "spill/refine.hpp"

#include "spill/error.hpp"
#include "spill/kernels.hpp"

namespace spill {

std::vector<double> mean_pool(std::span<const double> seed, const std::vector<std::vector<double>>& selected) {
    Matrix rows(selected.size(), seed.size());
    std::vector<std::size_t> idx(selected.size());
    for (std::size_t j = 0; j < selected.size(); ++j) {
        if (selected[j].size() != seed.size()) {
            throw ValidationError("mean_pool: vector " + std::to_string(j) + " has dimension " +
                                  std::to_string(selected[j].size()) + ", expected " + std::to_string(seed.size()));
        }
        std::copy(selected[j].begin(), selected[j].end(), rows.row(j).begin());
        idx[j] = j;
    }
    std::vector<double> out(seed.size());
    kernels::mean_pool_rows(rows, seed, idx, out);
    return out;
}

RefinedEmbeddings refine_dataset(const LabeledDataset& ds, std::span<const SelectionOutcome> outcomes) {
    const auto& emb = ds.embeddings();
    std::vector<std::vector<std::size_t>> partners(ds.size());
    std::vector<bool> seen(ds.size(), false);
    for (const auto& o : outcomes) {
        const auto seed = emb.find(o.seed_id);
        if (!seed) throw ValidationError("outcome for unknown seed '" + o.seed_id + "'");
        if (seen[*seed]) throw ValidationError("duplicate outcome for seed '" + o.seed_id + "'");
        seen[*seed] = true;
        auto& p = partners[*seed];
        for (const auto& id : o.selected_ids) {
            const auto row = emb.find(id);
            if (!row) throw ValidationError("dangling candidate id '" + id + "' in outcome for '" + o.seed_id + "'");
            if (*row == *seed) throw ValidationError("seed '" + o.seed_id + "' selected itself");
            p.push_back(*row);
        }
    }
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (!seen[i]) throw ValidationError("missing selection outcome for seed '" + emb.ids()[i] + "'");
    }

    RefinedEmbeddings out;
    Matrix pooled = kernels::parallel::pool_rows(emb.values(), partners);
    out.embeddings = EmbeddingMatrix::create(emb.ids(), std::move(pooled));
    out.k_used.reserve(ds.size());
    for (const auto& p : partners) out.k_used.push_back(p.size());
    return out;
}

std::vector<RefinementRecord> refinement_records(const RefinedEmbeddings& refined) {
    std::vector<RefinementRecord> out;
    const auto& emb = refined.embeddings;
    out.reserve(emb.size());
    for (std::size_t i = 0; i < emb.size(); ++i) {
        auto r = emb.row(i);
        out.push_back({emb.ids()[i], std::vector<double>(r.begin(), r.end()), refined.k_used.at(i)});
    }
    return out;
}

}  // namespace spill
