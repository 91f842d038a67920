#include "spill/synthetic.hpp"

#include <cstdio>
#include <string>

#include "spill/error.hpp"
#include "spill/rng.hpp"

namespace spill {

LabeledDataset make_gaussian_intents(const GaussianIntentsSpec& spec) {
    if (spec.intents == 0 || spec.per_intent == 0 || spec.dim == 0) {
        throw ValidationError("synthetic dataset needs positive intents, per_intent and dim");
    }
    Rng rng(spec.seed);
    Matrix centers(spec.intents, spec.dim);
    for (double& v : centers.data) v = rng.normal(0.0, spec.center_spread);

    const std::size_t n = spec.intents * spec.per_intent;
    Matrix values(n, spec.dim);
    std::vector<Utterance> utts;
    std::vector<std::string> ids;
    utts.reserve(n);
    ids.reserve(n);
    for (std::size_t i = 0; i < spec.per_intent; ++i) {
        for (std::size_t c = 0; c < spec.intents; ++c) {
            const std::size_t row = i * spec.intents + c;
            auto r = values.row(row);
            auto mu = centers.row(c);
            for (std::size_t h = 0; h < spec.dim; ++h) r[h] = rng.normal(mu[h], spec.noise);
            char id[32];
            std::snprintf(id, sizeof id, "u%05zu", row);
            utts.push_back(
                {id, "intent " + std::to_string(c) + " utterance " + std::to_string(i), "intent-" + std::to_string(c)});
            ids.emplace_back(id);
        }
    }
    return LabeledDataset::create(std::move(utts), EmbeddingMatrix::create(std::move(ids), std::move(values)));
}

}  // namespace spill
