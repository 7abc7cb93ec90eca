#include "csense/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "csense/rng.hpp"

namespace csense {

namespace {

std::size_t round_half_up(double x) {
    return static_cast<std::size_t>(std::floor(x + 0.5));
}

std::vector<std::size_t> indices_of_class(const Dataset& data, int label) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < data.size(); ++i)
        if (data[i].label == label) idx.push_back(i);
    return idx;
}

} // namespace

double cs_ratio(const DatasetStats& stats, const CostModel& costs) {
    if (costs.is_record_dependent())
        throw ConfigError("the sampling ratio is undefined for record-dependent costs; use CPR sampling");
    if (stats.n_neg == 0) throw DataError("sampling ratio undefined without negative records");
    return (static_cast<double>(stats.n_pos) / static_cast<double>(stats.n_neg)) * (costs.c_fn() / costs.c_fp());
}

Dataset undersample(const Dataset& data, double target_ratio, std::uint64_t seed) {
    if (!(target_ratio > 0.0)) throw ConfigError("undersample target ratio must be positive");
    DatasetStats st = data.stats();
    if (st.n_pos == 0 || st.n_neg == 0) throw DataError("undersample needs both classes present");
    const double raw_ratio = static_cast<double>(st.n_pos) / static_cast<double>(st.n_neg);
    std::size_t keep_neg = round_half_up(static_cast<double>(st.n_pos) / target_ratio);
    if (keep_neg > st.n_neg) {
        if (target_ratio < raw_ratio)
            throw ConfigError("undersample target ratio below the raw class ratio would require "
                              "removing positives; use hybrid sampling");
        keep_neg = st.n_neg;
    }

    std::vector<std::size_t> neg = indices_of_class(data, 0);
    Rng rng = make_rng(seed);
    std::shuffle(neg.begin(), neg.end(), rng);
    neg.resize(keep_neg);
    std::sort(neg.begin(), neg.end());

    Dataset out(data.schema_ptr());
    std::size_t n = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (data[i].label == 1) out.add(data[i]);
        else if (n < neg.size() && neg[n] == i) { out.add(data[i]); ++n; }
    }
    return out;
}

namespace {

std::vector<std::size_t> nearest_positive_neighbours(const Dataset& data,
                                                     const std::vector<std::size_t>& pos,
                                                     std::size_t self_pos_index, int k) {
    const Record& seed_rec = data[pos[self_pos_index]];
    std::vector<std::pair<double, std::size_t>> dist;
    dist.reserve(pos.size() - 1);
    for (std::size_t j = 0; j < pos.size(); ++j) {
        if (j == self_pos_index) continue;
        const Record& other = data[pos[j]];
        double d2 = 0.0;
        for (std::size_t a = 0; a < seed_rec.features.size(); ++a) {
            double d = seed_rec.features[a] - other.features[a];
            d2 += d * d;
        }
        dist.emplace_back(d2, pos[j]);
    }
    std::stable_sort(dist.begin(), dist.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::size_t> nn;
    for (int j = 0; j < k && j < static_cast<int>(dist.size()); ++j) nn.push_back(dist[static_cast<std::size_t>(j)].second);
    return nn;
}

} // namespace

Dataset oversample(const Dataset& data, double target_ratio, OverMode mode, int smote_k, std::uint64_t seed) {
    if (!(target_ratio > 0.0)) throw ConfigError("oversample target ratio must be positive");
    DatasetStats st = data.stats();
    if (st.n_pos == 0 || st.n_neg == 0) throw DataError("oversample needs both classes present");

    const std::size_t want_pos = round_half_up(target_ratio * static_cast<double>(st.n_neg));
    if (want_pos < st.n_pos)
        throw ConfigError("oversample target ratio below the raw class ratio would require "
                          "removing positives; use hybrid sampling");
    const std::size_t n_new = want_pos - st.n_pos;

    std::vector<std::size_t> pos = indices_of_class(data, 1);
    Dataset out(data.schema_ptr());
    for (const auto& r : data.records()) out.add(r);
    if (n_new == 0) return out;

    Rng rng = make_rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, pos.size() - 1);

    if (mode == OverMode::duplicate) {
        for (std::size_t k = 0; k < n_new; ++k) out.add(data[pos[pick(rng)]]);
        return out;
    }

    // SMOTE
    if (!data.schema().all_numeric())
        throw ConfigError("SMOTE requires numeric features only");
    if (smote_k < 1) throw ConfigError("SMOTE neighbour count must be at least 1");
    if (pos.size() < static_cast<std::size_t>(smote_k) + 1)
        throw DataError("SMOTE needs at least k+1 positive records");

    // precompute neighbour lists once per seed record
    std::vector<std::vector<std::size_t>> nns(pos.size());
    std::uniform_real_distribution<double> frac(0.0, 1.0);
    for (std::size_t k = 0; k < n_new; ++k) {
        std::size_t pi = pick(rng);
        if (nns[pi].empty()) nns[pi] = nearest_positive_neighbours(data, pos, pi, smote_k);
        const auto& nn = nns[pi];
        std::uniform_int_distribution<std::size_t> pick_nn(0, nn.size() - 1);
        const Record& seed_rec = data[pos[pi]];
        const Record& neighbour = data[nn[pick_nn(rng)]];

        Record synth = seed_rec; // inherits label, costs and id
        for (std::size_t a = 0; a < synth.features.size(); ++a) {
            double d_a = seed_rec.features[a] - neighbour.features[a];
            synth.features[a] = seed_rec.features[a] - frac(rng) * d_a;
        }
        out.add(std::move(synth));
    }
    return out;
}

Dataset hybrid_sample(const Dataset& data, double target_ratio, double under_fraction, OverMode mode,
                      int smote_k, std::uint64_t seed) {
    if (under_fraction < 0.0 || under_fraction > 1.0)
        throw ConfigError("hybrid under_fraction must lie in [0,1]");
    DatasetStats st = data.stats();
    if (st.n_pos == 0 || st.n_neg == 0) throw DataError("hybrid sampling needs both classes present");
    const double raw_ratio = static_cast<double>(st.n_pos) / static_cast<double>(st.n_neg);
    if (target_ratio < raw_ratio)
        throw ConfigError("hybrid sampling cannot reduce the positive-negative ratio below the raw ratio");

    const double mid_ratio = raw_ratio + under_fraction * (target_ratio - raw_ratio);
    Dataset reduced = undersample(data, mid_ratio, derive_seed(seed, 0));
    if (under_fraction >= 1.0) return reduced;
    return oversample(reduced, target_ratio, mode, smote_k, derive_seed(seed, 1));
}

Dataset cpr_sample(const Dataset& data, const CostModel& costs, std::size_t out_size, std::uint64_t seed) {
    if (data.empty()) throw DataError("cpr_sample on an empty dataset");
    const double max_cost = costs.max_cost(data);

    std::vector<double> accept(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const Record& r = data[i];
        accept[i] = (r.label == 1 ? costs.resolve_fn(r) : costs.resolve_fp(r)) / max_cost;
    }

    Rng rng = make_rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    Dataset out(data.schema_ptr());
    out.reserve(out_size);
    while (out.size() < out_size) {
        std::size_t i = pick(rng);
        if (accept[i] >= 1.0 || u(rng) < accept[i]) out.add(data[i]);
    }
    return out;
}

Dataset apply_sampler(const SamplerSpec& spec, const Dataset& data, const CostModel& costs, std::uint64_t seed) {
    auto ratio = [&]() {
        return spec.target_ratio ? *spec.target_ratio : cs_ratio(data.stats(), costs);
    };
    switch (spec.kind) {
        case SamplerKind::under: return undersample(data, ratio(), seed);
        case SamplerKind::over_duplicate: return oversample(data, ratio(), OverMode::duplicate, spec.smote_k, seed);
        case SamplerKind::over_smote: return oversample(data, ratio(), OverMode::smote, spec.smote_k, seed);
        case SamplerKind::hybrid:
            return hybrid_sample(data, ratio(), spec.under_fraction, OverMode::duplicate, spec.smote_k, seed);
        case SamplerKind::cpr:
            return cpr_sample(data, costs, spec.cpr_out_size ? *spec.cpr_out_size : data.size(), seed);
    }
    throw ConfigError("unknown sampler kind");
}

std::string to_string(SamplerKind k) {
    switch (k) {
        case SamplerKind::under: return "under";
        case SamplerKind::over_duplicate: return "over_duplicate";
        case SamplerKind::over_smote: return "over_smote";
        case SamplerKind::hybrid: return "hybrid";
        case SamplerKind::cpr: return "cpr";
    }
    return "?";
}

} // namespace csense
