#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "csense/data.hpp"

namespace csense {

enum class SamplerKind { under, over_duplicate, over_smote, hybrid, cpr };
enum class OverMode { duplicate, smote };

struct SamplerSpec {
    SamplerKind kind = SamplerKind::under;
    std::optional<double> target_ratio;   // unset: use the cost-adjusted ratio r_cs
    int smote_k = 5;
    double under_fraction = 0.5;          // hybrid only: share of the ratio gap covered by undersampling
    std::optional<std::size_t> cpr_out_size; // unset: dataset size
    std::uint64_t rng_seed = 0;
};

// Cost-adjusted positive-to-negative sampling ratio (|N+|/|N-|)*(C_FN/C_FP).
// Undefined for record-dependent costs (use CPR sampling instead).
double cs_ratio(const DatasetStats& stats, const CostModel& costs);

// Keep all positives, sample round(|N+|/target_ratio) negatives without
// replacement. A target below the raw class ratio would require dropping
// positives and is rejected.
Dataset undersample(const Dataset& data, double target_ratio, std::uint64_t seed);

// Raise the positive count to round(target_ratio * |N-|), either duplicating
// positives uniformly or synthesizing SMOTE records along segments to one of
// the k nearest positive neighbours (numeric features only). Synthetic
// records inherit the seed record's costs and id.
Dataset oversample(const Dataset& data, double target_ratio, OverMode mode, int smote_k, std::uint64_t seed);

// Remove negatives to cover under_fraction of the ratio gap, then oversample
// positives for the remainder.
Dataset hybrid_sample(const Dataset& data, double target_ratio, double under_fraction, OverMode mode,
                      int smote_k, std::uint64_t seed);

// Cost-proportionate rejection sampling: draw uniformly with replacement,
// accept with probability cost/max-cost, until out_size acceptances.
Dataset cpr_sample(const Dataset& data, const CostModel& costs, std::size_t out_size, std::uint64_t seed);

// Run the configured sampler; the target ratio defaults to r_cs and the CPR
// output size to the dataset size. The seed argument overrides spec.rng_seed
// (ensemble members get derived per-member streams).
Dataset apply_sampler(const SamplerSpec& spec, const Dataset& data, const CostModel& costs, std::uint64_t seed);

std::string to_string(SamplerKind k);

} // namespace csense
