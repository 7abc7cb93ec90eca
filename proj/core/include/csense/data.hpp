#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "csense/errors.hpp"

namespace csense {

enum class FeatureType { numeric, categorical };

// Categorical values are interned: a feature cell stores the token's index in
// the schema's category table (exact small integers, stored as double so the
// feature row stays a flat vector). kUnseenCategory marks tokens first seen
// at prediction time.
inline constexpr double kUnseenCategory = -1.0;

struct Schema {
    std::vector<std::string> feature_names;
    std::vector<FeatureType> feature_types;
    std::vector<std::vector<std::string>> category_names; // empty for numeric columns

    std::size_t n_features() const { return feature_names.size(); }
    bool is_categorical(std::size_t j) const { return feature_types[j] == FeatureType::categorical; }
    bool all_numeric() const;

    static std::shared_ptr<const Schema> numeric(std::size_t n_features);
};

struct Record {
    std::vector<double> features;
    int label = 0; // 1 = positive (minority), 0 = negative
    std::optional<double> fn_cost;
    std::optional<double> fp_cost;
    std::int64_t id = -1; // provenance id; duplicates and synthetic records keep their source's id
};

struct DatasetStats {
    std::size_t n_pos = 0;
    std::size_t n_neg = 0;
    std::size_t size() const { return n_pos + n_neg; }
    double base_rate() const { return size() == 0 ? 0.0 : static_cast<double>(n_pos) / static_cast<double>(size()); }
};

class Dataset {
public:
    Dataset() : schema_(Schema::numeric(0)) {}
    explicit Dataset(std::shared_ptr<const Schema> schema) : schema_(std::move(schema)) {}

    const Schema& schema() const { return *schema_; }
    std::shared_ptr<const Schema> schema_ptr() const { return schema_; }

    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }
    const Record& operator[](std::size_t i) const { return records_[i]; }
    std::span<const Record> records() const { return records_; }

    void add(Record r);
    void reserve(std::size_t n) { records_.reserve(n); }

    DatasetStats stats() const;

private:
    std::shared_ptr<const Schema> schema_;
    std::vector<Record> records_;
};

// Class-dependent (one (C_FP, C_FN) pair) or record-dependent (costs read off
// each record) misclassification costs. Resolved costs are strictly positive;
// the class-dependent constructor rejects non-positive pairs and
// record-dependent resolution rejects missing or non-positive record fields.
class CostModel {
public:
    enum class Kind { class_dependent, record_dependent };

    static CostModel class_costs(double c_fp, double c_fn);
    static CostModel record_costs();

    Kind kind() const { return kind_; }
    bool is_record_dependent() const { return kind_ == Kind::record_dependent; }

    // Class-dependent accessors; throw for record-dependent models.
    double c_fp() const;
    double c_fn() const;

    double resolve_fp(const Record& r) const;
    double resolve_fn(const Record& r) const;

    // Largest resolved cost over the dataset (CPR acceptance normalizer).
    double max_cost(const Dataset& data) const;

private:
    CostModel(Kind kind, double c_fp, double c_fn) : kind_(kind), c_fp_(c_fp), c_fn_(c_fn) {}
    Kind kind_;
    double c_fp_ = 0.0;
    double c_fn_ = 0.0;
};

// 2x2 cost matrix in the layout [[C_TP, C_FN], [C_FP, C_TN]]. Reduction
// subtracts the correct-classification diagonal, leaving a zero-diagonal
// matrix described by the returned class-dependent cost pair.
CostModel reduce_cost_matrix(const std::array<std::array<double, 2>, 2>& cm);

using WeightVector = std::vector<double>;

// Normalize weights to sum 1. Throws on an all-zero or negative vector.
void normalize_weights(WeightVector& w);

// Eq-style cost weights: C_FN for positives, C_FP for negatives, normalized.
WeightVector initial_cost_weights(const Dataset& data, const CostModel& costs);

struct SplitResult {
    Dataset train;
    Dataset valid;
    Dataset test;
    // set when a non-empty part received zero positives although positives exist
    bool zero_positive_warning = false;
};

// Stratified three-way split: positives and negatives are apportioned
// separately (largest remainder), so each part's positive count is within one
// record of the global rate scaled to its size. Deterministic per seed.
SplitResult stratified_split(const Dataset& data, std::array<double, 3> fractions, std::uint64_t seed);

} // namespace csense
