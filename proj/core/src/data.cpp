#include "csense/data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "csense/rng.hpp"

namespace csense {

bool Schema::all_numeric() const {
    return std::all_of(feature_types.begin(), feature_types.end(),
                       [](FeatureType t) { return t == FeatureType::numeric; });
}

std::shared_ptr<const Schema> Schema::numeric(std::size_t n_features) {
    auto s = std::make_shared<Schema>();
    for (std::size_t j = 0; j < n_features; ++j) {
        s->feature_names.push_back("x" + std::to_string(j));
        s->feature_types.push_back(FeatureType::numeric);
        s->category_names.emplace_back();
    }
    return s;
}

void Dataset::add(Record r) {
    if (r.features.size() != schema_->n_features())
        throw DataError("record arity " + std::to_string(r.features.size()) +
                        " does not match schema arity " + std::to_string(schema_->n_features()));
    if (r.label != 0 && r.label != 1)
        throw DataError("record label must be 0 or 1, got " + std::to_string(r.label));
    if (r.fn_cost && !(*r.fn_cost >= 0.0))
        throw DataError("record " + std::to_string(r.id) + " has negative fn_cost");
    if (r.fp_cost && !(*r.fp_cost >= 0.0))
        throw DataError("record " + std::to_string(r.id) + " has negative fp_cost");
    records_.push_back(std::move(r));
}

DatasetStats Dataset::stats() const {
    DatasetStats s;
    for (const auto& r : records_)
        (r.label == 1 ? s.n_pos : s.n_neg)++;
    return s;
}

CostModel CostModel::class_costs(double c_fp, double c_fn) {
    if (!(c_fp > 0.0) || !(c_fn > 0.0))
        throw ConfigError("class-dependent costs must be strictly positive, got C_FP=" +
                          std::to_string(c_fp) + " C_FN=" + std::to_string(c_fn));
    return CostModel(Kind::class_dependent, c_fp, c_fn);
}

CostModel CostModel::record_costs() { return CostModel(Kind::record_dependent, 0.0, 0.0); }

double CostModel::c_fp() const {
    if (kind_ != Kind::class_dependent) throw ConfigError("c_fp() on a record-dependent cost model");
    return c_fp_;
}

double CostModel::c_fn() const {
    if (kind_ != Kind::class_dependent) throw ConfigError("c_fn() on a record-dependent cost model");
    return c_fn_;
}

double CostModel::resolve_fp(const Record& r) const {
    if (kind_ == Kind::class_dependent) return c_fp_;
    if (!r.fp_cost || !(*r.fp_cost > 0.0))
        throw DataError("record " + std::to_string(r.id) + " has no resolvable positive fp_cost");
    return *r.fp_cost;
}

double CostModel::resolve_fn(const Record& r) const {
    if (kind_ == Kind::class_dependent) return c_fn_;
    if (!r.fn_cost || !(*r.fn_cost > 0.0))
        throw DataError("record " + std::to_string(r.id) + " has no resolvable positive fn_cost");
    return *r.fn_cost;
}

double CostModel::max_cost(const Dataset& data) const {
    if (kind_ == Kind::class_dependent) return std::max(c_fp_, c_fn_);
    double m = 0.0;
    for (const auto& r : data.records())
        m = std::max(m, r.label == 1 ? resolve_fn(r) : resolve_fp(r));
    return m;
}

CostModel reduce_cost_matrix(const std::array<std::array<double, 2>, 2>& cm) {
    const double c_tp = cm[0][0], c_fn = cm[0][1];
    const double c_fp = cm[1][0], c_tn = cm[1][1];
    if (!(c_fn > c_tp) || !(c_fp > c_tn))
        throw ConfigError("degenerate cost matrix: misclassification must be strictly costlier "
                          "than correct classification (need C_FN > C_TP and C_FP > C_TN)");
    return CostModel::class_costs(c_fp - c_tn, c_fn - c_tp);
}

void normalize_weights(WeightVector& w) {
    double sum = 0.0;
    for (double v : w) {
        if (!(v >= 0.0)) throw DataError("negative weight in weight vector");
        sum += v;
    }
    if (!(sum > 0.0)) throw DataError("cannot normalize a zero-sum weight vector");
    for (double& v : w) v /= sum;
}

WeightVector initial_cost_weights(const Dataset& data, const CostModel& costs) {
    WeightVector w;
    w.reserve(data.size());
    for (const auto& r : data.records())
        w.push_back(r.label == 1 ? costs.resolve_fn(r) : costs.resolve_fp(r));
    normalize_weights(w);
    return w;
}

namespace {

// Largest-remainder apportionment of n items into parts with the given
// fractions; part counts sum to n exactly.
std::array<std::size_t, 3> apportion(std::size_t n, const std::array<double, 3>& fractions) {
    std::array<std::size_t, 3> counts{};
    std::array<double, 3> remainders{};
    std::size_t assigned = 0;
    for (int i = 0; i < 3; ++i) {
        double exact = fractions[i] * static_cast<double>(n);
        counts[i] = static_cast<std::size_t>(std::floor(exact));
        remainders[i] = exact - std::floor(exact);
        assigned += counts[i];
    }
    std::array<int, 3> order = {0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return remainders[a] > remainders[b]; });
    for (std::size_t k = 0; assigned < n; ++k, ++assigned) counts[order[k % 3]]++;
    return counts;
}

} // namespace

SplitResult stratified_split(const Dataset& data, std::array<double, 3> fractions, std::uint64_t seed) {
    double fsum = fractions[0] + fractions[1] + fractions[2];
    if (std::abs(fsum - 1.0) > 1e-9)
        throw ConfigError("split fractions must sum to 1, got " + std::to_string(fsum));
    for (double f : fractions)
        if (f < 0.0) throw ConfigError("split fractions must be nonnegative");

    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < data.size(); ++i)
        (data[i].label == 1 ? pos : neg).push_back(i);

    Rng rng = make_rng(seed);
    std::shuffle(pos.begin(), pos.end(), rng);
    std::shuffle(neg.begin(), neg.end(), rng);

    auto pos_counts = apportion(pos.size(), fractions);
    auto neg_counts = apportion(neg.size(), fractions);

    SplitResult out{Dataset(data.schema_ptr()), Dataset(data.schema_ptr()), Dataset(data.schema_ptr()), false};
    Dataset* parts[3] = {&out.train, &out.valid, &out.test};

    std::size_t p = 0, q = 0;
    for (int i = 0; i < 3; ++i) {
        std::vector<std::size_t> idx;
        for (std::size_t k = 0; k < pos_counts[i]; ++k) idx.push_back(pos[p++]);
        for (std::size_t k = 0; k < neg_counts[i]; ++k) idx.push_back(neg[q++]);
        std::sort(idx.begin(), idx.end()); // keep input order within each part
        for (std::size_t j : idx) parts[i]->add(data[j]);
        if (!pos.empty() && pos_counts[i] == 0 && (pos_counts[i] + neg_counts[i]) > 0)
            out.zero_positive_warning = true;
    }
    return out;
}

} // namespace csense
