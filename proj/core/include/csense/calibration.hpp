#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "csense/data.hpp"
#include "csense/tree.hpp"

namespace csense {

// Leaf-probability estimators. m-estimation and curtailment share the size
// parameter m, defaulting to ceil(10/b) so that b*m is about 10.
enum class LeafEstimatorKind {
    frequency,
    laplace,
    m_estimation,
    curtailment,
    curtailment_laplace,
    curtailment_m_estimation,
};

struct LeafEstimator {
    LeafEstimatorKind kind = LeafEstimatorKind::frequency;
    double m = 1.0;
    double base_rate = 0.5;

    static LeafEstimator make(LeafEstimatorKind kind, const DatasetStats& stats, double m_override = 0.0);
};

// Probability that a record at a leaf with the given stats is positive.
// Ancestors are ordered leaf-to-root and are consulted by curtailment (the
// nearest one holding at least m records substitutes for an undersized leaf).
double leaf_probability(const NodeStats& leaf, std::span<const NodeStats> ancestors, const LeafEstimator& est);

// Convenience: probability of the leaf the record reaches in the tree.
double tree_probability(const Tree& tree, const Record& r, const LeafEstimator& est);

// Sigmoid map of a normalized vote score: 1 / (exp(-2(2S-1)) + 1).
double logistic_correction(double score);

struct PlattParams {
    double a = 0.0;
    double b = 0.0;
};

// Fit the sigmoid 1/(exp(A*S+B)+1) by damped Newton on the cross-entropy
// against soft targets (N+ + 1)/(N+ + 2) and 1/(N- + 2), with class counts
// taken from the fitting sample. Requires both classes present.
PlattParams platt_fit(std::span<const double> scores, std::span<const int> labels);

double platt_apply(const PlattParams& p, double score);

// Nondecreasing step function fitted by pool-adjacent-violators.
struct IsotonicCurve {
    std::vector<double> breakpoints; // smallest score of each block, ascending
    std::vector<double> levels;      // block values, nondecreasing
};

IsotonicCurve isotonic_fit(std::span<const double> scores, std::span<const int> labels);

// Level of the interval the query score falls in; below the first breakpoint
// returns the first level, at/above the last returns the last.
double isotonic_apply(const IsotonicCurve& c, double score);

// A fitted score-to-probability map for boosted ensembles.
struct ScoreCalibrator {
    enum class Kind { none, logistic_correction, platt, isotonic };
    Kind kind = Kind::none;
    PlattParams platt;
    IsotonicCurve isotonic;

    double apply(double score) const;
};

std::string to_string(LeafEstimatorKind k);
std::string to_string(ScoreCalibrator::Kind k);

} // namespace csense
