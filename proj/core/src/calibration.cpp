#include "csense/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace csense {

LeafEstimator LeafEstimator::make(LeafEstimatorKind kind, const DatasetStats& stats, double m_override) {
    LeafEstimator est;
    est.kind = kind;
    est.base_rate = stats.base_rate();
    if (m_override > 0.0) {
        est.m = m_override;
    } else if (est.base_rate > 0.0) {
        est.m = std::ceil(10.0 / est.base_rate); // b*m ~= 10
    } else {
        est.m = 10.0;
    }
    if (est.m < 1.0) est.m = 1.0;
    return est;
}

namespace {

double frequency_estimate(const NodeStats& s) {
    if (s.n() == 0) throw std::invalid_argument("frequency estimate of an empty node");
    return static_cast<double>(s.n_pos) / static_cast<double>(s.n());
}

double laplace_estimate(const NodeStats& s) {
    return (static_cast<double>(s.n_pos) + 1.0) / (static_cast<double>(s.n()) + 2.0);
}

double m_estimate(const NodeStats& s, double b, double m) {
    return (static_cast<double>(s.n_pos) + b * m) / (static_cast<double>(s.n()) + m);
}

} // namespace

double leaf_probability(const NodeStats& leaf, std::span<const NodeStats> ancestors, const LeafEstimator& est) {
    const NodeStats* node = &leaf;
    bool curtail = est.kind == LeafEstimatorKind::curtailment ||
                   est.kind == LeafEstimatorKind::curtailment_laplace ||
                   est.kind == LeafEstimatorKind::curtailment_m_estimation;
    if (curtail && static_cast<double>(node->n()) < est.m) {
        for (const auto& a : ancestors) {
            node = &a;
            if (static_cast<double>(a.n()) >= est.m) break;
        }
    }
    switch (est.kind) {
        case LeafEstimatorKind::frequency:
        case LeafEstimatorKind::curtailment:
            return frequency_estimate(*node);
        case LeafEstimatorKind::laplace:
        case LeafEstimatorKind::curtailment_laplace:
            return laplace_estimate(*node);
        case LeafEstimatorKind::m_estimation:
        case LeafEstimatorKind::curtailment_m_estimation:
            return m_estimate(*node, est.base_rate, est.m);
    }
    return 0.5;
}

double tree_probability(const Tree& tree, const Record& r, const LeafEstimator& est) {
    std::vector<int> path = tree.route_path(r); // root -> leaf
    std::vector<NodeStats> ancestors;           // leaf -> root, excluding the leaf
    for (std::size_t k = path.size(); k-- > 1;) ancestors.push_back(tree.node(path[k - 1]).stats);
    return leaf_probability(tree.node(path.back()).stats, ancestors, est);
}

double logistic_correction(double score) {
    if (score < 0.0 || score > 1.0) throw std::invalid_argument("logistic_correction expects S in [0,1]");
    return 1.0 / (std::exp(-2.0 * (2.0 * score - 1.0)) + 1.0);
}

namespace {

// Newton iteration after Lin/Weng/Keerthi's robust formulation of Platt's
// sigmoid fit: minimize cross-entropy with soft targets, step-halving on
// non-decrease.
PlattParams platt_newton(std::span<const double> scores, std::span<const double> targets) {
    const std::size_t n = scores.size();
    const int max_iter = 100;
    const double min_step = 1e-10;
    const double sigma = 1e-12; // hessian ridge
    const double grad_tol = 1e-10;

    double prior1 = std::accumulate(targets.begin(), targets.end(), 0.0);
    double a = 0.0;
    double b = std::log((static_cast<double>(n) - prior1 + 1.0) / (prior1 + 1.0));

    auto objective = [&](double A, double B) {
        double f = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double t = targets[i];
            double fApB = A * scores[i] + B;
            if (fApB >= 0.0)
                f += t * fApB + std::log1p(std::exp(-fApB));
            else
                f += (t - 1.0) * fApB + std::log1p(std::exp(fApB));
        }
        return f;
    };

    double fval = objective(a, b);
    for (int iter = 0; iter < max_iter; ++iter) {
        double h11 = sigma, h22 = sigma, h21 = 0.0;
        double g1 = 0.0, g2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double fApB = a * scores[i] + b;
            double p, q;
            if (fApB >= 0.0) {
                p = std::exp(-fApB) / (1.0 + std::exp(-fApB));
                q = 1.0 / (1.0 + std::exp(-fApB));
            } else {
                p = 1.0 / (1.0 + std::exp(fApB));
                q = std::exp(fApB) / (1.0 + std::exp(fApB));
            }
            double d2 = p * q;
            h11 += scores[i] * scores[i] * d2;
            h22 += d2;
            h21 += scores[i] * d2;
            double d1 = targets[i] - p;
            g1 += scores[i] * d1;
            g2 += d1;
        }
        if (std::abs(g1) < grad_tol && std::abs(g2) < grad_tol) break;

        double det = h11 * h22 - h21 * h21;
        double dA = -(h22 * g1 - h21 * g2) / det;
        double dB = -(-h21 * g1 + h11 * g2) / det;
        double gd = g1 * dA + g2 * dB;

        double step = 1.0;
        while (step >= min_step) {
            double new_a = a + step * dA;
            double new_b = b + step * dB;
            double new_f = objective(new_a, new_b);
            if (new_f < fval + 1e-4 * step * gd) {
                a = new_a;
                b = new_b;
                fval = new_f;
                break;
            }
            step /= 2.0;
        }
        if (step < min_step) break;
    }
    return {a, b};
}

} // namespace

PlattParams platt_fit(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size() || scores.empty())
        throw std::invalid_argument("platt_fit needs matching nonempty scores and labels");
    double n_pos = 0.0, n_neg = 0.0;
    for (int y : labels) (y == 1 ? n_pos : n_neg) += 1.0;
    if (n_pos == 0.0 || n_neg == 0.0)
        throw DataError("platt_fit requires both classes in the fitting sample");

    const double t_pos = (n_pos + 1.0) / (n_pos + 2.0);
    const double t_neg = 1.0 / (n_neg + 2.0);
    std::vector<double> targets(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) targets[i] = labels[i] == 1 ? t_pos : t_neg;
    return platt_newton(scores, targets);
}

double platt_apply(const PlattParams& p, double score) {
    double fApB = p.a * score + p.b;
    if (fApB >= 0.0) {
        double e = std::exp(-fApB);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(fApB));
}

IsotonicCurve isotonic_fit(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size() || scores.empty())
        throw std::invalid_argument("isotonic_fit needs matching nonempty scores and labels");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] < scores[b];
    });

    struct Block {
        double min_score;
        double sum;
        double weight;
        double value() const { return sum / weight; }
    };

    // records with equal scores form one initial block, then PAV merging
    std::vector<Block> blocks;
    for (std::size_t k = 0; k < order.size(); ++k) {
        std::size_t i = order[k];
        if (k > 0 && scores[i] == scores[order[k - 1]]) {
            blocks.back().sum += labels[i];
            blocks.back().weight += 1.0;
        } else {
            blocks.push_back({scores[i], static_cast<double>(labels[i]), 1.0});
        }
        while (blocks.size() >= 2 && blocks[blocks.size() - 2].value() > blocks.back().value()) {
            Block b = blocks.back();
            blocks.pop_back();
            blocks.back().sum += b.sum;
            blocks.back().weight += b.weight;
        }
    }

    IsotonicCurve c;
    for (const auto& b : blocks) {
        c.breakpoints.push_back(b.min_score);
        c.levels.push_back(b.value());
    }
    return c;
}

double isotonic_apply(const IsotonicCurve& c, double score) {
    if (c.breakpoints.empty()) throw std::invalid_argument("isotonic_apply on an unfitted curve");
    auto it = std::upper_bound(c.breakpoints.begin(), c.breakpoints.end(), score);
    if (it == c.breakpoints.begin()) return c.levels.front();
    std::size_t idx = static_cast<std::size_t>(it - c.breakpoints.begin()) - 1;
    return c.levels[idx];
}

double ScoreCalibrator::apply(double score) const {
    switch (kind) {
        case Kind::none: return score;
        case Kind::logistic_correction: return logistic_correction(score);
        case Kind::platt: return platt_apply(platt, score);
        case Kind::isotonic: return isotonic_apply(isotonic, score);
    }
    return score;
}

std::string to_string(LeafEstimatorKind k) {
    switch (k) {
        case LeafEstimatorKind::frequency: return "frequency";
        case LeafEstimatorKind::laplace: return "laplace";
        case LeafEstimatorKind::m_estimation: return "m_estimation";
        case LeafEstimatorKind::curtailment: return "curtailment";
        case LeafEstimatorKind::curtailment_laplace: return "curtailment_laplace";
        case LeafEstimatorKind::curtailment_m_estimation: return "curtailment_m_estimation";
    }
    return "?";
}

std::string to_string(ScoreCalibrator::Kind k) {
    switch (k) {
        case ScoreCalibrator::Kind::none: return "none";
        case ScoreCalibrator::Kind::logistic_correction: return "logistic_correction";
        case ScoreCalibrator::Kind::platt: return "platt";
        case ScoreCalibrator::Kind::isotonic: return "isotonic";
    }
    return "?";
}

} // namespace csense
