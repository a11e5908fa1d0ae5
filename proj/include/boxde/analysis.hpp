#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "boxde/core.hpp"
#include "boxde/telemetry.hpp"

namespace boxde {

enum class Metric { ViolationProbability, BestSoFar, PopulationVariance };

std::string_view metric_name(Metric m);
Metric parse_metric(std::string_view s);

/// Value of `metric` at one generation record. BestSoFar is
/// log10(best_error + 1e-12); PopulationVariance the mean component variance.
double metric_value(const GenerationRecord& r, Metric metric);

/// One run's series on the evaluation axis.
struct Series {
    std::vector<double> evaluations;
    std::vector<double> values;
};

Series extract_series(const Trajectory& t, Metric metric);

/// Piecewise-linear resampling onto `grid_points` equally spaced points
/// of [0, horizon]. Values before the first / after the last sample are
/// held constant.
Vector resample(const Series& s, double horizon, std::size_t grid_points);

/// Resamples every run and averages them pointwise. Throws
/// std::invalid_argument on an empty run set.
Vector build_trajectory(std::span<const Series> runs, std::span<const double> horizons, std::size_t grid_points);

struct TrajectoryMatrix {
    std::vector<std::string> row_labels;
    std::vector<Vector> rows;
    Metric metric = Metric::ViolationProbability;
};

/// (u.v)/(|u||v|); 1 when both vectors are zero, 0 when only one is.
double cosine_similarity(std::span<const double> u, std::span<const double> v);

/// Symmetric matrix of pairwise cosine similarities.
std::vector<Vector> similarity_matrix(const TrajectoryMatrix& m);

struct MergeStep {
    /// Node ids: 0..L-1 are leaves, L+k is the cluster created by step k.
    std::size_t a;
    std::size_t b;
    double height;
};

struct Dendrogram {
    std::vector<std::string> leaf_labels;
    std::vector<MergeStep> merges;

    /// Flat clusters after applying every merge with height <= threshold.
    /// Each cluster lists leaf labels sorted; clusters are sorted.
    std::vector<std::vector<std::string>> cut(double threshold) const;

    /// Nested {"label", "height", "children"} JSON.
    std::string to_json() const;
    /// Newick with branch lengths = parent height - child height.
    std::string to_newick() const;

    /// Sorted leaf labels under node `id`.
    std::vector<std::string> members(std::size_t id) const;
};

/// Agglomerative clustering on distance 1 - similarity with complete
/// linkage. Ties go to the pair whose sorted member labels compare
/// lexicographically smallest. Throws std::invalid_argument for a
/// non-square or non-symmetric matrix.
Dendrogram complete_linkage_cluster(const std::vector<Vector>& similarity, std::vector<std::string> labels);

/// Per-function ranks (1 = best by median final error, ties averaged)
/// and the mean rank across functions.
struct RankingTable {
    std::vector<std::string> methods;
    std::vector<std::string> functions;
    /// ranks[f][m]
    std::vector<Vector> ranks;
    Vector mean_rank;
};

/// errors[function][method] -> final errors of the runs. Throws
/// std::invalid_argument with fewer than two methods.
RankingTable rank_methods(const std::map<std::string, std::map<std::string, Vector>>& errors);

/// Lower median (the element at index (k-1)/2 of the sorted values).
double median(Vector v);

/// 1-based ranks of `values`, ties receive the average rank.
Vector average_ranks(std::span<const double> values);

}  // namespace boxde
