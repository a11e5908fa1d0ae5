#include "boxde/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace boxde {

std::string_view metric_name(Metric m) {
    switch (m) {
        case Metric::ViolationProbability: return "violation_probability";
        case Metric::BestSoFar: return "best_so_far";
        case Metric::PopulationVariance: return "population_variance";
    }
    return "violation_probability";
}

Metric parse_metric(std::string_view s) {
    if (s == "violation_probability") return Metric::ViolationProbability;
    if (s == "best_so_far") return Metric::BestSoFar;
    if (s == "population_variance") return Metric::PopulationVariance;
    throw std::invalid_argument("unknown metric: " + std::string(s));
}

double metric_value(const GenerationRecord& r, Metric metric) {
    switch (metric) {
        case Metric::ViolationProbability: return r.infeasible_component_ratio;
        case Metric::BestSoFar: return std::log10(std::max(r.best_error, 0.0) + 1e-12);
        case Metric::PopulationVariance: return r.mean_component_variance;
    }
    return 0.0;
}

Series extract_series(const Trajectory& t, Metric metric) {
    Series s;
    for (const auto& r : t.records()) {
        // The initial population has no trials, so it carries no violation data.
        if (metric == Metric::ViolationProbability && r.generation == 0) continue;
        s.evaluations.push_back(static_cast<double>(r.feasible_evaluations));
        s.values.push_back(metric_value(r, metric));
    }
    return s;
}

Vector resample(const Series& s, double horizon, std::size_t grid_points) {
    if (s.values.empty()) throw std::invalid_argument("cannot resample an empty series");
    if (s.values.size() != s.evaluations.size()) throw std::invalid_argument("series length mismatch");
    if (grid_points < 2) throw std::invalid_argument("grid_points must be at least 2");
    Vector out(grid_points);
    const auto& xs = s.evaluations;
    const auto& ys = s.values;
    std::size_t k = 0;
    for (std::size_t g = 0; g < grid_points; ++g) {
        const double x = horizon * static_cast<double>(g) / static_cast<double>(grid_points - 1);
        if (x <= xs.front()) {
            out[g] = ys.front();
            continue;
        }
        if (x >= xs.back()) {
            out[g] = ys.back();
            continue;
        }
        while (k + 1 < xs.size() && xs[k + 1] < x) ++k;
        // xs[k] < x <= xs[k+1]
        const double x0 = xs[k];
        const double x1 = xs[k + 1];
        out[g] = x1 > x0 ? ys[k] + (ys[k + 1] - ys[k]) * (x - x0) / (x1 - x0) : ys[k + 1];
    }
    return out;
}

Vector build_trajectory(std::span<const Series> runs, std::span<const double> horizons, std::size_t grid_points) {
    if (runs.empty()) throw std::invalid_argument("empty run set");
    if (horizons.size() != runs.size()) throw std::invalid_argument("one horizon per run is required");
    Vector acc(grid_points, 0.0);
    for (std::size_t r = 0; r < runs.size(); ++r) {
        const auto row = resample(runs[r], horizons[r], grid_points);
        for (std::size_t g = 0; g < grid_points; ++g) acc[g] += row[g];
    }
    for (auto& v : acc) v /= static_cast<double>(runs.size());
    return acc;
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) throw std::invalid_argument("dimension mismatch");
    double dot = 0.0;
    double nu = 0.0;
    double nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if (nu == 0.0 && nv == 0.0) return 1.0;
    if (nu == 0.0 || nv == 0.0) return 0.0;
    return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

std::vector<Vector> similarity_matrix(const TrajectoryMatrix& m) {
    const std::size_t L = m.rows.size();
    std::vector<Vector> s(L, Vector(L, 1.0));
    for (std::size_t i = 0; i < L; ++i)
        for (std::size_t j = i + 1; j < L; ++j) s[i][j] = s[j][i] = cosine_similarity(m.rows[i], m.rows[j]);
    return s;
}

std::vector<std::string> Dendrogram::members(std::size_t id) const {
    const std::size_t L = leaf_labels.size();
    if (id < L) return {leaf_labels[id]};
    const auto& step = merges.at(id - L);
    auto out = members(step.a);
    auto rhs = members(step.b);
    out.insert(out.end(), rhs.begin(), rhs.end());
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::vector<std::string>> Dendrogram::cut(double threshold) const {
    const std::size_t L = leaf_labels.size();
    std::vector<std::size_t> parent(L + merges.size());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<std::size_t(std::size_t)> root = [&](std::size_t x) {
        return parent[x] == x ? x : parent[x] = root(parent[x]);
    };
    for (std::size_t k = 0; k < merges.size(); ++k) {
        if (merges[k].height > threshold) continue;
        parent[root(merges[k].a)] = L + k;
        parent[root(merges[k].b)] = L + k;
    }
    std::map<std::size_t, std::vector<std::string>> groups;
    for (std::size_t i = 0; i < L; ++i) groups[root(i)].push_back(leaf_labels[i]);
    std::vector<std::vector<std::string>> out;
    for (auto& [_, g] : groups) {
        std::sort(g.begin(), g.end());
        out.push_back(std::move(g));
    }
    std::sort(out.begin(), out.end());
    return out;
}

namespace {

nlohmann::ordered_json node_json(const Dendrogram& d, std::size_t id) {
    const std::size_t L = d.leaf_labels.size();
    nlohmann::ordered_json j;
    if (id < L) {
        j["label"] = d.leaf_labels[id];
        j["height"] = 0.0;
        j["children"] = nlohmann::ordered_json::array();
        return j;
    }
    const auto& step = d.merges[id - L];
    j["label"] = nullptr;
    j["height"] = step.height;
    j["children"] = {node_json(d, step.a), node_json(d, step.b)};
    return j;
}

double node_height(const Dendrogram& d, std::size_t id) {
    return id < d.leaf_labels.size() ? 0.0 : d.merges[id - d.leaf_labels.size()].height;
}

void newick(const Dendrogram& d, std::size_t id, std::ostream& out) {
    const std::size_t L = d.leaf_labels.size();
    if (id < L) {
        out << d.leaf_labels[id];
        return;
    }
    const auto& step = d.merges[id - L];
    out << '(';
    newick(d, step.a, out);
    out << ':' << format_real(step.height - node_height(d, step.a)) << ',';
    newick(d, step.b, out);
    out << ':' << format_real(step.height - node_height(d, step.b)) << ')';
}

}  // namespace

std::string Dendrogram::to_json() const {
    if (leaf_labels.empty()) return "null";
    const std::size_t top = leaf_labels.size() + merges.size() - 1;
    return node_json(*this, top).dump(2);
}

std::string Dendrogram::to_newick() const {
    if (leaf_labels.empty()) return ";";
    std::ostringstream out;
    newick(*this, leaf_labels.size() + merges.size() - 1, out);
    out << ';';
    return out.str();
}

Dendrogram complete_linkage_cluster(const std::vector<Vector>& similarity, std::vector<std::string> labels) {
    const std::size_t L = similarity.size();
    if (labels.size() != L) throw std::invalid_argument("one label per row is required");
    for (const auto& row : similarity)
        if (row.size() != L) throw std::invalid_argument("similarity matrix must be square");
    for (std::size_t i = 0; i < L; ++i)
        for (std::size_t j = i + 1; j < L; ++j)
            if (std::abs(similarity[i][j] - similarity[j][i]) > 1e-12)
                throw std::invalid_argument("similarity matrix must be symmetric");
    {
        auto sorted = labels;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw std::invalid_argument("labels must be unique");
    }

    Dendrogram d;
    d.leaf_labels = std::move(labels);
    // Active clusters: node id, member leaves, sorted member labels.
    struct Cluster {
        std::size_t id;
        std::vector<std::size_t> leaves;
        std::vector<std::string> key;
    };
    std::vector<Cluster> active;
    for (std::size_t i = 0; i < L; ++i) active.push_back({i, {i}, {d.leaf_labels[i]}});

    auto linkage = [&](const Cluster& a, const Cluster& b) {
        double worst = 0.0;
        for (auto i : a.leaves)
            for (auto j : b.leaves) worst = std::max(worst, 1.0 - similarity[i][j]);
        return worst;
    };

    while (active.size() > 1) {
        std::size_t best_a = 0;
        std::size_t best_b = 1;
        double best_h = kInfinity;
        for (std::size_t x = 0; x < active.size(); ++x)
            for (std::size_t y = x + 1; y < active.size(); ++y) {
                std::size_t a = x;
                std::size_t b = y;
                if (active[b].key < active[a].key) std::swap(a, b);
                const double h = linkage(active[a], active[b]);
                const bool better = h < best_h ||
                                    (h == best_h && std::tie(active[a].key, active[b].key) <
                                                        std::tie(active[best_a].key, active[best_b].key));
                if (better) {
                    best_h = h;
                    best_a = a;
                    best_b = b;
                }
            }
        // Complete linkage is monotone, but rounding in 1 - s can break ties
        // by an ulp; keep the recorded heights non-decreasing.
        if (!d.merges.empty()) best_h = std::max(best_h, d.merges.back().height);
        d.merges.push_back({active[best_a].id, active[best_b].id, best_h});
        Cluster merged{L + d.merges.size() - 1, active[best_a].leaves, active[best_a].key};
        merged.leaves.insert(merged.leaves.end(), active[best_b].leaves.begin(), active[best_b].leaves.end());
        merged.key.insert(merged.key.end(), active[best_b].key.begin(), active[best_b].key.end());
        std::sort(merged.key.begin(), merged.key.end());
        const auto hi = std::max(best_a, best_b);
        const auto lo = std::min(best_a, best_b);
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(hi));
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(lo));
        active.push_back(std::move(merged));
    }
    return d;
}

double median(Vector v) {
    if (v.empty()) throw std::invalid_argument("median of empty set");
    // Lower median: always an observed value, so rankings built on it only
    // depend on the order of the errors.
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>((v.size() - 1) / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
}

Vector average_ranks(std::span<const double> values) {
    std::vector<std::size_t> idx(values.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return values[a] < values[b]; });
    Vector ranks(values.size());
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j + 1 < idx.size() && values[idx[j + 1]] == values[idx[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

RankingTable rank_methods(const std::map<std::string, std::map<std::string, Vector>>& errors) {
    RankingTable t;
    for (const auto& [fn, by_method] : errors) {
        t.functions.push_back(fn);
        for (const auto& [m, _] : by_method)
            if (std::find(t.methods.begin(), t.methods.end(), m) == t.methods.end()) t.methods.push_back(m);
    }
    std::sort(t.methods.begin(), t.methods.end());
    if (t.methods.size() < 2) throw std::invalid_argument("ranking needs at least two methods");
    t.mean_rank.assign(t.methods.size(), 0.0);
    for (const auto& fn : t.functions) {
        const auto& by_method = errors.at(fn);
        Vector med(t.methods.size());
        for (std::size_t m = 0; m < t.methods.size(); ++m) {
            auto it = by_method.find(t.methods[m]);
            if (it == by_method.end() || it->second.empty())
                throw std::invalid_argument("missing errors for " + t.methods[m] + " on " + fn);
            med[m] = median(it->second);
        }
        t.ranks.push_back(average_ranks(med));
    }
    for (const auto& r : t.ranks)
        for (std::size_t m = 0; m < r.size(); ++m) t.mean_rank[m] += r[m];
    for (auto& v : t.mean_rank) v /= static_cast<double>(t.functions.size());
    return t;
}

}  // namespace boxde
