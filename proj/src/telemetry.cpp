#include "boxde/telemetry.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace boxde {

namespace {

constexpr std::array<std::string_view, 10> kColumns{
    "generation",
    "feasible_evaluations",
    "population_size",
    "best_error",
    "infeasible_component_ratio",
    "infeasible_individual_ratio",
    "max_component_variance",
    "mean_component_variance",
    "corrections_applied",
    "adaptive_probabilities",
};

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

std::uint64_t parse_uint(std::string_view s) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw std::runtime_error("bad integer: " + std::string(s));
    return v;
}

}  // namespace

std::span<const std::string_view> trajectory_columns() { return kColumns; }

std::string format_real(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_real(std::string_view s) {
    if (s == "inf") return kInfinity;
    if (s == "-inf") return -kInfinity;
    if (s == "nan") return std::nan("");
    const std::string tmp(s);
    char* end = nullptr;
    const double v = std::strtod(tmp.c_str(), &end);
    if (tmp.empty() || end != tmp.c_str() + tmp.size()) throw std::runtime_error("bad real: " + tmp);
    return v;
}

GenerationRecord record_generation(std::span<const Vector> trials, const Population& population,
                                   const Bounds& bounds, std::optional<double> optimum_value) {
    GenerationRecord r;
    r.generation = population.generation;
    r.feasible_evaluations = population.evaluations_used;
    r.population_size = population.size();
    std::size_t bad_components = 0;
    std::size_t bad_trials = 0;
    std::size_t total_components = 0;
    for (const auto& t : trials) {
        const auto c = count_violations(t, bounds);
        bad_components += c;
        total_components += t.size();
        if (c > 0) ++bad_trials;
    }
    if (!trials.empty()) {
        r.infeasible_component_ratio = static_cast<double>(bad_components) / static_cast<double>(total_components);
        r.infeasible_individual_ratio = static_cast<double>(bad_trials) / static_cast<double>(trials.size());
    }
    if (!population.members.empty()) {
        const double best = population.members[population.best_index()].fitness;
        r.best_error = optimum_value ? best - *optimum_value : best;
        const auto stats = population_stats(population);
        r.max_component_variance = stats.max_variance();
        r.mean_component_variance = stats.mean_variance();
    }
    return r;
}

std::string_view behaviour_name(BehaviourClass c) {
    switch (c) {
        case BehaviourClass::GB: return "GB";
        case BehaviourClass::SF: return "SF";
        case BehaviourClass::PC: return "PC";
        case BehaviourClass::BB: return "BB";
    }
    return "BB";
}

BehaviourClass parse_behaviour(std::string_view s) {
    if (s == "GB") return BehaviourClass::GB;
    if (s == "SF") return BehaviourClass::SF;
    if (s == "PC") return BehaviourClass::PC;
    if (s == "BB") return BehaviourClass::BB;
    throw std::invalid_argument("unknown behaviour class: " + std::string(s));
}

BehaviourClass classify(double final_error, double final_max_component_variance, const ClassifierConfig& cfg) {
    const bool found = final_error < cfg.error_threshold;
    const bool converged = final_max_component_variance < cfg.variance_threshold;
    if (found) return converged ? BehaviourClass::GB : BehaviourClass::SF;
    return converged ? BehaviourClass::PC : BehaviourClass::BB;
}

void Trajectory::write_csv(std::ostream& out) const {
    for (std::size_t i = 0; i < kColumns.size(); ++i) out << (i ? "," : "") << kColumns[i];
    out << '\n';
    for (const auto& r : records_) {
        out << r.generation << ',' << r.feasible_evaluations << ',' << r.population_size << ','
            << format_real(r.best_error) << ',' << format_real(r.infeasible_component_ratio) << ','
            << format_real(r.infeasible_individual_ratio) << ',' << format_real(r.max_component_variance) << ','
            << format_real(r.mean_component_variance) << ',' << r.corrections_applied << ',';
        if (r.adaptive_probabilities) {
            const auto& p = *r.adaptive_probabilities;
            for (std::size_t k = 0; k < p.size(); ++k) out << (k ? ";" : "") << format_real(p[k]);
        }
        out << '\n';
    }
}

Trajectory Trajectory::read_csv(std::istream& in) {
    Trajectory t;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("trajectory CSV is empty");
    const auto header = split(line, ',');
    if (header.size() != kColumns.size()) throw std::runtime_error("trajectory CSV has unexpected columns");
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] != kColumns[i]) throw std::runtime_error("trajectory CSV has unexpected columns");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != kColumns.size()) throw std::runtime_error("trajectory CSV row has wrong arity");
        GenerationRecord r;
        r.generation = parse_uint(f[0]);
        r.feasible_evaluations = parse_uint(f[1]);
        r.population_size = static_cast<std::size_t>(parse_uint(f[2]));
        r.best_error = parse_real(f[3]);
        r.infeasible_component_ratio = parse_real(f[4]);
        r.infeasible_individual_ratio = parse_real(f[5]);
        r.max_component_variance = parse_real(f[6]);
        r.mean_component_variance = parse_real(f[7]);
        r.corrections_applied = parse_uint(f[8]);
        if (!f[9].empty()) {
            Vector p;
            for (auto part : split(f[9], ';')) p.push_back(parse_real(part));
            r.adaptive_probabilities = std::move(p);
        }
        t.push(std::move(r));
    }
    return t;
}

}  // namespace boxde
