#pragma once

// Project catalog: filtering by collaboration, activity and purpose, log-spaced
// team-size strata, and seeded stratified sampling.

#include <teamprod/error.hpp>
#include <teamprod/util/csv.hpp>
#include <teamprod/util/kv.hpp>
#include <teamprod/util/rng.hpp>
#include <teamprod/util/text.hpp>
#include <teamprod/util/timestamp.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace teamprod::catalog {

inline constexpr double fraction_epsilon = 1e-9;

struct ProjectMeta {
    std::string project_id;
    long long commit_count = 0;
    long long developer_count = 0;
    Timestamp first_commit_ts{};
    Timestamp last_commit_ts{};
    bool is_fork = false;
    std::map<std::string, double> language_fractions;
    std::optional<std::string> root_commit_hash;
    std::optional<long long> team_size_latest;

    friend bool operator==(const ProjectMeta&, const ProjectMeta&) = default;
};

/// Default language set for the purpose filter: the languages understood by a
/// common function-level code analyser. Configurable; not authoritative.
inline std::set<std::string> default_supported_languages() {
    return {"C",      "C++",  "Java",   "C#",    "JavaScript", "TypeScript", "Objective-C", "Swift", "Python",
            "Ruby",   "TTCN-3", "PHP",  "Scala", "GDScript",   "Go",         "Lua",         "Rust"};
}

struct FilterConfig {
    long long min_developers = 2;
    long long min_commits = 50;
    long long min_span_days = 100;
    long long min_age_days = 294;
    bool exclude_forks = true;
    Timestamp activity_cutoff = parse_timestamp("2020-05-31T23:59:59Z");
    double purpose_threshold = 0.75;
    std::set<std::string> supported_languages = default_supported_languages();

    void validate() const {
        if (purpose_threshold < 0.0 || purpose_threshold > 1.0)
            throw Error(ErrorKind::invalid_argument, "purpose_threshold must lie in [0, 1]");
        if (min_developers < 0 || min_commits < 0 || min_span_days < 0 || min_age_days < 0)
            throw Error(ErrorKind::invalid_argument, "filter minima must be non-negative");
    }

    static FilterConfig from_kv(const kv::Document& doc) {
        FilterConfig cfg;
        cfg.min_developers = doc.integer_or("min_developers", cfg.min_developers);
        cfg.min_commits = doc.integer_or("min_commits", cfg.min_commits);
        cfg.min_span_days = doc.integer_or("min_span_days", cfg.min_span_days);
        cfg.min_age_days = doc.integer_or("min_age_days", cfg.min_age_days);
        cfg.exclude_forks = doc.boolean_or("exclude_forks", cfg.exclude_forks);
        if (auto v = doc.get("activity_cutoff")) cfg.activity_cutoff = parse_timestamp(*v);
        cfg.purpose_threshold = doc.number_or("purpose_threshold", cfg.purpose_threshold);
        if (doc.has("supported_languages")) {
            auto langs = doc.list_or("supported_languages", {});
            cfg.supported_languages = {langs.begin(), langs.end()};
        }
        cfg.validate();
        return cfg;
    }
};

struct Stratum {
    long long lower = 0;
    long long upper = 0;
    long long project_count = 0;
    long long sample_quota = 0;

    bool contains(long long team_size) const { return team_size >= lower && team_size <= upper; }
    friend bool operator==(const Stratum&, const Stratum&) = default;
};

/// True iff the summed fraction of supported languages reaches the threshold.
/// Language names compare case-insensitively.
inline bool purpose_filter(const std::map<std::string, double>& fractions, const std::set<std::string>& supported,
                           double threshold) {
    std::set<std::string> folded;
    for (const auto& l : supported) folded.insert(text::ascii_lower(l));
    double sum = 0.0;
    for (const auto& [lang, frac] : fractions)
        if (folded.count(text::ascii_lower(lang))) sum += frac;
    // Fractions are usually decimal literals; absorb representation error so
    // that 0.75 summed from parts still meets a 0.75 threshold.
    return sum + fraction_epsilon >= threshold;
}

inline bool passes_filters(const ProjectMeta& row, const FilterConfig& cfg) {
    auto span = row.last_commit_ts - row.first_commit_ts;
    return row.developer_count >= cfg.min_developers && row.commit_count >= cfg.min_commits &&
           span >= days(cfg.min_span_days) && span >= days(cfg.min_age_days) &&
           !(cfg.exclude_forks && row.is_fork) && row.last_commit_ts > cfg.activity_cutoff &&
           purpose_filter(row.language_fractions, cfg.supported_languages, cfg.purpose_threshold);
}

inline std::vector<ProjectMeta> apply_filters(std::span<const ProjectMeta> rows, const FilterConfig& cfg) {
    std::vector<ProjectMeta> kept;
    for (const auto& row : rows)
        if (passes_filters(row, cfg)) kept.push_back(row);
    return kept;
}

namespace detail {

inline long long round_half_even(double x) {
    double fl = std::floor(x);
    double diff = x - fl;
    if (diff > 0.5) return static_cast<long long>(fl) + 1;
    if (diff < 0.5) return static_cast<long long>(fl);
    auto f = static_cast<long long>(fl);
    return (f % 2 == 0) ? f : f + 1;
}

}  // namespace detail

/// `k` contiguous log-spaced strata over [min_ts, max_ts]. Upper bounds are
/// min_ts * r^j rounded half-to-even with r = (max_ts / min_ts)^(1/k); on
/// narrow ranges they are nudged so each stratum stays non-empty.
inline std::vector<Stratum> compute_strata(long long min_ts, long long max_ts, int k) {
    if (min_ts < 1 || min_ts > max_ts)
        throw Error(ErrorKind::invalid_range,
                    "team-size range [" + std::to_string(min_ts) + ", " + std::to_string(max_ts) + "]");
    if (k < 1) throw Error(ErrorKind::invalid_k, "k must be >= 1");
    if (k > max_ts - min_ts + 1)
        throw Error(ErrorKind::invalid_k, "k = " + std::to_string(k) + " exceeds the number of team sizes in range");
    double ratio = std::pow(static_cast<double>(max_ts) / static_cast<double>(min_ts), 1.0 / k);
    std::vector<Stratum> strata;
    long long lower = min_ts;
    for (int j = 1; j <= k; ++j) {
        long long upper = j == k ? max_ts : detail::round_half_even(static_cast<double>(min_ts) * std::pow(ratio, j));
        upper = std::max(upper, lower);
        upper = std::min(upper, max_ts - (k - j));
        strata.push_back({lower, upper, 0, 0});
        lower = upper + 1;
    }
    return strata;
}

/// Fills `project_count` from the rows' latest team sizes.
inline void count_strata(std::vector<Stratum>& strata, std::span<const ProjectMeta> rows) {
    for (auto& s : strata) s.project_count = 0;
    for (const auto& r : rows) {
        if (!r.team_size_latest) continue;
        for (auto& s : strata)
            if (s.contains(*r.team_size_latest)) ++s.project_count;
    }
}

/// Draws min(quota, population) projects per stratum uniformly without
/// replacement (partial Fisher-Yates over the stratum's rows in input order,
/// one generator shared across strata in stratum order). Rows sharing a root
/// commit hash are then collapsed onto the earliest-started one.
inline std::vector<ProjectMeta> stratified_sample(std::span<const ProjectMeta> rows, std::span<const Stratum> strata,
                                                  long long quota, std::uint64_t seed) {
    if (quota < 1) throw Error(ErrorKind::invalid_argument, "quota must be >= 1");
    for (const auto& r : rows)
        if (!r.team_size_latest)
            throw Error(ErrorKind::missing_team_size, "project '" + r.project_id + "' has no team_size_latest");

    Rng rng(seed);
    std::vector<ProjectMeta> picked;
    for (const auto& stratum : strata) {
        std::vector<std::size_t> population;
        for (std::size_t i = 0; i < rows.size(); ++i)
            if (stratum.contains(*rows[i].team_size_latest)) population.push_back(i);
        auto take = static_cast<std::size_t>(std::min<long long>(quota, static_cast<long long>(population.size())));
        for (std::size_t i = 0; i < take; ++i) {
            auto j = i + static_cast<std::size_t>(rng.below(population.size() - i));
            std::swap(population[i], population[j]);
            picked.push_back(rows[population[i]]);
        }
    }

    std::map<std::string, std::size_t> keeper;
    for (std::size_t i = 0; i < picked.size(); ++i) {
        const auto& h = picked[i].root_commit_hash;
        if (!h || h->empty()) continue;
        auto [it, inserted] = keeper.emplace(*h, i);
        if (inserted) continue;
        const auto& cur = picked[it->second];
        const auto& cand = picked[i];
        if (std::tie(cand.first_commit_ts, cand.project_id) < std::tie(cur.first_commit_ts, cur.project_id))
            it->second = i;
    }
    std::vector<ProjectMeta> out;
    for (std::size_t i = 0; i < picked.size(); ++i) {
        const auto& h = picked[i].root_commit_hash;
        if (h && !h->empty() && keeper.at(*h) != i) continue;
        out.push_back(picked[i]);
    }
    return out;
}

// --- catalog file ---------------------------------------------------------

inline std::map<std::string, double> parse_language_fractions(std::string_view s) {
    std::map<std::string, double> out;
    if (kv::trim(s).empty()) return out;
    for (const auto& item : kv::split(s, ';')) {
        if (item.empty()) continue;
        auto colon = item.rfind(':');
        if (colon == std::string::npos)
            throw Error(ErrorKind::malformed_input, "language fraction '" + item + "' lacks ':'");
        auto lang = kv::trim(std::string_view(item).substr(0, colon));
        auto num = kv::trim(std::string_view(item).substr(colon + 1));
        char* end = nullptr;
        double v = std::strtod(num.c_str(), &end);
        if (num.empty() || end != num.c_str() + num.size())
            throw Error(ErrorKind::malformed_input, "language fraction '" + item + "' is not numeric");
        out[lang] += v;
    }
    return out;
}

inline std::string format_language_fractions(const std::map<std::string, double>& fr) {
    std::string out;
    for (const auto& [lang, v] : fr) {
        if (!out.empty()) out += ';';
        out += lang + ":" + csv::format_number(v);
    }
    return out;
}

inline void validate(const ProjectMeta& row) {
    double sum = 0.0;
    for (const auto& [lang, v] : row.language_fractions) {
        if (v < 0.0 || v > 1.0)
            throw Error(ErrorKind::malformed_input, row.project_id + ": fraction for " + lang + " outside [0,1]");
        sum += v;
    }
    if (sum > 1.0 + fraction_epsilon)
        throw Error(ErrorKind::malformed_input, row.project_id + ": language fractions sum above 1");
    if (row.last_commit_ts < row.first_commit_ts)
        throw Error(ErrorKind::malformed_input, row.project_id + ": last commit precedes first commit");
    if (row.commit_count < 0 || row.developer_count < 0)
        throw Error(ErrorKind::malformed_input, row.project_id + ": negative count");
    if (row.team_size_latest && *row.team_size_latest < 1)
        throw Error(ErrorKind::malformed_input, row.project_id + ": team_size_latest must be positive");
}

inline bool parse_bool(const std::string& s) {
    auto l = text::ascii_lower(s);
    if (l == "true" || l == "1" || l == "yes") return true;
    if (l == "false" || l == "0" || l == "no" || l.empty()) return false;
    throw Error(ErrorKind::malformed_input, "not a boolean: '" + s + "'");
}

/// Reads the catalog CSV. An optional trailing `team_size_latest` column is
/// accepted; when absent the sampler fills it from mined histories.
inline std::vector<ProjectMeta> read_catalog(std::string_view text) {
    csv::Table t(text, "catalog");
    t.require({"project_id", "commit_count", "developer_count", "first_commit_ts", "last_commit_ts", "is_fork",
               "root_commit_hash", "language_fractions"});
    std::vector<ProjectMeta> rows;
    for (std::size_t i = 0; i < t.size(); ++i) {
        ProjectMeta m;
        m.project_id = t.at(i, "project_id");
        m.commit_count = t.integer(i, "commit_count");
        m.developer_count = t.integer(i, "developer_count");
        m.first_commit_ts = parse_timestamp(t.at(i, "first_commit_ts"));
        m.last_commit_ts = parse_timestamp(t.at(i, "last_commit_ts"));
        m.is_fork = parse_bool(t.at(i, "is_fork"));
        if (!t.at(i, "root_commit_hash").empty()) m.root_commit_hash = t.at(i, "root_commit_hash");
        m.language_fractions = parse_language_fractions(t.at(i, "language_fractions"));
        if (t.has("team_size_latest") && !t.at(i, "team_size_latest").empty())
            m.team_size_latest = t.integer(i, "team_size_latest");
        validate(m);
        rows.push_back(std::move(m));
    }
    return rows;
}

inline std::string write_catalog(std::span<const ProjectMeta> rows) {
    bool with_ts = std::any_of(rows.begin(), rows.end(), [](const auto& r) { return r.team_size_latest.has_value(); });
    std::ostringstream os;
    csv::Row header{"project_id", "commit_count",    "developer_count", "first_commit_ts",
                    "last_commit_ts", "is_fork", "root_commit_hash", "language_fractions"};
    if (with_ts) header.push_back("team_size_latest");
    csv::write_row(os, header);
    for (const auto& r : rows) {
        csv::Row row{r.project_id,
                     std::to_string(r.commit_count),
                     std::to_string(r.developer_count),
                     format_timestamp(r.first_commit_ts),
                     format_timestamp(r.last_commit_ts),
                     r.is_fork ? "true" : "false",
                     r.root_commit_hash.value_or(""),
                     format_language_fractions(r.language_fractions)};
        if (with_ts) row.push_back(r.team_size_latest ? std::to_string(*r.team_size_latest) : "");
        csv::write_row(os, row);
    }
    return os.str();
}

inline std::string write_strata(std::span<const Stratum> strata) {
    std::ostringstream os;
    csv::write_row(os, {"lower", "upper", "project_count", "sample_quota"});
    for (const auto& s : strata)
        csv::write_row(os, {std::to_string(s.lower), std::to_string(s.upper), std::to_string(s.project_count),
                            std::to_string(s.sample_quota)});
    return os.str();
}

/// Live metadata sources (mirror databases, hosting-platform APIs) plug in
/// here. Only the offline catalog file is implemented.
class RemoteCatalogSource {
public:
    virtual ~RemoteCatalogSource() = default;
    virtual std::vector<ProjectMeta> fetch(std::span<const std::string> project_ids) = 0;
};

class UnavailableRemoteSource final : public RemoteCatalogSource {
public:
    std::vector<ProjectMeta> fetch(std::span<const std::string>) override {
        throw Error(ErrorKind::unreadable_source, "remote catalog fetching is not available; use a catalog file");
    }
};

}  // namespace teamprod::catalog
