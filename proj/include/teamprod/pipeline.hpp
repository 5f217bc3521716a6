#pragma once

// Resumable file-based pipeline: filter -> sample -> mine -> window ->
// network -> stats -> report. Every stage writes its outputs under
// <output>/<stage>/ followed by a manifest recording input fingerprints, a
// configuration fingerprint and row counts.

#include <teamprod/catalog.hpp>
#include <teamprod/code_metrics.hpp>
#include <teamprod/error.hpp>
#include <teamprod/git_source.hpp>
#include <teamprod/identity.hpp>
#include <teamprod/ingest.hpp>
#include <teamprod/networks.hpp>
#include <teamprod/ownership.hpp>
#include <teamprod/stats.hpp>
#include <teamprod/util/csv.hpp>
#include <teamprod/util/fs.hpp>
#include <teamprod/util/hash.hpp>
#include <teamprod/util/kv.hpp>
#include <teamprod/windows.hpp>

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <random>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

namespace teamprod::pipeline {

namespace stdfs = std::filesystem;

enum class Stage { filter, sample, mine, window, network, stats, report };

inline constexpr std::array<Stage, 7> all_stages{Stage::filter, Stage::sample, Stage::mine,  Stage::window,
                                                 Stage::network, Stage::stats, Stage::report};

inline std::string_view to_string(Stage s) {
    switch (s) {
        case Stage::filter: return "filter";
        case Stage::sample: return "sample";
        case Stage::mine: return "mine";
        case Stage::window: return "window";
        case Stage::network: return "network";
        case Stage::stats: return "stats";
        case Stage::report: return "report";
    }
    return "?";
}

inline std::optional<Stage> parse_stage(std::string_view s) {
    for (auto st : all_stages)
        if (to_string(st) == s) return st;
    return std::nullopt;
}

struct PipelineConfig {
    stdfs::path catalog;
    stdfs::path dumps;
    stdfs::path output;
    std::optional<stdfs::path> aliases;
    std::optional<stdfs::path> profiles;  // directory of *.profile files
    std::uint64_t seed = 42;
    unsigned jobs = 1;

    catalog::FilterConfig filter;
    long long strata_min = 2;
    long long strata_max = 1711;
    int strata_k = 10;
    long long quota = 28;

    ingest::IdentityHeuristics identity;
    ownership::OutlierConfig outlier;
    windows::WindowConfig window;
    networks::EigengapKind eigengap = networks::EigengapKind::adjacency;
    windows::TransformSpec transforms = windows::TransformSpec::defaults();
    std::vector<std::string> targets{windows::productivity_names.begin(), windows::productivity_names.end()};
    std::string families = "abcde";
    long long bonferroni_m = 0;  // 0: targets x non-intercept terms per family
    double cluster_threshold = 0.8;
    std::vector<double> ind_levels;  // empty: mean and mean +- one sd of log InD

    kv::Document raw;

    /// Relative paths resolve against `base`.
    static PipelineConfig from_document(const kv::Document& doc, const stdfs::path& base) {
        auto path = [&](const std::string& key, const std::string& fallback) {
            stdfs::path p = doc.get_or(key, fallback);
            return p.is_absolute() ? p : base / p;
        };
        PipelineConfig c;
        c.raw = doc;
        c.catalog = path("catalog", "catalog.csv");
        c.dumps = path("dumps", "dumps");
        c.output = path("output", "out");
        if (doc.has("aliases")) c.aliases = path("aliases", "");
        if (doc.has("profiles")) c.profiles = path("profiles", "");
        c.seed = static_cast<std::uint64_t>(doc.integer_or("seed", static_cast<long long>(c.seed)));
        auto jobs = doc.integer_or("jobs", 1);
        if (jobs < 1) throw Error(ErrorKind::invalid_argument, "jobs must be >= 1");
        c.jobs = static_cast<unsigned>(jobs);
        c.filter = catalog::FilterConfig::from_kv(doc.section("filter"));
        c.strata_min = doc.integer_or("strata.min_ts", c.strata_min);
        c.strata_max = doc.integer_or("strata.max_ts", c.strata_max);
        c.strata_k = static_cast<int>(doc.integer_or("strata.k", c.strata_k));
        c.quota = doc.integer_or("sample.quota", c.quota);
        c.identity.merge_by_email = doc.boolean_or("identity.merge_by_email", c.identity.merge_by_email);
        c.identity.merge_by_name = doc.boolean_or("identity.merge_by_name", c.identity.merge_by_name);
        c.outlier.p_low = doc.number_or("outlier.p_low", c.outlier.p_low);
        c.outlier.p_high = doc.number_or("outlier.p_high", c.outlier.p_high);
        c.outlier.validate();
        c.window = windows::WindowConfig::from_kv(doc.section("window"));
        auto eig = doc.get_or("network.eigengap", "adjacency");
        if (eig == "adjacency")
            c.eigengap = networks::EigengapKind::adjacency;
        else if (eig == "normalized_laplacian")
            c.eigengap = networks::EigengapKind::normalized_laplacian;
        else
            throw Error(ErrorKind::malformed_input, "network.eigengap must be adjacency or normalized_laplacian");
        c.transforms = windows::TransformSpec::from_kv(doc.section("transform"));
        c.targets = doc.list_or("stats.targets", c.targets);
        for (const auto& t : c.targets)
            if (!windows::WindowObservation::has_column(t))
                throw Error(ErrorKind::malformed_input, "unknown regression target '" + t + "'");
        c.families = doc.get_or("stats.families", c.families);
        for (char f : c.families) stats::ModelSpec::family_terms(f);
        c.bonferroni_m = doc.integer_or("stats.bonferroni_m", c.bonferroni_m);
        c.cluster_threshold = doc.number_or("stats.cluster_threshold", c.cluster_threshold);
        for (const auto& v : doc.list_or("report.ind_levels", {})) c.ind_levels.push_back(std::stod(v));
        return c;
    }

    static PipelineConfig load(const stdfs::path& file) {
        auto doc = kv::Document::parse(fs::read_file(file), file.string());
        return from_document(doc, file.has_parent_path() ? file.parent_path() : stdfs::path("."));
    }

    stdfs::path stage_dir(Stage s) const { return output / std::string(to_string(s)); }

    /// Settings each stage depends on; a change requires --force.
    std::string fingerprint(Stage s) const {
        std::vector<std::string> prefixes;
        std::string extra;
        switch (s) {
            case Stage::filter: prefixes = {"filter."}; break;
            case Stage::sample:
                prefixes = {"strata.", "sample.", "identity.", "aliases", "window.moving_days"};
                extra = "seed=" + std::to_string(seed);
                break;
            case Stage::mine: prefixes = {"outlier.", "identity.", "aliases", "profiles"}; break;
            case Stage::window: prefixes = {"window."}; break;
            case Stage::network: prefixes = {"network."}; break;
            case Stage::stats: prefixes = {"transform.", "stats."}; break;
            case Stage::report: prefixes = {"report."}; break;
        }
        Fnv1a h;
        h.update(to_string(s)).update("\n").update(extra).update("\n");
        for (const auto& [k, v] : raw.values())
            for (const auto& p : prefixes)
                if (k.compare(0, p.size(), p) == 0) {
                    h.update(k).update("=").update(v).update("\n");
                    break;
                }
        return h.hex();
    }
};

struct RunOptions {
    bool force = false;
    std::ostream* log = &std::cerr;
};

struct StageResult {
    Stage stage = Stage::filter;
    bool skipped = false;
    std::map<std::string, long long> counts;
};

// --- plumbing -----------------------------------------------------------------------

namespace detail {

/// Runs fn(i) for i in [0, n) on up to `jobs` threads; the first failure (by
/// index) is rethrown after all workers stop.
inline void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn) {
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    unsigned threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

struct Manifest {
    std::string stage;
    std::string config_hash;
    std::map<std::string, std::string> inputs;
    std::vector<std::string> outputs;  // relative to the stage directory
    std::map<std::string, long long> counts;
};

inline std::string now_utc() {
    return format_timestamp(std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now()));
}

inline void write_manifest(const stdfs::path& dir, const Manifest& m) {
    nlohmann::ordered_json j;
    j["stage"] = m.stage;
    j["created_at"] = now_utc();
    // distinguishes runs within one second, so downstream stages notice a re-run
    j["run_id"] = fnv1a_hex(m.stage + "@" + std::to_string(std::chrono::system_clock::now().time_since_epoch().count()) +
                            "#" + std::to_string(std::random_device{}()));
    j["config_hash"] = m.config_hash;
    j["inputs"] = m.inputs;
    j["outputs"] = m.outputs;
    j["counts"] = m.counts;
    fs::write_file_atomic(dir / "manifest.json", j.dump(2) + "\n");
}

inline std::optional<Manifest> read_manifest(const stdfs::path& dir) {
    std::error_code ec;
    if (!stdfs::is_regular_file(dir / "manifest.json", ec)) return std::nullopt;
    try {
        auto j = nlohmann::json::parse(fs::read_file(dir / "manifest.json"));
        Manifest m;
        m.stage = j.at("stage").get<std::string>();
        m.config_hash = j.at("config_hash").get<std::string>();
        m.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
        m.outputs = j.at("outputs").get<std::vector<std::string>>();
        m.counts = j.at("counts").get<std::map<std::string, long long>>();
        return m;
    } catch (const nlohmann::json::exception&) {
        return std::nullopt;  // unreadable manifests are treated as absent
    }
}

/// Inputs are fingerprinted by content. Upstream manifests are inputs too, so
/// a re-run upstream stage (new run_id) invalidates everything below it.
class Inputs {
public:
    void file(const std::string& name, const stdfs::path& p) { hashes_[name] = fnv1a_hex(fs::read_file(p)); }
    void bytes(const std::string& name, std::string_view content) { hashes_[name] = fnv1a_hex(content); }
    const std::map<std::string, std::string>& hashes() const { return hashes_; }

private:
    std::map<std::string, std::string> hashes_;
};

inline void require_upstream(const PipelineConfig& cfg, Stage upstream, Stage current) {
    std::error_code ec;
    if (!stdfs::is_regular_file(cfg.stage_dir(upstream) / "manifest.json", ec))
        throw Error(ErrorKind::missing_upstream_artifact, std::string(to_string(current)) + " needs the outputs of '" +
                                                              std::string(to_string(upstream)) + "'; run it first");
}

inline std::string read_upstream(const PipelineConfig& cfg, Stage upstream, const std::string& name) {
    auto p = cfg.stage_dir(upstream) / name;
    std::error_code ec;
    if (!stdfs::is_regular_file(p, ec))
        throw Error(ErrorKind::missing_upstream_artifact, "missing upstream artifact " + p.string());
    return fs::read_file(p);
}

/// Locates `<dumps>/<id>.commits.jsonl` or a git working tree `<dumps>/<id>`.
inline stdfs::path source_for(const PipelineConfig& cfg, const std::string& project_id) {
    std::error_code ec;
    auto dump = cfg.dumps / (project_id + ".commits.jsonl");
    if (stdfs::is_regular_file(dump, ec)) return dump;
    auto repo = cfg.dumps / project_id;
    if (stdfs::is_directory(repo, ec)) return repo;
    throw Error(ErrorKind::unreadable_source, "no dump or repository for project '" + project_id + "' under " +
                                                  cfg.dumps.string());
}

struct LoadedSource {
    std::string hash;
    ingest::CommitStream stream;
    ingest::ExtractionStats stats;
};

inline LoadedSource load_source(const PipelineConfig& cfg, const std::string& project_id) {
    auto path = source_for(cfg, project_id);
    LoadedSource s;
    std::error_code ec;
    if (stdfs::is_regular_file(path, ec)) {
        auto bytes = fs::read_file(path);
        s.hash = fnv1a_hex(bytes);
        s.stream = ingest::read_dump(bytes, &s.stats);
    } else {
        s.stream = ingest::extract_commit_stream(path, &s.stats);
        s.hash = fnv1a_hex(ingest::write_dump(s.stream));
    }
    return s;
}

inline std::vector<ingest::AliasEntry> load_aliases(const PipelineConfig& cfg) {
    if (!cfg.aliases) return {};
    return ingest::read_alias_map(fs::read_file(*cfg.aliases));
}

inline metrics::ProfileRegistry load_profiles(const PipelineConfig& cfg) {
    metrics::ProfileRegistry reg;
    if (!cfg.profiles) return reg;
    std::vector<stdfs::path> files;
    for (const auto& e : stdfs::directory_iterator(*cfg.profiles))
        if (e.path().extension() == ".profile") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) reg.add(metrics::LanguageProfile::parse(fs::read_file(f)));
    return reg;
}

/// Common frame of a stage run: upstream check, fingerprinting, the no-op
/// test and the manifest write.
class StageRun {
public:
    StageRun(const PipelineConfig& cfg, Stage stage, const RunOptions& opt)
        : cfg_(cfg), stage_(stage), opt_(opt), dir_(cfg.stage_dir(stage)) {
        manifest_.stage = std::string(to_string(stage));
        manifest_.config_hash = cfg.fingerprint(stage);
    }

    Inputs& inputs() { return inputs_; }
    const stdfs::path& dir() const { return dir_; }

    /// True when the recorded run already matches; throws on a configuration
    /// change unless forced.
    bool up_to_date() const {
        auto old = read_manifest(dir_);
        if (!old) return false;
        if (old->config_hash != manifest_.config_hash) {
            if (!opt_.force)
                throw Error(ErrorKind::config_hash_mismatch,
                            std::string(to_string(stage_)) + ": configuration changed since the last run; use --force");
            return false;
        }
        if (opt_.force || old->inputs != inputs_.hashes()) return false;
        std::error_code ec;
        for (const auto& o : old->outputs)
            if (!stdfs::exists(dir_ / o, ec)) return false;
        return true;
    }

    void write(const std::string& name, std::string_view content) {
        fs::write_file_atomic(dir_ / name, content);
        std::lock_guard lock(mu_);
        manifest_.outputs.push_back(name);
    }

    void count(const std::string& key, long long v) { manifest_.counts[key] = v; }

    StageResult finish() {
        std::sort(manifest_.outputs.begin(), manifest_.outputs.end());
        manifest_.inputs = inputs_.hashes();
        write_manifest(dir_, manifest_);
        if (opt_.log) {
            *opt_.log << to_string(stage_) << ":";
            for (const auto& [k, v] : manifest_.counts) *opt_.log << " " << k << "=" << v;
            *opt_.log << "\n";
        }
        return {stage_, false, manifest_.counts};
    }

    StageResult skip() const {
        if (opt_.log) *opt_.log << to_string(stage_) << ": up to date\n";
        auto old = read_manifest(dir_);
        return {stage_, true, old ? old->counts : std::map<std::string, long long>{}};
    }

    /// Removes stale outputs of an earlier run before writing new ones.
    void clear() {
        std::error_code ec;
        stdfs::remove_all(dir_, ec);
        stdfs::create_directories(dir_);
    }

private:
    const PipelineConfig& cfg_;
    Stage stage_;
    const RunOptions& opt_;
    stdfs::path dir_;
    Inputs inputs_;
    Manifest manifest_;
    std::mutex mu_;
};

inline std::vector<std::string> sampled_ids(const PipelineConfig& cfg) {
    auto rows = catalog::read_catalog(read_upstream(cfg, Stage::sample, "sample.csv"));
    std::vector<std::string> ids;
    for (const auto& r : rows) ids.push_back(r.project_id);
    std::sort(ids.begin(), ids.end());
    return ids;
}

struct CommitRow {
    std::string hash, author_id;
    Timestamp timestamp{};
    bool is_merge = false, retained = false;
};

inline std::vector<CommitRow> read_commit_rows(std::string_view text) {
    csv::Table t(text, "commits");
    t.require({"commit_hash", "author_id", "timestamp", "is_merge", "retained"});
    std::vector<CommitRow> out;
    for (std::size_t i = 0; i < t.size(); ++i)
        out.push_back({t.at(i, "commit_hash"), t.at(i, "author_id"), parse_timestamp(t.at(i, "timestamp")),
                       catalog::parse_bool(t.at(i, "is_merge")), catalog::parse_bool(t.at(i, "retained"))});
    return out;
}

}  // namespace detail

// --- stages ----------------------------------------------------------------------------

inline StageResult run_filter(const PipelineConfig& cfg, const RunOptions& opt) {
    detail::StageRun run(cfg, Stage::filter, opt);
    run.inputs().file("catalog", cfg.catalog);
    if (run.up_to_date()) return run.skip();
    auto rows = catalog::read_catalog(fs::read_file(cfg.catalog));
    auto kept = catalog::apply_filters(rows, cfg.filter);
    run.clear();
    run.write("filtered.csv", catalog::write_catalog(kept));
    run.count("input_rows", static_cast<long long>(rows.size()));
    run.count("retained", static_cast<long long>(kept.size()));
    run.count("dropped", static_cast<long long>(rows.size() - kept.size()));
    return run.finish();
}

inline StageResult run_sample(const PipelineConfig& cfg, const RunOptions& opt) {
    detail::require_upstream(cfg, Stage::filter, Stage::sample);
    detail::StageRun run(cfg, Stage::sample, opt);
    run.inputs().file("filter/manifest.json", cfg.stage_dir(Stage::filter) / "manifest.json");
    auto filtered_text = detail::read_upstream(cfg, Stage::filter, "filtered.csv");
    run.inputs().bytes("filter/filtered.csv", filtered_text);
    auto rows = catalog::read_catalog(filtered_text);
    auto aliases = detail::load_aliases(cfg);
    if (cfg.aliases) run.inputs().file("aliases", *cfg.aliases);

    // Team size at the latest commit, from the history, when the catalog lacks it.
    std::vector<std::optional<detail::LoadedSource>> sources(rows.size());
    detail::parallel_for(rows.size(), cfg.jobs, [&](std::size_t i) {
        if (!rows[i].team_size_latest) sources[i] = detail::load_source(cfg, rows[i].project_id);
    });
    for (std::size_t i = 0; i < rows.size(); ++i)
        if (sources[i]) run.inputs().bytes("source/" + rows[i].project_id, sources[i]->hash);
    if (run.up_to_date()) return run.skip();

    long long measured = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (!sources[i]) continue;
        auto [stream, ids] = ingest::resolve_identities(std::move(sources[i]->stream), aliases, cfg.identity);
        if (stream.empty()) throw Error(ErrorKind::empty_history, rows[i].project_id + " has no commits");
        Timestamp last = stream.front().timestamp;
        for (const auto& c : stream) last = std::max(last, c.timestamp);
        rows[i].team_size_latest = windows::moving_team_size(stream, last, cfg.window);
        ++measured;
    }
    auto strata = catalog::compute_strata(cfg.strata_min, cfg.strata_max, cfg.strata_k);
    std::vector<catalog::ProjectMeta> in_range;
    for (const auto& r : rows)
        if (*r.team_size_latest >= cfg.strata_min && *r.team_size_latest <= cfg.strata_max) in_range.push_back(r);
    catalog::count_strata(strata, in_range);
    for (auto& s : strata) s.sample_quota = std::min(cfg.quota, s.project_count);
    auto sample = catalog::stratified_sample(in_range, strata, cfg.quota, cfg.seed);
    std::sort(sample.begin(), sample.end(), [](const auto& a, const auto& b) { return a.project_id < b.project_id; });

    run.clear();
    run.write("strata.csv", catalog::write_strata(strata));
    run.write("sample.csv", catalog::write_catalog(sample));
    run.count("candidates", static_cast<long long>(rows.size()));
    run.count("team_size_measured", measured);
    run.count("outside_strata", static_cast<long long>(rows.size() - in_range.size()));
    run.count("sampled", static_cast<long long>(sample.size()));
    return run.finish();
}

inline StageResult run_mine(const PipelineConfig& cfg, const RunOptions& opt) {
    detail::require_upstream(cfg, Stage::sample, Stage::mine);
    detail::StageRun run(cfg, Stage::mine, opt);
    run.inputs().file("sample/manifest.json", cfg.stage_dir(Stage::sample) / "manifest.json");
    auto ids = detail::sampled_ids(cfg);
    auto aliases = detail::load_aliases(cfg);
    if (cfg.aliases) run.inputs().file("aliases", *cfg.aliases);
    auto profiles = detail::load_profiles(cfg);
    if (cfg.profiles)
        for (const auto& e : std::filesystem::directory_iterator(*cfg.profiles))
            if (e.path().extension() == ".profile") run.inputs().file("profile/" + e.path().filename().string(), e.path());

    std::vector<detail::LoadedSource> sources(ids.size());
    detail::parallel_for(ids.size(), cfg.jobs, [&](std::size_t i) { sources[i] = detail::load_source(cfg, ids[i]); });
    for (std::size_t i = 0; i < ids.size(); ++i) run.inputs().bytes("source/" + ids[i], sources[i].hash);
    if (run.up_to_date()) return run.skip();
    run.clear();

    struct Counts {
        long long commits = 0, retained = 0, events = 0, binary = 0, conflicts = 0;
    };
    std::vector<Counts> counts(ids.size());
    detail::parallel_for(ids.size(), cfg.jobs, [&](std::size_t i) {
        auto [stream, identities] = ingest::resolve_identities(std::move(sources[i].stream), aliases, cfg.identity);
        ownership::ReplayOptions ro;
        ro.retain_states = false;
        auto replay = ownership::replay_ownership(stream, ro);
        auto events = replay.aggregated_events(false);
        auto totals = ownership::commit_totals(stream, events);
        std::set<std::string> retained;
        if (!totals.empty()) retained = ownership::filter_outlier_commits(totals, cfg.outlier);

        std::vector<metrics::MetricRow> metric_rows;
        for (const auto& c : stream) {
            if (c.is_merge) continue;
            for (const auto& ch : c.changes) {
                if (ch.is_binary) continue;
                const auto* profile = profiles.for_path(ch.path);
                if (!profile) continue;
                metrics::FileMetricVector pre, post;
                if (ch.pre_text) pre = metrics::file_metrics(*ch.pre_text, *profile);
                if (ch.post_text) post = metrics::file_metrics(*ch.post_text, *profile);
                metric_rows.push_back({c.hash, ch.path, metrics::commit_code_delta(pre, post)});
            }
        }

        std::ostringstream commits_csv;
        csv::write_row(commits_csv, {"commit_hash", "author_id", "timestamp", "is_merge", "retained", "lev_total"});
        for (const auto& c : stream) {
            auto it = totals.find(c.hash);
            csv::write_row(commits_csv, {c.hash, c.author_id, format_timestamp(c.timestamp), c.is_merge ? "true" : "false",
                                         retained.count(c.hash) ? "true" : "false",
                                         it == totals.end() ? std::string() : std::to_string(it->second)});
        }
        const auto& id = ids[i];
        run.write(id + ".commits.csv", commits_csv.str());
        run.write(id + ".events.csv", ownership::write_events(events));
        run.write(id + ".metrics.csv", metrics::write_metric_rows(metric_rows));
        run.write(id + ".identities.csv", ingest::write_identities(identities));
        counts[i] = {static_cast<long long>(stream.size()), static_cast<long long>(retained.size()),
                     static_cast<long long>(events.size()), static_cast<long long>(sources[i].stats.binary_files),
                     static_cast<long long>(replay.path_conflicts)};
    });
    Counts total;
    for (const auto& c : counts) {
        total.commits += c.commits;
        total.retained += c.retained;
        total.events += c.events;
        total.binary += c.binary;
        total.conflicts += c.conflicts;
    }
    run.count("projects", static_cast<long long>(ids.size()));
    run.count("commits", total.commits);
    run.count("retained_commits", total.retained);
    run.count("events", total.events);
    run.count("binary_files_skipped", total.binary);
    run.count("path_conflicts", total.conflicts);
    return run.finish();
}

inline StageResult run_window(const PipelineConfig& cfg, const RunOptions& opt) {
    detail::require_upstream(cfg, Stage::mine, Stage::window);
    detail::StageRun run(cfg, Stage::window, opt);
    run.inputs().file("mine/manifest.json", cfg.stage_dir(Stage::mine) / "manifest.json");
    auto ids = detail::sampled_ids(cfg);
    struct ProjectFiles {
        std::string commits, events, metrics;
    };
    std::vector<ProjectFiles> files(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        files[i] = {detail::read_upstream(cfg, Stage::mine, ids[i] + ".commits.csv"),
                    detail::read_upstream(cfg, Stage::mine, ids[i] + ".events.csv"),
                    detail::read_upstream(cfg, Stage::mine, ids[i] + ".metrics.csv")};
        run.inputs().bytes("mine/" + ids[i] + ".commits.csv", files[i].commits);
        run.inputs().bytes("mine/" + ids[i] + ".events.csv", files[i].events);
        run.inputs().bytes("mine/" + ids[i] + ".metrics.csv", files[i].metrics);
    }
    if (run.up_to_date()) return run.skip();

    struct Out {
        std::vector<windows::WindowObservation> obs;
        std::vector<csv::Row> assignments;
        long long total = 0, dropped = 0;
    };
    std::vector<Out> outs(ids.size());
    detail::parallel_for(ids.size(), cfg.jobs, [&](std::size_t i) {
        auto rows = detail::read_commit_rows(files[i].commits);
        if (rows.empty()) throw Error(ErrorKind::empty_history, ids[i] + " has no commits");
        Timestamp first = rows.front().timestamp, last = rows.front().timestamp;
        for (const auto& r : rows) {
            first = std::min(first, r.timestamp);
            last = std::max(last, r.timestamp);
        }
        std::vector<ingest::CommitRecord> retained;
        std::map<std::string, metrics::FileMetricVector> deltas;
        for (const auto& r : rows) {
            if (r.is_merge || !r.retained) continue;
            ingest::CommitRecord c;
            c.hash = r.hash;
            c.author_id = r.author_id;
            c.timestamp = r.timestamp;
            retained.push_back(std::move(c));
            deltas[r.hash] = {};
        }
        for (const auto& m : metrics::read_metric_rows(files[i].metrics))
            if (auto it = deltas.find(m.commit_hash); it != deltas.end()) it->second += m.values;
        auto events = ownership::read_events(files[i].events);
        auto segments = windows::segment_windows(retained, cfg.window, first, last);
        auto& out = outs[i];
        for (const auto& w : segments) {
            std::vector<ingest::CommitRecord> wc;
            for (auto k : w.commits) wc.push_back(retained[k]);
            windows::WindowObservation o;
            o.project_id = ids[i];
            o.window_index = w.index;
            o.start_ts = w.start;
            o.end_ts = w.end;
            auto ts = windows::team_size(wc);
            o.team_size = static_cast<double>(ts);
            o.productivity = windows::aggregate_productivity(wc, deltas, events, ts, cfg.window.divisor());
            ++out.total;
            if (o.productivity.all_zero()) {
                ++out.dropped;
                continue;
            }
            for (const auto& c : wc) out.assignments.push_back({ids[i], std::to_string(w.index), c.hash, c.author_id});
            out.obs.push_back(std::move(o));
        }
    });
    std::vector<windows::WindowObservation> all;
    std::ostringstream assign;
    csv::write_row(assign, {"project_id", "window_index", "commit_hash", "author_id"});
    long long total = 0, dropped = 0;
    for (auto& o : outs) {
        all.insert(all.end(), o.obs.begin(), o.obs.end());
        for (const auto& r : o.assignments) csv::write_row(assign, r);
        total += o.total;
        dropped += o.dropped;
    }
    run.clear();
    run.write("windows.csv", windows::write_observations(all));
    run.write("assignments.csv", assign.str());
    run.count("windows", total);
    run.count("dropped_inactive", dropped);
    run.count("observations", static_cast<long long>(all.size()));
    return run.finish();
}

inline StageResult run_network(const PipelineConfig& cfg, const RunOptions& opt) {
    detail::require_upstream(cfg, Stage::window, Stage::network);
    detail::StageRun run(cfg, Stage::network, opt);
    run.inputs().file("window/manifest.json", cfg.stage_dir(Stage::window) / "manifest.json");
    auto windows_text = detail::read_upstream(cfg, Stage::window, "windows.csv");
    auto assign_text = detail::read_upstream(cfg, Stage::window, "assignments.csv");
    run.inputs().bytes("window/windows.csv", windows_text);
    run.inputs().bytes("window/assignments.csv", assign_text);
    auto obs = windows::read_observations(windows_text);
    std::vector<std::string> ids;
    for (const auto& o : obs)
        if (ids.empty() || ids.back() != o.project_id) ids.push_back(o.project_id);
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    std::map<std::string, std::string> event_files;
    for (const auto& id : ids) {
        event_files[id] = detail::read_upstream(cfg, Stage::mine, id + ".events.csv");
        run.inputs().bytes("mine/" + id + ".events.csv", event_files[id]);
    }
    if (run.up_to_date()) return run.skip();
    run.clear();

    // (project, window) -> commits and team
    std::map<std::pair<std::string, int>, std::set<std::string>> commits_of, team_of;
    {
        csv::Table t(assign_text, "assignments");
        t.require({"project_id", "window_index", "commit_hash", "author_id"});
        for (std::size_t i = 0; i < t.size(); ++i) {
            std::pair key{t.at(i, "project_id"), static_cast<int>(t.integer(i, "window_index"))};
            commits_of[key].insert(t.at(i, "commit_hash"));
            team_of[key].insert(t.at(i, "author_id"));
        }
    }
    std::map<std::string, std::vector<ownership::EditEvent>> events;
    for (const auto& id : ids) events[id] = ownership::read_events(event_files[id]);

    detail::parallel_for(obs.size(), cfg.jobs, [&](std::size_t i) {
        auto& o = obs[i];
        std::pair key{o.project_id, o.window_index};
        const auto& hashes = commits_of[key];
        std::vector<ownership::EditEvent> window_events;
        for (const auto& e : events.at(o.project_id))
            if (hashes.count(e.commit_hash)) window_events.push_back(e);
        auto g = networks::build_coedit_graph(window_events);
        const auto& team = team_of[key];
        g.nodes.insert(team.begin(), team.end());
        o.network = networks::network_metrics(g, team, cfg.eigengap);
        o.network_filled = true;
        run.write("edges/" + o.project_id + "/w" + std::to_string(o.window_index) + ".csv", networks::write_edge_list(g));
    });
    run.write("observations.csv", windows::write_observations(obs));
    run.count("observations", static_cast<long long>(obs.size()));
    return run.finish();
}

inline stats::Frame frame_of(const std::vector<windows::WindowObservation>& obs) {
    stats::Frame f;
    std::vector<std::string> cols{"team_size"};
    for (auto n : windows::productivity_names) cols.emplace_back(n);
    for (auto n : windows::network_names) cols.emplace_back(n);
    for (const auto& c : cols) {
        std::vector<double> v;
        v.reserve(obs.size());
        for (const auto& o : obs) v.push_back(o.value(c));
        f.add(c, std::move(v));
    }
    return f;
}

inline StageResult run_stats(const PipelineConfig& cfg, const RunOptions& opt) {
    detail::require_upstream(cfg, Stage::network, Stage::stats);
    detail::StageRun run(cfg, Stage::stats, opt);
    run.inputs().file("network/manifest.json", cfg.stage_dir(Stage::network) / "manifest.json");
    auto text = detail::read_upstream(cfg, Stage::network, "observations.csv");
    run.inputs().bytes("network/observations.csv", text);
    if (run.up_to_date()) return run.skip();

    auto obs = windows::read_observations(text);
    std::vector<windows::WindowObservation> usable;
    for (const auto& o : obs)
        if (windows::transformable(o, cfg.transforms)) usable.push_back(o);
    auto transformed = windows::apply_transforms(usable, cfg.transforms);
    auto frame = frame_of(transformed);

    std::vector<std::string> features = frame.names();
    auto corr = stats::pearson_matrix(frame, features);
    auto clusters = networks::feature_cluster_select(corr.r, features, cfg.cluster_threshold, {"team_size", "ind", "fmodr"});
    std::ostringstream cl;
    csv::write_row(cl, {"cluster", "feature", "representative"});
    for (std::size_t k = 0; k < clusters.clusters.size(); ++k)
        for (const auto& f : clusters.clusters[k])
            csv::write_row(cl, {std::to_string(k), f, f == clusters.representatives[k] ? "true" : "false"});

    auto results = stats::fit_battery(frame, cfg.targets, cfg.families, cfg.bonferroni_m);
    auto report = nlohmann::ordered_json::array();
    for (const auto& r : results) report.push_back(stats::to_json(r));

    run.clear();
    run.write("observations_transformed.csv", windows::write_observations(transformed));
    run.write("transforms.kv", cfg.transforms.to_sidecar());
    run.write("correlation.csv", stats::write_correlation_csv(corr));
    run.write("correlation_plot.json", stats::write_correlation_plot_data(corr));
    run.write("feature_clusters.csv", cl.str());
    run.write("regressions.json", report.dump(2) + "\n");
    run.count("observations_in", static_cast<long long>(obs.size()));
    run.count("excluded_untransformable", static_cast<long long>(obs.size() - usable.size()));
    run.count("observations_used", static_cast<long long>(usable.size()));
    run.count("models", static_cast<long long>(results.size()));
    return run.finish();
}

inline StageResult run_report(const PipelineConfig& cfg, const RunOptions& opt) {
    detail::require_upstream(cfg, Stage::stats, Stage::report);
    detail::StageRun run(cfg, Stage::report, opt);
    run.inputs().file("stats/manifest.json", cfg.stage_dir(Stage::stats) / "manifest.json");
    auto reg_text = detail::read_upstream(cfg, Stage::stats, "regressions.json");
    auto obs_text = detail::read_upstream(cfg, Stage::stats, "observations_transformed.csv");
    run.inputs().bytes("stats/regressions.json", reg_text);
    run.inputs().bytes("stats/observations_transformed.csv", obs_text);
    if (run.up_to_date()) return run.skip();

    std::vector<stats::RegressionResult> results;
    for (const auto& j : nlohmann::json::parse(reg_text)) results.push_back(stats::result_from_json(j));

    auto levels = cfg.ind_levels;
    if (levels.empty()) {
        auto obs = windows::read_observations(obs_text);
        double mean = 0, sq = 0;
        for (const auto& o : obs) mean += o.network.ind;
        mean /= static_cast<double>(std::max<std::size_t>(1, obs.size()));
        for (const auto& o : obs) sq += (o.network.ind - mean) * (o.network.ind - mean);
        double sd = obs.size() > 1 ? std::sqrt(sq / static_cast<double>(obs.size() - 1)) : 0.0;
        levels = {mean - sd, mean, mean + sd};
    }

    nlohmann::ordered_json derived;
    auto elasticity = nlohmann::ordered_json::object();
    auto vertex = nlohmann::ordered_json::object();
    auto marginal = nlohmann::ordered_json::object();
    for (const auto& r : results) {
        auto key = r.spec.target;
        if (r.spec.family == 'c') elasticity[key] = stats::elasticity_per_doubling(r.term(stats::Term::ts).beta);
        if (r.spec.family == 'b' || r.spec.family == 'd') {
            auto v = stats::quadratic_vertex(r.term(stats::Term::ts).beta, r.term(stats::Term::ts2).beta);
            vertex[std::string(1, r.spec.family) + ":" + key] = v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
        }
        if (r.spec.family == 'e') {
            auto lines = nlohmann::ordered_json::array();
            for (const auto& l : stats::marginal_effects(r, levels))
                lines.push_back({{"log_ind", l.level}, {"intercept", l.intercept}, {"slope", l.slope}});
            marginal[key] = std::move(lines);
        }
    }
    derived["elasticity_per_doubling"] = std::move(elasticity);
    derived["optimal_team_size"] = std::move(vertex);
    derived["marginal_effects"] = std::move(marginal);

    run.clear();
    run.write("table.txt", stats::render_table(results));
    run.write("derived.json", derived.dump(2) + "\n");
    run.count("models", static_cast<long long>(results.size()));
    return run.finish();
}

inline StageResult run_stage(Stage s, const PipelineConfig& cfg, const RunOptions& opt = {}) {
    switch (s) {
        case Stage::filter: return run_filter(cfg, opt);
        case Stage::sample: return run_sample(cfg, opt);
        case Stage::mine: return run_mine(cfg, opt);
        case Stage::window: return run_window(cfg, opt);
        case Stage::network: return run_network(cfg, opt);
        case Stage::stats: return run_stats(cfg, opt);
        case Stage::report: return run_report(cfg, opt);
    }
    throw Error(ErrorKind::internal, "unknown stage");
}

inline std::vector<StageResult> run_all(const PipelineConfig& cfg, const RunOptions& opt = {}) {
    std::vector<StageResult> out;
    for (auto s : all_stages) out.push_back(run_stage(s, cfg, opt));
    return out;
}

}  // namespace teamprod::pipeline
