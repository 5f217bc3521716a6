#pragma once

// Fixed-length analysis windows, team size, per-window productivity and the
// skew transforms applied before statistics.

#include <teamprod/code_metrics.hpp>
#include <teamprod/error.hpp>
#include <teamprod/ingest.hpp>
#include <teamprod/networks.hpp>
#include <teamprod/ownership.hpp>
#include <teamprod/util/csv.hpp>
#include <teamprod/util/kv.hpp>
#include <teamprod/util/timestamp.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace teamprod::windows {

struct WindowConfig {
    long long window_days = 294;
    bool drop_partial_tail = true;
    long long moving_window_days = 294;
    bool per_day = false;  // divide by the window length in days instead of `scale`
    double scale = 1.0;

    void validate() const {
        if (window_days <= 0 || window_days % 7 != 0)
            throw Error(ErrorKind::invalid_argument, "window_days must be a positive multiple of 7");
        if (moving_window_days <= 0) throw Error(ErrorKind::invalid_argument, "moving_window_days must be positive");
        if (!(scale > 0.0)) throw Error(ErrorKind::invalid_argument, "window scale must be positive");
    }

    double divisor() const { return per_day ? static_cast<double>(window_days) : scale; }

    static WindowConfig from_kv(const kv::Document& doc) {
        WindowConfig c;
        c.window_days = doc.integer_or("days", c.window_days);
        c.drop_partial_tail = doc.boolean_or("drop_partial_tail", c.drop_partial_tail);
        c.moving_window_days = doc.integer_or("moving_days", c.moving_window_days);
        c.per_day = doc.boolean_or("per_day", c.per_day);
        c.scale = doc.number_or("scale", c.scale);
        c.validate();
        return c;
    }
};

struct Window {
    int index = 0;
    Timestamp start{};
    Timestamp end{};
    std::vector<std::size_t> commits;  // indices into the segmented input
};

/// Window j covers [anchor + j*dt, anchor + (j+1)*dt). A window is full when
/// its end does not pass `history_end`; the partial tail is dropped unless
/// configured otherwise. Anchor and end default to the first and last
/// timestamp of `commits`.
inline std::vector<Window> segment_windows(const std::vector<ingest::CommitRecord>& commits, const WindowConfig& cfg,
                                           std::optional<Timestamp> anchor = std::nullopt,
                                           std::optional<Timestamp> history_end = std::nullopt) {
    cfg.validate();
    if (commits.empty() && !(anchor && history_end))
        throw Error(ErrorKind::empty_history, "cannot segment an empty history");
    Timestamp first = anchor ? *anchor : Timestamp::max();
    Timestamp last = history_end ? *history_end : Timestamp::min();
    for (const auto& c : commits) {
        if (!anchor) first = std::min(first, c.timestamp);
        if (!history_end) last = std::max(last, c.timestamp);
    }
    const auto dt = days(cfg.window_days);
    long long full = last < first ? 0 : (last - first) / dt;
    long long count = full;
    if (!cfg.drop_partial_tail && first + full * dt <= last) ++count;

    std::vector<Window> out;
    for (long long j = 0; j < count; ++j) {
        Window w;
        w.index = static_cast<int>(j);
        w.start = first + j * dt;
        w.end = w.start + dt;
        out.push_back(std::move(w));
    }
    for (std::size_t i = 0; i < commits.size(); ++i) {
        auto ts = commits[i].timestamp;
        if (ts < first) continue;
        auto j = (ts - first) / dt;
        if (j < count) out[static_cast<std::size_t>(j)].commits.push_back(i);
    }
    return out;
}

inline long long team_size(const std::vector<ingest::CommitRecord>& window_commits) {
    std::set<std::string> authors;
    for (const auto& c : window_commits) authors.insert(c.author_id);
    return static_cast<long long>(authors.size());
}

/// Distinct authors with a commit in (t - moving_window_days, t].
inline long long moving_team_size(const std::vector<ingest::CommitRecord>& commits, Timestamp t,
                                  const WindowConfig& cfg = {}) {
    const auto from = t - days(cfg.moving_window_days);
    std::set<std::string> authors;
    for (const auto& c : commits)
        if (c.timestamp > from && c.timestamp <= t) authors.insert(c.author_id.empty() ? c.author_email : c.author_id);
    return static_cast<long long>(authors.size());
}

inline constexpr std::array<std::string_view, 8> productivity_names{"comms", "events", "levd",  "nloc",
                                                                    "tokens", "funcs", "cycc", "haleff"};
inline constexpr std::array<std::string_view, 8> network_names{"n",      "edges", "dens", "diam",
                                                               "clustc", "ind",   "fmodr", "eigg"};

struct Productivity {
    double comms = 0, events = 0, levd = 0, nloc = 0, tokens = 0, funcs = 0, cycc = 0, haleff = 0;

    std::array<double*, 8> fields() { return {&comms, &events, &levd, &nloc, &tokens, &funcs, &cycc, &haleff}; }
    std::array<const double*, 8> fields() const {
        return {&comms, &events, &levd, &nloc, &tokens, &funcs, &cycc, &haleff};
    }
    bool all_zero() const {
        auto f = fields();
        return std::all_of(f.begin(), f.end(), [](const double* v) { return *v == 0.0; });
    }

    friend bool operator==(const Productivity&, const Productivity&) = default;
};

/// Raw sums over the window divided by team size and by the window divisor.
/// Every commit needs an entry in `deltas`; events of commits outside the
/// window are ignored.
inline Productivity aggregate_productivity(const std::vector<ingest::CommitRecord>& window_commits,
                                           const std::map<std::string, metrics::FileMetricVector>& deltas,
                                           const std::vector<ownership::EditEvent>& events, long long ts,
                                           double divisor = 1.0) {
    Productivity p;
    std::set<std::string> hashes;
    for (const auto& c : window_commits) {
        auto it = deltas.find(c.hash);
        if (it == deltas.end()) throw Error(ErrorKind::missing_delta, "no code delta for commit " + c.hash);
        hashes.insert(c.hash);
        const auto& d = it->second;
        p.comms += 1;
        p.nloc += static_cast<double>(d.nloc);
        p.tokens += static_cast<double>(d.token_count);
        p.funcs += static_cast<double>(d.function_count);
        p.cycc += static_cast<double>(d.cyclomatic);
        p.haleff += d.halstead.effort;
    }
    for (const auto& e : events) {
        if (!hashes.count(e.commit_hash)) continue;
        p.events += 1;
        p.levd += static_cast<double>(e.lev_distance);
    }
    if (ts > 0)
        for (auto* f : p.fields()) *f /= static_cast<double>(ts) * divisor;
    return p;
}

struct WindowObservation {
    std::string project_id;
    int window_index = 0;
    Timestamp start_ts{};
    Timestamp end_ts{};
    double team_size = 0;  // integer until transformed
    Productivity productivity;
    networks::NetworkMetrics network;
    bool network_filled = false;
    bool transformed = false;

    static bool has_column(std::string_view name) {
        if (name == "team_size") return true;
        for (auto n : productivity_names)
            if (n == name) return true;
        for (auto n : network_names)
            if (n == name) return true;
        return false;
    }

    double value(std::string_view name) const {
        if (name == "team_size") return team_size;
        auto pf = productivity.fields();
        for (std::size_t i = 0; i < productivity_names.size(); ++i)
            if (productivity_names[i] == name) return *pf[i];
        const auto& n = network;
        if (name == "n") return static_cast<double>(n.n);
        if (name == "edges") return static_cast<double>(n.edges);
        if (name == "dens") return n.dens;
        if (name == "diam") return static_cast<double>(n.diam);
        if (name == "clustc") return n.clustc;
        if (name == "ind") return n.ind;
        if (name == "fmodr") return n.fmodr;
        if (name == "eigg") return n.eigg;
        throw Error(ErrorKind::invalid_argument, "unknown observation column '" + std::string(name) + "'");
    }
};

// --- transforms --------------------------------------------------------------------

enum class Transform { identity, log, sqrt };

inline std::string_view to_string(Transform t) {
    switch (t) {
        case Transform::identity: return "identity";
        case Transform::log: return "log";
        case Transform::sqrt: return "sqrt";
    }
    return "identity";
}

inline Transform parse_transform(std::string_view s) {
    if (s == "identity") return Transform::identity;
    if (s == "log") return Transform::log;
    if (s == "sqrt") return Transform::sqrt;
    throw Error(ErrorKind::malformed_input, "unknown transform '" + std::string(s) + "'");
}

/// Column -> transform; columns not listed are left untouched.
struct TransformSpec {
    std::map<std::string, Transform> columns;

    static TransformSpec defaults() {
        TransformSpec s;
        for (auto n : productivity_names) s.columns[std::string(n)] = Transform::log;
        s.columns["team_size"] = Transform::log;
        s.columns["ind"] = Transform::log;
        s.columns["fmodr"] = Transform::identity;
        return s;
    }

    Transform of(const std::string& column) const {
        auto it = columns.find(column);
        return it == columns.end() ? Transform::identity : it->second;
    }

    /// Overrides defaults with `<column> = <transform>` keys.
    static TransformSpec from_kv(const kv::Document& doc) {
        auto s = defaults();
        for (const auto& [k, v] : doc.values()) {
            if (!WindowObservation::has_column(k))
                throw Error(ErrorKind::malformed_input, "transform for unknown column '" + k + "'");
            s.columns[k] = parse_transform(v);
        }
        return s;
    }

    std::string to_sidecar() const {
        kv::Document d;
        for (const auto& [k, t] : columns) d.set("transform." + k, std::string(to_string(t)));
        return d.serialize();
    }
};

inline double apply_transform(Transform t, double v, std::string_view column = "value") {
    switch (t) {
        case Transform::identity: return v;
        case Transform::log:
            if (!(v > 0.0))
                throw Error(ErrorKind::nonpositive_under_log,
                            "log of non-positive " + std::string(column) + " (" + csv::format_number(v) + ")");
            return std::log(v);
        case Transform::sqrt:
            if (v < 0.0) throw Error(ErrorKind::invalid_argument, "sqrt of negative " + std::string(column));
            return std::sqrt(v);
    }
    return v;
}

/// Returns true when every log-transformed column of `o` is positive.
inline bool transformable(const WindowObservation& o, const TransformSpec& spec) {
    for (const auto& [col, t] : spec.columns) {
        double v = o.value(col);
        if (t == Transform::log && !(v > 0.0)) return false;
        if (t == Transform::sqrt && v < 0.0) return false;
    }
    return true;
}

inline std::vector<WindowObservation> apply_transforms(std::vector<WindowObservation> obs, const TransformSpec& spec) {
    for (auto& o : obs) {
        if (o.transformed) throw Error(ErrorKind::invalid_argument, "observation already transformed");
        auto set = [&](const std::string& col, double v) {
            if (col == "team_size") {
                o.team_size = v;
                return;
            }
            auto pf = o.productivity.fields();
            for (std::size_t i = 0; i < productivity_names.size(); ++i)
                if (productivity_names[i] == col) {
                    *pf[i] = v;
                    return;
                }
            auto& n = o.network;
            if (col == "dens") n.dens = v;
            else if (col == "clustc") n.clustc = v;
            else if (col == "ind") n.ind = v;
            else if (col == "fmodr") n.fmodr = v;
            else if (col == "eigg") n.eigg = v;
            else throw Error(ErrorKind::invalid_argument, "column '" + col + "' holds counts and cannot be transformed");
        };
        for (const auto& [col, t] : spec.columns) {
            if (t == Transform::identity) continue;
            set(col, apply_transform(t, o.value(col), col));
        }
        o.transformed = true;
    }
    return obs;
}

/// Drops windows whose eight productivity values are all zero.
inline std::vector<WindowObservation> drop_inactive(std::vector<WindowObservation> obs) {
    obs.erase(std::remove_if(obs.begin(), obs.end(),
                             [](const WindowObservation& o) { return o.productivity.all_zero(); }),
              obs.end());
    return obs;
}

// --- observation table -----------------------------------------------------------

inline std::vector<std::string> observation_header() {
    std::vector<std::string> h{"project_id", "window_index", "start_ts", "end_ts", "team_size"};
    for (auto n : productivity_names) h.emplace_back(n);
    for (auto n : network_names) h.emplace_back(n);
    return h;
}

inline std::string write_observations(const std::vector<WindowObservation>& obs) {
    std::ostringstream os;
    csv::write_row(os, observation_header());
    for (const auto& o : obs) {
        std::vector<std::string> row{o.project_id, std::to_string(o.window_index), format_timestamp(o.start_ts),
                                     format_timestamp(o.end_ts), csv::format_number(o.team_size)};
        for (auto n : productivity_names) row.push_back(csv::format_number(o.value(n)));
        for (auto n : network_names)
            row.push_back(o.network_filled || o.transformed ? csv::format_number(o.value(n)) : std::string());
        csv::write_row(os, row);
    }
    return os.str();
}

inline std::vector<WindowObservation> read_observations(std::string_view text) {
    csv::Table t(text, "observations");
    t.require({"project_id", "window_index", "start_ts", "end_ts", "team_size"});
    std::vector<WindowObservation> out;
    for (std::size_t i = 0; i < t.size(); ++i) {
        WindowObservation o;
        o.project_id = t.at(i, "project_id");
        o.window_index = static_cast<int>(t.integer(i, "window_index"));
        o.start_ts = parse_timestamp(t.at(i, "start_ts"));
        o.end_ts = parse_timestamp(t.at(i, "end_ts"));
        o.team_size = t.number(i, "team_size");
        auto pf = o.productivity.fields();
        for (std::size_t k = 0; k < productivity_names.size(); ++k)
            *pf[k] = t.has(std::string(productivity_names[k])) ? t.number(i, std::string(productivity_names[k])) : 0.0;
        if (t.has("n") && !t.at(i, "n").empty()) {
            auto& n = o.network;
            n.n = static_cast<long long>(t.number(i, "n"));
            n.edges = static_cast<long long>(t.number(i, "edges"));
            n.dens = t.number(i, "dens");
            n.diam = static_cast<long long>(t.number(i, "diam"));
            n.clustc = t.number(i, "clustc");
            n.ind = t.number(i, "ind");
            n.fmodr = t.number(i, "fmodr");
            n.eigg = t.number(i, "eigg");
            o.network_filled = true;
        }
        out.push_back(std::move(o));
    }
    return out;
}

}  // namespace teamprod::windows
