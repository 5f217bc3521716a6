#pragma once

// Line-ownership replay over a canonical commit stream, edit-event emission
// and per-project outlier trimming.

#include <teamprod/error.hpp>
#include <teamprod/ingest.hpp>
#include <teamprod/levenshtein.hpp>
#include <teamprod/line_diff.hpp>
#include <teamprod/util/csv.hpp>
#include <teamprod/util/text.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace teamprod::ownership {

enum class EditKind { addition, deletion, modification };

inline std::string_view to_string(EditKind k) {
    switch (k) {
        case EditKind::addition: return "addition";
        case EditKind::deletion: return "deletion";
        case EditKind::modification: return "modification";
    }
    return "modification";
}

inline EditKind parse_edit_kind(std::string_view s) {
    if (s == "addition") return EditKind::addition;
    if (s == "deletion") return EditKind::deletion;
    if (s == "modification") return EditKind::modification;
    throw Error(ErrorKind::malformed_input, "unknown edit kind '" + std::string(s) + "'");
}

struct EditEvent {
    std::string commit_hash;
    std::string editor;
    std::string path;
    EditKind kind = EditKind::addition;
    std::optional<std::string> pre_line_text;
    std::optional<std::string> post_line_text;
    std::optional<std::string> previous_owner;
    std::size_t lev_distance = 0;
    bool from_merge = false;

    friend bool operator==(const EditEvent&, const EditEvent&) = default;
};

struct OwnedLine {
    std::string owner;
    std::string text;

    friend bool operator==(const OwnedLine&, const OwnedLine&) = default;
};

using FileLines = std::vector<OwnedLine>;

/// Ownership snapshot after a commit. Files are shared between snapshots and
/// never mutated once published.
struct OwnershipState {
    std::map<std::string, std::shared_ptr<const FileLines>> files;

    std::map<std::string, FileLines> materialize() const {
        std::map<std::string, FileLines> out;
        for (const auto& [path, lines] : files) out.emplace(path, *lines);
        return out;
    }

    std::size_t total_lines() const {
        std::size_t n = 0;
        for (const auto& [path, lines] : files) n += lines->size();
        return n;
    }
};

struct ReplayOptions {
    bool emit_merges = false;
    bool retain_states = true;
    std::size_t max_diff_cells = diff::default_max_cells;
};

struct ReplayResult {
    std::vector<EditEvent> events;  // merge events are included but flagged
    std::map<std::string, OwnershipState> states;
    std::size_t path_conflicts = 0;

    /// Events that downstream aggregation consumes.
    std::vector<EditEvent> aggregated_events(bool emit_merges = false) const {
        std::vector<EditEvent> out;
        for (const auto& e : events)
            if (emit_merges || !e.from_merge) out.push_back(e);
        return out;
    }
};

namespace detail {

inline std::vector<std::string> texts_of(const FileLines& lines) {
    std::vector<std::string> out;
    out.reserve(lines.size());
    for (const auto& l : lines) out.push_back(l.text);
    return out;
}

struct CommitContext {
    const ingest::CommitRecord& commit;
    const ReplayOptions& options;
    std::vector<EditEvent>& events;

    EditEvent make(const std::string& path, EditKind kind) const {
        EditEvent e;
        e.commit_hash = commit.hash;
        e.editor = commit.author_id;
        e.path = path;
        e.kind = kind;
        e.from_merge = commit.is_merge;
        return e;
    }

    /// Diffs `old_lines` against `new_texts`, emitting events and returning the
    /// new owned lines.
    FileLines apply(const std::string& path, const FileLines& old_lines, const std::vector<std::string>& new_texts) const {
        auto hunks = diff::diff_lines(texts_of(old_lines), new_texts, options.max_diff_cells);
        FileLines out;
        out.reserve(new_texts.size());
        std::size_t old_pos = 0;
        for (const auto& h : hunks) {
            while (old_pos < h.pre_start) out.push_back(old_lines[old_pos++]);
            std::vector<const OwnedLine*> removed;
            std::vector<const std::string*> added;
            for (std::size_t k = 0; k < h.removed; ++k) removed.push_back(&old_lines[h.pre_start + k]);
            for (std::size_t k = 0; k < h.added; ++k) added.push_back(&new_texts[h.post_start + k]);
            auto paired = diff::pair_hunk_lines(removed.size(), added.size());
            for (auto [r, a] : paired.modifications) {
                auto e = make(path, EditKind::modification);
                e.pre_line_text = removed[r]->text;
                e.post_line_text = *added[a];
                e.previous_owner = removed[r]->owner;
                e.lev_distance = levenshtein(*e.pre_line_text, *e.post_line_text);
                events.push_back(std::move(e));
            }
            for (auto r : paired.deletions) {
                auto e = make(path, EditKind::deletion);
                e.pre_line_text = removed[r]->text;
                e.previous_owner = removed[r]->owner;
                e.lev_distance = levenshtein(*e.pre_line_text, std::string_view{});
                events.push_back(std::move(e));
            }
            for (auto a : paired.additions) {
                auto e = make(path, EditKind::addition);
                e.post_line_text = *added[a];
                e.lev_distance = levenshtein(std::string_view{}, *e.post_line_text);
                events.push_back(std::move(e));
            }
            for (std::size_t k = 0; k < h.added; ++k) out.push_back({commit.author_id, new_texts[h.post_start + k]});
            old_pos = h.pre_start + h.removed;
        }
        while (old_pos < old_lines.size()) out.push_back(old_lines[old_pos++]);
        return out;
    }
};

}  // namespace detail

/// Replays the stream in order. Each commit starts from its first parent's
/// snapshot (empty for roots) and applies its changes; edits are attributed to
/// the commit's resolved author, previous owners come from the parent
/// snapshot. Renames carry ownership to the new path.
inline ReplayResult replay_ownership(const ingest::CommitStream& stream, const ReplayOptions& options = {}) {
    ReplayResult result;
    std::map<std::string, OwnershipState> live;
    std::map<std::string, std::size_t> remaining_children;
    for (const auto& c : stream)
        if (!c.parents.empty()) ++remaining_children[c.parents.front()];

    for (const auto& commit : stream) {
        if (commit.author_id.empty())
            throw Error(ErrorKind::invalid_argument, "commit " + commit.hash + " has no resolved author_id");
        OwnershipState state;
        if (!commit.parents.empty()) {
            auto it = live.find(commit.parents.front());
            if (it == live.end())
                throw Error(ErrorKind::state_missing,
                            "parent " + commit.parents.front() + " of " + commit.hash + " has not been replayed");
            state = it->second;
            if (--remaining_children[commit.parents.front()] == 0 && !options.retain_states) live.erase(it);
        }

        detail::CommitContext ctx{commit, options, result.events};
        for (const auto& change : commit.changes) {
            using ingest::ChangeAction;
            const auto& path = change.path;
            if (change.is_binary) {
                state.files.erase(path);
                if (change.old_path) state.files.erase(*change.old_path);
                continue;
            }
            FileLines old_lines;
            switch (change.action) {
                case ChangeAction::add:
                    if (auto it = state.files.find(path); it != state.files.end()) {
                        ++result.path_conflicts;
                        old_lines = *it->second;
                    }
                    break;
                case ChangeAction::remove:
                case ChangeAction::modify:
                    if (auto it = state.files.find(path); it != state.files.end()) old_lines = *it->second;
                    break;
                case ChangeAction::rename: {
                    if (auto it = state.files.find(*change.old_path); it != state.files.end()) {
                        old_lines = *it->second;
                        state.files.erase(it);
                    }
                    if (state.files.count(path)) ++result.path_conflicts;
                    break;
                }
            }
            auto new_texts = change.post_text ? text::split_lines(*change.post_text) : std::vector<std::string>{};
            auto new_lines = ctx.apply(path, old_lines, new_texts);
            if (change.action == ChangeAction::remove)
                state.files.erase(path);
            else
                state.files[path] = std::make_shared<const FileLines>(std::move(new_lines));
        }
        live.emplace(commit.hash, state);
        if (options.retain_states) result.states.emplace(commit.hash, std::move(state));
        if (!options.retain_states && remaining_children[commit.hash] == 0) live.erase(commit.hash);
    }
    return result;
}

/// Sum of Levenshtein distances per non-merge commit. Commits without events
/// are present with a zero total.
inline std::map<std::string, long long> commit_totals(const ingest::CommitStream& stream,
                                                      const std::vector<EditEvent>& events) {
    std::map<std::string, long long> totals;
    for (const auto& c : stream)
        if (!c.is_merge) totals[c.hash] = 0;
    for (const auto& e : events) {
        auto it = totals.find(e.commit_hash);
        if (it != totals.end()) it->second += static_cast<long long>(e.lev_distance);
    }
    return totals;
}

struct OutlierConfig {
    double p_low = 2.5;
    double p_high = 97.5;

    void validate() const {
        if (!(0.0 <= p_low && p_low < p_high && p_high <= 100.0))
            throw Error(ErrorKind::invalid_argument, "outlier percentiles must satisfy 0 <= p_low < p_high <= 100");
    }
};

/// Percentile by linear interpolation between closest ranks: 1-based rank
/// x = N * p / 100 + 1/2, clamped to [1, N].
inline double percentile(std::vector<double> sorted, double p) {
    if (sorted.empty()) throw Error(ErrorKind::empty_input, "percentile of an empty sample");
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    double x = std::clamp(n * p / 100.0 + 0.5, 1.0, n);
    auto lo = static_cast<std::size_t>(std::floor(x));
    auto hi = static_cast<std::size_t>(std::ceil(x));
    double frac = x - std::floor(x);
    return sorted[lo - 1] + frac * (sorted[hi - 1] - sorted[lo - 1]);
}

inline std::set<std::string> filter_outlier_commits(const std::map<std::string, long long>& commit_totals,
                                                    const OutlierConfig& cfg = {}) {
    cfg.validate();
    if (commit_totals.empty()) throw Error(ErrorKind::empty_input, "no commit totals to trim");
    std::vector<double> values;
    values.reserve(commit_totals.size());
    for (const auto& [hash, total] : commit_totals) values.push_back(static_cast<double>(total));
    double lo = percentile(values, cfg.p_low);
    double hi = percentile(values, cfg.p_high);
    std::set<std::string> kept;
    for (const auto& [hash, total] : commit_totals) {
        auto v = static_cast<double>(total);
        if (v >= lo && v <= hi) kept.insert(hash);
    }
    return kept;
}

// --- event export -------------------------------------------------------------

inline std::string write_events(const std::vector<EditEvent>& events) {
    std::ostringstream os;
    csv::write_row(os, {"commit_hash", "editor", "path", "kind", "previous_owner", "lev_distance"});
    for (const auto& e : events)
        csv::write_row(os, {e.commit_hash, e.editor, e.path, std::string(to_string(e.kind)),
                            e.previous_owner.value_or(""), std::to_string(e.lev_distance)});
    return os.str();
}

/// Reads the event export back (texts are not part of the export).
inline std::vector<EditEvent> read_events(std::string_view text) {
    csv::Table t(text, "events");
    t.require({"commit_hash", "editor", "path", "kind", "previous_owner", "lev_distance"});
    std::vector<EditEvent> out;
    for (std::size_t i = 0; i < t.size(); ++i) {
        EditEvent e;
        e.commit_hash = t.at(i, "commit_hash");
        e.editor = t.at(i, "editor");
        e.path = t.at(i, "path");
        e.kind = parse_edit_kind(t.at(i, "kind"));
        if (!t.at(i, "previous_owner").empty()) e.previous_owner = t.at(i, "previous_owner");
        e.lev_distance = static_cast<std::size_t>(t.integer(i, "lev_distance"));
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace teamprod::ownership
