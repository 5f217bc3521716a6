#pragma once

// Canonical commit stream: domain types, the `.commits.jsonl` dump format and
// deterministic topological ordering.

#include <teamprod/error.hpp>
#include <teamprod/util/fs.hpp>
#include <teamprod/util/text.hpp>
#include <teamprod/util/timestamp.hpp>

#include <json.hpp>

#include <algorithm>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace teamprod::ingest {

enum class ChangeAction { add, remove, modify, rename };

inline std::string_view to_string(ChangeAction a) {
    switch (a) {
        case ChangeAction::add: return "add";
        case ChangeAction::remove: return "delete";
        case ChangeAction::modify: return "modify";
        case ChangeAction::rename: return "rename";
    }
    return "modify";
}

inline ChangeAction parse_action(std::string_view s) {
    if (s == "add") return ChangeAction::add;
    if (s == "delete") return ChangeAction::remove;
    if (s == "modify") return ChangeAction::modify;
    if (s == "rename") return ChangeAction::rename;
    throw Error(ErrorKind::malformed_input, "unknown change action '" + std::string(s) + "'");
}

struct FileChange {
    std::string path;
    std::optional<std::string> old_path;
    ChangeAction action = ChangeAction::modify;
    std::optional<std::string> pre_text;
    std::optional<std::string> post_text;
    bool is_binary = false;

    friend bool operator==(const FileChange&, const FileChange&) = default;
};

struct CommitRecord {
    std::string hash;
    std::vector<std::string> parents;
    std::string author_name;
    std::string author_email;
    std::string author_id;  // empty until identities are resolved
    Timestamp timestamp{};
    bool is_merge = false;
    std::vector<FileChange> changes;

    friend bool operator==(const CommitRecord&, const CommitRecord&) = default;
};

using CommitStream = std::vector<CommitRecord>;

struct ExtractionStats {
    std::size_t commits = 0;
    std::size_t binary_files = 0;  // binary or undecodable file versions skipped
};

inline void validate(const FileChange& c, std::string_view commit) {
    auto fail = [&](const char* why) {
        return Error(ErrorKind::malformed_input, std::string(commit) + ":" + c.path + ": " + why);
    };
    if (c.path.empty()) throw fail("empty path");
    if (c.action == ChangeAction::add && c.pre_text) throw fail("added file carries pre_text");
    if (c.action == ChangeAction::remove && c.post_text) throw fail("deleted file carries post_text");
    if (c.action == ChangeAction::rename && !c.old_path) throw fail("rename without old_path");
    if (c.is_binary && (c.pre_text || c.post_text)) throw fail("binary file carries text");
}

inline void validate(const CommitRecord& c) {
    if (c.hash.empty()) throw Error(ErrorKind::malformed_input, "commit with empty hash");
    if (c.is_merge != (c.parents.size() >= 2))
        throw Error(ErrorKind::malformed_input, c.hash + ": is_merge disagrees with parent count");
    for (const auto& ch : c.changes) validate(ch, c.hash);
}

/// Orders commits parents-first; among commits whose parents are all placed,
/// the one with the smallest (timestamp, hash) goes next. Parents absent from
/// the stream are ignored for ordering.
inline CommitStream topological_order(CommitStream commits) {
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < commits.size(); ++i) {
        if (!index.emplace(commits[i].hash, i).second)
            throw Error(ErrorKind::malformed_input, "duplicate commit hash " + commits[i].hash);
    }
    std::vector<std::vector<std::size_t>> children(commits.size());
    std::vector<std::size_t> pending(commits.size(), 0);
    for (std::size_t i = 0; i < commits.size(); ++i) {
        std::set<std::string> seen;
        for (const auto& p : commits[i].parents) {
            auto it = index.find(p);
            if (it == index.end() || !seen.insert(p).second) continue;
            children[it->second].push_back(i);
            ++pending[i];
        }
    }
    using Key = std::tuple<Timestamp, std::string, std::size_t>;
    std::priority_queue<Key, std::vector<Key>, std::greater<>> ready;
    for (std::size_t i = 0; i < commits.size(); ++i)
        if (pending[i] == 0) ready.emplace(commits[i].timestamp, commits[i].hash, i);
    CommitStream out;
    out.reserve(commits.size());
    std::vector<bool> placed(commits.size(), false);
    while (!ready.empty()) {
        auto [ts, hash, i] = ready.top();
        ready.pop();
        placed[i] = true;
        for (auto c : children[i])
            if (--pending[c] == 0) ready.emplace(commits[c].timestamp, commits[c].hash, c);
        out.push_back(std::move(commits[i]));
    }
    if (out.size() != commits.size()) throw Error(ErrorKind::cyclic_history, "commit graph contains a cycle");
    return out;
}

/// Sorts each commit's changes by path so that equal histories serialize
/// identically regardless of how the source listed them.
inline void canonicalize_changes(CommitStream& stream) {
    for (auto& c : stream)
        std::stable_sort(c.changes.begin(), c.changes.end(),
                         [](const FileChange& a, const FileChange& b) { return a.path < b.path; });
}

// --- dump format ------------------------------------------------------------

namespace detail {

using ojson = nlohmann::ordered_json;

inline ojson optional_string(const std::optional<std::string>& v) {
    return v ? ojson(*v) : ojson(nullptr);
}

inline std::optional<std::string> read_optional(const nlohmann::json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<std::string>();
}

}  // namespace detail

inline std::string commit_to_json_line(const CommitRecord& c) {
    detail::ojson j;
    j["hash"] = c.hash;
    j["parents"] = c.parents;
    j["author_name"] = c.author_name;
    j["author_email"] = c.author_email;
    j["author_id"] = c.author_id.empty() ? detail::ojson(nullptr) : detail::ojson(c.author_id);
    j["timestamp"] = format_timestamp(c.timestamp);
    j["is_merge"] = c.is_merge;
    auto changes = detail::ojson::array();
    for (const auto& ch : c.changes) {
        detail::ojson cj;
        cj["path"] = ch.path;
        cj["old_path"] = detail::optional_string(ch.old_path);
        cj["action"] = std::string(to_string(ch.action));
        cj["pre_text"] = detail::optional_string(ch.pre_text);
        cj["post_text"] = detail::optional_string(ch.post_text);
        cj["is_binary"] = ch.is_binary;
        changes.push_back(std::move(cj));
    }
    j["changes"] = std::move(changes);
    return j.dump();
}

inline CommitRecord commit_from_json_line(std::string_view line) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
        CommitRecord c;
        c.hash = j.at("hash").get<std::string>();
        c.parents = j.at("parents").get<std::vector<std::string>>();
        c.author_name = j.at("author_name").get<std::string>();
        c.author_email = j.at("author_email").get<std::string>();
        c.author_id = detail::read_optional(j, "author_id").value_or("");
        c.timestamp = parse_timestamp(j.at("timestamp").get<std::string>());
        c.is_merge = j.value("is_merge", c.parents.size() >= 2);
        for (const auto& cj : j.at("changes")) {
            FileChange ch;
            ch.path = cj.at("path").get<std::string>();
            ch.old_path = detail::read_optional(cj, "old_path");
            ch.action = parse_action(cj.at("action").get<std::string>());
            ch.pre_text = detail::read_optional(cj, "pre_text");
            ch.post_text = detail::read_optional(cj, "post_text");
            ch.is_binary = cj.value("is_binary", false);
            c.changes.push_back(std::move(ch));
        }
        validate(c);
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::malformed_input, std::string("commit dump: ") + e.what());
    }
}

inline std::string write_dump(const CommitStream& stream) {
    std::string out;
    for (const auto& c : stream) {
        out += commit_to_json_line(c);
        out += '\n';
    }
    return out;
}

/// Parses a dump and returns it in canonical order.
inline CommitStream read_dump(std::string_view text, ExtractionStats* stats = nullptr) {
    CommitStream commits;
    std::size_t start = 0;
    while (start < text.size()) {
        auto nl = text.find('\n', start);
        auto line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
        if (!line.empty() && line.find_first_not_of(" \t\r") != std::string_view::npos)
            commits.push_back(commit_from_json_line(line));
        if (nl == std::string_view::npos) break;
        start = nl + 1;
    }
    if (stats) {
        stats->commits = commits.size();
        for (const auto& c : commits)
            for (const auto& ch : c.changes) stats->binary_files += ch.is_binary ? 1 : 0;
    }
    canonicalize_changes(commits);
    return topological_order(std::move(commits));
}

inline CommitStream read_dump_file(const std::filesystem::path& path, ExtractionStats* stats = nullptr) {
    return read_dump(fs::read_file(path), stats);
}

}  // namespace teamprod::ingest
