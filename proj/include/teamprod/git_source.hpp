#pragma once

// Extraction of the canonical commit stream from an on-disk git repository by
// driving the `git` command-line tool. Produces exactly what reading the
// repository's exported dump would produce.

#include <teamprod/ingest.hpp>

#include <array>
#include <cstdio>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace teamprod::ingest {

namespace git_detail {

inline std::string shell_quote(std::string_view s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'')
            out += "'\\''";
        else
            out += c;
    }
    out += "'";
    return out;
}

struct CommandResult {
    int status = -1;
    std::string output;
};

inline CommandResult run(const std::string& command) {
    CommandResult r;
    FILE* pipe = ::popen((command + " 2>/dev/null").c_str(), "r");
    if (!pipe) return r;
    std::array<char, 1 << 15> buf;
    std::size_t n;
    while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.output.append(buf.data(), n);
    r.status = ::pclose(pipe);
    return r;
}

inline std::vector<std::string> split_on(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        auto pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            if (start < s.size()) out.emplace_back(s.substr(start));
            break;
        }
        out.emplace_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

struct RawEntry {
    std::string old_mode, new_mode, old_blob, new_blob;
    char status = 'M';
    std::string path, old_path;
};

/// Parses `git diff-tree -r -z --raw` output.
inline std::vector<RawEntry> parse_raw(std::string_view out) {
    auto fields = split_on(out, '\0');
    std::vector<RawEntry> entries;
    for (std::size_t i = 0; i < fields.size();) {
        const auto& meta = fields[i];
        if (meta.empty() || meta[0] != ':') {
            ++i;
            continue;
        }
        auto parts = split_on(std::string_view(meta).substr(1), ' ');
        if (parts.size() < 5) throw Error(ErrorKind::malformed_input, "unexpected diff-tree line: " + meta);
        RawEntry e;
        e.old_mode = parts[0];
        e.new_mode = parts[1];
        e.old_blob = parts[2];
        e.new_blob = parts[3];
        e.status = parts[4].empty() ? 'M' : parts[4][0];
        if (e.status == 'R' || e.status == 'C') {
            if (i + 2 >= fields.size()) throw Error(ErrorKind::malformed_input, "truncated diff-tree output");
            e.old_path = fields[i + 1];
            e.path = fields[i + 2];
            i += 3;
        } else {
            if (i + 1 >= fields.size()) throw Error(ErrorKind::malformed_input, "truncated diff-tree output");
            e.path = fields[i + 1];
            i += 2;
        }
        entries.push_back(std::move(e));
    }
    return entries;
}

}  // namespace git_detail

class GitRepository {
public:
    explicit GitRepository(std::filesystem::path root) : root_(std::move(root)) {
        auto r = git("rev-parse --verify HEAD");
        if (r.status != 0)
            throw Error(ErrorKind::unreadable_source, "not a readable git repository: " + root_.string());
    }

    /// First-parent diffs of every commit reachable from HEAD, canonical order.
    CommitStream extract(ExtractionStats* stats = nullptr) const {
        auto log = git("log --format=%H%x1f%P%x1f%an%x1f%ae%x1f%at%x1e HEAD");
        if (log.status != 0) throw Error(ErrorKind::unreadable_source, "git log failed in " + root_.string());
        CommitStream commits;
        ExtractionStats local;
        for (auto& rec : git_detail::split_on(log.output, '\x1e')) {
            auto start = rec.find_first_not_of("\n");
            if (start == std::string::npos) continue;
            auto f = git_detail::split_on(std::string_view(rec).substr(start), '\x1f');
            while (f.size() < 5) f.emplace_back();
            CommitRecord c;
            c.hash = f[0];
            for (auto& p : git_detail::split_on(f[1], ' '))
                if (!p.empty()) c.parents.push_back(p);
            c.author_name = f[2];
            c.author_email = f[3];
            c.timestamp = from_unix(std::stoll(f[4]));
            c.is_merge = c.parents.size() >= 2;
            c.changes = diff(c, local);
            commits.push_back(std::move(c));
        }
        local.commits = commits.size();
        if (stats) *stats = local;
        canonicalize_changes(commits);
        return topological_order(std::move(commits));
    }

private:
    git_detail::CommandResult git(const std::string& args) const {
        return git_detail::run("git -C " + git_detail::shell_quote(root_.string()) +
                               " -c core.quotepath=off " + args);
    }

    std::optional<std::string> blob(const std::string& id, bool& binary) const {
        auto r = git("cat-file blob " + id);
        if (r.status != 0) throw Error(ErrorKind::unreadable_source, "cannot read blob " + id);
        if (!text::looks_textual(r.output)) {
            binary = true;
            return std::nullopt;
        }
        return std::move(r.output);
    }

    std::vector<FileChange> diff(const CommitRecord& c, ExtractionStats& stats) const {
        std::string cmd = c.parents.empty() ? "diff-tree -r -z -M --raw --no-abbrev --root --no-commit-id " + c.hash
                                            : "diff-tree -r -z -M --raw --no-abbrev " + c.parents.front() + " " + c.hash;
        auto r = git(cmd);
        if (r.status != 0) throw Error(ErrorKind::unreadable_source, "git diff-tree failed for " + c.hash);
        std::vector<FileChange> changes;
        for (const auto& e : git_detail::parse_raw(r.output)) {
            // gitlinks (submodules) carry no file content
            if (e.old_mode == "160000" || e.new_mode == "160000") continue;
            FileChange ch;
            ch.path = e.path;
            bool binary = false;
            switch (e.status) {
                case 'A':
                case 'C':
                    ch.action = ChangeAction::add;
                    ch.post_text = blob(e.new_blob, binary);
                    break;
                case 'D':
                    ch.action = ChangeAction::remove;
                    ch.pre_text = blob(e.old_blob, binary);
                    break;
                case 'R':
                    ch.action = ChangeAction::rename;
                    ch.old_path = e.old_path;
                    ch.pre_text = blob(e.old_blob, binary);
                    ch.post_text = blob(e.new_blob, binary);
                    break;
                default:
                    ch.action = ChangeAction::modify;
                    ch.pre_text = blob(e.old_blob, binary);
                    ch.post_text = blob(e.new_blob, binary);
                    break;
            }
            if (binary) {
                ++stats.binary_files;
                ch.is_binary = true;
                ch.pre_text.reset();
                ch.post_text.reset();
            }
            changes.push_back(std::move(ch));
        }
        return changes;
    }

    std::filesystem::path root_;
};

/// Reads either a `.commits.jsonl` dump or a git working tree.
inline CommitStream extract_commit_stream(const std::filesystem::path& source, ExtractionStats* stats = nullptr) {
    namespace stdfs = std::filesystem;
    std::error_code ec;
    if (stdfs::is_regular_file(source, ec)) return read_dump_file(source, stats);
    if (stdfs::is_directory(source, ec)) return GitRepository(source).extract(stats);
    throw Error(ErrorKind::unreadable_source, "no such dump or repository: " + source.string());
}

}  // namespace teamprod::ingest
