#pragma once

// Synthetic histories with planted ground truth, the Simpson's-paradox
// observation table, and the mini-corpus shipped under data/.

#include <teamprod/catalog.hpp>
#include <teamprod/error.hpp>
#include <teamprod/ingest.hpp>
#include <teamprod/stats.hpp>
#include <teamprod/util/csv.hpp>
#include <teamprod/util/fs.hpp>
#include <teamprod/util/hash.hpp>
#include <teamprod/util/kv.hpp>
#include <teamprod/util/rng.hpp>
#include <teamprod/util/timestamp.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace teamprod::synthkit {

// --- synthetic repositories --------------------------------------------------------

/// Developer k is "Dev k" <devk@example.org>; the team in window w is
/// developers 0 .. trajectory[w]-1. Each member commits `commits_per_dev`
/// times per window. A commit appends one function to some file and edits up
/// to `edits_per_commit` existing body lines (the interaction knob); with
/// probability `foreign_edit_prob` an edit targets a line owned by someone
/// else. One extra line may be deleted with probability `delete_prob`.
struct SyntheticPlan {
    std::uint64_t seed = 1;
    std::string project_id = "synthetic";
    Timestamp start = parse_timestamp("2019-01-07T09:00:00Z");
    long long window_days = 294;
    std::vector<int> team_trajectory{3, 4, 5};
    int commits_per_dev = 4;
    int edits_per_commit = 2;
    double foreign_edit_prob = 0.5;
    double delete_prob = 0.2;
    int file_count = 3;
    int min_body_lines = 1;
    int max_body_lines = 3;
    double alias_prob = 0.0;  // commit authored under a case-variant spelling
    bool closing_commit = true;  // lands at the end of the last window so it counts as full

    void validate() const {
        auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
        if (team_trajectory.empty()) throw Error(ErrorKind::infeasible_plan, "empty team trajectory");
        for (int s : team_trajectory)
            if (s < 1) throw Error(ErrorKind::infeasible_plan, "team sizes must be >= 1");
        if (!prob(foreign_edit_prob) || !prob(delete_prob) || !prob(alias_prob))
            throw Error(ErrorKind::infeasible_plan, "probabilities must lie in [0, 1]");
        if (commits_per_dev < 1 || edits_per_commit < 0 || file_count < 1 || min_body_lines < 1 ||
            max_body_lines < min_body_lines)
            throw Error(ErrorKind::infeasible_plan, "commit, edit, file and line counts out of range");
        if (window_days <= 0 || window_days % 7 != 0)
            throw Error(ErrorKind::infeasible_plan, "window_days must be a positive multiple of 7");
        bool any_pair = std::any_of(team_trajectory.begin(), team_trajectory.end(), [](int s) { return s >= 2; });
        if (foreign_edit_prob > 0.0 && !any_pair)
            throw Error(ErrorKind::infeasible_plan, "foreign edits need a team of at least two");
    }

    static SyntheticPlan from_kv(const kv::Document& d) {
        SyntheticPlan p;
        p.seed = static_cast<std::uint64_t>(d.integer_or("seed", static_cast<long long>(p.seed)));
        p.project_id = d.get_or("project_id", p.project_id);
        if (auto v = d.get("start")) p.start = parse_timestamp(*v);
        p.window_days = d.integer_or("window_days", p.window_days);
        if (auto v = d.get("team_trajectory")) {
            p.team_trajectory.clear();
            for (const auto& s : kv::split(*v, ','))
                if (!s.empty()) p.team_trajectory.push_back(std::stoi(s));
        }
        p.commits_per_dev = static_cast<int>(d.integer_or("commits_per_dev", p.commits_per_dev));
        p.edits_per_commit = static_cast<int>(d.integer_or("edits_per_commit", p.edits_per_commit));
        p.foreign_edit_prob = d.number_or("foreign_edit_prob", p.foreign_edit_prob);
        p.delete_prob = d.number_or("delete_prob", p.delete_prob);
        p.file_count = static_cast<int>(d.integer_or("file_count", p.file_count));
        p.min_body_lines = static_cast<int>(d.integer_or("min_body_lines", p.min_body_lines));
        p.max_body_lines = static_cast<int>(d.integer_or("max_body_lines", p.max_body_lines));
        p.alias_prob = d.number_or("alias_prob", p.alias_prob);
        p.closing_commit = d.boolean_or("closing_commit", p.closing_commit);
        p.validate();
        return p;
    }
};

struct WindowTruth {
    int index = 0;
    std::vector<std::string> members;  // canonical ids
    long long nodes = 0;
    long long edge_count = 0;
    std::map<std::pair<std::string, std::string>, long long> edges;
    long long additions = 0, modifications = 0, deletions = 0;
    double fmodr = 0.0;  // mean over members
    double ind = 0.0;    // mean distinct predecessors (self included) over nodes
};

struct SyntheticTruth {
    std::string project_id;
    std::uint64_t seed = 0;
    std::size_t commits = 0;
    std::vector<WindowTruth> windows;

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["project_id"] = project_id;
        j["seed"] = seed;
        j["commits"] = commits;
        auto ws = nlohmann::ordered_json::array();
        for (const auto& w : windows) {
            nlohmann::ordered_json jw;
            jw["index"] = w.index;
            jw["team_size"] = w.members.size();
            jw["members"] = w.members;
            jw["nodes"] = w.nodes;
            jw["edge_count"] = w.edge_count;
            auto es = nlohmann::ordered_json::array();
            for (const auto& [e, m] : w.edges) es.push_back({e.first, e.second, m});
            jw["edges"] = std::move(es);
            jw["additions"] = w.additions;
            jw["modifications"] = w.modifications;
            jw["deletions"] = w.deletions;
            jw["fmodr"] = w.fmodr;
            jw["ind"] = w.ind;
            ws.push_back(std::move(jw));
        }
        j["windows"] = std::move(ws);
        return j;
    }

    static SyntheticTruth from_json(const nlohmann::json& j) {
        SyntheticTruth t;
        t.project_id = j.at("project_id").get<std::string>();
        t.seed = j.at("seed").get<std::uint64_t>();
        t.commits = j.at("commits").get<std::size_t>();
        for (const auto& jw : j.at("windows")) {
            WindowTruth w;
            w.index = jw.at("index").get<int>();
            w.members = jw.at("members").get<std::vector<std::string>>();
            w.nodes = jw.at("nodes").get<long long>();
            w.edge_count = jw.at("edge_count").get<long long>();
            for (const auto& e : jw.at("edges"))
                w.edges[{e.at(0).get<std::string>(), e.at(1).get<std::string>()}] = e.at(2).get<long long>();
            w.additions = jw.at("additions").get<long long>();
            w.modifications = jw.at("modifications").get<long long>();
            w.deletions = jw.at("deletions").get<long long>();
            w.fmodr = jw.at("fmodr").get<double>();
            w.ind = jw.at("ind").get<double>();
            t.windows.push_back(std::move(w));
        }
        return t;
    }
};

struct SyntheticRepo {
    ingest::CommitStream commits;  // canonical order, author_id left unresolved
    SyntheticTruth truth;
};

namespace gen_detail {

struct GenLine {
    std::string text;
    int owner = 0;
    bool body = false;  // only body lines are edited
};

inline std::string commit_hash(const std::string& project, std::size_t seq) {
    std::string h;
    for (int salt = 0; h.size() < 40; ++salt)
        h += Fnv1a{}.update(project).update("\x1f").update(std::to_string(seq)).update("\x1f").update(std::to_string(salt)).hex();
    return h.substr(0, 40);
}

inline std::string canonical_id(int dev) { return "dev" + std::to_string(dev) + "@example.org"; }

inline std::string join(const std::vector<GenLine>& lines) {
    std::string out;
    for (const auto& l : lines) out += l.text + "\n";
    return out;
}

}  // namespace gen_detail

/// Builds the history line by line, recording every co-edit it plants. Edited
/// lines are never adjacent to each other nor the last line of a file, and
/// appended code goes after the last line, so any line diff recovers exactly
/// the planted edits.
inline SyntheticRepo gen_synthetic_repo(const SyntheticPlan& plan) {
    plan.validate();
    using gen_detail::GenLine;
    Rng rng(plan.seed);
    const auto dt = days(plan.window_days);
    std::vector<std::vector<GenLine>> files(static_cast<std::size_t>(plan.file_count));
    auto file_name = [](std::size_t f) { return "src/module_" + std::to_string(f) + ".py"; };
    long long uid = 0;
    auto body_line = [&](long long id) {
        return "    v_" + std::to_string(id) + " = " + std::to_string(id % 97) + " + a";
    };

    SyntheticRepo repo;
    repo.truth.project_id = plan.project_id;
    repo.truth.seed = plan.seed;
    std::string parent;

    auto make_commit = [&](int dev, Timestamp ts, std::vector<ingest::FileChange> changes) {
        ingest::CommitRecord c;
        c.hash = gen_detail::commit_hash(plan.project_id, repo.commits.size());
        if (!parent.empty()) c.parents.push_back(parent);
        bool alias = plan.alias_prob > 0.0 && rng.bernoulli(plan.alias_prob);
        c.author_name = (alias ? "dev " : "Dev ") + std::to_string(dev);
        c.author_email = alias ? "Dev" + std::to_string(dev) + "@Example.ORG" : gen_detail::canonical_id(dev);
        c.timestamp = ts;
        c.changes = std::move(changes);
        std::sort(c.changes.begin(), c.changes.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
        parent = c.hash;
        repo.commits.push_back(std::move(c));
    };

    // initial commit by developer 0 at the anchor
    {
        std::vector<ingest::FileChange> changes;
        for (std::size_t f = 0; f < files.size(); ++f) {
            files[f].push_back({"def init_" + std::to_string(f) + "(a):", 0, false});
            for (int k = 0; k < 3; ++k) files[f].push_back({body_line(++uid), 0, true});
            files[f].push_back({"    return a", 0, false});
            ingest::FileChange ch;
            ch.path = file_name(f);
            ch.action = ingest::ChangeAction::add;
            ch.post_text = gen_detail::join(files[f]);
            changes.push_back(std::move(ch));
        }
        make_commit(0, plan.start, std::move(changes));
    }

    for (std::size_t w = 0; w < plan.team_trajectory.size(); ++w) {
        const int size = plan.team_trajectory[w];
        WindowTruth truth;
        truth.index = static_cast<int>(w);
        const Timestamp wstart = plan.start + static_cast<long long>(w) * dt;
        std::set<int> members;
        if (w == 0) {
            members.insert(0);
            truth.additions += static_cast<long long>(plan.file_count) * 5;
        }

        std::vector<std::pair<long long, int>> slots;  // (offset seconds, developer)
        const long long span = std::chrono::duration_cast<std::chrono::seconds>(dt).count() - 2 * 86400;
        for (int dev = 0; dev < size; ++dev)
            for (int k = 0; k < plan.commits_per_dev; ++k)
                slots.emplace_back(86400 + static_cast<long long>(rng.below(static_cast<std::uint64_t>(span))), dev);
        std::sort(slots.begin(), slots.end());
        for (std::size_t k = 1; k < slots.size(); ++k)
            if (slots[k].first <= slots[k - 1].first) slots[k].first = slots[k - 1].first + 1;

        for (const auto& [offset, dev] : slots) {
            members.insert(dev);
            std::vector<std::set<std::size_t>> touched(files.size());  // chosen line indices per file
            std::vector<std::vector<std::pair<std::size_t, bool>>> plan_edits(files.size());  // (line, is_delete)

            auto eligible = [&](bool foreign) {
                std::vector<std::pair<std::size_t, std::size_t>> out;
                for (std::size_t f = 0; f < files.size(); ++f)
                    for (std::size_t i = 0; i + 1 < files[f].size(); ++i) {
                        const auto& l = files[f][i];
                        if (!l.body || (l.owner != dev) != foreign) continue;
                        if (touched[f].count(i) || (i > 0 && touched[f].count(i - 1)) || touched[f].count(i + 1)) continue;
                        out.emplace_back(f, i);
                    }
                return out;
            };
            auto pick = [&](bool is_delete) {
                bool foreign = rng.bernoulli(plan.foreign_edit_prob);
                auto pool = eligible(foreign);
                if (pool.empty()) return;
                auto [f, i] = pool[static_cast<std::size_t>(rng.below(pool.size()))];
                touched[f].insert(i);
                plan_edits[f].emplace_back(i, is_delete);
            };
            for (int e = 0; e < plan.edits_per_commit; ++e) pick(false);
            if (plan.delete_prob > 0.0 && rng.bernoulli(plan.delete_prob)) pick(true);

            auto target = static_cast<std::size_t>(rng.below(files.size()));
            int body = static_cast<int>(rng.between(plan.min_body_lines, plan.max_body_lines));

            std::vector<ingest::FileChange> changes;
            const std::string editor = gen_detail::canonical_id(dev);
            for (std::size_t f = 0; f < files.size(); ++f) {
                if (plan_edits[f].empty() && f != target) continue;
                ingest::FileChange ch;
                ch.path = file_name(f);
                ch.action = ingest::ChangeAction::modify;
                ch.pre_text = gen_detail::join(files[f]);
                std::sort(plan_edits[f].begin(), plan_edits[f].end());
                for (auto it = plan_edits[f].rbegin(); it != plan_edits[f].rend(); ++it) {
                    auto [i, del] = *it;
                    const std::string owner = gen_detail::canonical_id(files[f][i].owner);
                    truth.edges[{owner, editor}] += 1;
                    if (del) {
                        ++truth.deletions;
                        files[f].erase(files[f].begin() + static_cast<std::ptrdiff_t>(i));
                    } else {
                        ++truth.modifications;
                        files[f][i] = {body_line(++uid), dev, true};
                    }
                }
                if (f == target) {
                    long long id = ++uid;
                    files[f].push_back({"def f_" + std::to_string(id) + "(a):", dev, false});
                    for (int b = 0; b < body; ++b) files[f].push_back({body_line(++uid), dev, true});
                    files[f].push_back({"    return a + " + std::to_string(id), dev, false});
                    truth.additions += body + 2;
                }
                ch.post_text = gen_detail::join(files[f]);
                changes.push_back(std::move(ch));
            }
            make_commit(dev, wstart + std::chrono::seconds(offset), std::move(changes));
        }

        std::set<std::string> ids;
        for (int m : members) ids.insert(gen_detail::canonical_id(m));
        truth.members.assign(ids.begin(), ids.end());
        std::set<std::string> nodes = ids;
        std::map<std::string, std::set<std::string>> preds;
        std::map<std::string, std::pair<long long, long long>> in;  // foreign, all
        for (const auto& [e, m] : truth.edges) {
            nodes.insert(e.first);
            truth.edge_count += m;
            preds[e.second].insert(e.first);
            in[e.second].second += m;
            if (e.first != e.second) in[e.second].first += m;
        }
        truth.nodes = static_cast<long long>(nodes.size());
        double pred_sum = 0.0;
        for (const auto& [n, p] : preds) pred_sum += static_cast<double>(p.size());
        truth.ind = pred_sum / static_cast<double>(nodes.size());
        double fm = 0.0;
        for (const auto& id : ids)
            if (auto it = in.find(id); it != in.end() && it->second.second > 0)
                fm += static_cast<double>(it->second.first) / static_cast<double>(it->second.second);
        truth.fmodr = fm / static_cast<double>(ids.size());
        repo.truth.windows.push_back(std::move(truth));
    }

    if (plan.closing_commit) {
        auto& f = files[0];
        ingest::FileChange ch;
        ch.path = file_name(0);
        ch.action = ingest::ChangeAction::modify;
        ch.pre_text = gen_detail::join(f);
        long long id = ++uid;
        f.push_back({"def close_" + std::to_string(id) + "(a):", 0, false});
        f.push_back({"    return a", 0, false});
        ch.post_text = gen_detail::join(f);
        make_commit(0, plan.start + static_cast<long long>(plan.team_trajectory.size()) * dt, {std::move(ch)});
    }
    repo.truth.commits = repo.commits.size();
    return repo;
}

/// Writes `<project>.commits.jsonl` and `<project>.truth.json` into `dir`.
inline void write_synthetic_repo(const SyntheticRepo& repo, const std::filesystem::path& dir) {
    fs::write_file_atomic(dir / (repo.truth.project_id + ".commits.jsonl"), ingest::write_dump(repo.commits));
    fs::write_file_atomic(dir / (repo.truth.project_id + ".truth.json"), repo.truth.to_json().dump(2) + "\n");
}

// --- unstructured histories ---------------------------------------------------------

/// Messy history for replay cross-checks: repeated line texts, edits anywhere,
/// renames, deletions, binary blobs, side branches and first-parent merges.
/// Authors are already resolved (author_id = e-mail).
inline ingest::CommitStream gen_random_stream(std::uint64_t seed, std::size_t commits, int authors = 4) {
    using Files = std::map<std::string, std::vector<std::string>>;
    Rng rng(seed);
    std::vector<Files> snapshots;
    ingest::CommitStream out;
    std::vector<std::size_t> heads;
    auto ts = parse_timestamp("2021-01-04T00:00:00Z");
    long long fresh = 0;
    auto line = [&] {
        // small vocabulary so identical lines recur within and across files
        if (rng.bernoulli(0.4)) return "x = " + std::to_string(rng.below(4));
        return "y_" + std::to_string(++fresh) + " = " + std::to_string(rng.below(100));
    };
    auto join = [](const std::vector<std::string>& ls) {
        std::string t;
        for (const auto& l : ls) t += l + "\n";
        return t;
    };

    for (std::size_t n = 0; n < commits; ++n) {
        ingest::CommitRecord c;
        c.hash = gen_detail::commit_hash("random-" + std::to_string(seed), n);
        int who = static_cast<int>(rng.below(static_cast<std::uint64_t>(authors)));
        c.author_name = "A" + std::to_string(who);
        c.author_email = c.author_id = "a" + std::to_string(who) + "@x.org";
        ts += std::chrono::hours(1 + static_cast<long long>(rng.below(48)));
        c.timestamp = ts;

        Files before, after;
        if (n > 0) {
            std::size_t first = heads.back();
            if (heads.size() > 1 && rng.bernoulli(0.15)) {
                // merge another head: first-parent view plus one file from the other side
                std::size_t other = heads[rng.below(heads.size() - 1)];
                c.parents = {out[first].hash, out[other].hash};
                c.is_merge = true;
                before = snapshots[first];
                after = before;
                const auto& theirs = snapshots[other];
                if (!theirs.empty()) {
                    auto it = theirs.begin();
                    std::advance(it, static_cast<long>(rng.below(theirs.size())));
                    after[it->first] = it->second;
                }
                heads.erase(std::find(heads.begin(), heads.end(), other));
            } else {
                if (n > 2 && rng.bernoulli(0.1)) first = static_cast<std::size_t>(rng.below(n));  // branch off
                c.parents = {out[first].hash};
                before = snapshots[first];
                after = before;
                int ops = 1 + static_cast<int>(rng.below(3));
                for (int k = 0; k < ops; ++k) {
                    auto roll = rng.uniform();
                    if (after.empty() || roll < 0.15) {
                        std::vector<std::string> ls;
                        for (auto m = rng.between(1, 6); m > 0; --m) ls.push_back(line());
                        after["f" + std::to_string(rng.below(6)) + ".py"] = ls;
                        continue;
                    }
                    auto it = after.begin();
                    std::advance(it, static_cast<long>(rng.below(after.size())));
                    auto& ls = it->second;
                    if (roll < 0.2) {
                        after.erase(it);
                    } else if (roll < 0.6 && !ls.empty()) {
                        ls[rng.below(ls.size())] = line();
                    } else if (roll < 0.8) {
                        ls.insert(ls.begin() + static_cast<long>(rng.below(ls.size() + 1)), line());
                    } else if (!ls.empty()) {
                        ls.erase(ls.begin() + static_cast<long>(rng.below(ls.size())));
                    }
                }
            }
        } else {
            after["f0.py"] = {line(), line(), line()};
        }

        std::vector<ingest::FileChange> changes;
        std::set<std::string> renamed_from;
        // occasionally turn one delete+add pair into a rename
        std::vector<std::string> gone, born;
        for (const auto& [p, ls] : before)
            if (!after.count(p)) gone.push_back(p);
        for (const auto& [p, ls] : after)
            if (!before.count(p)) born.push_back(p);
        if (!c.is_merge && !gone.empty() && rng.bernoulli(0.5)) {
            auto from = gone.front();
            auto to = "r" + std::to_string(n) + "_" + from;
            after[to] = before.at(from);
            if (!after[to].empty() && rng.bernoulli(0.5)) after[to].back() = line();
            ingest::FileChange ch;
            ch.action = ingest::ChangeAction::rename;
            ch.old_path = from;
            ch.path = to;
            ch.pre_text = join(before.at(from));
            ch.post_text = join(after[to]);
            changes.push_back(std::move(ch));
            renamed_from.insert(from);
        }
        for (const auto& [p, ls] : before) {
            if (renamed_from.count(p)) continue;
            auto it = after.find(p);
            if (it == after.end()) {
                ingest::FileChange ch;
                ch.path = p;
                ch.action = ingest::ChangeAction::remove;
                ch.pre_text = join(ls);
                changes.push_back(std::move(ch));
            } else if (it->second != ls) {
                ingest::FileChange ch;
                ch.path = p;
                ch.action = ingest::ChangeAction::modify;
                ch.pre_text = join(ls);
                ch.post_text = join(it->second);
                changes.push_back(std::move(ch));
            }
        }
        for (const auto& [p, ls] : after) {
            if (before.count(p) || std::any_of(changes.begin(), changes.end(), [&](const auto& ch) { return ch.path == p; }))
                continue;
            ingest::FileChange ch;
            ch.path = p;
            ch.action = ingest::ChangeAction::add;
            ch.post_text = join(ls);
            changes.push_back(std::move(ch));
        }
        if (rng.bernoulli(0.05)) {
            ingest::FileChange bin;
            bin.path = "asset" + std::to_string(n) + ".bin";
            bin.action = ingest::ChangeAction::add;
            bin.is_binary = true;
            changes.push_back(std::move(bin));
        }
        std::sort(changes.begin(), changes.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
        c.changes = std::move(changes);

        std::size_t parent_idx = n == 0 ? 0 : static_cast<std::size_t>(
            std::find_if(out.begin(), out.end(), [&](const auto& x) { return x.hash == c.parents.front(); }) - out.begin());
        if (n > 0) {
            auto h = std::find(heads.begin(), heads.end(), parent_idx);
            if (h != heads.end()) heads.erase(h);
        }
        heads.push_back(n);
        snapshots.push_back(std::move(after));
        out.push_back(std::move(c));
    }
    return out;
}

// --- Simpson's paradox dataset ------------------------------------------------------

struct SimpsonGroup {
    double mean_log_ind = 0.0;
    double intercept = 0.0;
    double slope = -0.4;
    double mean_log_ts = 1.0;
};

/// Each group g draws log TS ~ N(t_g, ts_sd), log InD ~ N(m_g, ind_sd),
/// FModR ~ U(0, 1) and log PROD = a_g + s_g log TS + beta_fmodr FModR + noise.
struct SimpsonSpec {
    std::uint64_t seed = 7;
    std::size_t n_per_group = 200;
    double ts_sd = 0.5;
    double ind_sd = 0.1;
    double noise_sd = 0.3;
    double beta_fmodr = 0.5;
    std::vector<SimpsonGroup> groups{{0.0, 0.0, -0.4, 1.0}, {1.0, 2.0, -0.4, 2.0}, {2.0, 4.0, -0.4, 3.0}};

    /// Groups are read from `group.<k> = <mean log InD> <intercept> <slope>
    /// [<mean log TS>]`; mean log TS defaults to mean log InD + 1.
    static SimpsonSpec from_kv(const kv::Document& d) {
        SimpsonSpec s;
        s.seed = static_cast<std::uint64_t>(d.integer_or("seed", static_cast<long long>(s.seed)));
        s.n_per_group = static_cast<std::size_t>(d.integer_or("n_per_group", static_cast<long long>(s.n_per_group)));
        s.ts_sd = d.number_or("ts_sd", s.ts_sd);
        s.ind_sd = d.number_or("ind_sd", s.ind_sd);
        s.noise_sd = d.number_or("noise_sd", s.noise_sd);
        s.beta_fmodr = d.number_or("beta_fmodr", s.beta_fmodr);
        auto gs = d.section("group");
        if (!gs.values().empty()) {
            s.groups.clear();
            for (const auto& [k, v] : gs.values()) {
                std::istringstream in(v);
                SimpsonGroup g;
                if (!(in >> g.mean_log_ind >> g.intercept >> g.slope))
                    throw Error(ErrorKind::malformed_input, "group." + k + " needs: mean_log_ind intercept slope [mean_log_ts]");
                if (!(in >> g.mean_log_ts)) g.mean_log_ts = g.mean_log_ind + 1.0;
                s.groups.push_back(g);
            }
        }
        return s;
    }
};

/// Closed-form slope of the pooled simple regression of log PROD on log TS
/// for equal group sizes.
inline double analytic_pooled_slope(const SimpsonSpec& s) {
    const double k = static_cast<double>(s.groups.size());
    double mean_t = 0, mean_mu = 0, mean_slope = 0;
    for (const auto& g : s.groups) {
        mean_t += g.mean_log_ts / k;
        mean_mu += (g.intercept + g.slope * g.mean_log_ts) / k;
        mean_slope += g.slope / k;
    }
    double var_t = 0, cov = 0;
    for (const auto& g : s.groups) {
        var_t += (g.mean_log_ts - mean_t) * (g.mean_log_ts - mean_t) / k;
        cov += (g.mean_log_ts - mean_t) * (g.intercept + g.slope * g.mean_log_ts - mean_mu) / k;
    }
    const double s2 = s.ts_sd * s.ts_sd;
    return (s2 * mean_slope + cov) / (s2 + var_t);
}

inline double simple_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

/// Frame columns: group, log_ts, log_ind, fmodr, log_prod. Rejects layouts
/// whose pooled slope is not positive, analytically before drawing and
/// empirically after.
inline stats::Frame gen_simpson_dataset(const SimpsonSpec& s) {
    if (s.groups.size() < 2) throw Error(ErrorKind::infeasible_plan, "the paradox needs at least two groups");
    if (s.n_per_group < 3) throw Error(ErrorKind::infeasible_plan, "need at least 3 rows per group");
    for (const auto& g : s.groups)
        if (!(g.slope < 0.0)) throw Error(ErrorKind::infeasible_plan, "within-group slopes must be negative");
    if (!(s.ts_sd > 0.0) || s.ind_sd < 0.0 || s.noise_sd < 0.0)
        throw Error(ErrorKind::infeasible_plan, "standard deviations out of range");
    if (!(analytic_pooled_slope(s) > 0.0))
        throw Error(ErrorKind::infeasible_plan, "group layout does not produce a positive pooled slope");

    Rng rng(s.seed);
    std::vector<double> group, ts, ind, fmodr, prod;
    for (std::size_t g = 0; g < s.groups.size(); ++g) {
        const auto& p = s.groups[g];
        std::vector<double> gts, gprod;
        for (std::size_t i = 0; i < s.n_per_group; ++i) {
            double t = rng.normal(p.mean_log_ts, s.ts_sd);
            double d = rng.normal(p.mean_log_ind, s.ind_sd);
            double f = rng.uniform();
            double y = p.intercept + p.slope * t + s.beta_fmodr * f + rng.normal(0.0, s.noise_sd);
            group.push_back(static_cast<double>(g));
            ts.push_back(t);
            ind.push_back(d);
            fmodr.push_back(f);
            prod.push_back(y);
            gts.push_back(t);
            gprod.push_back(y);
        }
        if (!(simple_slope(gts, gprod) < 0.0))
            throw Error(ErrorKind::infeasible_plan, "group " + std::to_string(g) + " drew a non-negative slope");
    }
    if (!(simple_slope(ts, prod) > 0.0)) throw Error(ErrorKind::infeasible_plan, "drawn pooled slope is not positive");
    stats::Frame f;
    f.add("group", std::move(group));
    f.add("log_ts", std::move(ts));
    f.add("log_ind", std::move(ind));
    f.add("fmodr", std::move(fmodr));
    f.add("log_prod", std::move(prod));
    return f;
}

inline stats::ColumnMap simpson_columns() { return {"log_ts", "log_ind", "fmodr"}; }

inline std::string write_frame_csv(const stats::Frame& f) {
    std::ostringstream os;
    csv::write_row(os, f.names());
    for (std::size_t i = 0; i < f.rows(); ++i) {
        csv::Row row;
        for (const auto& n : f.names()) row.push_back(csv::format_number(f.col(n)[i]));
        csv::write_row(os, row);
    }
    return os.str();
}

inline stats::Frame read_frame_csv(std::string_view text) {
    csv::Table t(text, "frame");
    stats::Frame f;
    for (const auto& name : t.header()) {
        std::vector<double> col(t.size());
        for (std::size_t i = 0; i < t.size(); ++i) col[i] = t.number(i, name);
        f.add(name, std::move(col));
    }
    return f;
}

// --- mini-corpus ----------------------------------------------------------------------

/// A catalog row describing a generated history.
inline catalog::ProjectMeta describe(const SyntheticRepo& repo, std::map<std::string, double> languages) {
    catalog::ProjectMeta m;
    m.project_id = repo.truth.project_id;
    m.commit_count = static_cast<long long>(repo.commits.size());
    std::set<std::string> devs;
    for (const auto& c : repo.commits) devs.insert(text::ascii_lower(c.author_email));
    m.developer_count = static_cast<long long>(devs.size());
    m.first_commit_ts = repo.commits.front().timestamp;
    m.last_commit_ts = repo.commits.back().timestamp;
    m.language_fractions = std::move(languages);
    m.root_commit_hash = repo.commits.front().hash;
    return m;
}

inline std::string mini_corpus_config() {
    return R"(# Demo pipeline over the synthetic mini-corpus.
catalog = catalog.csv
dumps = dumps
output = out
seed = 42
jobs = 1

strata.min_ts = 2
strata.max_ts = 16
strata.k = 3
sample.quota = 28

outlier.p_low = 2.5
outlier.p_high = 97.5

window.days = 294

stats.targets = comms, events, levd, nloc, tokens, funcs, cycc, haleff
stats.families = abcde
)";
}

/// Writes catalog.csv, pipeline.conf and dumps/ (with truth sidecars) for
/// `projects` generated histories, plus catalog rows that the filters reject
/// and one clone that sampling collapses.
inline void gen_mini_corpus(const std::filesystem::path& dir, int projects = 12, std::uint64_t seed = 2024) {
    if (projects < 1) throw Error(ErrorKind::infeasible_plan, "need at least one project");
    Rng rng(seed);
    std::vector<catalog::ProjectMeta> rows;
    const std::map<std::string, double> python{{"Python", 0.9}, {"Markdown", 0.1}};
    for (int p = 0; p < projects; ++p) {
        SyntheticPlan plan;
        plan.seed = rng.next();
        char id[32];
        std::snprintf(id, sizeof id, "demo-%02d", p + 1);
        plan.project_id = id;
        plan.start = parse_timestamp("2018-09-03T09:00:00Z") + days(static_cast<long long>(rng.below(120)));
        int windows = 3 + static_cast<int>(rng.below(2));
        int base = 2 + static_cast<int>(rng.below(9));
        plan.team_trajectory.clear();
        for (int w = 0; w < windows; ++w)
            plan.team_trajectory.push_back(std::max(2, base + static_cast<int>(rng.between(-1, 3))));
        int total = 0;
        for (int t : plan.team_trajectory) total += t;
        // enough commits to clear the default 50-commit filter
        plan.commits_per_dev = std::max(4 + static_cast<int>(rng.below(3)), (60 + total - 1) / total);
        plan.edits_per_commit = 1 + static_cast<int>(rng.below(3));
        plan.foreign_edit_prob = 0.2 + 0.6 * rng.uniform();
        plan.delete_prob = 0.3 * rng.uniform();
        plan.file_count = 2 + static_cast<int>(rng.below(4));
        plan.alias_prob = 0.1;
        auto repo = gen_synthetic_repo(plan);
        write_synthetic_repo(repo, dir / "dumps");
        rows.push_back(describe(repo, python));
    }
    // A clone of the first project: same root commit, started later.
    {
        auto clone = rows.front();
        clone.project_id = "demo-clone";
        clone.first_commit_ts += std::chrono::hours(1);
        auto dump = fs::read_file(dir / "dumps" / (rows.front().project_id + ".commits.jsonl"));
        fs::write_file_atomic(dir / "dumps" / "demo-clone.commits.jsonl", dump);
        rows.push_back(clone);
    }
    auto reject = [&](std::string id, auto mutate) {
        auto r = rows.front();
        r.project_id = std::move(id);
        r.root_commit_hash = fnv1a_hex(r.project_id);
        mutate(r);
        rows.push_back(r);
    };
    reject("reject-fork", [](auto& r) { r.is_fork = true; });
    reject("reject-solo", [](auto& r) { r.developer_count = 1; });
    reject("reject-few-commits", [](auto& r) { r.commit_count = 20; });
    reject("reject-inactive", [](auto& r) {
        r.first_commit_ts = parse_timestamp("2016-01-04T10:00:00Z");
        r.last_commit_ts = parse_timestamp("2019-11-20T10:00:00Z");
    });
    reject("reject-docs", [](auto& r) { r.language_fractions = {{"Python", 0.3}, {"TeX", 0.7}}; });
    reject("reject-young", [](auto& r) { r.first_commit_ts = r.last_commit_ts - days(200); });
    fs::write_file_atomic(dir / "catalog.csv", catalog::write_catalog(rows));
    fs::write_file_atomic(dir / "pipeline.conf", mini_corpus_config());
}

}  // namespace teamprod::synthkit
