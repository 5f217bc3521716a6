#pragma once

// Brute-force reference implementations. Nothing here calls into the
// production algorithms; only the plain data types are shared. Each oracle
// refuses inputs beyond desk scale instead of silently running for minutes.

#include <teamprod/error.hpp>
#include <teamprod/ingest.hpp>
#include <teamprod/networks.hpp>
#include <teamprod/ownership.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

namespace teamprod::synthkit {

inline void check_size(bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorKind::size_limit_exceeded, "oracle input too large: " + what);
}

// --- edit distance ---------------------------------------------------------------

namespace oracle_detail {

// Assumes well-formed UTF-8 (the stream only carries text that passed the
// textual check).
inline std::vector<std::uint32_t> code_points(const std::string& s) {
    std::vector<std::uint32_t> out;
    for (std::size_t i = 0; i < s.size();) {
        auto c = static_cast<unsigned char>(s[i]);
        int len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : 4;
        std::uint32_t cp = len == 1 ? c : len == 2 ? (c & 0x1F) : len == 3 ? (c & 0x0F) : (c & 0x07);
        for (int k = 1; k < len && i + k < s.size(); ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
        out.push_back(cp);
        i += static_cast<std::size_t>(len);
    }
    return out;
}

}  // namespace oracle_detail

/// Full-matrix Levenshtein distance over code points.
inline std::size_t dp_levenshtein(const std::string& a, const std::string& b, std::size_t max_cells = 50'000'000) {
    auto x = oracle_detail::code_points(a), y = oracle_detail::code_points(b);
    check_size((x.size() + 1) * (y.size() + 1) <= max_cells, "levenshtein matrix");
    std::vector<std::vector<std::size_t>> d(x.size() + 1, std::vector<std::size_t>(y.size() + 1));
    for (std::size_t i = 0; i <= x.size(); ++i) d[i][0] = i;
    for (std::size_t j = 0; j <= y.size(); ++j) d[0][j] = j;
    for (std::size_t i = 1; i <= x.size(); ++i)
        for (std::size_t j = 1; j <= y.size(); ++j)
            d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (x[i - 1] == y[j - 1] ? 0 : 1)});
    return d[x.size()][y.size()];
}

// --- ownership -------------------------------------------------------------------

namespace oracle_detail {

struct Line {
    std::string owner, text;
};
using Files = std::map<std::string, std::vector<Line>>;

inline std::vector<std::string> lines_of(const std::optional<std::string>& text) {
    std::vector<std::string> out;
    if (!text) return out;
    std::string cur;
    for (char c : *text) {
        if (c == '\n') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

enum class Op { keep, del, ins };

/// Line script under the canonical alignment: shared head, shared tail, and
/// for the middle a longest-common-subsequence walk preferring deletion on
/// ties.
inline std::vector<Op> script(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::size_t head = 0;
    while (head < a.size() && head < b.size() && a[head] == b[head]) ++head;
    std::size_t tail = 0;
    while (tail < a.size() - head && tail < b.size() - head && a[a.size() - 1 - tail] == b[b.size() - 1 - tail]) ++tail;
    const std::size_t n = a.size() - head - tail, m = b.size() - head - tail;
    std::vector<std::vector<std::size_t>> lcs(n + 1, std::vector<std::size_t>(m + 1, 0));
    for (std::size_t i = n; i-- > 0;)
        for (std::size_t j = m; j-- > 0;)
            lcs[i][j] = a[head + i] == b[head + j] ? lcs[i + 1][j + 1] + 1 : std::max(lcs[i + 1][j], lcs[i][j + 1]);
    std::vector<Op> ops(head, Op::keep);
    std::size_t i = 0, j = 0;
    while (i < n || j < m) {
        if (i < n && j < m && a[head + i] == b[head + j]) {
            ops.push_back(Op::keep);
            ++i;
            ++j;
        } else if (i < n && (j == m || lcs[i + 1][j] >= lcs[i][j + 1])) {
            ops.push_back(Op::del);
            ++i;
        } else {
            ops.push_back(Op::ins);
            ++j;
        }
    }
    ops.insert(ops.end(), tail, Op::keep);
    return ops;
}

struct Replayer {
    const ingest::CommitRecord& commit;
    std::vector<ownership::EditEvent>* events;  // null while rebuilding ancestors

    void emit(const std::string& path, ownership::EditKind kind, const Line* before, const std::string* after) {
        if (!events) return;
        ownership::EditEvent e;
        e.commit_hash = commit.hash;
        e.editor = commit.author_id;
        e.path = path;
        e.kind = kind;
        e.from_merge = commit.is_merge;
        if (before) {
            e.pre_line_text = before->text;
            e.previous_owner = before->owner;
        }
        if (after) e.post_line_text = *after;
        e.lev_distance = dp_levenshtein(before ? before->text : "", after ? *after : "");
        events->push_back(std::move(e));
    }

    std::vector<Line> rewrite(const std::string& path, const std::vector<Line>& old, const std::vector<std::string>& now) {
        std::vector<std::string> old_text;
        for (const auto& l : old) old_text.push_back(l.text);
        auto ops = script(old_text, now);
        std::vector<Line> out;
        std::size_t i = 0, j = 0, k = 0;
        while (k < ops.size()) {
            if (ops[k] == Op::keep) {
                out.push_back(old[i]);
                ++i, ++j, ++k;
                continue;
            }
            // a maximal run of changes is one hunk
            std::vector<std::size_t> dels, inss;
            while (k < ops.size() && ops[k] != Op::keep) {
                if (ops[k] == Op::del)
                    dels.push_back(i++);
                else
                    inss.push_back(j++);
                ++k;
            }
            std::size_t paired = std::min(dels.size(), inss.size());
            for (std::size_t p = 0; p < paired; ++p)
                emit(path, ownership::EditKind::modification, &old[dels[p]], &now[inss[p]]);
            for (std::size_t p = paired; p < dels.size(); ++p) emit(path, ownership::EditKind::deletion, &old[dels[p]], nullptr);
            for (std::size_t p = paired; p < inss.size(); ++p) emit(path, ownership::EditKind::addition, nullptr, &now[inss[p]]);
            for (auto q : inss) out.push_back({commit.author_id, now[q]});
        }
        return out;
    }

    void apply(Files& files) {
        for (const auto& ch : commit.changes) {
            if (ch.is_binary) {
                files.erase(ch.path);
                if (ch.old_path) files.erase(*ch.old_path);
                continue;
            }
            std::vector<Line> old;
            if (ch.action == ingest::ChangeAction::rename) {
                auto it = files.find(*ch.old_path);
                if (it != files.end()) {
                    old = it->second;
                    files.erase(it);
                }
            } else if (auto it = files.find(ch.path); it != files.end()) {
                old = it->second;
            }
            auto now = rewrite(ch.path, old, lines_of(ch.post_text));
            if (ch.action == ingest::ChangeAction::remove)
                files.erase(ch.path);
            else
                files[ch.path] = std::move(now);
        }
    }
};

}  // namespace oracle_detail

/// Replays every commit from scratch: its first-parent ancestry is re-applied
/// from the root each time, and only the final step emits events.
inline std::vector<ownership::EditEvent> naive_ownership_replay(const ingest::CommitStream& stream,
                                                                std::size_t max_commits = 200) {
    check_size(stream.size() <= max_commits, std::to_string(stream.size()) + " commits");
    std::map<std::string, const ingest::CommitRecord*> by_hash;
    for (const auto& c : stream) by_hash[c.hash] = &c;
    std::vector<ownership::EditEvent> events;
    for (const auto& c : stream) {
        std::vector<const ingest::CommitRecord*> chain;
        for (const auto* cur = &c;;) {
            chain.push_back(cur);
            if (cur->parents.empty()) break;
            auto it = by_hash.find(cur->parents.front());
            if (it == by_hash.end()) throw Error(ErrorKind::state_missing, "parent of " + cur->hash + " not in stream");
            cur = it->second;
        }
        oracle_detail::Files files;
        for (std::size_t k = chain.size(); k-- > 1;) oracle_detail::Replayer{*chain[k], nullptr}.apply(files);
        oracle_detail::Replayer{c, &events}.apply(files);
    }
    return events;
}

/// Ownership after `hash`, rebuilt from the root: path -> (owner, text) per line.
inline std::map<std::string, std::vector<std::pair<std::string, std::string>>> naive_ownership_state(
    const ingest::CommitStream& stream, const std::string& hash, std::size_t max_commits = 200) {
    check_size(stream.size() <= max_commits, std::to_string(stream.size()) + " commits");
    std::map<std::string, const ingest::CommitRecord*> by_hash;
    for (const auto& c : stream) by_hash[c.hash] = &c;
    std::vector<const ingest::CommitRecord*> chain;
    for (auto it = by_hash.find(hash);;) {
        if (it == by_hash.end()) throw Error(ErrorKind::state_missing, "commit " + hash + " chain leaves the stream");
        chain.push_back(it->second);
        if (it->second->parents.empty()) break;
        it = by_hash.find(it->second->parents.front());
    }
    oracle_detail::Files files;
    for (std::size_t k = chain.size(); k-- > 0;) oracle_detail::Replayer{*chain[k], nullptr}.apply(files);
    std::map<std::string, std::vector<std::pair<std::string, std::string>>> out;
    for (const auto& [path, lines] : files)
        for (const auto& l : lines) out[path].emplace_back(l.owner, l.text);
    return out;
}

// --- graph measures ----------------------------------------------------------

namespace oracle_detail {

struct Dense {
    std::size_t n = 0;
    std::vector<std::vector<int>> adj;  // undirected, loop-free
};

inline Dense dense_undirected(const networks::CoEditGraph& g) {
    std::vector<std::string> names(g.nodes.begin(), g.nodes.end());
    Dense d;
    d.n = names.size();
    d.adj.assign(d.n, std::vector<int>(d.n, 0));
    for (const auto& [e, m] : g.edges) {
        if (m == 0) continue;
        auto a = static_cast<std::size_t>(std::find(names.begin(), names.end(), e.first) - names.begin());
        auto b = static_cast<std::size_t>(std::find(names.begin(), names.end(), e.second) - names.begin());
        if (a != b) d.adj[a][b] = d.adj[b][a] = 1;
    }
    return d;
}

constexpr long long unreachable = std::numeric_limits<long long>::max() / 4;

inline std::vector<std::vector<long long>> floyd_warshall(const Dense& d) {
    std::vector<std::vector<long long>> dist(d.n, std::vector<long long>(d.n, unreachable));
    for (std::size_t i = 0; i < d.n; ++i) {
        dist[i][i] = 0;
        for (std::size_t j = 0; j < d.n; ++j)
            if (d.adj[i][j]) dist[i][j] = 1;
    }
    for (std::size_t k = 0; k < d.n; ++k)
        for (std::size_t i = 0; i < d.n; ++i)
            for (std::size_t j = 0; j < d.n; ++j)
                dist[i][j] = std::min(dist[i][j], dist[i][k] + dist[k][j]);
    return dist;
}

/// Node indices of the largest component (first-found among equals, with
/// nodes in name order).
inline std::vector<std::size_t> largest_component(const Dense& d) {
    auto dist = floyd_warshall(d);
    std::vector<std::size_t> best;
    for (std::size_t i = 0; i < d.n; ++i) {
        std::vector<std::size_t> comp;
        for (std::size_t j = 0; j < d.n; ++j)
            if (dist[i][j] < unreachable) comp.push_back(j);
        if (comp.size() > best.size()) best = comp;
    }
    return best;
}

}  // namespace oracle_detail

inline long long apsp_diameter(const networks::CoEditGraph& g, std::size_t max_nodes = 50) {
    check_size(g.nodes.size() <= max_nodes, std::to_string(g.nodes.size()) + " nodes");
    auto d = oracle_detail::dense_undirected(g);
    auto dist = oracle_detail::floyd_warshall(d);
    auto comp = oracle_detail::largest_component(d);
    long long best = 0;
    for (auto i : comp)
        for (auto j : comp) best = std::max(best, dist[i][j]);
    return best;
}

/// Mean local clustering by enumerating every ordered triple.
inline double triple_clustering(const networks::CoEditGraph& g, std::size_t max_nodes = 50) {
    check_size(g.nodes.size() <= max_nodes, std::to_string(g.nodes.size()) + " nodes");
    auto d = oracle_detail::dense_undirected(g);
    if (d.n == 0) return 0.0;
    double total = 0.0;
    for (std::size_t v = 0; v < d.n; ++v) {
        long long wedges = 0, closed = 0;
        for (std::size_t a = 0; a < d.n; ++a)
            for (std::size_t b = 0; b < d.n; ++b) {
                if (a == b || a == v || b == v || !d.adj[v][a] || !d.adj[v][b]) continue;
                ++wedges;
                closed += d.adj[a][b];
            }
        if (wedges > 0) total += static_cast<double>(closed) / static_cast<double>(wedges);
    }
    return total / static_cast<double>(d.n);
}

/// Cyclic Jacobi rotations on the largest component's adjacency matrix.
inline std::vector<double> jacobi_eigenvalues(std::vector<std::vector<double>> a, double tol = 1e-14) {
    const std::size_t n = a.size();
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
        if (off < tol * tol) break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::fabs(a[p][q]) < 1e-300) continue;
                double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                double t = (theta >= 0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
    }
    std::vector<double> ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = a[i][i];
    std::sort(ev.begin(), ev.end());
    return ev;
}

inline double dense_eigengap(const networks::CoEditGraph& g, std::size_t max_nodes = 50) {
    check_size(g.nodes.size() <= max_nodes, std::to_string(g.nodes.size()) + " nodes");
    auto d = oracle_detail::dense_undirected(g);
    auto comp = oracle_detail::largest_component(d);
    if (comp.size() < 2) return 0.0;
    std::vector<std::vector<double>> a(comp.size(), std::vector<double>(comp.size(), 0.0));
    for (std::size_t i = 0; i < comp.size(); ++i)
        for (std::size_t j = 0; j < comp.size(); ++j) a[i][j] = d.adj[comp[i]][comp[j]];
    auto ev = jacobi_eigenvalues(std::move(a));
    return ev[ev.size() - 1] - ev[ev.size() - 2];
}

}  // namespace teamprod::synthkit
