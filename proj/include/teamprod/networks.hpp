#pragma once

// Per-window co-editing multigraph and its eight measures, plus the
// correlation-cluster feature selection used to pick regressors.

#include <teamprod/error.hpp>
#include <teamprod/ownership.hpp>
#include <teamprod/util/csv.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace teamprod::networks {

/// Directed multigraph: edges map (from, to) to a multiplicity. Self-loops
/// are allowed.
struct CoEditGraph {
    std::set<std::string> nodes;
    std::map<std::pair<std::string, std::string>, std::size_t> edges;

    std::size_t edge_count() const {
        std::size_t n = 0;
        for (const auto& [e, m] : edges) n += m;
        return n;
    }

    void add_edge(const std::string& from, const std::string& to, std::size_t multiplicity = 1) {
        nodes.insert(from);
        nodes.insert(to);
        edges[{from, to}] += multiplicity;
    }

    friend bool operator==(const CoEditGraph&, const CoEditGraph&) = default;
};

/// Nodes are every editor and previous owner; each modification or deletion
/// of someone's line adds one edge owner -> editor.
inline CoEditGraph build_coedit_graph(const std::vector<ownership::EditEvent>& events, bool include_merges = false) {
    CoEditGraph g;
    for (const auto& e : events) {
        if (e.from_merge && !include_merges) continue;
        g.nodes.insert(e.editor);
        if (!e.previous_owner) continue;
        g.nodes.insert(*e.previous_owner);
        if (e.kind != ownership::EditKind::addition) g.edges[{*e.previous_owner, e.editor}] += 1;
    }
    return g;
}

/// Collapses multi-edges; self-loops survive as single loops.
inline CoEditGraph flatten(const CoEditGraph& g) {
    CoEditGraph out;
    out.nodes = g.nodes;
    for (const auto& [e, m] : g.edges)
        if (m > 0) out.edges[e] = 1;
    return out;
}

enum class EigengapKind { adjacency, normalized_laplacian };

struct NetworkMetrics {
    long long n = 0;
    long long edges = 0;
    double dens = 0.0;
    long long diam = 0;
    double clustc = 0.0;
    double ind = 0.0;
    double fmodr = 0.0;
    double eigg = 0.0;

    friend bool operator==(const NetworkMetrics&, const NetworkMetrics&) = default;
};

namespace detail {

struct Undirected {
    std::vector<std::string> names;
    std::vector<std::set<std::size_t>> adj;  // loop-free, symmetric
};

inline Undirected undirected_view(const CoEditGraph& g) {
    Undirected u;
    u.names.assign(g.nodes.begin(), g.nodes.end());
    std::map<std::string, std::size_t> idx;
    for (std::size_t i = 0; i < u.names.size(); ++i) idx[u.names[i]] = i;
    u.adj.resize(u.names.size());
    for (const auto& [e, m] : g.edges) {
        if (m == 0 || e.first == e.second) continue;
        auto a = idx.at(e.first), b = idx.at(e.second);
        u.adj[a].insert(b);
        u.adj[b].insert(a);
    }
    return u;
}

/// Largest connected component; ties go to the component holding the
/// lexicographically smallest node name.
inline std::vector<std::size_t> largest_component(const Undirected& u) {
    std::vector<int> comp(u.names.size(), -1);
    std::vector<std::size_t> best;
    for (std::size_t s = 0; s < u.names.size(); ++s) {
        if (comp[s] >= 0) continue;
        std::vector<std::size_t> members{s};
        comp[s] = static_cast<int>(s);
        for (std::size_t k = 0; k < members.size(); ++k)
            for (auto v : u.adj[members[k]])
                if (comp[v] < 0) {
                    comp[v] = static_cast<int>(s);
                    members.push_back(v);
                }
        if (members.size() > best.size()) best = std::move(members);
    }
    std::sort(best.begin(), best.end());
    return best;
}

inline std::vector<long long> bfs(const Undirected& u, std::size_t source) {
    std::vector<long long> dist(u.names.size(), -1);
    std::deque<std::size_t> queue{source};
    dist[source] = 0;
    while (!queue.empty()) {
        auto v = queue.front();
        queue.pop_front();
        for (auto w : u.adj[v])
            if (dist[w] < 0) {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
    }
    return dist;
}

}  // namespace detail

inline long long diameter(const CoEditGraph& g) {
    auto u = detail::undirected_view(g);
    auto lcc = detail::largest_component(u);
    long long d = 0;
    for (auto s : lcc) {
        auto dist = detail::bfs(u, s);
        for (auto t : lcc) d = std::max(d, dist[t]);
    }
    return d;
}

inline double mean_clustering(const CoEditGraph& g) {
    auto u = detail::undirected_view(g);
    if (u.names.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t v = 0; v < u.names.size(); ++v) {
        const auto& nb = u.adj[v];
        if (nb.size() < 2) continue;
        std::size_t links = 0;
        for (auto a : nb)
            for (auto b : nb)
                if (a < b && u.adj[a].count(b)) ++links;
        double k = static_cast<double>(nb.size());
        sum += static_cast<double>(links) / (k * (k - 1.0) / 2.0);
    }
    return sum / static_cast<double>(u.names.size());
}

/// lambda_1 - lambda_2 of the adjacency of the undirected loop-free largest
/// component, or the second-smallest normalized-Laplacian eigenvalue.
inline double eigengap(const CoEditGraph& g, EigengapKind kind = EigengapKind::adjacency) {
    auto u = detail::undirected_view(g);
    auto lcc = detail::largest_component(u);
    const auto m = static_cast<Eigen::Index>(lcc.size());
    if (m < 2) return 0.0;
    std::map<std::size_t, Eigen::Index> pos;
    for (Eigen::Index i = 0; i < m; ++i) pos[lcc[static_cast<std::size_t>(i)]] = i;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
    for (auto v : lcc)
        for (auto w : u.adj[v]) a(pos[v], pos[w]) = 1.0;
    if (kind == EigengapKind::normalized_laplacian) {
        Eigen::VectorXd inv_sqrt(m);
        for (Eigen::Index i = 0; i < m; ++i) inv_sqrt(i) = 1.0 / std::sqrt(a.row(i).sum());
        Eigen::MatrixXd l = Eigen::MatrixXd::Identity(m, m) - inv_sqrt.asDiagonal() * a * inv_sqrt.asDiagonal();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(l, Eigen::EigenvaluesOnly);
        return std::max(0.0, es.eigenvalues()(1));
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();  // ascending
    return std::max(0.0, ev(m - 1) - ev(m - 2));
}

/// Mean over nodes of the number of distinct predecessors, self included.
inline double mean_indegree(const CoEditGraph& g) {
    if (g.nodes.empty()) return 0.0;
    std::map<std::string, std::size_t> preds;
    for (const auto& [e, m] : g.edges)
        if (m > 0) ++preds[e.second];
    double sum = 0.0;
    for (const auto& [node, k] : preds) sum += static_cast<double>(k);
    return sum / static_cast<double>(g.nodes.size());
}

/// Per-node share of multigraph in-edges that are not self-loops; nodes
/// without in-edges are absent.
inline std::map<std::string, double> foreign_modification_ratios(const CoEditGraph& g) {
    std::map<std::string, std::pair<std::size_t, std::size_t>> counts;  // foreign, all
    for (const auto& [e, m] : g.edges) {
        auto& c = counts[e.second];
        c.second += m;
        if (e.first != e.second) c.first += m;
    }
    std::map<std::string, double> out;
    for (const auto& [node, c] : counts)
        if (c.second > 0) out[node] = static_cast<double>(c.first) / static_cast<double>(c.second);
    return out;
}

/// Mean FModR over the given team; members without in-edges contribute 0.
inline double team_fmodr(const CoEditGraph& g, const std::set<std::string>& team) {
    if (team.empty()) return 0.0;
    auto ratios = foreign_modification_ratios(g);
    double sum = 0.0;
    for (const auto& member : team)
        if (auto it = ratios.find(member); it != ratios.end()) sum += it->second;
    return sum / static_cast<double>(team.size());
}

inline NetworkMetrics network_metrics(const CoEditGraph& g, const std::set<std::string>& team,
                                      EigengapKind kind = EigengapKind::adjacency) {
    NetworkMetrics m;
    auto flat = flatten(g);
    m.n = static_cast<long long>(g.nodes.size());
    m.edges = static_cast<long long>(g.edge_count());
    if (m.n >= 2) {
        std::size_t arcs = 0;
        for (const auto& [e, k] : flat.edges) arcs += e.first != e.second ? 1 : 0;
        m.dens = static_cast<double>(arcs) / static_cast<double>(m.n * (m.n - 1));
    }
    m.diam = diameter(flat);
    m.clustc = mean_clustering(flat);
    m.ind = mean_indegree(flat);
    m.fmodr = team_fmodr(g, team);
    m.eigg = eigengap(flat, kind);
    return m;
}

/// Variant taking only the team size: every node with in-edges is assumed to
/// be a team member, so the FModR sum is divided by `team_size`.
inline NetworkMetrics network_metrics(const CoEditGraph& g, long long team_size,
                                      EigengapKind kind = EigengapKind::adjacency) {
    auto m = network_metrics(g, std::set<std::string>{}, kind);
    if (team_size > 0) {
        double sum = 0.0;
        for (const auto& [node, r] : foreign_modification_ratios(g)) sum += r;
        m.fmodr = sum / static_cast<double>(team_size);
    }
    return m;
}

// --- feature selection ------------------------------------------------------------

struct FeatureClusters {
    std::vector<std::vector<std::string>> clusters;  // in order of first feature
    std::vector<std::string> representatives;
};

/// Single-linkage grouping on |r| >= threshold (missing cells never link),
/// one representative per group: its first member in `preferred` order, else
/// its first member.
inline FeatureClusters feature_cluster_select(const std::vector<std::vector<double>>& corr,
                                              const std::vector<std::string>& features, double threshold,
                                              const std::vector<std::string>& preferred) {
    const auto n = features.size();
    if (corr.size() != n) throw Error(ErrorKind::invalid_argument, "correlation matrix size does not match features");
    for (std::size_t i = 0; i < n; ++i) {
        if (corr[i].size() != n) throw Error(ErrorKind::invalid_argument, "correlation matrix is not square");
        for (std::size_t j = 0; j < i; ++j) {
            double a = corr[i][j], b = corr[j][i];
            bool both_nan = std::isnan(a) && std::isnan(b);
            if (!both_nan && !(std::fabs(a - b) <= 1e-12))
                throw Error(ErrorKind::non_symmetric, "correlation matrix is not symmetric at (" + features[i] + ", " +
                                                          features[j] + ")");
        }
    }
    std::vector<int> group(n, -1);
    FeatureClusters out;
    for (std::size_t s = 0; s < n; ++s) {
        if (group[s] >= 0) continue;
        int id = static_cast<int>(out.clusters.size());
        std::vector<std::size_t> members{s};
        group[s] = id;
        for (std::size_t k = 0; k < members.size(); ++k)
            for (std::size_t j = 0; j < n; ++j)
                if (group[j] < 0 && !std::isnan(corr[members[k]][j]) && std::fabs(corr[members[k]][j]) >= threshold) {
                    group[j] = id;
                    members.push_back(j);
                }
        std::sort(members.begin(), members.end());
        std::vector<std::string> names;
        for (auto m : members) names.push_back(features[m]);
        std::string rep = names.front();
        for (const auto& p : preferred)
            if (std::find(names.begin(), names.end(), p) != names.end()) {
                rep = p;
                break;
            }
        out.clusters.push_back(std::move(names));
        out.representatives.push_back(std::move(rep));
    }
    return out;
}

inline std::string write_edge_list(const CoEditGraph& g) {
    std::ostringstream os;
    csv::write_row(os, {"from", "to", "multiplicity"});
    for (const auto& [e, m] : g.edges) csv::write_row(os, {e.first, e.second, std::to_string(m)});
    return os.str();
}

}  // namespace teamprod::networks
