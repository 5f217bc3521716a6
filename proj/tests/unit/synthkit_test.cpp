#include "test_support.hpp"

#include <teamprod/identity.hpp>
#include <teamprod/ingest.hpp>
#include <teamprod/networks.hpp>
#include <teamprod/ownership.hpp>
#include <teamprod/stats.hpp>
#include <teamprod/synthkit/generators.hpp>
#include <teamprod/synthkit/oracles.hpp>
#include <teamprod/windows.hpp>

using namespace teamprod;
using namespace teamprod::synthkit;
using testing_support::TempDir;

namespace {

struct MinedWindow {
    std::set<std::string> members;
    networks::CoEditGraph graph;
    long long additions = 0, modifications = 0, deletions = 0;
};

// Straight mining path without outlier trimming, so every planted edit is seen.
std::vector<MinedWindow> mine(const SyntheticRepo& repo) {
    auto [stream, ids] = ingest::resolve_identities(repo.commits);
    auto events = ownership::replay_ownership(stream).events;
    auto ws = windows::segment_windows(stream, {});
    std::vector<MinedWindow> out;
    for (const auto& w : ws) {
        MinedWindow m;
        std::set<std::string> hashes;
        for (auto i : w.commits) {
            hashes.insert(stream[i].hash);
            m.members.insert(stream[i].author_id);
        }
        std::vector<ownership::EditEvent> in;
        for (const auto& e : events)
            if (hashes.count(e.commit_hash)) {
                in.push_back(e);
                m.additions += e.kind == ownership::EditKind::addition;
                m.modifications += e.kind == ownership::EditKind::modification;
                m.deletions += e.kind == ownership::EditKind::deletion;
            }
        m.graph = networks::build_coedit_graph(in);
        out.push_back(std::move(m));
    }
    return out;
}

void expect_matches_truth(const SyntheticRepo& repo) {
    auto mined = mine(repo);
    ASSERT_EQ(mined.size(), repo.truth.windows.size());
    for (std::size_t w = 0; w < mined.size(); ++w) {
        const auto& t = repo.truth.windows[w];
        const auto& m = mined[w];
        SCOPED_TRACE("window " + std::to_string(w));
        EXPECT_EQ(std::vector<std::string>(m.members.begin(), m.members.end()), t.members);
        EXPECT_EQ(static_cast<long long>(m.graph.nodes.size()), t.nodes);
        EXPECT_EQ(static_cast<long long>(m.graph.edge_count()), t.edge_count);
        std::map<std::pair<std::string, std::string>, long long> edges;
        for (const auto& [e, k] : m.graph.edges) edges[e] = static_cast<long long>(k);
        EXPECT_EQ(edges, t.edges);
        EXPECT_EQ(m.additions, t.additions);
        EXPECT_EQ(m.modifications, t.modifications);
        EXPECT_EQ(m.deletions, t.deletions);
        EXPECT_NEAR(networks::team_fmodr(m.graph, m.members), t.fmodr, 1e-12);
        EXPECT_NEAR(networks::mean_indegree(networks::flatten(m.graph)), t.ind, 1e-12);
        EXPECT_GE(static_cast<long long>(m.graph.nodes.size()), static_cast<long long>(m.members.size()));
    }
}

}  // namespace

TEST(SyntheticRepo, DefaultPlanMinesToTruth) { expect_matches_truth(gen_synthetic_repo({})); }

TEST(SyntheticRepo, RandomPlansMineToTruth) {
    Rng rng(404);
    for (int round = 0; round < 15; ++round) {
        SyntheticPlan p;
        p.seed = rng.next();
        p.team_trajectory.clear();
        for (auto w = rng.between(1, 4); w > 0; --w) p.team_trajectory.push_back(static_cast<int>(rng.between(2, 9)));
        p.commits_per_dev = static_cast<int>(rng.between(1, 6));
        p.edits_per_commit = static_cast<int>(rng.between(0, 4));
        p.foreign_edit_prob = rng.uniform();
        p.delete_prob = rng.uniform();
        p.file_count = static_cast<int>(rng.between(1, 4));
        p.alias_prob = 0.3 * rng.uniform();
        SCOPED_TRACE("round " + std::to_string(round));
        expect_matches_truth(gen_synthetic_repo(p));
    }
}

TEST(SyntheticRepo, SoloDeveloperOnlySelfLoops) {
    SyntheticPlan p;
    p.team_trajectory = {1};
    p.commits_per_dev = 10;
    p.foreign_edit_prob = 0.0;
    auto repo = gen_synthetic_repo(p);
    auto mined = mine(repo);
    ASSERT_EQ(mined.size(), 1u);
    EXPECT_EQ(networks::team_fmodr(mined[0].graph, mined[0].members), 0.0);
    EXPECT_GT(mined[0].graph.edge_count(), 0u);
    for (const auto& [e, k] : mined[0].graph.edges) EXPECT_EQ(e.first, e.second);
}

TEST(SyntheticRepo, TwoDevelopersEditingEachOther) {
    SyntheticPlan p;
    p.team_trajectory = {2};
    p.commits_per_dev = 8;
    p.foreign_edit_prob = 1.0;
    p.delete_prob = 0.0;
    auto repo = gen_synthetic_repo(p);
    auto mined = mine(repo);
    ASSERT_EQ(mined.size(), 1u);
    auto ratios = networks::foreign_modification_ratios(mined[0].graph);
    ASSERT_EQ(ratios.size(), 2u);
    for (const auto& [dev, r] : ratios) EXPECT_EQ(r, 1.0) << dev;
    EXPECT_EQ(networks::team_fmodr(mined[0].graph, mined[0].members), 1.0);
}

TEST(SyntheticRepo, LargeTeamIndegree) {
    SyntheticPlan p;
    p.team_trajectory = {12};
    p.commits_per_dev = 3;
    p.edits_per_commit = 2;
    p.foreign_edit_prob = 0.8;
    p.file_count = 4;
    auto repo = gen_synthetic_repo(p);
    auto mined = mine(repo);
    ASSERT_EQ(mined.size(), 1u);
    EXPECT_EQ(mined[0].members.size(), 12u);
    double ind = networks::mean_indegree(networks::flatten(mined[0].graph));
    EXPECT_NEAR(ind, repo.truth.windows[0].ind, 0.5);
    EXPECT_GT(ind, 1.5);
}

TEST(SyntheticRepo, InfeasiblePlans) {
    SyntheticPlan solo;
    solo.team_trajectory = {1, 1};
    EXPECT_ERROR_KIND(gen_synthetic_repo(solo), ErrorKind::infeasible_plan);
    SyntheticPlan empty;
    empty.team_trajectory = {};
    EXPECT_ERROR_KIND(gen_synthetic_repo(empty), ErrorKind::infeasible_plan);
    SyntheticPlan prob;
    prob.delete_prob = 1.5;
    EXPECT_ERROR_KIND(gen_synthetic_repo(prob), ErrorKind::infeasible_plan);
    SyntheticPlan weeks;
    weeks.window_days = 30;
    EXPECT_ERROR_KIND(gen_synthetic_repo(weeks), ErrorKind::infeasible_plan);
}

TEST(SyntheticRepo, DeterministicDumpAndTruthSidecar) {
    SyntheticPlan p;
    p.seed = 77;
    p.alias_prob = 0.2;
    auto a = gen_synthetic_repo(p), b = gen_synthetic_repo(p);
    EXPECT_EQ(ingest::write_dump(a.commits), ingest::write_dump(b.commits));
    p.seed = 78;
    EXPECT_NE(ingest::write_dump(gen_synthetic_repo(p).commits), ingest::write_dump(a.commits));

    TempDir dir;
    write_synthetic_repo(a, dir.path());
    auto back = ingest::read_dump(fs::read_file(dir.path() / "synthetic.commits.jsonl"));
    EXPECT_EQ(back, a.commits);
    auto truth = SyntheticTruth::from_json(nlohmann::json::parse(fs::read_file(dir.path() / "synthetic.truth.json")));
    EXPECT_EQ(truth.to_json(), a.truth.to_json());
}

TEST(SyntheticRepo, PlanFromKv) {
    auto p = SyntheticPlan::from_kv(kv::Document::parse("seed = 9\nteam_trajectory = 2, 5\nforeign_edit_prob = 0.1\n"));
    EXPECT_EQ(p.seed, 9u);
    EXPECT_EQ(p.team_trajectory, (std::vector<int>{2, 5}));
    EXPECT_EQ(p.foreign_edit_prob, 0.1);
    EXPECT_ERROR_KIND(SyntheticPlan::from_kv(kv::Document::parse("team_trajectory = 0\n")), ErrorKind::infeasible_plan);
}

TEST(RandomStream, ReplayMatchesNaiveOracle) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto s = gen_random_stream(seed, 60);
        EXPECT_EQ(ingest::write_dump(s), ingest::write_dump(gen_random_stream(seed, 60)));
        EXPECT_EQ(ownership::replay_ownership(s).events, naive_ownership_replay(s));
    }
    EXPECT_ERROR_KIND(naive_ownership_replay(gen_random_stream(1, 250)), ErrorKind::size_limit_exceeded);
}

TEST(Oracles, SmallGraphs) {
    networks::CoEditGraph k3;
    k3.add_edge("a", "b");
    k3.add_edge("b", "c");
    k3.add_edge("c", "a");
    EXPECT_EQ(apsp_diameter(k3), 1);
    EXPECT_NEAR(dense_eigengap(k3), 3.0, 1e-12);
    EXPECT_NEAR(triple_clustering(k3), 1.0, 1e-15);
    EXPECT_EQ(dp_levenshtein("kitten", "sitting"), 3u);
    networks::CoEditGraph big;
    for (int i = 0; i < 60; ++i) big.nodes.insert("n" + std::to_string(i));
    EXPECT_ERROR_KIND(apsp_diameter(big), ErrorKind::size_limit_exceeded);
}

TEST(Simpson, DefaultSpecShowsReversal) {
    SimpsonSpec s;
    auto f = gen_simpson_dataset(s);
    EXPECT_EQ(f.rows(), 600u);
    EXPECT_GT(analytic_pooled_slope(s), 0.0);
    EXPECT_GT(simple_slope(f.col("log_ts"), f.col("log_prod")), 0.0);
    for (int g = 0; g < 3; ++g) {
        std::vector<double> x, y;
        for (std::size_t i = 0; i < f.rows(); ++i)
            if (f.col("group")[i] == g) {
                x.push_back(f.col("log_ts")[i]);
                y.push_back(f.col("log_prod")[i]);
            }
        EXPECT_LT(simple_slope(x, y), 0.0) << g;
    }
    auto pooled = stats::ols_fit(stats::ModelSpec::of('a', "log_prod", simpson_columns()), f);
    auto controlled = stats::ols_fit(stats::ModelSpec::of('c', "log_prod", simpson_columns()), f);
    EXPECT_GT(pooled.term(stats::Term::ts).beta, 0.0);
    EXPECT_LT(controlled.term(stats::Term::ts).beta, 0.0);
    EXPECT_NEAR(controlled.term(stats::Term::ts).beta, -0.4, 0.1);
    EXPECT_NEAR(simple_slope(f.col("log_ts"), f.col("log_prod")), analytic_pooled_slope(s), 0.15);
}

TEST(Simpson, RejectsDegenerateLayouts) {
    SimpsonSpec one;
    one.groups = {{0.0, 0.0, -0.4, 1.0}};
    EXPECT_ERROR_KIND(gen_simpson_dataset(one), ErrorKind::infeasible_plan);
    SimpsonSpec same;
    same.groups = {{1.0, 2.0, -0.4, 2.0}, {1.0, 2.0, -0.4, 2.0}};
    EXPECT_ERROR_KIND(gen_simpson_dataset(same), ErrorKind::infeasible_plan);
    SimpsonSpec positive;
    positive.groups[1].slope = 0.2;
    EXPECT_ERROR_KIND(gen_simpson_dataset(positive), ErrorKind::infeasible_plan);
}

TEST(Simpson, SpecFromKvAndCsvRoundTrip) {
    auto s = SimpsonSpec::from_kv(kv::Document::parse("seed = 3\nn_per_group = 50\ngroup.a = 0 0 -0.5\ngroup.b = 1 3 -0.5\n"));
    ASSERT_EQ(s.groups.size(), 2u);
    EXPECT_EQ(s.groups[1].mean_log_ts, 2.0);
    auto f = gen_simpson_dataset(s);
    EXPECT_EQ(write_frame_csv(f), write_frame_csv(gen_simpson_dataset(s)));
    auto back = read_frame_csv(write_frame_csv(f));
    EXPECT_EQ(back.names(), f.names());
    EXPECT_EQ(back.col("log_prod"), f.col("log_prod"));
    EXPECT_ERROR_KIND(SimpsonSpec::from_kv(kv::Document::parse("group.a = 1 2\n")), ErrorKind::malformed_input);
}

TEST(MiniCorpus, WritesCatalogDumpsAndConfig) {
    TempDir dir;
    gen_mini_corpus(dir.path(), 3, 5);
    EXPECT_TRUE(std::filesystem::exists(dir.path() / "pipeline.conf"));
    EXPECT_TRUE(std::filesystem::exists(dir.path() / "dumps" / "demo-01.truth.json"));
    auto rows = catalog::read_catalog(fs::read_file(dir.path() / "catalog.csv"));
    EXPECT_EQ(rows.size(), 3u + 1u + 6u);
    TempDir again;
    gen_mini_corpus(again.path(), 3, 5);
    EXPECT_EQ(fs::read_file(dir.path() / "catalog.csv"), fs::read_file(again.path() / "catalog.csv"));
    EXPECT_EQ(fs::read_file(dir.path() / "dumps" / "demo-02.commits.jsonl"),
              fs::read_file(again.path() / "dumps" / "demo-02.commits.jsonl"));
}
