#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "setle/set_builder.hpp"

using namespace setle;

namespace {

Observation make_obs(int ax, int ay, int heading,
                     const std::vector<std::pair<ObjKind, std::pair<int, int>>>& objs,
                     bool carrying = false) {
    Observation o;
    o.width = 5;
    o.height = 5;
    o.agent_x = ax;
    o.agent_y = ay;
    o.heading = heading;
    o.carrying_key = carrying;
    for (const auto& [kind, pos] : objs) o.objects.push_back({kind, pos.first, pos.second});
    std::sort(o.objects.begin(), o.objects.end(), [](const WorldObject& a, const WorldObject& b) {
        return std::tie(a.y, a.x, a.kind) < std::tie(b.y, b.x, b.kind);
    });
    return o;
}

EpisodeTrace one_step_goal_trace() {
    EpisodeTrace t;
    t.task = "Toy-5";
    t.seed = 1;
    t.goal_reached = true;
    TraceStep s;
    s.state = make_obs(1, 1, 1, {{ObjKind::Key, {2, 2}}, {ObjKind::Goal, {3, 3}}});
    s.action = static_cast<int>(Action::Forward);
    s.reward = 0.9;
    s.next_state = make_obs(2, 1, 1, {{ObjKind::Key, {2, 2}}, {ObjKind::Goal, {3, 3}}});
    s.done = true;
    t.steps.push_back(s);
    return t;
}

std::map<NodeKind, int> kind_counts(const MemoryStore& store, const SetSubgraph& sg) {
    std::map<NodeKind, int> counts;
    for (NodeId id : sg.members) counts[store.node(id).kind]++;
    return counts;
}

}  // namespace

TEST_CASE("label_episode rules") {
    EpisodeTrace t;
    t.task = "x";
    t.steps.resize(4);
    for (auto& s : t.steps) s.reward = 0.0;
    t.goal_reached = true;
    CHECK(label_episode(t, 9) == SetLabel::Success);  // goal at step 4, cap 9

    EpisodeTrace nine;
    nine.steps.resize(9);
    for (auto& s : nine.steps) s.reward = 0.0;
    nine.goal_reached = false;
    CHECK(label_episode(nine, 9) == SetLabel::Failure);  // ran out without the goal

    EpisodeTrace ten;
    ten.steps.resize(10);
    for (auto& s : ten.steps) s.reward = 0.0;
    ten.goal_reached = true;
    CHECK(label_episode(ten, 9) == SetLabel::Failure);  // goal but over the cap

    EpisodeTrace empty;
    CHECK_THROWS_AS(label_episode(empty, 9), DataError);
}

TEST_CASE("dedup_object") {
    StoreConfig cfg;
    cfg.d_in[static_cast<int>(NodeKind::Object)] = 2;
    MemoryStore store(cfg);

    auto [id1, reused1] = dedup_object(store, {1.0f, 0.0f}, 0.95);
    CHECK_FALSE(reused1);

    SUBCASE("identical feature reuses with similarity 1") {
        auto [id2, reused2] = dedup_object(store, {1.0f, 0.0f}, 0.95);
        CHECK(reused2);
        CHECK(id2 == id1);
        CHECK(store.most_similar_object({1.0f, 0.0f})->second == doctest::Approx(1.0));
    }
    SUBCASE("orthogonal feature becomes a new node") {
        auto [id2, reused2] = dedup_object(store, {0.0f, 1.0f}, 0.95);
        CHECK_FALSE(reused2);
        CHECK(id2 != id1);
    }
    SUBCASE("45-degree feature: similarity ~0.7071, new node") {
        const float inv_sqrt2 = static_cast<float>(1.0 / std::sqrt(2.0));
        const double sim = cosine({inv_sqrt2, inv_sqrt2}, store.node(id1).feature);
        CHECK(sim == doctest::Approx(0.70710678).epsilon(1e-6));
        auto [id2, reused2] = dedup_object(store, {inv_sqrt2, inv_sqrt2}, 0.95);
        CHECK_FALSE(reused2);
        CHECK(id2 != id1);
    }
    SUBCASE("zero vector rejected") {
        CHECK_THROWS_AS(dedup_object(store, {0.0f, 0.0f}, 0.95), DataError);
    }
}

TEST_CASE("build_set: one-step goal trace") {
    FeatureProvider features;
    MemoryStore store(features.store_config());
    SetBuilder builder(store, features);
    SetSubgraph sg = builder.build_set(one_step_goal_trace());

    auto counts = kind_counts(store, sg);
    CHECK(counts[NodeKind::Set] == 1);
    CHECK(counts[NodeKind::State] == 2);  // T+1 states with terminal included
    CHECK(counts[NodeKind::Object] <= 2);
    CHECK(counts[NodeKind::Object] == 2);  // Key and Goal kinds
    CHECK(counts[NodeKind::Affordance] == 1);
    CHECK(sg.label == SetLabel::Success);
    CHECK(sg.task == "Toy-5");
    store.check_schema_closure();

    // affordance metadata mirrors the trace step
    for (NodeId id : sg.members) {
        const Node& n = store.node(id);
        if (n.kind == NodeKind::Affordance) {
            CHECK(n.meta.at("action") == std::to_string(static_cast<int>(Action::Forward)));
            CHECK(std::stod(n.meta.at("reward")) == doctest::Approx(0.9));
        }
    }
}

TEST_CASE("build_set: object sharing across traces of the same task") {
    FeatureProvider features;
    MemoryStore store(features.store_config());
    SetBuilder builder(store, features);
    SetSubgraph a = builder.build_set(one_step_goal_trace());
    EpisodeTrace second = one_step_goal_trace();
    second.seed = 2;
    SetSubgraph b = builder.build_set(second);

    std::vector<NodeId> objs_a, objs_b;
    for (NodeId id : a.members)
        if (store.node(id).kind == NodeKind::Object) objs_a.push_back(id);
    for (NodeId id : b.members)
        if (store.node(id).kind == NodeKind::Object) objs_b.push_back(id);
    CHECK(objs_a == objs_b);  // the Key/Goal nodes are reused, not duplicated
}

TEST_CASE("build_set: pure navigation keeps the graph connected") {
    FeatureProvider features;
    MemoryStore store(features.store_config());
    SetBuilder builder(store, features);
    EpisodeTrace t;
    t.task = "Nav";
    t.goal_reached = false;
    for (int i = 0; i < 3; ++i) {
        TraceStep s;
        s.state = make_obs(1 + i, 1, 1, {});
        s.action = static_cast<int>(Action::Forward);
        s.reward = 0.0;
        s.next_state = make_obs(2 + i, 1, 1, {});
        s.done = i == 2;
        t.steps.push_back(s);
    }
    SetSubgraph sg = builder.build_set(t);
    auto counts = kind_counts(store, sg);
    CHECK(counts[NodeKind::Object] == 0);
    CHECK(counts[NodeKind::State] == 4);
    CHECK(store.is_weakly_connected(sg.set_id, store.set_members(sg.set_id)));
    int has_object_edges = 0;
    for (const Edge& e : sg.edges) has_object_edges += e.kind == EdgeKind::HasObject;
    CHECK(has_object_edges == 0);
}

TEST_CASE("build_set invariants on real rollouts") {
    FeatureProvider features;
    MemoryStore store(features.store_config());
    SetBuilder builder(store, features);
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        EpisodeTrace t = random_rollout(parse_task("DoorKey-5"), seed, 9);
        SetSubgraph sg = builder.build_set(t);
        const int T = static_cast<int>(t.steps.size());
        CHECK(static_cast<int>(sg.state_ids.size()) == T + 1);
        auto counts = kind_counts(store, sg);
        CHECK(counts[NodeKind::Affordance] == T);
        // Precedes edges sorted by source timestep are exactly t -> t+1
        int precedes = 0;
        for (const Edge& e : sg.edges)
            if (e.kind == EdgeKind::Precedes) {
                ++precedes;
                const long ts = std::stol(store.node(e.src).meta.at("t"));
                const long td = std::stol(store.node(e.dst).meta.at("t"));
                CHECK(td == ts + 1);
            }
        CHECK(precedes == T);
    }
    store.check_schema_closure();

    // dedup invariant across the full build sequence
    const auto& objs = store.object_ids();
    for (std::size_t i = 0; i < objs.size(); ++i)
        for (std::size_t j = i + 1; j < objs.size(); ++j) {
            const double sim = cosine(store.node(objs[i]).feature, store.node(objs[j]).feature);
            CHECK(sim < store.tau_sim());
        }
}

TEST_CASE("build_set determinism: identical traces give identical graphs") {
    FeatureProvider features;
    EpisodeTrace t = random_rollout(parse_task("DoorKey-5"), 5, 9);

    MemoryStore s1(features.store_config());
    MemoryStore s2(features.store_config());
    SetBuilder b1(s1, features);
    SetBuilder b2(s2, features);
    SetSubgraph g1 = b1.build_set(t);
    SetSubgraph g2 = b2.build_set(t);

    CHECK(g1.members == g2.members);  // deterministic id allocation
    CHECK(g1.edges == g2.edges);
    REQUIRE(s1.node_count() == s2.node_count());
    for (const auto& [id, n] : s1.nodes()) {
        const Node& m = s2.node(id);
        CHECK(m.kind == n.kind);
        CHECK(m.feature == n.feature);
    }
}

TEST_CASE("interaction nodes appear for contact events and obey the mode flag") {
    FeatureProvider features;
    EpisodeTrace t;
    t.task = "Contact";
    t.goal_reached = false;
    TraceStep s;
    s.state = make_obs(1, 1, 1, {{ObjKind::Key, {2, 1}}});  // key directly ahead
    s.action = static_cast<int>(Action::Pickup);
    s.reward = 0.0;
    s.next_state = make_obs(1, 1, 1, {}, true);
    s.done = true;
    t.steps.push_back(s);

    SUBCASE("interactions on") {
        MemoryStore store(features.store_config());
        SetBuilder builder(store, features);
        SetSubgraph sg = builder.build_set(t);
        auto counts = kind_counts(store, sg);
        CHECK(counts[NodeKind::Interaction] == 1);
        int depends = 0, emerges = 0;
        for (const Edge& e : sg.edges) {
            depends += e.kind == EdgeKind::DependsOn;
            emerges += e.kind == EdgeKind::EmergesFrom;
        }
        CHECK(depends == 1);
        CHECK(emerges == 1);
    }
    SUBCASE("minigrid-style build omits interaction nodes") {
        MemoryStore store(features.store_config());
        BuildOptions opts;
        opts.interaction_nodes = false;
        SetBuilder builder(store, features, opts);
        SetSubgraph sg = builder.build_set(t);
        CHECK(kind_counts(store, sg)[NodeKind::Interaction] == 0);
    }
    SUBCASE("same contact in two episodes shares the interaction node") {
        MemoryStore store(features.store_config());
        SetBuilder builder(store, features);
        SetSubgraph g1 = builder.build_set(t);
        EpisodeTrace t2 = t;
        t2.seed = 9;
        SetSubgraph g2 = builder.build_set(t2);
        std::vector<NodeId> i1, i2;
        for (NodeId id : g1.members)
            if (store.node(id).kind == NodeKind::Interaction) i1.push_back(id);
        for (NodeId id : g2.members)
            if (store.node(id).kind == NodeKind::Interaction) i2.push_back(id);
        CHECK(i1 == i2);
    }
}

TEST_CASE("build_partial_window boundaries") {
    FeatureProvider features;
    EpisodeTrace t = random_rollout(parse_task("Empty-5"), 3, 9);
    REQUIRE(t.steps.size() >= 8);

    SUBCASE("t=1, k=4: left-truncated to two states") {
        MemoryStore store(features.store_config());
        SetBuilder builder(store, features);
        SetSubgraph w = builder.build_partial_window(t, 1, 4);
        CHECK(w.state_ids.size() == 2);
    }
    SUBCASE("t=7, k=4: states 4..7") {
        MemoryStore store(features.store_config());
        SetBuilder builder(store, features);
        SetSubgraph w = builder.build_partial_window(t, 7, 4);
        REQUIRE(w.state_ids.size() == 4);
        for (int i = 0; i < 4; ++i)
            CHECK(store.node(w.state_ids[static_cast<std::size_t>(i)]).meta.at("t") ==
                  std::to_string(4 + i));
    }
    SUBCASE("k=1: single state window") {
        MemoryStore store(features.store_config());
        SetBuilder builder(store, features);
        SetSubgraph w = builder.build_partial_window(t, 5, 1);
        CHECK(w.state_ids.size() == 1);
    }
    SUBCASE("windows are deterministic for fixed input") {
        MemoryStore sa(features.store_config()), sb(features.store_config());
        SetBuilder ba(sa, features), bb(sb, features);
        SetSubgraph wa = ba.build_partial_window(t, 6, 4);
        SetSubgraph wb = bb.build_partial_window(t, 6, 4);
        CHECK(wa.members == wb.members);
        CHECK(wa.edges == wb.edges);
    }
}

TEST_CASE("working memory grows a schema-valid episode graph") {
    FeatureProvider features;
    GridWorld env = GridWorld::make(parse_task("DoorKey-5"), 3);
    WorkingMemory wm(features, BuildOptions{}, "DoorKey-5");
    wm.begin_episode(env.observe());
    auto plan = bfs_plan(env);
    REQUIRE(plan.has_value());
    for (Action a : *plan) {
        StepResult r = env.step(a);
        wm.record_step(static_cast<int>(a), r.reward, r.obs);
    }
    CHECK(wm.state_count() == static_cast<int>(plan->size()) + 1);
    wm.store().check_schema_closure();

    SetSubgraph w = wm.window(4);
    CHECK(w.state_ids.size() == std::min<std::size_t>(4, static_cast<std::size_t>(wm.state_count())));
    // windows contain the affordances between their states
    int affs = 0;
    for (NodeId id : w.members) affs += wm.store().node(id).kind == NodeKind::Affordance;
    CHECK(affs >= static_cast<int>(w.state_ids.size()) - 1);
    // a later window still works and ids never clash with LTM-range ids
    for (NodeId id : w.members) CHECK(id >= WorkingMemory::kLocalIdBase);
}
