#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <set>

#include "setle/envsim.hpp"
#include "setle/trace.hpp"

using namespace setle;

namespace {

bool obs_equal(const Observation& a, const Observation& b) {
    if (std::tie(a.width, a.height, a.agent_x, a.agent_y, a.heading, a.carrying_key) !=
        std::tie(b.width, b.height, b.agent_x, b.agent_y, b.heading, b.carrying_key))
        return false;
    if (a.objects.size() != b.objects.size()) return false;
    for (std::size_t i = 0; i < a.objects.size(); ++i) {
        const auto& x = a.objects[i];
        const auto& y = b.objects[i];
        if (std::tie(x.kind, x.x, x.y, x.open, x.locked) !=
            std::tie(y.kind, y.x, y.y, y.open, y.locked))
            return false;
    }
    return true;
}

int count_kind(const Observation& o, ObjKind k) {
    int c = 0;
    for (const auto& obj : o.objects) c += obj.kind == k;
    return c;
}

}  // namespace

TEST_CASE("reset determinism and task layout") {
    SUBCASE("Empty-5 resets identically for a fixed seed") {
        GridWorld a = GridWorld::make(parse_task("Empty-5"), 0);
        GridWorld b = GridWorld::make(parse_task("Empty-5"), 0);
        CHECK(obs_equal(a.observe(), b.observe()));
    }
    SUBCASE("DoorKey-5 has exactly one key, one door, one goal") {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            Observation o = GridWorld::make(parse_task("DoorKey-5"), seed).observe();
            CHECK(count_kind(o, ObjKind::Key) == 1);
            CHECK(count_kind(o, ObjKind::Door) == 1);
            CHECK(count_kind(o, ObjKind::Goal) == 1);
        }
    }
    SUBCASE("invalid size rejected") {
        TaskSpec bad;
        bad.size = 0;
        CHECK_THROWS_AS(GridWorld::make(bad, 0), ConfigError);
    }
    SUBCASE("different seeds give different DoorKey layouts eventually") {
        std::set<std::string> layouts;
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            Observation o = GridWorld::make(parse_task("DoorKey-8"), seed).observe();
            std::string key;
            for (const auto& obj : o.objects)
                key += std::to_string(static_cast<int>(obj.kind)) + "," +
                       std::to_string(obj.x) + "," + std::to_string(obj.y) + ";";
            key += std::to_string(o.agent_x) + "," + std::to_string(o.agent_y);
            layouts.insert(key);
        }
        CHECK(layouts.size() > 3);
    }
}

TEST_CASE("step semantics") {
    SUBCASE("forward into a wall leaves the position unchanged, reward 0") {
        GridWorld env = GridWorld::make(parse_task("Empty-5"), 0);
        env.step(Action::TurnLeft);  // face north into the border wall
        Observation before = env.observe();
        StepResult r = env.step(Action::Forward);
        CHECK(r.reward == 0.0);
        CHECK(r.obs.agent_x == before.agent_x);
        CHECK(r.obs.agent_y == before.agent_y);
    }
    SUBCASE("reach goal at step 5 of max 20 pays 0.775") {
        GridWorld env = GridWorld::make(parse_task("Empty-5"), 0);
        env.set_max_steps(20);
        env.step(Action::Forward);
        env.step(Action::Forward);
        env.step(Action::TurnRight);
        env.step(Action::Forward);
        StepResult r = env.step(Action::Forward);
        CHECK(r.done);
        CHECK(env.goal_reached());
        CHECK(r.reward == doctest::Approx(1.0 - 0.9 * (5.0 / 20.0)));
        CHECK(r.reward == doctest::Approx(0.775));
        CHECK_THROWS_AS(env.step(Action::Forward), ConfigError);
    }
    SUBCASE("timeout terminates with zero reward") {
        GridWorld env = GridWorld::make(parse_task("Empty-5"), 0);
        env.set_max_steps(20);
        StepResult r{};
        for (int i = 0; i < 20; ++i) r = env.step(Action::TurnLeft);
        CHECK(r.done);
        CHECK_FALSE(env.goal_reached());
        CHECK(r.reward == 0.0);
    }
    SUBCASE("a BFS plan through DoorKey succeeds end to end") {
        GridWorld env = GridWorld::make(parse_task("DoorKey-5"), 3);
        auto plan = bfs_plan(env);
        REQUIRE(plan.has_value());
        double total = 0.0;
        for (Action a : *plan) total += env.step(a).reward;
        CHECK(env.goal_reached());
        CHECK(total > 0.0);
    }
    SUBCASE("rewards stay in [0, 1] and are positive only at the goal") {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            EpisodeTrace t = random_rollout(parse_task("Empty-5"), seed, 50);
            for (const auto& s : t.steps) {
                CHECK(s.reward >= 0.0);
                CHECK(s.reward <= 1.0);
                if (s.reward > 0.0) CHECK(s.done);
            }
        }
    }
}

TEST_CASE("transition determinism: same action sequence, same trajectory") {
    GridWorld a = GridWorld::make(parse_task("DoorKey-8"), 11);
    GridWorld b = GridWorld::make(parse_task("DoorKey-8"), 11);
    Rng rng(99);
    for (int i = 0; i < 60 && !a.done(); ++i) {
        Action act = static_cast<Action>(rng.next_below(kActionCount));
        StepResult ra = a.step(act);
        StepResult rb = b.step(act);
        CHECK(obs_equal(ra.obs, rb.obs));
        CHECK(ra.reward == rb.reward);
    }
}

TEST_CASE("random_rollout honors cap and determinism") {
    EpisodeTrace t1 = random_rollout(parse_task("Empty-5"), 7, 9);
    CHECK(t1.steps.size() <= 9);
    CHECK(!t1.steps.empty());
    EpisodeTrace t2 = random_rollout(parse_task("Empty-5"), 7, 9);
    REQUIRE(t1.steps.size() == t2.steps.size());
    for (std::size_t i = 0; i < t1.steps.size(); ++i) {
        CHECK(t1.steps[i].action == t2.steps[i].action);
        CHECK(t1.steps[i].reward == t2.steps[i].reward);
    }
}

TEST_CASE("random policy success count on Empty-5 (regression)") {
    int successes = 0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed)
        successes += random_rollout(parse_task("Empty-5"), seed, 9).goal_reached;
    CHECK(successes > 0);
    // frozen regression value for the fixed seed batch 0..999
    CHECK(successes == 6);
}

TEST_CASE("reachability: BFS plan exists within max_steps for all four tasks") {
    for (const char* name : {"Empty-5", "Empty-8", "DoorKey-5", "DoorKey-8"}) {
        for (std::uint64_t seed = 0; seed < 3; ++seed) {
            GridWorld env = GridWorld::make(parse_task(name), seed);
            auto plan = bfs_plan(env);
            REQUIRE_MESSAGE(plan.has_value(), name);
            CHECK(static_cast<int>(plan->size()) <= env.max_steps());
            for (Action a : *plan) env.step(a);
            CHECK(env.goal_reached());
        }
    }
}

TEST_CASE("guided rollouts reach DoorKey goals often enough to collect data") {
    int successes = 0;
    for (std::uint64_t seed = 0; seed < 40; ++seed)
        successes += guided_rollout(parse_task("DoorKey-8"), seed, 40, 0.35).goal_reached;
    MESSAGE("guided successes = ", successes);
    CHECK(successes >= 10);
}

TEST_CASE("trace JSONL round-trip") {
    std::vector<EpisodeTrace> traces;
    for (std::uint64_t seed = 0; seed < 4; ++seed)
        traces.push_back(random_rollout(parse_task("DoorKey-5"), seed, 9));
    write_traces_jsonl("t_roundtrip.jsonl", traces);
    auto loaded = read_traces_jsonl("t_roundtrip.jsonl");
    REQUIRE(loaded.size() == traces.size());
    for (std::size_t i = 0; i < traces.size(); ++i) {
        CHECK(loaded[i].task == traces[i].task);
        CHECK(loaded[i].goal_reached == traces[i].goal_reached);
        REQUIRE(loaded[i].steps.size() == traces[i].steps.size());
        for (std::size_t s = 0; s < traces[i].steps.size(); ++s) {
            CHECK(loaded[i].steps[s].action == traces[i].steps[s].action);
            CHECK(loaded[i].steps[s].reward == traces[i].steps[s].reward);
            CHECK(obs_equal(loaded[i].steps[s].state, traces[i].steps[s].state));
            CHECK(obs_equal(loaded[i].steps[s].next_state, traces[i].steps[s].next_state));
        }
    }
    std::remove("t_roundtrip.jsonl");
}

TEST_CASE("malformed trace reports line number") {
    {
        std::ofstream out("t_bad.jsonl");
        out << R"({"episode":{"task":"Empty-5","seed":1,"goal_reached":false}})" << "\n";
        out << "this is not json\n";
    }
    try {
        read_traces_jsonl("t_bad.jsonl");
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    std::remove("t_bad.jsonl");
}
