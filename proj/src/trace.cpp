#include "setle/trace.hpp"

#include <cmath>
#include <fstream>
#include <ostream>

#include <nlohmann/json.hpp>

namespace setle {

using nlohmann::json;

namespace {

json obs_to_json(const Observation& o) {
    json j;
    j["width"] = o.width;
    j["height"] = o.height;
    j["agent"] = {o.agent_x, o.agent_y, o.heading};
    j["carrying_key"] = o.carrying_key;
    json objs = json::array();
    for (const auto& obj : o.objects) {
        json jo;
        jo["kind"] = to_string(obj.kind);
        jo["pos"] = {obj.x, obj.y};
        if (obj.kind == ObjKind::Door) {
            jo["open"] = obj.open;
            jo["locked"] = obj.locked;
        }
        objs.push_back(jo);
    }
    j["objects"] = objs;
    return j;
}

Observation obs_from_json(const json& j) {
    Observation o;
    o.width = j.at("width").get<int>();
    o.height = j.at("height").get<int>();
    o.agent_x = j.at("agent").at(0).get<int>();
    o.agent_y = j.at("agent").at(1).get<int>();
    o.heading = j.at("agent").at(2).get<int>();
    o.carrying_key = j.at("carrying_key").get<bool>();
    for (const auto& jo : j.at("objects")) {
        WorldObject obj;
        obj.kind = obj_kind_from_string(jo.at("kind").get<std::string>());
        obj.x = jo.at("pos").at(0).get<int>();
        obj.y = jo.at("pos").at(1).get<int>();
        obj.open = jo.value("open", false);
        obj.locked = jo.value("locked", false);
        o.objects.push_back(obj);
    }
    return o;
}

}  // namespace

void validate_trace(const EpisodeTrace& trace) {
    if (trace.steps.empty()) throw DataError("episode trace has no steps");
    for (const auto& s : trace.steps) {
        if (!std::isfinite(s.reward)) throw DataError("episode trace has non-finite reward");
        if (s.action < 0 || s.action >= kActionCount)
            throw DataError("episode trace has out-of-range action " + std::to_string(s.action));
    }
}

void append_trace_jsonl(std::ostream& os, const EpisodeTrace& trace) {
    validate_trace(trace);
    json header;
    header["task"] = trace.task;
    header["seed"] = trace.seed;
    header["goal_reached"] = trace.goal_reached;
    os << json{{"episode", header}}.dump() << "\n";
    for (const auto& s : trace.steps) {
        json js;
        js["state"] = obs_to_json(s.state);
        js["action"] = s.action;
        js["reward"] = s.reward;
        js["done"] = s.done;
        os << json{{"step", js}}.dump() << "\n";
    }
    os << json{{"final_state", obs_to_json(trace.steps.back().next_state)}}.dump() << "\n";
}

void write_traces_jsonl(const std::string& path, const std::vector<EpisodeTrace>& traces) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot open trace file for writing: " + path);
    for (const auto& t : traces) append_trace_jsonl(os, t);
    if (!os) throw DataError("trace write failed: " + path);
}

std::vector<EpisodeTrace> read_traces_jsonl(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open trace file: " + path);
    std::vector<EpisodeTrace> traces;
    EpisodeTrace current;
    bool in_episode = false;
    std::string line;
    std::size_t lineno = 0;

    auto fail = [&](const std::string& why) {
        throw DataError(why + " (at line " + std::to_string(lineno) + " of " + path + ")");
    };

    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) fail("malformed trace record");
        try {
            if (j.contains("episode")) {
                if (in_episode) fail("episode header before previous final_state");
                current = EpisodeTrace{};
                current.task = j["episode"].at("task").get<std::string>();
                current.seed = j["episode"].at("seed").get<std::uint64_t>();
                current.goal_reached = j["episode"].at("goal_reached").get<bool>();
                in_episode = true;
            } else if (j.contains("step")) {
                if (!in_episode) fail("step record outside an episode");
                const json& js = j["step"];
                TraceStep s;
                s.state = obs_from_json(js.at("state"));
                s.action = js.at("action").get<int>();
                s.reward = js.at("reward").get<double>();
                s.done = js.at("done").get<bool>();
                current.steps.push_back(std::move(s));
            } else if (j.contains("final_state")) {
                if (!in_episode) fail("final_state outside an episode");
                if (current.steps.empty()) fail("episode with no steps");
                Observation terminal = obs_from_json(j["final_state"]);
                for (std::size_t i = 0; i + 1 < current.steps.size(); ++i)
                    current.steps[i].next_state = current.steps[i + 1].state;
                current.steps.back().next_state = terminal;
                validate_trace(current);
                traces.push_back(std::move(current));
                in_episode = false;
            } else {
                fail("unknown trace record type");
            }
        } catch (const json::exception& e) {
            fail(std::string("bad trace field: ") + e.what());
        }
    }
    if (in_episode) fail("trace file ends mid-episode");
    return traces;
}

}  // namespace setle
