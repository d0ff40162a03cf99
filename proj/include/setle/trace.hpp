#pragma once

// JSONL episode trace files: one episode header record, one record per step
// carrying the pre-step observation, and a final record with the terminal
// observation.

#include <string>
#include <vector>

#include "setle/envsim.hpp"

namespace setle {

void append_trace_jsonl(std::ostream& os, const EpisodeTrace& trace);
void write_traces_jsonl(const std::string& path, const std::vector<EpisodeTrace>& traces);
std::vector<EpisodeTrace> read_traces_jsonl(const std::string& path);

void validate_trace(const EpisodeTrace& trace);  // nonempty, finite rewards

}  // namespace setle
