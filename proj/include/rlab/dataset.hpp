#pragma once

#include <string>
#include <vector>

#include "rlab/transition.hpp"

namespace rlab {

/// Offline dataset: header line "RLDS 1 <obs_dim> <action_count>", then
/// fixed-width little-endian records in which every field is a 64-bit float:
/// state[obs_dim], action, reward, next_state[obs_dim], terminal, truncated,
/// policy_stamp, env_step, episode_id.
struct Dataset {
    int obs_dim = 0;
    int action_count = 0;
    std::vector<Transition> transitions;
};

struct DatasetParseError : std::runtime_error {
    DatasetParseError(const std::string& msg, int64_t record)
        : std::runtime_error(msg + " (record " + std::to_string(record) + ")"),
          record_index(record) {}
    int64_t record_index;
};

void write_dataset_binary(const Dataset& ds, const std::string& path);
Dataset read_dataset_binary(const std::string& path);

/// JSONL debug variant: one object per line with the same field names as the
/// binary records.
void write_dataset_jsonl(const Dataset& ds, const std::string& path);
Dataset read_dataset_jsonl(const std::string& path);

} // namespace rlab
