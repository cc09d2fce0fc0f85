#include "rlab/dataset.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace rlab {

namespace {

constexpr const char* kFormatName = "RLDS";
constexpr int kFormatVersion = 1;

void validate_header(const Dataset& ds) {
    if (ds.obs_dim <= 0 || ds.action_count <= 0)
        throw std::invalid_argument("dataset: obs_dim and action_count must be > 0");
}

size_t record_width(int obs_dim) {
    return 2 * static_cast<size_t>(obs_dim) + 7; // doubles per record
}

void fill_record(const Transition& t, int obs_dim, std::vector<double>& rec) {
    size_t k = 0;
    for (int i = 0; i < obs_dim; ++i) rec[k++] = t.state[i];
    rec[k++] = static_cast<double>(t.action);
    rec[k++] = t.reward;
    for (int i = 0; i < obs_dim; ++i) rec[k++] = t.next_state[i];
    rec[k++] = t.terminal ? 1.0 : 0.0;
    rec[k++] = t.truncated ? 1.0 : 0.0;
    rec[k++] = static_cast<double>(t.policy_stamp);
    rec[k++] = static_cast<double>(t.env_step);
    rec[k++] = static_cast<double>(t.episode_id);
}

Transition parse_record(const std::vector<double>& rec, int obs_dim, int action_count,
                        int64_t index) {
    Transition t;
    size_t k = 0;
    std::vector<double> state(rec.begin() + static_cast<long>(k),
                              rec.begin() + static_cast<long>(k + obs_dim));
    k += static_cast<size_t>(obs_dim);
    const double action = rec[k++];
    if (action < 0 || action >= action_count || action != std::floor(action))
        throw DatasetParseError("dataset: invalid action value", index);
    const double reward = rec[k++];
    if (!std::isfinite(reward)) throw DatasetParseError("dataset: non-finite reward", index);
    std::vector<double> next_state(rec.begin() + static_cast<long>(k),
                                   rec.begin() + static_cast<long>(k + obs_dim));
    k += static_cast<size_t>(obs_dim);
    t.state = Obs::from_dense(state);
    t.next_state = Obs::from_dense(next_state);
    t.action = static_cast<int>(action);
    t.reward = reward;
    t.terminal = rec[k++] != 0.0;
    t.truncated = rec[k++] != 0.0;
    t.policy_stamp = static_cast<int64_t>(rec[k++]);
    t.env_step = static_cast<int64_t>(rec[k++]);
    t.episode_id = static_cast<int64_t>(rec[k++]);
    if (t.policy_stamp < 0) throw DatasetParseError("dataset: negative policy_stamp", index);
    return t;
}

} // namespace

void write_dataset_binary(const Dataset& ds, const std::string& path) {
    validate_header(ds);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("dataset: cannot open " + path + " for writing");
    f << kFormatName << ' ' << kFormatVersion << ' ' << ds.obs_dim << ' '
      << ds.action_count << '\n';
    std::vector<double> rec(record_width(ds.obs_dim));
    for (const Transition& t : ds.transitions) {
        fill_record(t, ds.obs_dim, rec);
        f.write(reinterpret_cast<const char*>(rec.data()),
                static_cast<std::streamsize>(rec.size() * sizeof(double)));
    }
    if (!f) throw std::runtime_error("dataset: write failed for " + path);
}

Dataset read_dataset_binary(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("dataset: cannot open " + path);
    std::string header;
    if (!std::getline(f, header)) throw DatasetParseError("dataset: missing header line", -1);
    std::istringstream hs(header);
    std::string name;
    int version = 0;
    Dataset ds;
    if (!(hs >> name >> version >> ds.obs_dim >> ds.action_count) || name != kFormatName)
        throw DatasetParseError("dataset: malformed header '" + header + "'", -1);
    if (version != kFormatVersion)
        throw DatasetParseError("dataset: unsupported version " + std::to_string(version), -1);
    if (ds.obs_dim <= 0 || ds.action_count <= 0)
        throw DatasetParseError("dataset: invalid header dimensions", -1);
    std::vector<double> rec(record_width(ds.obs_dim));
    const std::streamsize bytes = static_cast<std::streamsize>(rec.size() * sizeof(double));
    int64_t index = 0;
    while (true) {
        f.read(reinterpret_cast<char*>(rec.data()), bytes);
        if (f.gcount() == 0 && f.eof()) break;
        if (f.gcount() != bytes)
            throw DatasetParseError("dataset: truncated record", index);
        ds.transitions.push_back(parse_record(rec, ds.obs_dim, ds.action_count, index));
        ++index;
    }
    return ds;
}

void write_dataset_jsonl(const Dataset& ds, const std::string& path) {
    validate_header(ds);
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("dataset: cannot open " + path + " for writing");
    nlohmann::json header;
    header["format"] = kFormatName;
    header["version"] = kFormatVersion;
    header["obs_dim"] = ds.obs_dim;
    header["action_count"] = ds.action_count;
    f << header.dump() << '\n';
    for (const Transition& t : ds.transitions) {
        nlohmann::json j;
        j["state"] = t.state.to_dense();
        j["action"] = t.action;
        j["reward"] = t.reward;
        j["next_state"] = t.next_state.to_dense();
        j["terminal"] = t.terminal;
        j["truncated"] = t.truncated;
        j["policy_stamp"] = t.policy_stamp;
        j["env_step"] = t.env_step;
        j["episode_id"] = t.episode_id;
        f << j.dump() << '\n';
    }
    if (!f) throw std::runtime_error("dataset: write failed for " + path);
}

Dataset read_dataset_jsonl(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("dataset: cannot open " + path);
    std::string line;
    if (!std::getline(f, line)) throw DatasetParseError("dataset: missing header line", -1);
    Dataset ds;
    try {
        const nlohmann::json header = nlohmann::json::parse(line);
        if (header.at("format").get<std::string>() != kFormatName ||
            header.at("version").get<int>() != kFormatVersion)
            throw DatasetParseError("dataset: malformed jsonl header", -1);
        ds.obs_dim = header.at("obs_dim").get<int>();
        ds.action_count = header.at("action_count").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw DatasetParseError(std::string("dataset: bad jsonl header: ") + e.what(), -1);
    }
    if (ds.obs_dim <= 0 || ds.action_count <= 0)
        throw DatasetParseError("dataset: invalid header dimensions", -1);
    int64_t index = 0;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        try {
            const nlohmann::json j = nlohmann::json::parse(line);
            Transition t;
            t.state = Obs::from_dense(j.at("state").get<std::vector<double>>());
            t.next_state = Obs::from_dense(j.at("next_state").get<std::vector<double>>());
            t.action = j.at("action").get<int>();
            t.reward = j.at("reward").get<double>();
            t.terminal = j.at("terminal").get<bool>();
            t.truncated = j.at("truncated").get<bool>();
            t.policy_stamp = j.at("policy_stamp").get<int64_t>();
            t.env_step = j.at("env_step").get<int64_t>();
            t.episode_id = j.at("episode_id").get<int64_t>();
            if (t.state.dim() != ds.obs_dim || t.next_state.dim() != ds.obs_dim)
                throw DatasetParseError("dataset: observation dimension mismatch", index);
            if (t.action < 0 || t.action >= ds.action_count)
                throw DatasetParseError("dataset: invalid action value", index);
            ds.transitions.push_back(std::move(t));
        } catch (const nlohmann::json::exception& e) {
            throw DatasetParseError(std::string("dataset: bad jsonl record: ") + e.what(),
                                    index);
        }
        ++index;
    }
    return ds;
}

} // namespace rlab
