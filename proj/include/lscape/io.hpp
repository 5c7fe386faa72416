#pragma once

#include <json.hpp>
#include <string>

#include "lscape/optimize.hpp"

namespace lscape {

/// Dataset loader. CSV: header x1..xd,label[,weight], labels +/-1 (binary)
/// or 1..R (multiclass). JSON: explicit points/labels/weights/mode object.
/// Weights are normalized to sum to one when normalize is set.
LabeledDataset load_dataset(const std::string& path, bool normalize = true);
LabeledDataset dataset_from_json(const nlohmann::json& j, bool normalize = true);
nlohmann::json dataset_to_json(const LabeledDataset& data);

Params params_from_json(const nlohmann::json& j);
nlohmann::json params_to_json(const Params& p);
Params load_params(const std::string& path);
void save_params(const Params& p, const std::string& path);

ReplicatedParams replicated_from_json(const nlohmann::json& j);
nlohmann::json replicated_to_json(const ReplicatedParams& r);

struct TrainConfig {
    std::string mode = "binary";  // binary | multiclass | penalty
    double alpha = 0.25;
    std::vector<int> hidden = {2};
    bool output_bias = true;
    Schedule schedule;
    int max_iters = 10000;
    int check_every = 100;
    double eps_crit = 1e-6;
    int starts = 1;
    double init_scale = 1.0;
    double gamma = 1.0;
    std::uint64_t seed = 0;
};

TrainConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const TrainConfig& c);
TrainConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});

/// Stable 64-bit digest of a JSON document (canonical dump, shortest
/// round-trip float serialization).
std::uint64_t report_digest(const nlohmann::json& j);

void write_json(const nlohmann::json& j, const std::string& path);
nlohmann::json read_json(const std::string& path);

}  // namespace lscape
