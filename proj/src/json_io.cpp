#include "psrlab/json_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "psrlab/errors.hpp"

namespace psrlab {

using nlohmann::json;

nlohmann::json mdp_to_json(const Mdp& mdp) {
    json j;
    j["num_states"] = mdp.num_states;
    j["num_actions"] = mdp.num_actions;
    j["transitions"] = mdp.transitions;  // row-major [s][a][s']
    j["rewards"] = mdp.rewards;
    j["initial_dist"] = mdp.initial_dist;
    return j;
}

Mdp mdp_from_json(const nlohmann::json& j) {
    Mdp mdp;
    mdp.num_states = j.at("num_states").get<int>();
    mdp.num_actions = j.at("num_actions").get<int>();
    mdp.transitions = j.at("transitions").get<std::vector<double>>();
    mdp.rewards = j.at("rewards").get<std::vector<double>>();
    mdp.initial_dist = j.at("initial_dist").get<std::vector<double>>();
    mdp.validate();
    return mdp;
}

nlohmann::json family_to_json(const ParameterFamily& family) {
    json members = json::array();
    for (const Mdp& m : family.members) members.push_back(mdp_to_json(m));
    json j;
    j["members"] = members;
    j["prior"] = family.prior;
    j["metadata"] = {{"generator", family.meta.generator},
                     {"seed", family.meta.seed},
                     {"id", family.id}};
    return j;
}

ParameterFamily family_from_json(const nlohmann::json& j) {
    std::vector<Mdp> members;
    for (const auto& jm : j.at("members")) members.push_back(mdp_from_json(jm));
    std::vector<double> prior = j.at("prior").get<std::vector<double>>();
    ParameterFamily::Metadata meta;
    if (j.contains("metadata")) {
        const auto& jm = j.at("metadata");
        meta.generator = jm.value("generator", std::string{});
        meta.seed = jm.value("seed", std::uint64_t{0});
    }
    return finalize_family(std::move(members), std::move(prior), std::move(meta));
}

nlohmann::json dataset_to_json(const OfflineDataset& dataset) {
    json meta;
    meta["beta"] = dataset.meta.beta;
    if (std::isinf(dataset.meta.lambda))
        meta["lambda"] = "inf";
    else
        meta["lambda"] = dataset.meta.lambda;
    meta["seed"] = dataset.meta.seed;
    meta["true_member_index"] = dataset.meta.true_member_index;

    json j;
    j["states"] = dataset.states;
    j["actions"] = dataset.actions;
    j["meta"] = meta;
    return j;
}

OfflineDataset dataset_from_json(const nlohmann::json& j) {
    OfflineDataset d;
    d.states = j.at("states").get<std::vector<int>>();
    d.actions = j.at("actions").get<std::vector<int>>();
    if (d.states.size() != d.actions.size() + 1)
        throw ValidationError("dataset: inconsistent lengths");
    if (j.contains("meta")) {
        const auto& jm = j.at("meta");
        d.meta.beta = jm.value("beta", 0.0);
        if (jm.contains("lambda")) {
            if (jm.at("lambda").is_string())
                d.meta.lambda = std::numeric_limits<double>::infinity();
            else
                d.meta.lambda = jm.at("lambda").get<double>();
        }
        d.meta.seed = jm.value("seed", std::uint64_t{0});
        d.meta.true_member_index = jm.value("true_member_index", -1);
    }
    return d;
}

nlohmann::json posterior_to_json(const PosteriorState& post) {
    json j;
    j["weights"] = post.normalized();
    j["epoch"] = post.epoch;
    j["family"] = post.family_ref;
    return j;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open file: " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void write_text_file_atomic(const std::string& path,
                            const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ValidationError("cannot write file: " + tmp);
        out << content;
        if (!out) throw ValidationError("short write: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw ValidationError("cannot rename into place: " + path);
}

nlohmann::json load_json_file(const std::string& path) {
    return json::parse(read_text_file(path));
}

void save_json_file(const std::string& path, const nlohmann::json& j) {
    write_text_file_atomic(path, j.dump(2) + "\n");
}

}  // namespace psrlab
