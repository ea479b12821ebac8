#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "adam.hpp"
#include "error.hpp"
#include "loss.hpp"
#include "model.hpp"
#include "rng.hpp"

namespace embodied {

// Every tunable in one flat bag: the experiment grid, optimizer, network
// hyperparameters, and paths. Files use key=value lines ('#' comments); CLI
// flags funnel through set() so overrides behave identically.
struct Settings {
    std::string data_dir;
    std::vector<std::size_t> sizes = {256, 512, 1024, 3200, 6400, 60000};
    long long epochs = 20;
    long long repetitions = 21;
    std::uint64_t base_seed = 42;
    std::vector<Variant> models = {Variant::Baseline, Variant::InceptionLike, Variant::Embodied};
    double alpha = 0.05;
    WeightSchedule schedule = WeightSchedule::defaults();
    std::size_t batch_size = 32;
    std::size_t batch_size_full = 128; // applies when size == full_size_threshold
    std::size_t full_size_threshold = 60000;
    OptimizerConfig optimizer;
    NetworkConfig network;
    bool fixed_subset = false; // reuse the base-seed subset across repetitions
    bool stratified = true;
    long long jobs = 1;
    std::string records_path = "records.csv";
    std::string link_path;
    std::string finger_codes_path;
    std::string out_dir = "results";

    std::size_t batch_for(std::size_t train_size) const {
        return train_size >= full_size_threshold ? batch_size_full : batch_size;
    }

    void validate() const {
        if (epochs < 1) throw ConfigInvalid("epochs must be >= 1");
        if (repetitions < 2) throw ConfigInvalid("repetitions must be >= 2");
        if (sizes.empty()) throw ConfigInvalid("at least one training size is required");
        for (std::size_t s : sizes)
            if (s == 0 || s > 60000) throw ConfigInvalid("training sizes must lie in [1, 60000]");
        if (models.empty()) throw ConfigInvalid("at least one model is required");
        if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigInvalid("alpha must lie in (0,1)");
        if (batch_size == 0 || batch_size_full == 0) throw ConfigInvalid("batch sizes must be positive");
        if (jobs < 1) throw ConfigInvalid("jobs must be >= 1");
        optimizer.validate();
        schedule.validate();
        if (!(network.bn_momentum > 0.0 && network.bn_momentum < 1.0))
            throw ConfigInvalid("bn_momentum must lie in (0,1)");
        if (!(network.bn_epsilon > 0.0)) throw ConfigInvalid("bn_epsilon must be positive");
        if (network.drop_conv < 0.0 || network.drop_conv >= 1.0 || network.drop_dense < 0.0 ||
            network.drop_dense >= 1.0)
            throw ConfigInvalid("dropout rates must lie in [0,1)");
    }

    void set(const std::string& key, const std::string& value) {
        if (key == "data_dir") data_dir = value;
        else if (key == "sizes") sizes = parse_size_list(value);
        else if (key == "epochs") epochs = parse_int(key, value);
        else if (key == "repetitions") repetitions = parse_int(key, value);
        else if (key == "base_seed") base_seed = std::uint64_t(parse_int(key, value));
        else if (key == "models") models = parse_model_list(value);
        else if (key == "alpha") alpha = parse_num(key, value);
        else if (key == "weight_schedule") schedule = parse_schedule(value);
        else if (key == "batch_size") batch_size = std::size_t(parse_int(key, value));
        else if (key == "batch_size_full") batch_size_full = std::size_t(parse_int(key, value));
        else if (key == "full_size_threshold") full_size_threshold = std::size_t(parse_int(key, value));
        else if (key == "eta") optimizer.eta = parse_num(key, value);
        else if (key == "beta1") optimizer.beta1 = parse_num(key, value);
        else if (key == "beta2") optimizer.beta2 = parse_num(key, value);
        else if (key == "epsilon_hat") optimizer.epsilon_hat = parse_num(key, value);
        else if (key == "bn_momentum") network.bn_momentum = parse_num(key, value);
        else if (key == "bn_epsilon") network.bn_epsilon = parse_num(key, value);
        else if (key == "drop_conv") network.drop_conv = parse_num(key, value);
        else if (key == "drop_dense") network.drop_dense = parse_num(key, value);
        else if (key == "relu_init_gain") network.relu_init_gain = parse_num(key, value);
        else if (key == "aux_init_gain") network.aux_init_gain = parse_num(key, value);
        else if (key == "fixed_subset") fixed_subset = parse_bool(key, value);
        else if (key == "stratified") stratified = parse_bool(key, value);
        else if (key == "jobs") jobs = parse_int(key, value);
        else if (key == "records") records_path = value;
        else if (key == "link") link_path = value;
        else if (key == "finger_codes") finger_codes_path = value;
        else if (key == "out_dir") out_dir = value;
        else throw ConfigInvalid("unknown config key '" + key + "'");
    }

    // Deterministic key=value echo of every resolved setting; written into
    // output metadata so results are self-describing.
    std::string serialize() const {
        std::ostringstream o;
        o << "data_dir=" << data_dir << '\n';
        o << "sizes=" << join_sizes(sizes) << '\n';
        o << "epochs=" << epochs << '\n';
        o << "repetitions=" << repetitions << '\n';
        o << "base_seed=" << base_seed << '\n';
        o << "models=" << join_models(models) << '\n';
        o << "alpha=" << fmt(alpha) << '\n';
        o << "weight_schedule=" << schedule.serialize() << '\n';
        o << "batch_size=" << batch_size << '\n';
        o << "batch_size_full=" << batch_size_full << '\n';
        o << "full_size_threshold=" << full_size_threshold << '\n';
        o << "eta=" << fmt(optimizer.eta) << '\n';
        o << "beta1=" << fmt(optimizer.beta1) << '\n';
        o << "beta2=" << fmt(optimizer.beta2) << '\n';
        o << "epsilon_hat=" << fmt(optimizer.epsilon_hat) << '\n';
        o << "bn_momentum=" << fmt(network.bn_momentum) << '\n';
        o << "bn_epsilon=" << fmt(network.bn_epsilon) << '\n';
        o << "drop_conv=" << fmt(network.drop_conv) << '\n';
        o << "drop_dense=" << fmt(network.drop_dense) << '\n';
        o << "relu_init_gain=" << fmt(network.relu_init_gain) << '\n';
        o << "aux_init_gain=" << fmt(network.aux_init_gain) << '\n';
        o << "fixed_subset=" << (fixed_subset ? 1 : 0) << '\n';
        o << "stratified=" << (stratified ? 1 : 0) << '\n';
        o << "records=" << records_path << '\n';
        o << "link=" << link_path << '\n';
        o << "finger_codes=" << finger_codes_path << '\n';
        o << "out_dir=" << out_dir << '\n';
        return o.str();
    }

    // Hash of the run-defining settings (paths and parallelism excluded, so
    // moving files or changing --jobs does not orphan existing records).
    std::uint64_t hash() const {
        std::ostringstream o;
        o << join_sizes(sizes) << '|' << epochs << '|' << repetitions << '|' << base_seed << '|'
          << join_models(models) << '|' << schedule.serialize() << '|' << batch_size << '|'
          << batch_size_full << '|' << full_size_threshold << '|' << fmt(optimizer.eta) << '|'
          << fmt(optimizer.beta1) << '|' << fmt(optimizer.beta2) << '|' << fmt(optimizer.epsilon_hat)
          << '|' << fmt(network.bn_momentum) << '|' << fmt(network.bn_epsilon) << '|'
          << fmt(network.drop_conv) << '|' << fmt(network.drop_dense) << '|'
          << fmt(network.relu_init_gain) << '|' << fmt(network.aux_init_gain) << '|'
          << (fixed_subset ? 1 : 0) << '|' << (stratified ? 1 : 0);
        return fnv1a64(o.str());
    }

    static std::string fmt(double v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    }

  private:
    static long long parse_int(const std::string& key, const std::string& value) {
        try {
            std::size_t used = 0;
            const long long v = std::stoll(value, &used);
            if (used != value.size()) throw std::invalid_argument(value);
            return v;
        } catch (const std::exception&) {
            throw ConfigInvalid("key '" + key + "' expects an integer, got '" + value + "'");
        }
    }
    static double parse_num(const std::string& key, const std::string& value) {
        try {
            std::size_t used = 0;
            const double v = std::stod(value, &used);
            if (used != value.size()) throw std::invalid_argument(value);
            return v;
        } catch (const std::exception&) {
            throw ConfigInvalid("key '" + key + "' expects a number, got '" + value + "'");
        }
    }
    static bool parse_bool(const std::string& key, const std::string& value) {
        if (value == "1" || value == "true" || value == "yes" || value == "on") return true;
        if (value == "0" || value == "false" || value == "no" || value == "off") return false;
        throw ConfigInvalid("key '" + key + "' expects a boolean, got '" + value + "'");
    }
    static std::vector<std::size_t> parse_size_list(const std::string& value) {
        std::vector<std::size_t> out;
        std::stringstream ss(value);
        std::string item;
        while (std::getline(ss, item, ','))
            if (!item.empty()) out.push_back(std::size_t(parse_int("sizes", item)));
        if (out.empty()) throw ConfigInvalid("empty size list");
        return out;
    }
    static std::vector<Variant> parse_model_list(const std::string& value) {
        std::vector<Variant> out;
        std::stringstream ss(value);
        std::string item;
        while (std::getline(ss, item, ','))
            if (!item.empty()) out.push_back(parse_variant(item));
        if (out.empty()) throw ConfigInvalid("empty model list");
        return out;
    }
    static WeightSchedule parse_schedule(const std::string& value) {
        WeightSchedule s;
        std::stringstream ss(value);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (item.empty()) continue;
            const auto colon = item.find(':');
            if (colon == std::string::npos)
                throw ConfigInvalid("weight_schedule entries look like size:weight, got '" + item + "'");
            s.anchors.emplace_back(std::size_t(parse_int("weight_schedule", item.substr(0, colon))),
                                   parse_num("weight_schedule", item.substr(colon + 1)));
        }
        s.validate();
        return s;
    }
    static std::string join_sizes(const std::vector<std::size_t>& v) {
        std::string s;
        for (std::size_t x : v) {
            if (!s.empty()) s += ',';
            s += std::to_string(x);
        }
        return s;
    }
    static std::string join_models(const std::vector<Variant>& v) {
        std::string s;
        for (Variant m : v) {
            if (!s.empty()) s += ',';
            s += variant_name(m);
        }
        return s;
    }
};

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline void load_config_file(Settings& settings, const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataMissing("cannot open config file: " + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigInvalid(path + ":" + std::to_string(lineno) + ": expected key=value");
        settings.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
}

} // namespace embodied
