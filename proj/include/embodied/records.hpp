#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "config.hpp"
#include "error.hpp"
#include "model.hpp"

namespace embodied {

struct EpochRow {
    double train_acc = 0.0;
    double test_acc = 0.0;
    double whole_acc = 0.0;
    double loss = 0.0;
};

struct RunRecord {
    Variant model = Variant::Baseline;
    std::size_t size = 0;
    long long rep = 0;
    std::uint64_t seed = 0;
    std::vector<EpochRow> epochs; // index 0 is epoch 1
    double wall_seconds = 0.0;    // metadata only; lives in comment lines
};

inline constexpr const char* kRecordsHeader =
    "model,size,rep,epoch,train_acc,test_acc,whole_acc,loss,seed";

// Records files are plain CSV: '#' metadata lines (resolved config, hashes,
// timestamps), one header row, then one line per (model,size,rep,epoch).
// Doubles print as %.17g so stored records reload bit-exactly.
inline void write_records_preamble(std::ostream& out, const Settings& s, std::uint64_t finger_hash) {
    out << "# experiment records\n";
    std::istringstream cfg(s.serialize());
    std::string line;
    while (std::getline(cfg, line)) out << "# " << line << '\n';
    out << "# config_hash=" << s.hash() << '\n';
    out << "# finger_hash=" << finger_hash << '\n';
    out << kRecordsHeader << '\n';
}

inline void append_run_record(std::ostream& out, const RunRecord& r) {
    char buf[40];
    const auto g = [&buf](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    for (std::size_t e = 0; e < r.epochs.size(); ++e) {
        const EpochRow& row = r.epochs[e];
        out << variant_name(r.model) << ',' << r.size << ',' << r.rep << ',' << (e + 1) << ','
            << g(row.train_acc) << ',' << g(row.test_acc) << ',' << g(row.whole_acc) << ','
            << g(row.loss) << ',' << r.seed << '\n';
    }
    out << "# wall model=" << variant_name(r.model) << " size=" << r.size << " rep=" << r.rep
        << " seconds=" << r.wall_seconds << '\n';
    out.flush();
}

struct RecordsData {
    std::vector<RunRecord> runs;
    std::uint64_t config_hash = 0;
    std::uint64_t finger_hash = 0;
    bool has_config_hash = false;

    const RunRecord* find(Variant m, std::size_t size, long long rep) const {
        for (const RunRecord& r : runs)
            if (r.model == m && r.size == size && r.rep == rep) return &r;
        return nullptr;
    }
};

inline RecordsData load_records(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataMissing("cannot open records file: " + path);
    RecordsData data;
    std::map<std::tuple<std::string, std::size_t, long long>, RunRecord> groups;
    std::string line;
    std::size_t lineno = 0;
    bool saw_header = false;
    while (std::getline(f, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (t[0] == '#') {
            const auto grab = [&t](const char* key) -> std::string {
                const std::string k = std::string("# ") + key + "=";
                if (t.rfind(k, 0) == 0) return t.substr(k.size());
                return "";
            };
            if (const std::string v = grab("config_hash"); !v.empty()) {
                data.config_hash = std::stoull(v);
                data.has_config_hash = true;
            } else if (const std::string v2 = grab("finger_hash"); !v2.empty()) {
                data.finger_hash = std::stoull(v2);
            }
            continue;
        }
        if (!saw_header) {
            if (t != kRecordsHeader)
                throw ParseError(path + ":" + std::to_string(lineno) + ": unexpected header '" + t + "'");
            saw_header = true;
            continue;
        }
        std::vector<std::string> fields;
        std::stringstream ss(t);
        std::string item;
        while (std::getline(ss, item, ',')) fields.push_back(item);
        if (fields.size() != 9)
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected 9 fields, got " +
                             std::to_string(fields.size()));
        try {
            const std::string model = fields[0];
            const std::size_t size = std::stoull(fields[1]);
            const long long rep = std::stoll(fields[2]);
            const long long epoch = std::stoll(fields[3]);
            EpochRow row{std::stod(fields[4]), std::stod(fields[5]), std::stod(fields[6]),
                         std::stod(fields[7])};
            const std::uint64_t seed = std::stoull(fields[8]);
            RunRecord& rec = groups[{model, size, rep}];
            if (rec.epochs.empty()) {
                rec.model = parse_variant(model);
                rec.size = size;
                rec.rep = rep;
                rec.seed = seed;
            }
            if (epoch != (long long)(rec.epochs.size()) + 1)
                throw ParseError(path + ":" + std::to_string(lineno) + ": epoch " +
                                 std::to_string(epoch) + " out of order");
            rec.epochs.push_back(row);
        } catch (const ParseError&) {
            throw;
        } catch (const std::exception&) {
            throw ParseError(path + ":" + std::to_string(lineno) + ": malformed record line");
        }
    }
    if (!saw_header) throw ParseError(path + ": no header row found");
    data.runs.reserve(groups.size());
    for (auto& [key, rec] : groups) data.runs.push_back(std::move(rec));
    return data;
}

} // namespace embodied
