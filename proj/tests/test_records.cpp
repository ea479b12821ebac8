#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <embodied/records.hpp>

using namespace embodied;

namespace {

RunRecord demo_run(Variant model, std::size_t size, long long rep, std::uint64_t seed) {
    RunRecord r;
    r.model = model;
    r.size = size;
    r.rep = rep;
    r.seed = seed;
    for (int e = 1; e <= 3; ++e) {
        EpochRow row;
        row.train_acc = 0.5 + 0.1 * e + 1e-17 * double(rep); // exercise %.17g
        row.test_acc = 0.4 + 0.1 * e;
        row.whole_acc = (size * row.train_acc + 10000 * row.test_acc) / double(size + 10000);
        row.loss = 1.0 / (e + double(rep) + 1.0 / 3.0);
        r.epochs.push_back(row);
    }
    return r;
}

std::filesystem::path temp_records(const std::string& stem) {
    return std::filesystem::temp_directory_path() / stem;
}

Settings demo_settings() {
    Settings s;
    s.sizes = {512};
    s.epochs = 3;
    s.repetitions = 2;
    return s;
}

} // namespace

TEST_CASE("records round-trip bit exactly through text", "[records]") {
    const auto path = temp_records("embodied_test_records.csv").string();
    const auto s = demo_settings();
    std::vector<RunRecord> runs = {demo_run(Variant::Baseline, 512, 0, 42),
                                   demo_run(Variant::Baseline, 512, 1, 43),
                                   demo_run(Variant::Embodied, 512, 0, 42)};
    {
        std::ofstream f(path);
        write_records_preamble(f, s, 777);
        for (const auto& r : runs) append_run_record(f, r);
    }
    const auto data = load_records(path);
    REQUIRE(data.runs.size() == 3);
    REQUIRE(data.has_config_hash);
    REQUIRE(data.config_hash == s.hash());
    REQUIRE(data.finger_hash == 777);

    for (const auto& want : runs) {
        const RunRecord* got = data.find(want.model, want.size, want.rep);
        REQUIRE(got != nullptr);
        REQUIRE(got->seed == want.seed);
        REQUIRE(got->epochs.size() == want.epochs.size());
        for (std::size_t e = 0; e < want.epochs.size(); ++e) {
            // %.17g guarantees doubles survive the text round trip unchanged
            REQUIRE(got->epochs[e].train_acc == want.epochs[e].train_acc);
            REQUIRE(got->epochs[e].test_acc == want.epochs[e].test_acc);
            REQUIRE(got->epochs[e].whole_acc == want.epochs[e].whole_acc);
            REQUIRE(got->epochs[e].loss == want.epochs[e].loss);
        }
    }
    std::filesystem::remove(path);
}

TEST_CASE("loading tolerates comments and blank lines anywhere", "[records]") {
    const auto path = temp_records("embodied_test_records_comments.csv").string();
    {
        std::ofstream f(path);
        f << "# leading comment\n\n";
        f << kRecordsHeader << '\n';
        f << "baseline,512,0,1,0.5,0.4,0.41,1.2,42\n";
        f << "# wall baseline/512/0 seconds=3.2\n";
        f << "baseline,512,0,2,0.6,0.5,0.51,0.9,42\n";
    }
    const auto data = load_records(path);
    REQUIRE(data.runs.size() == 1);
    REQUIRE(data.runs[0].epochs.size() == 2);
    REQUIRE(!data.has_config_hash);
    std::filesystem::remove(path);
}

TEST_CASE("the header line is mandatory and checked", "[records][errors]") {
    const auto path = temp_records("embodied_test_records_header.csv").string();
    {
        std::ofstream f(path);
        f << "model,size,rep\n";
    }
    REQUIRE_THROWS_AS(load_records(path), ParseError);
    {
        std::ofstream f(path);
        f << "# only comments\n";
    }
    REQUIRE_THROWS_AS(load_records(path), ParseError);
    std::filesystem::remove(path);
}

TEST_CASE("malformed data lines are rejected with ParseError", "[records][errors]") {
    const auto path = temp_records("embodied_test_records_bad.csv").string();
    auto write = [&](const std::string& body) {
        std::ofstream f(path);
        f << kRecordsHeader << '\n' << body;
    };

    write("baseline,512,0,1,0.5,0.4\n"); // too few fields
    REQUIRE_THROWS_AS(load_records(path), ParseError);

    write("baseline,512,0,1,abc,0.4,0.41,1.2,42\n"); // non-numeric
    REQUIRE_THROWS_AS(load_records(path), ParseError);

    write("baseline,512,0,2,0.5,0.4,0.41,1.2,42\n"); // starts at epoch 2
    REQUIRE_THROWS_AS(load_records(path), ParseError);

    write("baseline,512,0,1,0.5,0.4,0.41,1.2,42\nbaseline,512,0,3,0.5,0.4,0.41,1.2,42\n"); // gap
    REQUIRE_THROWS_AS(load_records(path), ParseError);

    std::filesystem::remove(path);
}

TEST_CASE("a missing records file raises DataMissing", "[records][errors]") {
    REQUIRE_THROWS_AS(load_records("/no/such/records.csv"), DataMissing);
}

TEST_CASE("find distinguishes model, size and repetition", "[records]") {
    const auto path = temp_records("embodied_test_records_find.csv").string();
    {
        std::ofstream f(path);
        f << kRecordsHeader << '\n';
        f << "baseline,512,0,1,0.5,0.4,0.41,1.2,42\n";
        f << "embodied,512,0,1,0.55,0.45,0.46,1.1,42\n";
        f << "baseline,1024,0,1,0.6,0.5,0.51,1.0,42\n";
    }
    const auto data = load_records(path);
    REQUIRE(data.find(Variant::Baseline, 512, 0) != nullptr);
    REQUIRE(data.find(Variant::Embodied, 512, 0) != nullptr);
    REQUIRE(data.find(Variant::Baseline, 1024, 0) != nullptr);
    REQUIRE(data.find(Variant::Baseline, 512, 1) == nullptr);
    REQUIRE(data.find(Variant::InceptionLike, 512, 0) == nullptr);
    REQUIRE(data.find(Variant::Embodied, 512, 0)->epochs[0].test_acc == 0.45);
    std::filesystem::remove(path);
}

TEST_CASE("the preamble echoes the configuration and hashes", "[records]") {
    std::ostringstream out;
    const auto s = demo_settings();
    write_records_preamble(out, s, 1234);
    const std::string text = out.str();
    REQUIRE(text.find("# config_hash=" + std::to_string(s.hash())) != std::string::npos);
    REQUIRE(text.find("# finger_hash=1234") != std::string::npos);
    REQUIRE(text.find("# epochs=3") != std::string::npos);
    REQUIRE(text.find(kRecordsHeader) != std::string::npos);
    // every config line is commented; the only uncommented line is the header
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line))
        if (!line.empty() && line[0] != '#') REQUIRE(line == kRecordsHeader);
}
