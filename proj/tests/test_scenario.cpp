#include <catch2/catch_amalgamated.hpp>
#include <krein/csv.hpp>
#include <krein/scenario.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <unistd.h>

using namespace krein;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
    auto p = fs::temp_directory_path() / ("krein_test_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("sha256 known vectors") {
    REQUIRE(sha256_hex("") ==
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    REQUIRE(sha256_hex("abc") ==
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("csv numbers round-trip bit-exactly") {
    const std::vector<double> vals{1.0 / 3.0, 0.1, 1e-300, 3.141592653589793,
                                   -2.5e17, 12345.678901234567, 0.0};
    CsvTable t({"idx", "val"});
    t.add_meta("note", "round-trip");
    for (std::size_t i = 0; i < vals.size(); ++i)
        t.add_row({csv_num(double(i)), csv_num(vals[i])});
    REQUIRE(t.row_count() == vals.size());
    REQUIRE_THROWS_AS(t.add_row({"only-one-cell"}), std::invalid_argument);

    auto dir = fresh_dir("csv");
    const auto path = dir / "t.csv";
    {
        std::ofstream out(path, std::ios::binary);
        out << t.body();
    }
    auto doc = read_csv(path.string());
    REQUIRE(doc.columns == std::vector<std::string>{"idx", "val"});
    REQUIRE(doc.meta.size() == 1);
    REQUIRE(doc.meta[0].first == "note");
    REQUIRE(doc.meta[0].second == "round-trip");
    REQUIRE(doc.rows.size() == vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i) {
        REQUIRE(doc.rows[i][0] == double(i));
        REQUIRE(doc.rows[i][1] == vals[i]);  // bitwise, not approximate
    }
    fs::remove_all(dir);
}

TEST_CASE("coefficient files load as sampled functions") {
    auto dir = fresh_dir("coeff");
    const auto path = dir / "a.csv";
    {
        std::ofstream out(path);
        out << "x,value\n0,1\n0.5,2\n1,4\n";
    }
    auto f = read_real_coefficient(path.string());
    REQUIRE(f.size() == 3);
    REQUIRE(f(0.5) == Catch::Approx(2.0));
    {
        std::ofstream out(path);
        out << "x,re,im\n0,1,0\n1,0,1\n";
    }
    REQUIRE_THROWS_AS(read_real_coefficient(path.string()), std::runtime_error);
    auto c = read_complex_coefficient(path.string());
    REQUIRE(c.size() == 2);
    fs::remove_all(dir);
}

TEST_CASE("config validation reports every problem at once") {
    json j{{"kind", "thm1_regime"}, {"gamma", "not-a-number"}, {"threads", 0}, {"bogus", 1}};
    try {
        ScenarioConfig::parse(j);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        REQUIRE(msg.find("3 problems") != std::string::npos);
        REQUIRE(msg.find("gamma: expected a number") != std::string::npos);
        REQUIRE(msg.find("threads: expected 1..256") != std::string::npos);
        REQUIRE(msg.find("bogus: unknown key") != std::string::npos);
    }
}

TEST_CASE("unknown scenario kinds list the catalog") {
    REQUIRE_THROWS_WITH(ScenarioConfig::parse(json{{"kind", "nope"}}),
                        Catch::Matchers::ContainsSubstring("unknown scenario") &&
                            Catch::Matchers::ContainsSubstring("free_baseline") &&
                            Catch::Matchers::ContainsSubstring("vnw"));
    REQUIRE_THROWS_WITH(ScenarioConfig::parse(json{{"seed", 3}}),
                        Catch::Matchers::ContainsSubstring("kind: required"));
    REQUIRE_THROWS_WITH(ScenarioConfig::parse(json{{"kind", "free_baseline"}, {"tolerance", 0.0}}),
                        Catch::Matchers::ContainsSubstring("must be positive"));
}

TEST_CASE("grid knobs accept bands and explicit arrays") {
    auto cfg = ScenarioConfig::parse(
        json{{"kind", "free_baseline"},
             {"lambdas", {{"min", 1.0}, {"max", 3.0}, {"count", 5}}},
             {"energies", {0.5, 1.5}}});
    auto band = cfg.grid_knob("lambdas", {});
    REQUIRE(band == std::vector<double>{1.0, 1.5, 2.0, 2.5, 3.0});
    REQUIRE(cfg.grid_knob("energies", {}) == std::vector<double>{0.5, 1.5});
    REQUIRE(cfg.grid_knob("rmax_grid_not_present", {7.0}) == std::vector<double>{7.0});

    REQUIRE_THROWS_WITH(
        ScenarioConfig::parse(json{{"kind", "free_baseline"},
                                   {"lambdas", {{"min", 1.0}, {"max", 3.0}, {"count", 1}}}}),
        Catch::Matchers::ContainsSubstring("count >= 2"));
    REQUIRE_THROWS_WITH(
        ScenarioConfig::parse(json{{"kind", "free_baseline"},
                                   {"lambdas", {{"min", 3.0}, {"max", 1.0}, {"count", 4}}}}),
        Catch::Matchers::ContainsSubstring("min < max"));
}

TEST_CASE("coefficient knob needs exactly one source") {
    auto bad1 = json{{"kind", "vnw"},
                     {"coefficient", {{"family", "vnw"}, {"file", "a.csv"}}}};
    REQUIRE_THROWS_WITH(ScenarioConfig::parse(bad1),
                        Catch::Matchers::ContainsSubstring("exactly one"));
    auto bad2 = json{{"kind", "vnw"}, {"coefficient", {{"params", {{"amp", 1.0}}}}}};
    REQUIRE_THROWS_WITH(ScenarioConfig::parse(bad2),
                        Catch::Matchers::ContainsSubstring("exactly one"));
    auto bad3 = json{{"kind", "vnw"},
                     {"coefficient", {{"family", "vnw"}, {"mystery", 2}}}};
    REQUIRE_THROWS_WITH(ScenarioConfig::parse(bad3),
                        Catch::Matchers::ContainsSubstring("unknown key"));
}

TEST_CASE("every preset parses") {
    REQUIRE(preset_catalog().size() == 7);
    for (const auto& [name, desc] : preset_catalog()) {
        auto cfg = ScenarioConfig::parse(preset_config(name));
        REQUIRE(cfg.kind == name);
        REQUIRE_FALSE(desc.empty());
    }
    REQUIRE_THROWS_WITH(preset_config("mystery"),
                        Catch::Matchers::ContainsSubstring("unknown preset") &&
                            Catch::Matchers::ContainsSubstring("accelerant_roundtrip"));
}

TEST_CASE("config files: bad JSON and missing paths") {
    auto dir = fresh_dir("cfgfile");
    const auto path = dir / "bad.json";
    {
        std::ofstream out(path);
        out << "{ not json";
    }
    REQUIRE_THROWS_WITH(ScenarioConfig::from_file(path),
                        Catch::Matchers::ContainsSubstring("not valid JSON"));
    REQUIRE_THROWS_WITH(ScenarioConfig::from_file(dir / "absent.json"),
                        Catch::Matchers::ContainsSubstring("cannot open"));
    fs::remove_all(dir);
}

TEST_CASE("baseline scenario runs green and manifests its outputs") {
    auto dir = fresh_dir("run");
    json j = preset_config("free_baseline");
    j["out_dir"] = (dir / "out").string();
    auto b = run_scenario(ScenarioConfig::parse(j));
    REQUIRE(b.all_pass());
    REQUIRE(b.exit_code() == 0);
    REQUIRE_FALSE(b.checks.empty());

    bool saw_summary = false;
    for (const auto& [rel, digest] : b.files) {
        const auto bytes = slurp(dir / "out" / rel);
        REQUIRE(sha256_hex(bytes) == digest);
        if (rel == "summary.json") saw_summary = true;
    }
    REQUIRE(saw_summary);
    REQUIRE(fs::exists(dir / "out" / "manifest.json"));
    auto manifest = json::parse(slurp(dir / "out" / "manifest.json"));
    REQUIRE(manifest.at("files").size() == b.files.size());
    fs::remove_all(dir);
}

TEST_CASE("repeat runs are byte-identical, independent of thread count") {
    auto dir = fresh_dir("det");
    auto run_with = [&](const std::string& sub, unsigned threads) {
        json j = preset_config("free_baseline");
        j["out_dir"] = (dir / sub).string();
        j["threads"] = threads;
        j["seed"] = 11;
        return run_scenario(ScenarioConfig::parse(j));
    };
    auto a = run_with("a", 1);
    auto b = run_with("b", 1);
    auto c = run_with("c", 3);

    auto digests = [](const ReportBundle& r) {
        std::map<std::string, std::string> m;
        for (const auto& [rel, digest] : r.files)
            if (rel != "config.json") m[rel] = digest;  // config embeds out_dir/threads
        return m;
    };
    REQUIRE(digests(a) == digests(b));
    REQUIRE(digests(a) == digests(c));
    REQUIRE(digests(a).size() >= 2);
    fs::remove_all(dir);
}
