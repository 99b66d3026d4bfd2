#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nlsg/io.hpp"
#include "nlsg/stationary.hpp"

namespace fs = std::filesystem;
using nlsg::io::json;

namespace {

int run_cli(const std::string& args) {
    const std::string cmd = std::string(NLSG_CLI_PATH) + " " + args +
                            " > /dev/null 2> /dev/null";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("nlsg_cli_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST_CASE("field CSV round trip") {
    const nlsg::StarGraph g = nlsg::validate_graph(4, 2, {1, 1, 1, 1}, 1.0);
    const nlsg::ShiftedState st =
        nlsg::shifted_state(g, nlsg::EdgeGrid{20.0, 201}, 0.5);
    std::stringstream ss;
    nlsg::io::write_field_csv(ss, st.field);
    const nlsg::GraphField back = nlsg::io::read_field_csv(ss);
    REQUIRE(back.n_edges() == 4);
    REQUIRE(back.grid.n_points == 201);
    for (int j = 0; j < 4; ++j)
        for (int i = 0; i < 201; i += 17)
            CHECK(back.edges[j][i] == st.field.edges[j][i]);
}

TEST_CASE("graph and grid JSON round trips") {
    const nlsg::StarGraph g =
        nlsg::validate_graph(3, 1, {1, std::sqrt(2.0), std::sqrt(2.0)}, 1.0);
    const json j = nlsg::io::graph_to_json(g);
    const nlsg::StarGraph back = nlsg::io::graph_from_json(j);
    CHECK(back.n_edges == 3);
    CHECK(back.alphas == g.alphas);
    CHECK_THROWS_AS(
        nlsg::io::graph_from_json(json{{"edges", 3}}), nlsg::error);

    const nlsg::EdgeGrid grid{25.0, 2501};
    CHECK(nlsg::io::grid_from_json(nlsg::io::grid_to_json(grid)) == grid);
}

TEST_CASE("report serialization carries case tags") {
    nlsg::SpectralReport rep;
    rep.entries = {{-3.0, 1, nlsg::MatchCase::C},
                   {-1.2, 2, nlsg::MatchCase::B},
                   {0.0, 1, nlsg::MatchCase::Combined}};
    rep.morse_index = 3;
    rep.zero_multiplicity = 1;
    const json j = nlsg::io::report_to_json(rep);
    CHECK(j.at("entries").size() == 3);
    CHECK(j.at("entries").at(0).at("case") == "C");
    CHECK(j.at("entries").at(2).at("case") == "combined");
    CHECK(j.at("morse_index") == 3);
}

TEST_CASE("families subcommand produces the pattern table") {
    TempDir tmp;
    const fs::path cfg = tmp.path / "g.json";
    {
        std::ofstream os(cfg);
        os << R"({"graph":{"edges":4,"incoming":2,"alphas":[1,1,1,1],"p":1.0}})";
    }
    const int code = run_cli("families --config " + cfg.string() + " --out " +
                             (tmp.path / "out").string());
    CHECK(code == 0);
    std::ifstream in(tmp.path / "out" / "families.json");
    REQUIRE(in.good());
    const json js = json::parse(in);
    CHECK(js.at("families") == 3);
    CHECK(js.at("admissible_patterns").size() == 6);
}

TEST_CASE("malformed configuration exits with code 1") {
    TempDir tmp;
    const fs::path cfg = tmp.path / "bad.json";
    {
        std::ofstream os(cfg);
        os << "{\"graph\": {\"edges\": 4,,}";
    }
    CHECK(run_cli("spectrum --config " + cfg.string()) == 1);
    CHECK(run_cli("spectrum") == 1); // no graph at all
}

TEST_CASE("constraint-violating weights exit with code 1") {
    TempDir tmp;
    const fs::path cfg = tmp.path / "g.json";
    {
        std::ofstream os(cfg);
        os << R"({"graph":{"edges":4,"incoming":2,"alphas":[1,1,1,2],"p":1.0}})";
    }
    CHECK(run_cli("families --config " + cfg.string()) == 1);
}

TEST_CASE("spectrum subcommand with the theorem assertion") {
    TempDir tmp;
    const fs::path cfg = tmp.path / "g.json";
    {
        std::ofstream os(cfg);
        os << R"({"graph":{"edges":3,"incoming":1,)"
           << R"("alphas":[1,1.4142135623730951,1.4142135623730951],"p":1.0},)"
           << R"("a":-0.7,"grid":{"h":0.04}})";
    }
    const std::string out = (tmp.path / "out").string();
    CHECK(run_cli("spectrum --config " + cfg.string() + " --out " + out +
                  " --assert-theorem") == 0);
    std::ifstream in(fs::path(out) / "spectrum.json");
    REQUIRE(in.good());
    const json js = json::parse(in);
    CHECK(js.at("morse_index") == 1);
    CHECK(js.at("zero_multiplicity") == 1);
    CHECK(js.at("fd_negatives") == 1);
}

TEST_CASE("shoot subcommand writes the matching table") {
    TempDir tmp;
    const fs::path cfg = tmp.path / "g.json";
    {
        std::ofstream os(cfg);
        os << R"({"graph":{"edges":4,"incoming":2,"alphas":[1,1,1,1],"p":1.0},)"
           << R"("a":0.5,"shoot":{"window":[-4.0,0.5],"grid_points":40}})";
    }
    const std::string out = (tmp.path / "out").string();
    CHECK(run_cli("shoot --config " + cfg.string() + " --out " + out) == 0);
    std::ifstream in(fs::path(out) / "shoot.csv");
    REQUIRE(in.good());
    std::string header;
    std::getline(in, header);
    CHECK(header ==
          "lambda,v_a,v_minus_a,dv_a,dv_minus_a,case_c,determinant");
    int rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    CHECK(rows == 40);
}

TEST_CASE("verify subcommand honors the filter") {
    CHECK(run_cli("verify --filter A13") == 0);
    CHECK(run_cli("verify --filter A4") == 0);
}

TEST_CASE("deterministic outputs for identical configurations") {
    TempDir tmp;
    const fs::path cfg = tmp.path / "g.json";
    {
        std::ofstream os(cfg);
        os << R"({"graph":{"edges":4,"incoming":2,"alphas":[1,1,1,1],"p":1.0},)"
           << R"("a":0.4,"shoot":{"window":[-4.0,0.0],"grid_points":25}})";
    }
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    const std::string o1 = (tmp.path / "o1").string();
    const std::string o2 = (tmp.path / "o2").string();
    CHECK(run_cli("shoot --config " + cfg.string() + " --out " + o1) == 0);
    CHECK(run_cli("shoot --config " + cfg.string() + " --out " + o2) == 0);
    CHECK(slurp(fs::path(o1) / "shoot.csv") ==
          slurp(fs::path(o2) / "shoot.csv"));
}
