// Drives the built CLI binary end to end through std::system.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "nilray/io.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = NILRAY_CLI_PATH;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / "nilray_cli_test";
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    fs::path file(const std::string& name) const { return path / name; }
};

int run(const std::string& args) {
    const std::string cmd = kCli + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

void write(const fs::path& p, const std::string& content) {
    nilray::write_text_file(p, content);
}

bool same_bytes(const fs::path& a, const fs::path& b) {
    return nilray::read_text_file(a) == nilray::read_text_file(b);
}

}  // namespace

TEST_CASE("phantom generation is deterministic for a fixed config and seed") {
    TempDir tmp;
    write(tmp.file("ph.cfg"), "dim=2\nbumps=5\nseed=9\ndomain_radius=1.0\nrandomize=1\n");
    REQUIRE(run("phantom --config " + tmp.file("ph.cfg").string() + " --out " +
                tmp.file("a.json").string()) == 0);
    REQUIRE(run("phantom --config " + tmp.file("ph.cfg").string() + " --out " +
                tmp.file("b.json").string()) == 0);
    CHECK(same_bytes(tmp.file("a.json"), tmp.file("b.json")));

    // a different seed changes the output
    REQUIRE(run("phantom --config " + tmp.file("ph.cfg").string() + " --seed 10 --out " +
                tmp.file("c.json").string()) == 0);
    CHECK_FALSE(same_bytes(tmp.file("a.json"), tmp.file("c.json")));
}

TEST_CASE("forward of a zero-amplitude phantom is an all-zero sinogram") {
    TempDir tmp;
    write(tmp.file("ph.cfg"), "dim=2\nbumps=1\nrandomize=0\namplitude=0.0\n");
    REQUIRE(run("phantom --config " + tmp.file("ph.cfg").string() + " --out " +
                tmp.file("ph.json").string()) == 0);
    write(tmp.file("fwd.cfg"),
          "phantom=" + tmp.file("ph.json").string() + "\nthetas=12\noffsets=24\n");
    REQUIRE(run("forward --config " + tmp.file("fwd.cfg").string() + " --out " +
                tmp.file("s.csv").string()) == 0);
    std::ifstream in(tmp.file("s.csv"));
    std::string line;
    bool header_seen = false;
    int rows = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        CHECK(line.substr(line.rfind(',') + 1) == "0");
        ++rows;
    }
    CHECK(rows == 12 * 24);
}

TEST_CASE("forward output does not depend on the worker count") {
    TempDir tmp;
    write(tmp.file("ph.cfg"), "dim=2\nbumps=3\nseed=4\nrandomize=1\n");
    REQUIRE(run("phantom --config " + tmp.file("ph.cfg").string() + " --out " +
                tmp.file("ph.json").string()) == 0);
    write(tmp.file("fwd.cfg"),
          "phantom=" + tmp.file("ph.json").string() + "\nthetas=30\noffsets=48\n");
    REQUIRE(run("forward --config " + tmp.file("fwd.cfg").string() + " --out " +
                tmp.file("s1.csv").string()) == 0);
    REQUIRE(run("forward --config " + tmp.file("fwd.cfg").string() + " --workers 4 --out " +
                tmp.file("s4.csv").string()) == 0);
    CHECK(same_bytes(tmp.file("s1.csv"), tmp.file("s4.csv")));
}

TEST_CASE("invert after forward reproduces the phantom") {
    TempDir tmp;
    write(tmp.file("ph.cfg"), "dim=2\nbumps=2\nseed=12\nrandomize=1\n");
    REQUIRE(run("phantom --config " + tmp.file("ph.cfg").string() + " --out " +
                tmp.file("ph.json").string()) == 0);
    write(tmp.file("fwd.cfg"),
          "phantom=" + tmp.file("ph.json").string() + "\nthetas=120\noffsets=192\n");
    REQUIRE(run("forward --config " + tmp.file("fwd.cfg").string() + " --out " +
                tmp.file("s.csv").string()) == 0);
    write(tmp.file("inv.cfg"), "sinogram=" + tmp.file("s.csv").string() +
                                   "\nphantom=" + tmp.file("ph.json").string() +
                                   "\ngrid_nx=9\ngrid_ny=9\ninvert_grid=192\ninvert_dirs=90\n");
    REQUIRE(run("invert --config " + tmp.file("inv.cfg").string() + " --out " +
                tmp.file("rec.json").string()) == 0);
    const auto doc = nlohmann::json::parse(nilray::read_text_file(tmp.file("rec.json")));
    const double max_err = doc["stats"]["max_abs_err"].get<double>();
    const double max_f = doc["stats"]["max_abs_f"].get<double>();
    CHECK(max_err <= 0.02 * std::max(1e-12, max_f));
}

TEST_CASE("escape sweep reports strictly positive margins") {
    TempDir tmp;
    write(tmp.file("esc.cfg"),
          "algebra=nq:3\ncount=150\ntmax=50\ntsamples=12\nseed=42\nrows=worst\n");
    REQUIRE(run("escape --config " + tmp.file("esc.cfg").string() + " --out " +
                tmp.file("esc.csv").string()) == 0);
    std::ifstream in(tmp.file("esc.csv"));
    std::string line;
    double min_margin = 1e300;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        // margin is column 5 of seed,t,lhs_norm_sq,bound,margin,case_tag
        std::istringstream ls(line);
        std::string cell;
        for (int c = 0; c < 5; ++c) std::getline(ls, cell, ',');
        min_margin = std::min(min_margin, std::stod(cell));
    }
    CHECK(min_margin > 0.0);
}

TEST_CASE("exit codes: validation 2, flat search miss 4") {
    TempDir tmp;
    CHECK(run("invert --config /nonexistent.cfg --out " + tmp.file("x.json").string()) == 2);

    write(tmp.file("bad.cfg"), "algebra=nq:3\nmode=imaginary\n");
    CHECK(run("flats --config " + tmp.file("bad.cfg").string() + " --out " +
              tmp.file("y.json").string()) == 2);

    write(tmp.file("nq2.cfg"),
          "algebra=nq:2\nmode=random\ncount=1\nseed=3\nbudget=400\nrestarts=2\n");
    CHECK(run("flats --config " + tmp.file("nq2.cfg").string() + " --out " +
              tmp.file("z.json").string()) == 4);
}

TEST_CASE("a violated tail bound with strict_tail exits with the numeric code 3") {
    TempDir tmp;
    write(tmp.file("ph.cfg"), "dim=2\nbumps=1\nrandomize=0\n");
    REQUIRE(run("phantom --config " + tmp.file("ph.cfg").string() + " --out " +
                tmp.file("ph.json").string()) == 0);
    write(tmp.file("fwd.cfg"),
          "phantom=" + tmp.file("ph.json").string() + "\nthetas=24\noffsets=48\n");
    REQUIRE(run("forward --config " + tmp.file("fwd.cfg").string() + " --out " +
                tmp.file("s.csv").string()) == 0);
    // t_max = 0.15 cuts through the support: F_x(t_max) is far from zero
    write(tmp.file("inv.cfg"),
          "sinogram=" + tmp.file("s.csv").string() + "\nphantom=" +
              tmp.file("ph.json").string() +
              "\ngrid_nx=2\ngrid_ny=2\ninvert_grid=64\ninvert_dirs=16\n"
              "strict_tail=1\ntmax_override=0.15\n");
    CHECK(run("invert --config " + tmp.file("inv.cfg").string() + " --out " +
              tmp.file("r.json").string()) == 3);
}

TEST_CASE("geodesic trace export") {
    TempDir tmp;
    write(tmp.file("tr.cfg"), "algebra=nq:3\nseed=5\ntmax=4\ntsamples=16\nrows=trace\n");
    REQUIRE(run("escape --config " + tmp.file("tr.cfg").string() + " --out " +
                tmp.file("trace.csv").string()) == 0);
    std::ifstream in(tmp.file("trace.csv"));
    std::string line, header;
    int rows = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (header.empty()) {
            header = line;
            continue;
        }
        ++rows;
    }
    CHECK(header == "t,z0,z1,h0,h1,h2,h3,h4,h5");
    CHECK(rows == 17);  // t = 0 plus 16 samples
}

TEST_CASE("flats catalog mode writes verified flats") {
    TempDir tmp;
    write(tmp.file("fl.cfg"), "algebra=nq:3\nmode=catalog\nseed=7\n");
    REQUIRE(run("flats --config " + tmp.file("fl.cfg").string() + " --out " +
                tmp.file("atlas.json").string()) == 0);
    const auto doc = nlohmann::json::parse(nilray::read_text_file(tmp.file("atlas.json")));
    REQUIRE(doc["flats"].size() >= 2);
    for (const auto& f : doc["flats"]) CHECK(f["residual"].get<double>() <= 1e-7);
}
