#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "pfoa/common/error.hpp"
#include "pfoa/common/rng.hpp"
#include "pfoa/io/array_io.hpp"
#include "pfoa/io/csv.hpp"
#include "pfoa/io/kv_config.hpp"
#include "pfoa/io/manifest.hpp"
#include "pfoa/io/png_io.hpp"

using namespace pfoa;
namespace fs = std::filesystem;

namespace {
struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() / ("pfoa_io_" + std::to_string(::getpid()))) {
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};
}  // namespace

TEST_CASE("png: 16-bit grayscale round-trip within quantization error") {
    TempDir tmp;
    ImageF64 img(32, 48);
    Rng rng(1);
    for (double& v : img.data()) v = rng.uniform();
    io::write_png16(tmp.path / "a.png", img);
    const ImageF64 back = io::read_png(tmp.path / "a.png");
    REQUIRE(back.width() == 48);
    REQUIRE(back.height() == 32);
    for (std::size_t i = 0; i < img.size(); ++i)
        CHECK(back.data()[i] == doctest::Approx(img.data()[i]).epsilon(1e-4));
}

TEST_CASE("png: 8-bit read path and non-PNG rejection") {
    TempDir tmp;
    ImageF64 img(8, 8);
    for (int i = 0; i < 64; ++i) img.data()[static_cast<std::size_t>(i)] = i / 63.0;
    io::write_png8(tmp.path / "b.png", img);
    const ImageF64 back = io::read_png(tmp.path / "b.png");
    CHECK(back.at(0, 0) == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(back.at(7, 7) == doctest::Approx(1.0).epsilon(1e-6));

    std::ofstream junk(tmp.path / "junk.png", std::ios::binary);
    junk << "not a png";
    junk.close();
    CHECK_THROWS_AS(io::read_png(tmp.path / "junk.png"), IoError);
    CHECK_THROWS_AS(io::read_png(tmp.path / "missing.png"), IoError);
}

TEST_CASE("roi tensors: f32 blob + sidecar round-trip") {
    TempDir tmp;
    roi::RoiImage r;
    r.pixels = ImageF64(24, 24);
    Rng rng(2);
    for (double& v : r.pixels.data()) v = rng.normal();
    r.source_side = roi::Side::kRight;
    r.box = {10, 12, 24};
    r.rotation_applied = -7.25;
    r.lesion_boxes = {{1.5, 2.5, 10.0, 12.0}};

    io::save_roi(tmp.path / "knee", r);
    const auto back = io::load_roi(tmp.path / "knee");
    CHECK(back.source_side == roi::Side::kRight);
    CHECK(back.box.x == 10);
    CHECK(back.box.side == 24);
    CHECK(back.rotation_applied == -7.25);
    REQUIRE(back.lesion_boxes.size() == 1);
    CHECK(back.lesion_boxes[0].x1 == 10.0);
    for (std::size_t i = 0; i < r.pixels.size(); ++i)
        CHECK(back.pixels.data()[i] ==
              doctest::Approx(r.pixels.data()[i]).epsilon(1e-6));  // f32 storage
}

TEST_CASE("csv: header access, round-trip, malformed-row rejection") {
    TempDir tmp;
    io::write_csv(tmp.path / "t.csv", {"a", "b"}, {{"1", "x"}, {"2", "y"}});
    const auto t = io::read_csv(tmp.path / "t.csv");
    CHECK(t.col("b") == 1);
    CHECK_THROWS_AS(t.col("c"), SchemaError);
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[1][0] == "2");

    std::ofstream bad(tmp.path / "bad.csv");
    bad << "a,b\n1\n";
    bad.close();
    CHECK_THROWS_AS(io::read_csv(tmp.path / "bad.csv"), IoError);
}

TEST_CASE("kv config: parsing, comments, typed getters, error naming the key") {
    const auto cfg = io::KvConfig::parse(
        "# comment\n"
        "synth.n_subjects = 250\n"
        "train.lr0 = 0.001  # inline comment\n"
        "gbm.growth = leaf_wise\n"
        "flag = true\n");
    CHECK(cfg.get_int("synth.n_subjects", 0) == 250);
    CHECK(cfg.get_double("train.lr0", 0.0) == doctest::Approx(0.001));
    CHECK(cfg.get_str("gbm.growth", "") == "leaf_wise");
    CHECK(cfg.get_bool("flag", false));
    CHECK(cfg.get_int("absent", 77) == 77);

    const auto bad = io::KvConfig::parse("x = notanumber\n");
    try {
        bad.get_int("x", 0);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("x") != std::string::npos);
    }
    CHECK_THROWS_AS(io::KvConfig::parse("no equals sign\n"), ConfigError);
}

TEST_CASE("sha256 layers: known vector and file hashing") {
    // FIPS 180-2 test vector
    CHECK(io::sha256_hex(std::string("abc")) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    TempDir tmp;
    std::ofstream f(tmp.path / "x.bin", std::ios::binary);
    f << "abc";
    f.close();
    CHECK(io::sha256_file(tmp.path / "x.bin") == io::sha256_hex(std::string("abc")));
}

TEST_CASE("run manifest lands on disk with its fields") {
    TempDir tmp;
    io::RunManifest m;
    m.command = "synth";
    m.seed = 7;
    m.config_snapshot["synth.n_subjects"] = "100";
    m.input_hashes["config"] = io::sha256_hex(std::string("cfg"));
    m.timestamp = io::current_timestamp_utc();
    io::write_run_manifest(tmp.path / "run", m);
    CHECK(fs::exists(tmp.path / "run" / "manifest.json"));
    std::ifstream in(tmp.path / "run" / "manifest.json");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(text.find("\"command\": \"synth\"") != std::string::npos);
    CHECK(text.find("synth.n_subjects") != std::string::npos);
}
