// Persistence tests: CRC-32 against the standard check value, checkpoint and
// single-array files round-tripping bit-exactly, deterministic bytes, and
// rejection of every corruption mode (flipped byte, truncation, bad magic,
// trailing garbage, wrong dtype/shape).
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "fg2/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

using namespace fg2;

namespace {

std::filesystem::path tmp_path(const char* name) {
    return std::filesystem::temp_directory_path() / name;
}

std::vector<uint8_t> read_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::vector<uint8_t> b((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return b;
}

void write_bytes(const std::filesystem::path& p, const std::vector<uint8_t>& b) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(b.data()), long(b.size()));
}

Checkpoint sample_checkpoint() {
    Checkpoint c;
    c.add(ArrayData::of_f32("alpha", {2, 3}, {1.f, 2.f, 3.f, 4.f, 5.f, 6.f}));
    c.add(ArrayData::of_f64("beta", {4}, {0.1, -0.2, 0.3, 1e-300}));
    MatD m(2, 2);
    m.v = {9.0, 8.0, 7.0, 6.0};
    c.add_matd("gamma", m);
    c.add_text("cfg", "steps = 12\nlr = 1e-3\n");
    c.add_scalar("loss", 0.125);
    return c;
}

} // namespace

TEST_CASE("crc32: standard check value and incremental equivalence") {
    const char* s = "123456789";
    CHECK(crc32(s, 9) == 0xCBF43926u);
    CHECK(crc32(s, 0) == 0u);
    // chained over a split must equal the whole
    const uint32_t part = crc32(s, 4);
    CHECK(crc32(s + 4, 5, part) == 0xCBF43926u);
    const char* empty_then = "hello world";
    CHECK(crc32(empty_then, 11) == crc32(empty_then + 3, 8, crc32(empty_then, 3)));
}

TEST_CASE("array data: dims must match the payload") {
    CHECK_THROWS_AS(ArrayData::of_f32("x", {3}, {1.f, 2.f}), DataError);
    CHECK_THROWS_AS(ArrayData::of_f64("x", {2, 2}, {1.0}), DataError);
    CHECK_THROWS_AS(ArrayData::of_i32("x", {0}, {1}), DataError);
    ArrayData ok = ArrayData::of_i32("x", {2}, {5, -7});
    CHECK(ok.count() == 2);
}

TEST_CASE("checkpoint: round trip preserves order, names, dtypes and bits") {
    const auto path = tmp_path("fg2_ckpt_rt.fg2c");
    Checkpoint c = sample_checkpoint();
    save_checkpoint(c, path.string());
    Checkpoint r = load_checkpoint(path.string());
    REQUIRE(r.entries.size() == c.entries.size());
    for (size_t i = 0; i < c.entries.size(); ++i) {
        CHECK(r.entries[i].name == c.entries[i].name);
        CHECK(r.entries[i].dtype == c.entries[i].dtype);
        CHECK(r.entries[i].dims == c.entries[i].dims);
        CHECK(r.entries[i].f32 == c.entries[i].f32);
        CHECK(r.entries[i].f64 == c.entries[i].f64);
    }
    CHECK(r.text("cfg") == "steps = 12\nlr = 1e-3\n");
    CHECK(r.scalar("loss") == 0.125);
    MatD g = r.matd("gamma");
    CHECK(g.rows == 2);
    CHECK(g.v == std::vector<double>{9.0, 8.0, 7.0, 6.0});
    std::filesystem::remove(path);
}

TEST_CASE("checkpoint: saving twice produces identical bytes") {
    const auto p1 = tmp_path("fg2_ckpt_b1.fg2c"), p2 = tmp_path("fg2_ckpt_b2.fg2c");
    save_checkpoint(sample_checkpoint(), p1.string());
    save_checkpoint(sample_checkpoint(), p2.string());
    CHECK(read_bytes(p1) == read_bytes(p2));
    std::filesystem::remove(p1);
    std::filesystem::remove(p2);
}

TEST_CASE("checkpoint: typed helpers round trip") {
    Checkpoint c;
    MatF f(3, 2);
    f.v = {1.f, 2.f, 3.f, 4.f, 5.f, 6.f};
    c.add_matf("mf", f);
    c.add_vecd("vd", {0.5, -0.5, 2.0});
    c.add_text("empty", "");
    const auto path = tmp_path("fg2_ckpt_helpers.fg2c");
    save_checkpoint(c, path.string());
    Checkpoint r = load_checkpoint(path.string());
    CHECK(r.matf("mf").v == f.v);
    CHECK(r.vecd("vd") == std::vector<double>{0.5, -0.5, 2.0});
    CHECK(r.text("empty").empty());
    CHECK_THROWS_AS(r.matd("mf"), DataError);   // wrong dtype accessor
    CHECK_THROWS_AS(r.vecd("missing"), DataError);
    CHECK_THROWS_AS(r.scalar("vd"), DataError); // length 3, not a scalar
    std::filesystem::remove(path);
}

TEST_CASE("checkpoint: parameter sets round trip under a prefix") {
    ParamSet<float> p;
    p.add("enc.w", {2, 3});
    p.add("enc.b", {3});
    for (size_t i = 0; i < p.count(); ++i)
        for (size_t j = 0; j < p.tensors[i].size(); ++j)
            p.tensors[i].v[j] = float(i * 10 + j) * 0.25f;
    Checkpoint c;
    c.add_params("theta_x.", p);
    c.add_params("theta_f.", p);
    const auto path = tmp_path("fg2_ckpt_params.fg2c");
    save_checkpoint(c, path.string());
    Checkpoint r = load_checkpoint(path.string());
    ParamSet<float> q = r.params("theta_x.");
    REQUIRE(q.count() == p.count());
    for (size_t i = 0; i < p.count(); ++i) {
        CHECK(q.names[i] == p.names[i]);
        CHECK(q.tensors[i].dims == p.tensors[i].dims);
        CHECK(q.tensors[i].v == p.tensors[i].v);
    }
    CHECK_THROWS_AS(r.params("nonexistent."), DataError);
    std::filesystem::remove(path);
}

TEST_CASE("checkpoint: duplicate names and non-float dtypes rejected") {
    Checkpoint c;
    c.add(ArrayData::of_f32("a", {1}, {1.f}));
    CHECK_THROWS_AS(c.add(ArrayData::of_f32("a", {1}, {2.f})), DataError);
    CHECK_THROWS_AS(c.add(ArrayData::of_i32("b", {1}, {1})), DataError);
}

TEST_CASE("checkpoint: every corruption mode is rejected") {
    const auto path = tmp_path("fg2_ckpt_corrupt.fg2c");
    save_checkpoint(sample_checkpoint(), path.string());
    const std::vector<uint8_t> good = read_bytes(path);
    REQUIRE(load_checkpoint(path.string()).entries.size() == 5);

    // single flipped byte anywhere in the body
    for (size_t pos : {size_t(9), good.size() / 2, good.size() - 1}) {
        std::vector<uint8_t> bad = good;
        bad[pos] ^= 0x40;
        write_bytes(path, bad);
        CHECK_THROWS_AS(load_checkpoint(path.string()), DataError);
    }
    // truncation at several prefixes
    for (size_t keep : {size_t(0), size_t(3), size_t(10), good.size() - 5}) {
        std::vector<uint8_t> bad(good.begin(), good.begin() + long(keep));
        write_bytes(path, bad);
        CHECK_THROWS_AS(load_checkpoint(path.string()), DataError);
    }
    // trailing garbage breaks the CRC position
    {
        std::vector<uint8_t> bad = good;
        bad.push_back(0xAB);
        write_bytes(path, bad);
        CHECK_THROWS_AS(load_checkpoint(path.string()), DataError);
    }
    // wrong magic
    {
        std::vector<uint8_t> bad = good;
        bad[0] = 'X';
        write_bytes(path, bad);
        CHECK_THROWS_AS(load_checkpoint(path.string()), DataError);
    }
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_checkpoint(path.string()), DataError); // missing file
}

TEST_CASE("array files: every dtype round trips bit-exactly") {
    const auto path = tmp_path("fg2_arr.f2gb");

    ArrayData f = ArrayData::of_f32("payload", {2, 2}, {1.5f, -2.25f, 0.f, 1e-30f});
    write_array_file(path.string(), f);
    ArrayData rf = read_array_file(path.string());
    CHECK(rf.dtype == 0);
    CHECK(rf.dims == f.dims);
    CHECK(rf.f32 == f.f32);

    ArrayData d = ArrayData::of_f64("payload", {3}, {1.0 / 3.0, -0.0, 4e300});
    write_array_file(path.string(), d);
    ArrayData rd = read_array_file(path.string());
    CHECK(rd.dtype == 1);
    CHECK(std::memcmp(rd.f64.data(), d.f64.data(), 3 * sizeof(double)) == 0);

    ArrayData i = ArrayData::of_i32("payload", {4}, {-2147483647, 0, 1, 2147483647});
    write_array_file(path.string(), i);
    ArrayData ri = read_array_file(path.string());
    CHECK(ri.dtype == 2);
    CHECK(ri.i32 == i.i32);

    std::filesystem::remove(path);
}

TEST_CASE("array files: corruption detected") {
    const auto path = tmp_path("fg2_arr_corrupt.f2gb");
    write_array_file(path.string(), ArrayData::of_f64("x", {2}, {1.0, 2.0}));
    const std::vector<uint8_t> good = read_bytes(path);
    for (size_t pos = 8; pos < good.size(); pos += 7) {
        std::vector<uint8_t> bad = good;
        bad[pos] ^= 0x01;
        write_bytes(path, bad);
        CHECK_THROWS_AS(read_array_file(path.string()), DataError);
    }
    std::vector<uint8_t> shortfile(good.begin(), good.begin() + 6);
    write_bytes(path, shortfile);
    CHECK_THROWS_AS(read_array_file(path.string()), DataError);
    std::filesystem::remove(path);
}
