#include <cstring>
#include <fstream>
#include <random>
#include <set>

#include "doctest.h"
#include "fcseg/keyvalue.hpp"
#include "fcseg/volume.hpp"
#include "fcseg/volume_io.hpp"
#include "scratch_dir.hpp"

using namespace fcseg;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected fcseg::Error");
  return ErrorCode::InvalidArgument;
}

void write_bytes(const fs::path& p, const std::vector<unsigned char>& bytes) {
  std::ofstream f(p, std::ios::binary);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<unsigned char> read_bytes(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

// Float32-representable values so a float32 round trip is exact.
Volume random_volume(Dims d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1000.f, 1000.f);
  std::vector<double> v(d.count());
  for (auto& x : v) x = u(rng);
  return Volume(Grid(d, {0.5, 1.0, 2.5}), std::move(v));
}

}  // namespace

TEST_SUITE("volume") {
  TEST_CASE("linear index is x-fastest and coord inverts it") {
    const Grid g({4, 3, 2}, {});
    CHECK(g.index({1, 2, 1}) == 1 + 4 * (2 + 3 * 1));
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(g.index(g.coord(i)) == i);
  }

  TEST_CASE("neighbour counts") {
    const Dims d{5, 5, 5};
    CHECK(neighbors({2, 2, 2}, d, Adjacency::Six).size() == 6);
    CHECK(neighbors({0, 0, 0}, d, Adjacency::Six).size() == 3);
    CHECK(neighbors({2, 2, 2}, d, Adjacency::TwentySix).size() == 26);
    CHECK(neighbors({0, 0, 0}, d, Adjacency::TwentySix).size() == 7);
    CHECK(code_of([&] { neighbors({5, 0, 0}, d); }) == ErrorCode::OutOfBounds);
  }

  TEST_CASE("26-neighbourhood is every non-zero offset in {-1,0,1}^3") {
    std::set<std::array<int, 3>> got;
    for (const auto& o : neighbor_offsets(Adjacency::TwentySix)) got.insert(o);
    std::set<std::array<int, 3>> want;
    for (int a = -1; a <= 1; ++a)
      for (int b = -1; b <= 1; ++b)
        for (int c = -1; c <= 1; ++c)
          if (a || b || c) want.insert({a, b, c});
    CHECK(got == want);
  }

  TEST_CASE("for_each_neighbor agrees with neighbors()") {
    const Grid g({4, 3, 3}, {});
    for (auto adj : {Adjacency::Six, Adjacency::TwentySix})
      for (std::size_t i = 0; i < g.size(); ++i) {
        std::set<std::size_t> a, b;
        for_each_neighbor(g, i, adj, [&](std::size_t q, auto) { a.insert(q); });
        for (const auto& p : neighbors(g.coord(i), g.dims(), adj)) b.insert(g.index(p));
        CHECK(a == b);
      }
  }

  TEST_CASE("construction checks") {
    const Grid g({2, 2, 1}, {});
    CHECK(code_of([&] { Volume(g, {1, 2, 3}); }) == ErrorCode::DimMismatch);
    CHECK(code_of([&] { Volume(g, {1, 2, 3, std::nan("")}); }) == ErrorCode::NonFiniteData);
    CHECK(code_of([] { Grid({0, 2, 2}, {}); }) == ErrorCode::DimsNonPositive);
    CHECK(code_of([] { adjacency_from_int(18); }) == ErrorCode::InvalidArgument);
    const Volume a(g, {1, 2, 3, 4}), b(Grid({2, 2, 1}, {2, 1, 1}), {1, 2, 3, 4});
    CHECK(code_of([&] { MultiContrastVolume({a, b}, {"x", "y"}); }) == ErrorCode::DimMismatch);
    CHECK(code_of([&] { MultiContrastVolume({a, a}, {"x", "x"}); }) == ErrorCode::InvalidArgument);
  }

  TEST_CASE("error categories") {
    CHECK(category_of(ErrorCode::ConfigError) == ErrorCategory::Config);
    CHECK(category_of(ErrorCode::FileTooShort) == ErrorCategory::Data);
    CHECK(category_of(ErrorCode::NoValidSeed) == ErrorCategory::Algorithm);
    CHECK(std::string(to_string(ErrorCode::NoValidSeed)) == "no-valid-seed");
    const Error e(ErrorCode::OutOfBounds, "seed 3");
    CHECK(e.detail() == "seed 3");
  }
}

TEST_SUITE("io") {
  TEST_CASE("uint16 little-endian decode") {
    const auto dir = scratch_dir("u16");
    write_bytes(dir / "v.raw", {1, 0, 2, 0, 3, 0, 4, 0});
    VolumeHeader h;
    h.dims = {2, 2, 1};
    h.element_type = ElementType::UInt16;
    const auto v = load_volume(dir / "v.raw", h);
    CHECK(std::vector<double>(v.data().begin(), v.data().end()) == std::vector<double>{1, 2, 3, 4});
    h.little_endian = false;
    CHECK(load_volume(dir / "v.raw", h)[0] == 256.0);
  }

  TEST_CASE("size mismatches") {
    const auto dir = scratch_dir("short");
    write_bytes(dir / "short.raw", {1, 0, 2, 0, 3, 0, 4});
    write_bytes(dir / "long.raw", {1, 0, 2, 0, 3, 0, 4, 0, 5});
    VolumeHeader h;
    h.dims = {2, 2, 1};
    h.element_type = ElementType::UInt16;
    CHECK(code_of([&] { load_volume(dir / "short.raw", h); }) == ErrorCode::FileTooShort);
    CHECK(code_of([&] { load_volume(dir / "long.raw", h); }) == ErrorCode::FileTooLong);
    CHECK(code_of([&] { load_volume(dir / "missing.raw", h); }) == ErrorCode::IoFailure);
    h.dims = {0, 2, 1};
    CHECK(code_of([&] { load_volume(dir / "short.raw", h); }) == ErrorCode::DimsNonPositive);
  }

  TEST_CASE("non-finite float32 data is rejected") {
    const auto dir = scratch_dir("nan");
    const float vals[2] = {1.0f, std::numeric_limits<float>::infinity()};
    std::vector<unsigned char> bytes(sizeof vals);
    std::memcpy(bytes.data(), vals, sizeof vals);
    write_bytes(dir / "v.raw", bytes);
    VolumeHeader h;
    h.dims = {2, 1, 1};
    CHECK(code_of([&] { load_volume(dir / "v.raw", h); }) == ErrorCode::NonFiniteData);
  }

  TEST_CASE("float32 file size and zero volume bytes") {
    const auto dir = scratch_dir("f32");
    const auto v = random_volume({5, 4, 3}, 7);
    save_volume(v, dir / "v.raw");
    CHECK(fs::file_size(dir / "v.raw") == 5 * 4 * 3 * 4);
    save_volume(Volume::filled(Grid({1, 1, 1}, {}), 0.0), dir / "z.raw");
    CHECK(read_bytes(dir / "z.raw") == std::vector<unsigned char>{0, 0, 0, 0});
  }

  TEST_CASE("round trips") {
    const auto dir = scratch_dir("roundtrip");
    for (Dims d : {Dims{5, 4, 3}, Dims{8, 8, 2}}) {
      const auto v = random_volume(d, d.count());
      save_volume(v, dir / "v.raw");
      const auto back = load_volume(dir / "v.raw");
      CHECK(back == v);
    }
    std::vector<double> ints(12);
    for (std::size_t i = 0; i < ints.size(); ++i) ints[i] = static_cast<double>(i * 5000);
    const Volume u(Grid({3, 2, 2}, {}), ints);
    save_volume(u, dir / "u.raw", ElementType::UInt16);
    CHECK(load_volume(dir / "u.raw") == u);
    CHECK(code_of([&] { save_volume(random_volume({2, 2, 2}, 1), dir / "bad.raw", ElementType::UInt8); }) ==
          ErrorCode::InvalidArgument);

    const LabelMap lm(Grid({3, 1, 1}, {1, 2, 3}), {0, 2, 1});
    save_labels(lm, dir / "l.raw");
    CHECK(load_labels(dir / "l.raw") == lm);
  }

  TEST_CASE("header text") {
    const auto dir = scratch_dir("hdr");
    VolumeHeader h;
    h.dims = {5, 4, 3};
    h.spacing = {0.5, 0.5, 2};
    h.element_type = ElementType::UInt8;
    write_header(h, dir / "x.hdr");
    const auto back = read_header(dir / "x.hdr");
    CHECK(back.dims == h.dims);
    CHECK(back.spacing == h.spacing);
    CHECK(back.element_type == ElementType::UInt8);
    const auto kv = KeyValueFile::load(dir / "x.hdr");
    CHECK(kv.get_string("element_type") == "uint8");
    CHECK(kv.get_ints("dims") == std::vector<long long>{5, 4, 3});
  }
}

TEST_SUITE("keyvalue") {
  TEST_CASE("sections, comments and typed getters") {
    const auto kv = KeyValueFile::parse(
        "# comment\n"
        "top = 3\n"
        "[seeding]\n"
        "method = ap   # trailing\n"
        "ratio = 0.25\n"
        "list = 1 2 3.5\n"
        "flag = true\n");
    CHECK(kv.get_int("top") == 3);
    CHECK(kv.get_string("seeding.method") == "ap");
    CHECK(kv.get_double("seeding.ratio") == 0.25);
    CHECK(kv.get_doubles("seeding.list") == std::vector<double>{1, 2, 3.5});
    CHECK(kv.get_bool("seeding.flag"));
    CHECK(kv.get_int("seeding.absent", 9) == 9);
    CHECK(code_of([&] { kv.get_int("seeding.absent"); }) == ErrorCode::ConfigError);
    CHECK(code_of([&] { kv.get_int("seeding.method"); }) == ErrorCode::ConfigError);
  }

  TEST_CASE("malformed text") {
    CHECK(code_of([] { KeyValueFile::parse("[open\nx = 1\n"); }) == ErrorCode::ConfigError);
    CHECK(code_of([] { KeyValueFile::load("/nonexistent/fcseg.ini"); }) == ErrorCode::IoFailure);
  }

  TEST_CASE("doubles survive a text round trip exactly") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    KeyValueFile kv;
    std::vector<double> vals(50);
    for (auto& v : vals) v = u(rng);
    kv.set("a.values", vals);
    kv.set("a.one", vals.front());
    const auto back = KeyValueFile::parse(kv.to_string());
    CHECK(back.get_doubles("a.values") == vals);
    CHECK(back.get_double("a.one") == vals.front());
    CHECK(std::stod(format_double(0.1)) == 0.1);
  }
}
