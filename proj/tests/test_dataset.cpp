#include <doctest.h>

#include <filesystem>

#include "svrt/dataset.hpp"

using namespace svrt;
using namespace svrt::io;

namespace {

Dataset tiny_dataset() {
  Dataset ds;
  ds.task_id = 7;
  for (int i = 0; i < 2; ++i) {
    Sample s;
    s.label = static_cast<std::uint8_t>(i);
    s.image = Image(128, 128);
    s.image.at(i, 3) = kInk;
    ds.samples.push_back(s);
  }
  return ds;
}

}  // namespace

TEST_CASE("pack layout") {
  const auto bytes = pack(tiny_dataset());
  // magic(5) version(1) task(2) count(4) height(2) width(2), then label + pixels per sample
  CHECK(bytes.size() == 16 + 2 * (1 + 128 * 128));
  CHECK(std::string(bytes.begin(), bytes.begin() + 5) == "SVRT1");
  CHECK(bytes[5] == 1);
  CHECK(bytes[6] == 7);
  CHECK(bytes[7] == 0);
  CHECK(bytes[8] == 2);
  CHECK(bytes[12] == 128);
  CHECK(bytes[14] == 128);
  CHECK(bytes[16] == 0);
  CHECK(bytes[17 + 16384] == 1);
}

TEST_CASE("pack round trip") {
  const Dataset ds = tiny_dataset();
  const auto bytes = pack(ds);
  CHECK(unpack(bytes) == ds);
  CHECK(pack(unpack(bytes)) == bytes);
}

TEST_CASE("format errors report offsets") {
  const auto bytes = pack(tiny_dataset());
  auto offset_of = [](std::vector<std::uint8_t> b) -> std::uint64_t {
    try {
      unpack(b);
    } catch (const FormatError& e) {
      return e.offset();
    }
    return ~0ULL;
  };
  auto bad = bytes;
  bad[2] = 'X';
  CHECK(offset_of(bad) == 2);
  bad = bytes;
  bad[5] = 9;
  CHECK(offset_of(bad) == 5);
  for (std::size_t cut : {std::size_t{3}, std::size_t{10}, std::size_t{16}, std::size_t{1000}, bytes.size() - 1})
    CHECK(offset_of(std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + cut)) == cut);
  bad = bytes;
  bad.push_back(0);
  CHECK(offset_of(bad) == bytes.size());
  bad = bytes;
  bad[16] = 2;
  CHECK(offset_of(bad) == 16);
}

TEST_CASE("generation is balanced, thread independent and split disjoint") {
  const Dataset a = generate(3, Split::Train, 20, 5, 1);
  const Dataset b = generate(3, Split::Train, 20, 5, 4);
  CHECK(a == b);
  int ones = 0;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(a.samples[i].label == i % 2);
    ones += a.samples[i].label;
  }
  CHECK(ones == 10);
  const Dataset v = generate(3, Split::Val, 20, 5, 1);
  for (const auto& s : a.samples)
    for (const auto& t : v.samples) CHECK_FALSE(s.image == t.image);
  CHECK(sample_seed(5, Split::Train, 0) != sample_seed(5, Split::Val, 0));
  CHECK_THROWS(generate(3, Split::Train, 3, 5));
}

TEST_CASE("manifest") {
  const Dataset ds = generate(9, Split::Test, 4, 11);
  const auto bytes = pack(ds);
  const DatasetManifest m = manifest_for(ds, Split::Test, 11, bytes);
  CHECK(m.checksum == fnv1a64(bytes));
  CHECK(m.count == 4);
  CHECK(m.generator_version == kGeneratorVersion);
  CHECK(DatasetManifest::parse(m.to_text()) == m);
  CHECK(manifest_for(generate(9, Split::Test, 4, 11, 3), Split::Test, 11, pack(generate(9, Split::Test, 4, 11, 3)))
            .checksum == m.checksum);
}

TEST_CASE("atomic writes") {
  const auto dir = std::filesystem::temp_directory_path() / "svrt_dataset_test";
  std::filesystem::create_directories(dir);
  const std::vector<std::uint8_t> data{1, 2, 3, 250};
  write_atomic(dir / "x.bin", data);
  write_atomic(dir / "x.bin", data);
  CHECK(read_file(dir / "x.bin") == data);
  write_atomic(dir / "t.txt", std::string_view("hello\n"));
  CHECK(read_file(dir / "t.txt").size() == 6);
  int files = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) ++files;
  CHECK(files == 2);
  std::filesystem::remove_all(dir);
  CHECK_THROWS(read_file(dir / "missing"));
}

TEST_CASE("parallel_for covers every index and rethrows") {
  std::vector<int> hit(100, 0);
  parallel_for(hit.size(), 4, [&](std::size_t i) { hit[i] += 1; });
  CHECK(std::all_of(hit.begin(), hit.end(), [](int h) { return h == 1; }));
  CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) { if (i == 7) throw DataError("boom"); }), DataError);
}
