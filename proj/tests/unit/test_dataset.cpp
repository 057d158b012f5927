#include "doctest_torch.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "mtaoiqa/dataset.hpp"
#include "test_support.hpp"

using namespace mtaoiqa;
using namespace mtaoiqa::testing;

TEST_SUITE("dataset") {

TEST_CASE("JUFE-style generation covers every cell") {
  const auto m = generate_dataset(10, Taxonomy::kJufe, 24, 7);
  CHECK(m.records.size() == 240);
  std::set<std::tuple<int, int, int>> cells;
  for (const auto& r : m.records) {
    cells.insert({r.range_label, r.type_label, r.degree_label});
    CHECK(r.pseudo_mos >= 1.0);
    CHECK(r.pseudo_mos <= 5.0);
    CHECK_NOTHROW(validate(r.spec));
  }
  CHECK(cells.size() == 24);
  CHECK(check_labels(m).empty());
}

TEST_CASE("OIQ-style undistorted records") {
  const auto m = generate_dataset(6, Taxonomy::kOiq, 16, 3);
  std::set<int> ranges;
  for (const auto& r : m.records) {
    ranges.insert(r.range_label);
    if (r.range_label == 0) {
      CHECK(r.pseudo_mos == 3.0);
      CHECK(r.type_label == kNoLabel);
      CHECK(r.degree_label == kNoLabel);
    }
  }
  CHECK(ranges == std::set<int>{0, 1, 2, 3});
}

TEST_CASE("split keeps sources disjoint") {
  const auto m = generate_dataset(10, Taxonomy::kJufe, 24, 7);
  std::set<int> train, test;
  for (const auto& r : m.records) (r.split == Split::kTrain ? train : test).insert(r.source);
  CHECK(train.size() == 8);
  CHECK(test.size() == 2);
  for (int s : test) CHECK(train.count(s) == 0);
}

TEST_CASE("label checker catches tampering") {
  auto m = generate_dataset(3, Taxonomy::kJufe, 8, 1);
  m.records[5].degree_label = (m.records[5].degree_label + 1) % 3;
  const auto bad = check_labels(m);
  REQUIRE(bad.size() == 1);
  CHECK(bad[0] == 5);
}

TEST_CASE("manifest JSON round trip is byte-stable") {
  const auto m = generate_dataset(4, Taxonomy::kOiq, 12, 11);
  const auto text = manifest_to_json(m);
  CHECK(manifest_to_json(manifest_from_json(text)) == text);
  CHECK(manifest_to_json(generate_dataset(4, Taxonomy::kOiq, 12, 11)) == text);
}

TEST_CASE("generation needs at least two sources") {
  CHECK_THROWS_AS(generate_dataset(1, Taxonomy::kJufe, 24, 0), std::invalid_argument);
}

TEST_CASE("written images reproduce the rendered records") {
  const auto dir = scratch_dir("dataset");
  std::vector<EquirectImage> bases{procedural_panorama(1, 32), procedural_panorama(2, 32)};
  const auto m = generate_dataset(2, Taxonomy::kJufe, 3, 5);
  write_dataset(m, bases, dir);
  const auto loaded = load_manifest(dir / "manifest.json");
  CHECK(manifest_to_json(loaded) == manifest_to_json(m));
  const auto img = load_image(dir / m.records[0].path);
  const auto ref = render_record(bases, m.records[0]).pixels();
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 64; ++x) {
      CHECK(std::abs(img.at(y, x, 1) - ref.at(y, x, 1)) <= 0.5f / 255.0f + 1e-6f);
    }
  }
  std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
