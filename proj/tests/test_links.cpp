#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <random>

#include "cocluster/links.hpp"
#include "helpers.hpp"

using namespace cocluster;
using testutil::ImageSpec;
using testutil::make_dataset;

namespace {

bool has(const std::set<IndexPair>& s, int a, int b) {
  return s.count({std::min(a, b), std::max(a, b)}) > 0;
}

}  // namespace

TEST_CASE("cannot links: faces sharing an image") {
  std::vector<ImageSpec> images = {{{0, 1, 2}, {0}, 0}};
  const Dataset ds = make_dataset(images, 3, 1);
  const LinkSet links = cannot_links_faces_same_image(ds);
  CHECK(links.cannot.size() == 3);
  CHECK(has(links.cannot, 0, 1));
  CHECK(has(links.cannot, 0, 2));
  CHECK(has(links.cannot, 1, 2));
  CHECK(links.must.empty());
}

TEST_CASE("cannot links: single faces produce nothing") {
  const Dataset ds = make_dataset(testutil::singleton_images(3, 1), 3, 1);
  CHECK(cannot_links_faces_same_image(ds).cannot.empty());
}

TEST_CASE("cannot links: per-image enumeration does not leak across images") {
  std::vector<ImageSpec> images = {{{0, 1}, {0}, 0}, {{2}, {}, 1000}};
  Dataset ds = make_dataset(images, 3, 1);
  LinkSet links = cannot_links_faces_same_image(ds);
  CHECK(links.cannot.size() == 1);
  CHECK(has(links.cannot, 0, 1));
  CHECK_FALSE(has(links.cannot, 0, 2));
}

TEST_CASE("teleport rule: far apart within the window") {
  const GeoPoint sf{37.7749, -122.4194};
  const GeoPoint ny{40.7128, -74.0060};
  // 30 minutes apart, one-hour window: impossible travel.
  std::vector<ImageSpec> images = {{{0}, {}, 0, sf}, {{1}, {}, 1800, ny}};
  const Dataset ds = make_dataset(images, 2, 0);
  const LinkSet links = cannot_links_faces_teleport(ds, 3600, 100.0);
  CHECK(links.cannot.size() == 1);
  CHECK(has(links.cannot, 0, 1));
}

TEST_CASE("teleport rule: outside the window") {
  const GeoPoint sf{37.7749, -122.4194};
  const GeoPoint ny{40.7128, -74.0060};
  std::vector<ImageSpec> images = {{{0}, {}, 0, sf}, {{1}, {}, 2 * 86400, ny}};
  const Dataset ds = make_dataset(images, 2, 0);
  CHECK(cannot_links_faces_teleport(ds, 3600, 100.0).cannot.empty());
}

TEST_CASE("teleport rule: nearby images never trigger") {
  const GeoPoint a{37.7749, -122.4194};
  const GeoPoint b{37.7794, -122.4194};  // roughly half a kilometer north
  REQUIRE(haversine_km(a, b) < 1.0);
  std::vector<ImageSpec> images = {{{0}, {}, 0, a}, {{1}, {}, 600, b}};
  const Dataset ds = make_dataset(images, 2, 0);
  CHECK(cannot_links_faces_teleport(ds, 3600, 100.0).cannot.empty());
}

TEST_CASE("teleport rule: untagged images are skipped") {
  const GeoPoint sf{37.7749, -122.4194};
  std::vector<ImageSpec> images = {{{0}, {}, 0, sf}, {{1}, {}, 600}};
  const Dataset ds = make_dataset(images, 2, 0);
  CHECK(cannot_links_faces_teleport(ds, 3600, 100.0).cannot.empty());
}

TEST_CASE("must links: locations sharing an image") {
  std::vector<ImageSpec> images = {{{}, {3, 5}, 0}, {{}, {0}, 1}, {{}, {1}, 2},
                                   {{}, {2}, 3},    {{}, {4}, 4}};
  const Dataset ds = make_dataset(images, 0, 6);
  const LinkSet links = must_links_locations_same_image(ds);
  CHECK(links.must.size() == 1);
  CHECK(has(links.must, 3, 5));

  std::vector<ImageSpec> triple = {{{}, {0, 1, 2}, 0}};
  const Dataset ds3 = make_dataset(triple, 0, 3);
  CHECK(must_links_locations_same_image(ds3).must.size() == 3);
}

TEST_CASE("must links: verified pairs pass through as a set") {
  std::vector<ImageSpec> images = testutil::singleton_images(0, 12);
  Dataset ds = make_dataset(images, 0, 12);
  ds.verified_location_pairs = {{10, 11}, {11, 10}, {10, 11}};
  const LinkSet links = must_links_locations_verified(ds);
  CHECK(links.must.size() == 1);
  CHECK(has(links.must, 10, 11));

  ds.verified_location_pairs.clear();
  CHECK(must_links_locations_verified(ds).must.empty());

  ds.verified_location_pairs = {{0, 99}};
  CHECK_THROWS_AS(must_links_locations_verified(ds), std::invalid_argument);
}

TEST_CASE("shared-person rule links locations within one time group") {
  // Two images in one burst, both showing cluster-2 faces at different
  // locations; a third image far later repeats the pattern at location 2.
  std::vector<ImageSpec> images = {
      {{0}, {0}, 0}, {{1}, {1}, 60}, {{2}, {2}, 500000}};
  const Dataset ds = make_dataset(images, 3, 3);
  const TimeGroups groups = build_time_groups(ds, 3600.0);
  REQUIRE(groups.count() == 2);

  Assignment faces;
  faces.k = 3;
  faces.labels = {2, 2, 2};
  const LinkSet links = must_links_locations_shared_person(ds, faces, groups);
  CHECK(links.must.size() == 1);
  CHECK(has(links.must, 0, 1));  // not (0,2) or (1,2): different group

  // Different face clusters stop the rule.
  faces.labels = {0, 1, 2};
  CHECK(must_links_locations_shared_person(ds, faces, groups).must.empty());
}

TEST_CASE("shared-person links grow when face clusters merge") {
  std::vector<ImageSpec> images = {
      {{0}, {0}, 0}, {{1}, {1}, 60}, {{2}, {2}, 120}};
  const Dataset ds = make_dataset(images, 3, 3);
  const TimeGroups groups = build_time_groups(ds, 3600.0);

  Assignment fine;
  fine.k = 3;
  fine.labels = {0, 1, 1};
  const LinkSet before = must_links_locations_shared_person(ds, fine, groups);

  Assignment coarse;  // merge clusters 0 and 1
  coarse.k = 3;
  coarse.labels = {0, 0, 0};
  const LinkSet after = must_links_locations_shared_person(ds, coarse, groups);
  for (const auto& pr : before.must) CHECK(after.must.count(pr) == 1);
  CHECK(after.must.size() >= before.must.size());
}

TEST_CASE("resolve_links closes must pairs transitively") {
  LinkSet raw;
  raw.domain = Domain::Location;
  raw.add_must(0, 1);
  raw.add_must(1, 2);
  const ResolvedLinks res = resolve_links(raw);
  CHECK(res.links.must.size() == 3);
  CHECK(has(res.links.must, 0, 2));
  CHECK(res.conflicts == 0);
}

TEST_CASE("resolve_links drops conflicting cannot pairs") {
  LinkSet raw;
  raw.add_must(0, 1);
  raw.add_cannot(0, 1);
  const ResolvedLinks res = resolve_links(raw);
  CHECK(res.conflicts == 1);
  CHECK(res.links.cannot.empty());
  CHECK(has(res.links.must, 0, 1));
}

TEST_CASE("resolve_links lifts cannot pairs to component level") {
  LinkSet raw;
  raw.add_must(0, 1);
  raw.add_cannot(1, 2);
  const ResolvedLinks res = resolve_links(raw);
  CHECK(res.links.cannot.size() == 2);
  CHECK(has(res.links.cannot, 0, 2));
  CHECK(has(res.links.cannot, 1, 2));
}

TEST_CASE("resolved must relation is an equivalence on components") {
  LinkSet raw;
  raw.add_must(0, 1);
  raw.add_must(1, 2);
  raw.add_must(4, 5);
  raw.add_cannot(2, 4);
  raw.add_cannot(0, 5);  // lifts to the same component pair
  const ResolvedLinks res = resolve_links(raw);
  // Transitivity inside {0,1,2}.
  for (int a = 0; a < 3; ++a) {
    for (int b = a + 1; b < 3; ++b) CHECK(has(res.links.must, a, b));
  }
  // No pair in both sets.
  for (const auto& pr : res.links.must) CHECK(res.links.cannot.count(pr) == 0);
  // Component-level lift: all 3x2 cross pairs are cannot.
  CHECK(res.links.cannot.size() == 6);
}

TEST_CASE("time groups: bursts separated by a large gap") {
  std::vector<ImageSpec> images;
  for (std::int64_t t : {0, 60, 120, 36000, 36060}) {
    images.push_back({{}, {static_cast<int>(images.size())}, t});
  }
  const Dataset ds = make_dataset(images, 0, 5);
  const TimeGroups groups = build_time_groups(ds, 3600.0);
  REQUIRE(groups.count() == 2);
  CHECK(groups.image_indices[0] == std::vector<int>{0, 1, 2});
  CHECK(groups.image_indices[1] == std::vector<int>{3, 4});
  CHECK(groups.location_indices[0] == std::vector<int>{0, 1, 2});
  CHECK(groups.location_indices[1] == std::vector<int>{3, 4});
}

TEST_CASE("time groups: single image and giant bandwidth") {
  const Dataset one = make_dataset({{{}, {0}, 12345}}, 0, 1);
  CHECK(build_time_groups(one, 3600.0).count() == 1);

  std::vector<ImageSpec> images;
  for (std::int64_t t : {0, 5000, 9000, 14000}) {
    images.push_back({{}, {static_cast<int>(images.size())}, t});
  }
  const Dataset ds = make_dataset(images, 0, 4);
  CHECK(build_time_groups(ds, 1.0e9).count() == 1);
}

TEST_CASE("time groups partition the images") {
  std::vector<ImageSpec> images;
  std::mt19937_64 rng(3);
  std::int64_t t = 0;
  for (int i = 0; i < 40; ++i) {
    t += static_cast<std::int64_t>(rng() % 20000);
    images.push_back({{}, {i}, t});
  }
  const Dataset ds = make_dataset(images, 0, 40);
  const TimeGroups groups = build_time_groups(ds, 3600.0);
  std::vector<int> seen(40, 0);
  for (const auto& g : groups.image_indices) {
    for (int i : g) ++seen[static_cast<std::size_t>(i)];
  }
  for (int i = 0; i < 40; ++i) CHECK(seen[static_cast<std::size_t>(i)] == 1);

  CHECK_THROWS_AS(build_time_groups(Dataset{}, 3600.0), std::invalid_argument);
  CHECK_THROWS_AS(build_time_groups(ds, 0.0), std::invalid_argument);
}

TEST_CASE("link CSV export") {
  LinkSet links;
  links.domain = Domain::Location;
  links.add_must(1, 0);
  links.add_cannot(2, 3);
  const auto dir = testutil::temp_dir("links_csv");
  save_links_csv(dir / "links.csv", links);
  std::ifstream in(dir / "links.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "domain,kind,i,j");
  std::getline(in, line);
  CHECK(line == "location,must,0,1");
  std::getline(in, line);
  CHECK(line == "location,cannot,2,3");
}
