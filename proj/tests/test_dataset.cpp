#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <sstream>

#include "cocluster/dataset.hpp"
#include "cocluster/evaluation.hpp"
#include "cocluster/synthetic.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace cocluster;
using testutil::ImageSpec;
using testutil::make_dataset;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("l2_normalize") {
  Vector v(2);
  v << 3, 4;
  const Vector u = l2_normalize(v);
  CHECK(u[0] == Catch::Approx(0.6));
  CHECK(u[1] == Catch::Approx(0.8));
  CHECK(std::abs(u.norm() - 1.0) < 1e-12);

  Vector e1(3);
  e1 << 1, 0, 0;
  CHECK(l2_normalize(e1) == e1);

  Vector zero = Vector::Zero(2);
  CHECK_THROWS_AS(l2_normalize(zero), std::invalid_argument);
}

TEST_CASE("combine_features") {
  Vector a(2), b(2);
  a << 1, 0;
  b << 0, 1;
  Vector c = combine_features(a, b, 1.0);
  REQUIRE(c.size() == 4);
  CHECK(c[0] == 1.0);
  CHECK(c[3] == 1.0);

  c = combine_features(a, b, 2.0);
  CHECK(c[0] == 2.0);
  CHECK(c[3] == 1.0);

  Vector a2(2), b2(2);
  a2 << 0.6, 0.8;
  b2 << 1, 0;
  c = combine_features(a2, b2, 1.0);
  CHECK(c[0] == Catch::Approx(0.6));
  CHECK(c[1] == Catch::Approx(0.8));
  CHECK(c[2] == 1.0);
  CHECK(c[3] == 0.0);

  CHECK_THROWS_AS(combine_features(a, b, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(combine_features(a, b, -1.0), std::invalid_argument);
}

TEST_CASE("build_cooccurrence marks shared images") {
  // Face 0 shares an image with locations 2 and 4 (0-based).
  std::vector<ImageSpec> images = {
      {{0}, {2, 4}, 0}, {{}, {0}, 1000}, {{}, {1}, 2000}, {{}, {3}, 3000}, {{}, {5}, 4000}};
  const Dataset ds = make_dataset(images, 1, 6);
  const CooccurrenceMatrix c = build_cooccurrence(ds);
  REQUIRE(c.entries.rows() == 6);
  REQUIRE(c.entries.cols() == 1);
  for (int l = 0; l < 6; ++l) {
    CHECK(c.entries(l, 0) == ((l == 2 || l == 4) ? 1.0 : 0.0));
  }
}

TEST_CASE("build_cooccurrence with disjoint domains is zero") {
  const Dataset ds = make_dataset(testutil::singleton_images(2, 3), 2, 3);
  const CooccurrenceMatrix c = build_cooccurrence(ds);
  CHECK(c.entries.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("build_cooccurrence column enumeration") {
  std::vector<ImageSpec> images = {{{0}, {0}, 0}, {{}, {1}, 1000}};
  Dataset ds = make_dataset(images, 1, 2);
  CooccurrenceMatrix c = build_cooccurrence(ds);
  CHECK(c.entries(0, 0) == 1.0);
  CHECK(c.entries(1, 0) == 0.0);

  std::vector<ImageSpec> images2 = {{{0}, {0}, 0}, {{1}, {1}, 1000}};
  ds = make_dataset(images2, 2, 2);
  c = build_cooccurrence(ds);
  // Rebuilding gives an identical matrix.
  const CooccurrenceMatrix again = build_cooccurrence(ds);
  CHECK(c.entries == again.entries);
  // Column sums count the locations sharing each face's image.
  for (int f = 0; f < 2; ++f) {
    double expected = 0.0;
    for (const auto& img : ds.images) {
      if (std::find(img.faces.begin(), img.faces.end(), f) != img.faces.end()) {
        expected += static_cast<double>(img.locations.size());
      }
    }
    CHECK(c.entries.col(f).sum() == expected);
  }
}

TEST_CASE("dataset validation rejects structural breakage") {
  // Dangling face reference.
  Dataset ds;
  ds.face_features = Matrix::Zero(3, 2);
  ds.location_features = Matrix::Zero(0, 0);
  ImageRecord img;
  img.id = "a";
  img.timestamp = 0;
  img.faces = {5};
  ds.images.push_back(img);
  CHECK_THROWS_WITH(validate(ds), Catch::Matchers::ContainsSubstring("face patch 5"));

  // Patch in two images.
  ds.images[0].faces = {0};
  ImageRecord img2;
  img2.id = "b";
  img2.timestamp = 1;
  img2.faces = {0, 1};
  ds.images.push_back(img2);
  ImageRecord img3;
  img3.id = "c";
  img3.timestamp = 2;
  img3.faces = {2};
  ds.images.push_back(img3);
  CHECK_THROWS_WITH(validate(ds), Catch::Matchers::ContainsSubstring("more than one image"));
}

TEST_CASE("bundle load: minimal well-formed bundle") {
  const auto dir = testutil::temp_dir("minimal_bundle");
  {
    std::ofstream(dir / "images.jsonl")
        << R"({"id":"only","timestamp":42,"faces":[0],"locations":[]})" << "\n";
    std::ofstream(dir / "face_features.csv") << "0.5,0.25\n";
    std::ofstream(dir / "location_features.csv");
    std::ofstream(dir / "verified_pairs.csv");
  }
  const Dataset ds = load_dataset(dir);
  CHECK(ds.num_faces() == 1);
  CHECK(ds.num_locations() == 0);
  CHECK(ds.images.size() == 1);
  CHECK(ds.images[0].timestamp == 42);
}

TEST_CASE("bundle load: dangling reference fails") {
  const auto dir = testutil::temp_dir("dangling_bundle");
  {
    std::ofstream(dir / "images.jsonl")
        << R"({"id":"a","timestamp":0,"faces":[5],"locations":[]})" << "\n";
    std::ofstream(dir / "face_features.csv") << "1,0\n2,0\n3,0\n";
    std::ofstream(dir / "location_features.csv");
    std::ofstream(dir / "verified_pairs.csv");
  }
  CHECK_THROWS_WITH(load_dataset(dir), Catch::Matchers::ContainsSubstring("face patch 5"));
}

TEST_CASE("bundle load: missing timestamp fails") {
  const auto dir = testutil::temp_dir("no_timestamp");
  {
    std::ofstream(dir / "images.jsonl") << R"({"id":"a","faces":[0],"locations":[]})" << "\n";
    std::ofstream(dir / "face_features.csv") << "1,0\n";
    std::ofstream(dir / "location_features.csv");
    std::ofstream(dir / "verified_pairs.csv");
  }
  CHECK_THROWS_WITH(load_dataset(dir), Catch::Matchers::ContainsSubstring("timestamp"));
}

TEST_CASE("bundle load: ragged feature rows fail") {
  const auto dir = testutil::temp_dir("ragged");
  {
    std::ofstream(dir / "images.jsonl")
        << R"({"id":"a","timestamp":0,"faces":[0,1],"locations":[]})" << "\n";
    std::ofstream(dir / "face_features.csv") << "1,0\n1,0,3\n";
    std::ofstream(dir / "location_features.csv");
    std::ofstream(dir / "verified_pairs.csv");
  }
  CHECK_THROWS_WITH(load_dataset(dir), Catch::Matchers::ContainsSubstring("expected"));
}

TEST_CASE("bundle at album scale loads with stated counts") {
  // 111 images, 146 face rows, 266 location rows, location dim 1256.
  Dataset ds;
  const int n_f = 146, n_l = 266;
  ds.face_features = Matrix::Random(n_f, 32);
  ds.location_features = Matrix::Random(n_l, 1256);
  for (int i = 0; i < 111; ++i) {
    ImageRecord img;
    img.id = "img" + std::to_string(i);
    img.timestamp = i * 600;
    ds.images.push_back(img);
  }
  for (int f = 0; f < n_f; ++f) ds.images[static_cast<std::size_t>(f * 111 / n_f)].faces.push_back(f);
  for (int l = 0; l < n_l; ++l) ds.images[static_cast<std::size_t>(l * 111 / n_l)].locations.push_back(l);
  validate(ds);

  const auto dir = testutil::temp_dir("album_scale");
  save_dataset(dir, ds);
  const Dataset loaded = load_dataset(dir);
  CHECK(loaded.images.size() == 111);
  CHECK(loaded.num_faces() == 146);
  CHECK(loaded.num_locations() == 266);
  CHECK(loaded.location_features.cols() == 1256);
}

TEST_CASE("bundle round-trips byte-identically") {
  auto [ds, truth] = generate_synthetic(SyntheticConfig{.k_f = 3,
                                                        .k_l = 3,
                                                        .faces_per_cluster = 4,
                                                        .locations_per_cluster = 5,
                                                        .with_geo = true},
                                        7);
  const auto dir1 = testutil::temp_dir("roundtrip1");
  const auto dir2 = testutil::temp_dir("roundtrip2");
  save_dataset(dir1, ds, &truth);
  const Dataset loaded = load_dataset(dir1);
  const auto truth2 = load_ground_truth(dir1);
  REQUIRE(truth2.has_value());
  save_dataset(dir2, loaded, &*truth2);
  for (const char* name :
       {"images.jsonl", "face_features.csv", "location_features.csv", "verified_pairs.csv",
        "ground_truth.json"}) {
    INFO(name);
    CHECK(slurp(dir1 / name) == slurp(dir2 / name));
  }
}

TEST_CASE("synthetic generation is deterministic per seed") {
  SyntheticConfig cfg;
  cfg.k_f = 4;
  cfg.k_l = 4;
  cfg.faces_per_cluster = 6;
  cfg.locations_per_cluster = 7;
  auto [ds1, gt1] = generate_synthetic(cfg, 123);
  auto [ds2, gt2] = generate_synthetic(cfg, 123);
  CHECK(ds1.face_features == ds2.face_features);
  CHECK(ds1.location_features == ds2.location_features);
  CHECK(ds1.verified_location_pairs == ds2.verified_location_pairs);
  REQUIRE(ds1.images.size() == ds2.images.size());
  for (std::size_t i = 0; i < ds1.images.size(); ++i) {
    CHECK(ds1.images[i].faces == ds2.images[i].faces);
    CHECK(ds1.images[i].locations == ds2.images[i].locations);
    CHECK(ds1.images[i].timestamp == ds2.images[i].timestamp);
  }
  CHECK(gt1.face_labels == gt2.face_labels);

  // A different seed moves features but keeps the label layout.
  auto [ds3, gt3] = generate_synthetic(cfg, 124);
  CHECK(ds3.face_features != ds1.face_features);
  CHECK(gt3.face_labels == gt1.face_labels);
}

TEST_CASE("synthetic infeasible configs are rejected") {
  SyntheticConfig cfg;
  cfg.faces_per_cluster = 0;
  CHECK_THROWS_AS(generate_synthetic(cfg, 0), std::invalid_argument);
  cfg = SyntheticConfig{};
  cfg.k_f = 4;
  cfg.faces_per_cluster = 10;
  cfg.k_l = 2;
  cfg.locations_per_cluster = 10;  // 20 locations < 40 faces
  CHECK_THROWS_AS(generate_synthetic(cfg, 0), std::invalid_argument);
}

TEST_CASE("synthetic coupling off decouples co-occurrence from labels") {
  SyntheticConfig cfg;
  cfg.cooccurrence_strength = 0.0;
  cfg.public_fraction = 0.0;  // non-home draws go uniform
  cfg.k_f = 4;
  cfg.k_l = 4;
  cfg.faces_per_cluster = 50;
  cfg.locations_per_cluster = 50;
  auto [ds, gt] = generate_synthetic(cfg, 5);
  const CooccurrenceMatrix c = build_cooccurrence(ds);
  // With coupling off, the fraction of faces whose image lands in the home
  // cluster should be near 1/k_l, far from the strength-0.9 regime.
  int home_hits = 0;
  for (int f = 0; f < ds.num_faces(); ++f) {
    const int fc = gt.face_labels[static_cast<std::size_t>(f)];
    for (int l = 0; l < ds.num_locations(); ++l) {
      if (c.entries(l, f) != 0.0 &&
          gt.location_labels[static_cast<std::size_t>(l)] == fc % cfg.k_l) {
        ++home_hits;
        break;
      }
    }
  }
  const double frac = static_cast<double>(home_hits) / ds.num_faces();
  CHECK(frac < 0.6);
}

TEST_CASE("well-separated synthetic blobs are recoverable per domain") {
  SyntheticConfig cfg;
  cfg.k_f = 5;
  cfg.k_l = 5;
  cfg.faces_per_cluster = 20;
  cfg.locations_per_cluster = 20;
  cfg.separation = 5.0;
  cfg.noise = 1.0;  // separation is 5x noise
  auto [ds, gt] = generate_synthetic(cfg, 11);

  for (Domain d : {Domain::Face, Domain::Location}) {
    const Matrix& x = d == Domain::Face ? ds.face_features : ds.location_features;
    const AffinityMatrix a = affinity(x);
    KernelMatrix km;
    km.entries = 2.0 * a.entries;
    const double sigma = resolve_sigma(km.entries, SigmaPolicy::Gershgorin);
    km.entries.diagonal().array() += sigma;
    km.diagonal_shift = sigma;
    const SolveResult res = kernel_kmeans(km, 5, nullptr, 99);
    const auto& truth = d == Domain::Face ? gt.face_labels : gt.location_labels;
    CHECK(rand_index(res.assignment.labels, truth) > 0.95);
  }
}
