#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "cuboidtrack/heatmap.hpp"

using namespace cuboidtrack;

TEST_CASE("render_scale: pinned constants") {
  // 1 - 0.15^1.5, via sqrt: 0.15 * sqrt(0.15) = 0.058094750193111...
  REQUIRE(render_scale(9.0) == 0.0);
  REQUIRE(render_scale(3.0) == Catch::Approx(0.85).margin(1e-12));
  REQUIRE(render_scale(0.0) == Catch::Approx(0.94190524980688874).margin(1e-12));
}

TEST_CASE("render_scale: monotone non-increasing, continuous, zero past a") {
  double prev = render_scale(0.0);
  for (double s = 0.0; s <= 12.0; s += 0.01) {
    const double k = render_scale(s);
    REQUIRE(k <= prev + 1e-15);
    REQUIRE(k >= 0.0);
    REQUIRE(k <= 1.0);
    // Continuity: adjacent samples stay close.
    REQUIRE(std::abs(k - prev) < 0.01);
    prev = k;
  }
  REQUIRE(render_scale(9.0) == 0.0);
  REQUIRE(render_scale(10.5) == 0.0);
}

TEST_CASE("invert_render_scale: round trip and clamping") {
  for (double s = 1.0; s <= 8.0; s += 0.5) {
    REQUIRE(invert_render_scale(render_scale(s)) == Catch::Approx(s).margin(1e-9));
  }
  REQUIRE(invert_render_scale(render_scale(0.0)) == 0.5);  // clamp below
  REQUIRE(invert_render_scale(0.99999) == 0.5);
  REQUIRE(invert_render_scale(1e-12) == Catch::Approx(9.0).margin(1e-6));
}

TEST_CASE("render_gaussian: scale zero leaves the map unchanged") {
  Heatmap map(32, 24, 4.0);
  render_gaussian(map, map.cell_center(10, 10), Vec2(2, 2), 0.0);
  for (int y = 0; y < map.height(); ++y)
    for (int x = 0; x < map.width(); ++x) REQUIRE(map.at(x, y) == 0.0);
}

TEST_CASE("render_gaussian: cell-aligned center peaks at the scale") {
  Heatmap map(32, 24, 4.0);
  const Vec2 c = map.cell_center(12, 9);
  render_gaussian(map, c, Vec2(2, 2), 0.85);
  REQUIRE(map.at(12, 9) == Catch::Approx(0.85).margin(1e-15));
  double max_v = 0.0;
  for (int y = 0; y < map.height(); ++y)
    for (int x = 0; x < map.width(); ++x) max_v = std::max(max_v, map.at(x, y));
  REQUIRE(max_v == Catch::Approx(0.85).margin(1e-15));
}

TEST_CASE("render_gaussian: max composition keeps the stronger render") {
  Heatmap map(32, 24, 4.0);
  const Vec2 c = map.cell_center(5, 5);
  render_gaussian(map, c, Vec2(2, 2), 0.5);
  render_gaussian(map, c, Vec2(2, 2), 0.85);
  REQUIRE(map.at(5, 5) == Catch::Approx(0.85).margin(1e-15));

  // Order independence.
  Heatmap other(32, 24, 4.0);
  render_gaussian(other, c, Vec2(2, 2), 0.85);
  render_gaussian(other, c, Vec2(2, 2), 0.5);
  for (int y = 0; y < map.height(); ++y)
    for (int x = 0; x < map.width(); ++x) REQUIRE(map.at(x, y) == other.at(x, y));
}

TEST_CASE("render_gaussian: centers outside the image render nothing") {
  Heatmap map(32, 24, 4.0);
  render_gaussian(map, Vec2(-10, 50), Vec2(3, 3), 0.9);
  render_gaussian(map, Vec2(500, 50), Vec2(3, 3), 0.9);
  for (int y = 0; y < map.height(); ++y)
    for (int x = 0; x < map.width(); ++x) REQUIRE(map.at(x, y) == 0.0);
}

TEST_CASE("extract_peaks: empty map gives empty list") {
  Heatmap map(32, 24, 4.0);
  REQUIRE(extract_peaks(map, 0.1, 10).empty());
}

TEST_CASE("extract_peaks: render then extract round trip") {
  Heatmap map(64, 48, 4.0);
  const Vec2 c = map.cell_center(20, 15);
  render_gaussian(map, c, Vec2(2, 2), 0.9);
  const auto peaks = extract_peaks(map, 0.1, 10);
  REQUIRE(peaks.size() == 1);
  REQUIRE((peaks[0].location - c).norm() < 0.25 * map.stride());
  REQUIRE(peaks[0].confidence == Catch::Approx(0.9).margin(1e-12));
  const double expected_sigma = invert_render_scale(0.9);
  REQUIRE(peaks[0].sigma.x() == Catch::Approx(expected_sigma).epsilon(0.2));
}

TEST_CASE("extract_peaks: round trip across sigma range at cell-aligned centers") {
  for (double s = 1.0; s <= 8.0; s += 1.0) {
    Heatmap map(64, 48, 4.0);
    const Vec2 c = map.cell_center(30, 20);
    const double k = render_scale(s);
    render_gaussian(map, c, Vec2(s, s), k);
    const auto peaks = extract_peaks(map, 1e-4, 4);
    REQUIRE(peaks.size() >= 1);
    REQUIRE((peaks[0].location - c).norm() < 0.25 * map.stride());
    REQUIRE(peaks[0].confidence == Catch::Approx(k).margin(1e-6));
  }
}

TEST_CASE("extract_peaks: two separated gaussians in descending confidence") {
  Heatmap map(64, 48, 4.0);
  const Vec2 c1 = map.cell_center(10, 10);
  const Vec2 c2 = map.cell_center(45, 30);
  render_gaussian(map, c1, Vec2(2, 2), 0.6);
  render_gaussian(map, c2, Vec2(2, 2), 0.9);
  const auto peaks = extract_peaks(map, 0.1, 10);
  REQUIRE(peaks.size() == 2);
  REQUIRE(peaks[0].confidence > peaks[1].confidence);
  REQUIRE((peaks[0].location - c2).norm() < 1.0);
  REQUIRE((peaks[1].location - c1).norm() < 1.0);
}

TEST_CASE("extract_peaks: sub-cell refinement recovers off-cell centers") {
  Heatmap map(64, 48, 4.0);
  const Vec2 c = map.cell_center(20, 15) + Vec2(1.3, -0.9);  // off-grid by <half cell
  render_gaussian(map, c, Vec2(4, 4), 0.8);
  const auto peaks = extract_peaks(map, 0.1, 4);
  REQUIRE(peaks.size() == 1);
  REQUIRE((peaks[0].location - c).norm() < 0.25 * map.stride());
}

TEST_CASE("write_pgm emits a well-formed P5 file") {
  Heatmap map(16, 12, 4.0);
  render_gaussian(map, map.cell_center(8, 6), Vec2(4, 4), 1.0);
  const auto path = std::filesystem::temp_directory_path() / "cuboidtrack_heatmap_test.pgm";
  REQUIRE(write_pgm(map, path.string()));
  std::ifstream in(path, std::ios::binary);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  REQUIRE(magic == "P5");
  REQUIRE(w == 16);
  REQUIRE(h == 12);
  REQUIRE(maxval == 255);
  in.get();
  std::vector<char> bytes(static_cast<size_t>(w) * static_cast<size_t>(h));
  in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  REQUIRE(in.gcount() == static_cast<std::streamsize>(bytes.size()));
  REQUIRE(static_cast<unsigned char>(bytes[6 * 16 + 8]) == 255);
  std::filesystem::remove(path);
}
