#include <cmath>

#include "doctest.h"
#include "misi/error.hpp"
#include "misi/geometry.hpp"

using namespace misi;

TEST_CASE("fresnel scene counts") {
  const Scene s = build_fresnel_like_scene(FresnelLayout{});
  CHECK(s.n_tx() == 12);
  CHECK(s.n_rx() == 101);
  CHECK(s.n_freq() == 3);
  CHECK(s.n_pixels() == 64 * 64);

  FresnelLayout one;
  one.n_tx = 1;
  one.blind_deg = 0.0;
  one.rx_step_deg = 90.0;
  one.n_grid = 8;
  one.frequencies = {0.3e9};
  CHECK(build_fresnel_like_scene(one).n_rx() == 5);

  FresnelLayout measured;
  measured.n_tx = 18;
  measured.blind_deg = 60.0;
  measured.rx_step_deg = 5.0;
  measured.radius = 1.67;
  measured.doi_half = 0.1;
  measured.frequencies = {3e9, 4e9, 5e9};
  const Scene m = build_fresnel_like_scene(measured);
  CHECK(m.n_tx() == 18);
  CHECK(m.n_rx() == 49);
  CHECK(fresnel_rx_count(30.0, 3.0) == 101);
  CHECK(fresnel_rx_count(60.0, 5.0) == 49);
}

TEST_CASE("receivers skip the blind sector around each transmitter") {
  const Scene s = build_fresnel_like_scene(FresnelLayout{});
  for (std::size_t p = 0; p < s.n_tx(); ++p) {
    const Point2 tx = s.tx_positions()[p];
    CHECK(std::hypot(tx.x, tx.y) == doctest::Approx(3.0));
    const double ta = std::atan2(tx.y, tx.x);
    double min_sep = 360.0;
    for (const Point2& r : s.rx_topology()[p]) {
      CHECK(std::hypot(r.x, r.y) == doctest::Approx(3.0));
      double d = std::fabs(std::remainder(std::atan2(r.y, r.x) - ta, 2.0 * kPi)) * 180.0 / kPi;
      min_sep = std::min(min_sep, d);
    }
    CHECK(min_sep == doctest::Approx(30.0).epsilon(1e-9));
  }
  CHECK(std::atan2(s.tx_positions()[0].y, s.tx_positions()[0].x) == doctest::Approx(0.0));
}

TEST_CASE("scene validation") {
  FresnelLayout l;
  l.radius = 0.7;  // inside the DOI corner circle
  CHECK_THROWS_AS(build_fresnel_like_scene(l), ValueError);
  l = FresnelLayout{};
  l.n_tx = 0;
  CHECK_THROWS_AS(build_fresnel_like_scene(l), ValueError);
  l = FresnelLayout{};
  l.rx_step_deg = 0.0;
  CHECK_THROWS_AS(build_fresnel_like_scene(l), ValueError);
  l = FresnelLayout{};
  l.frequencies = {0.4e9, 0.3e9};
  CHECK_THROWS_AS(build_fresnel_like_scene(l), ValueError);
  l.frequencies = {};
  CHECK_THROWS_AS(build_fresnel_like_scene(l), ValueError);
  CHECK_THROWS_AS(Scene({-1, -1}, {1, 1}, 8, {{0.5, 0.0}}, {{{3.0, 0.0}}}, {1e9}, 3.0), ValueError);
  CHECK_THROWS_AS(Scene({-1, -1}, {1, 2}, 8, {{3.0, 0.0}}, {{{-3.0, 0.0}}}, {1e9}, 3.0), ValueError);
}

TEST_CASE("pixel centres and normalised coordinates") {
  FresnelLayout l;
  l.n_grid = 4;
  const Scene s = build_fresnel_like_scene(l);
  CHECK(s.cell_size() == doctest::Approx(0.25));
  CHECK(s.pixel_center(0, 0).x == doctest::Approx(-0.375));
  CHECK(s.pixel_center(0, 0).y == doctest::Approx(-0.375));
  CHECK(s.pixel_center(1, 3).x == doctest::Approx(0.375));
  CHECK(s.pixel_center(1, 3).y == doctest::Approx(-0.125));
  const auto c = s.normalized_coords();
  REQUIRE(c.size() == 32);
  CHECK(c[0] == doctest::Approx(-0.75));
  CHECK(c[2 * 7] == doctest::Approx(0.75));     // (iy 1, ix 3) x
  CHECK(c[2 * 7 + 1] == doctest::Approx(-0.25));
  const Scene fine = s.with_grid(16);
  CHECK(fine.n_grid() == 16);
  CHECK(fine.tx_positions() == s.tx_positions());
}

TEST_CASE("austria phantom rasterisation") {
  const Scene s = build_fresnel_like_scene(FresnelLayout{});
  const MaterialGrids g = rasterize_phantom(austria_phantom(6.0), s);
  // pixel (iy, ix) whose centre is nearest the point
  auto at = [&](double x, double y) {
    const auto ix = static_cast<std::size_t>(std::floor((x + 0.5) / s.cell_size()));
    const auto iy = static_cast<std::size_t>(std::floor((y + 0.5) / s.cell_size()));
    return g.eps_r.at(std::min<std::size_t>(iy, 63), std::min<std::size_t>(ix, 63));
  };
  CHECK(at(0.3, 0.15) == 6.0);
  CHECK(at(0.3, -0.15) == 6.0);
  CHECK(at(0.0, 0.45) == 1.0);
  CHECK(at(-0.1, 0.0) == 1.0);   // hole of the ring
  CHECK(at(-0.325, 0.0) == 6.0);  // inside the ring band
  for (double v : g.sigma.values()) CHECK(v == 0.0);

  const MaterialGrids e = rasterize_phantom(Phantom{}, s);
  for (double v : e.eps_r.values()) CHECK(v == 1.0);
  const MaterialGrids full = rasterize_phantom(Phantom{{make_disk({0, 0}, 1.0, 3.0, 0.2)}}, s);
  for (std::size_t i = 0; i < full.eps_r.size(); ++i) {
    CHECK(full.eps_r[i] == 3.0);
    CHECK(full.sigma[i] == 0.2);
  }
}

TEST_CASE("rasterisation at N and 2N agree on uniform children") {
  FresnelLayout l;
  l.n_grid = 32;
  const Scene s = build_fresnel_like_scene(l);
  const auto coarse = rasterize_phantom(austria_phantom(6.0), s);
  const auto fine = rasterize_phantom(austria_phantom(6.0), s, 64);
  REQUIRE(fine.eps_r.n() == 64);
  std::size_t compared = 0;
  for (std::size_t iy = 0; iy < 32; ++iy)
    for (std::size_t ix = 0; ix < 32; ++ix) {
      const double a = fine.eps_r.at(2 * iy, 2 * ix);
      if (fine.eps_r.at(2 * iy + 1, 2 * ix) == a && fine.eps_r.at(2 * iy, 2 * ix + 1) == a &&
          fine.eps_r.at(2 * iy + 1, 2 * ix + 1) == a) {
        ++compared;
        CHECK(coarse.eps_r.at(iy, ix) == a);
      }
    }
  CHECK(compared > 900);
}

TEST_CASE("later shapes overwrite earlier ones") {
  const Scene s = build_fresnel_like_scene(FresnelLayout{});
  const auto g = rasterize_phantom(Phantom{{make_disk({0, 0}, 0.3, 4.0), make_disk({0, 0}, 0.1, 9.0, 0.1)}}, s);
  CHECK(g.eps_r.at(32, 32) == 9.0);
  CHECK(g.sigma.at(32, 32) == 0.1);
  CHECK(g.eps_r.at(32, 32 + 12) == 4.0);
}

TEST_CASE("phantom validation") {
  CHECK_THROWS_AS(Phantom{{make_disk({0, 0}, 0.1, 0.5)}}.validate(), ValueError);
  CHECK_THROWS_AS(Phantom{{make_disk({0, 0}, 0.1, 2.0, -1.0)}}.validate(), ValueError);
  CHECK_THROWS_AS(Phantom{{make_disk({0, 0}, 0.0, 2.0)}}.validate(), ValueError);
  CHECK_THROWS_AS(Phantom{{make_annulus({0, 0}, 0.3, 0.2, 2.0)}}.validate(), ValueError);
  CHECK_NOTHROW(austria_lossy_phantom().validate());
}

TEST_CASE("contrast of material maps") {
  RealGrid eps(2, 6.0), sig(2, 0.0);
  eps[1] = 9.0;
  sig[1] = 0.03;
  eps[2] = 1.0;
  const ComplexGrid chi = contrast_of(eps, sig, 0.3e9);
  CHECK(chi[0] == cplx(5.0, 0.0));
  CHECK(chi[2] == cplx(0.0, 0.0));
  const double im = -0.03 / (2.0 * 3.14159265358979323846 * 0.3e9 * 8.8541878128e-12);
  CHECK(chi[1].real() == 8.0);
  CHECK(chi[1].imag() == doctest::Approx(im).epsilon(1e-14));
  CHECK(chi[1].imag() == doctest::Approx(-1.7974).epsilon(1e-4));
  const ComplexGrid chi2 = contrast_of(eps, sig, 0.6e9);
  CHECK(chi2[1].real() == chi[1].real());
  CHECK(chi2[1].imag() == doctest::Approx(chi[1].imag() / 2.0).epsilon(1e-14));
  CHECK_THROWS_AS(contrast_of(eps, RealGrid(3), 1e9), DimensionError);
  CHECK_THROWS_AS(contrast_of(eps, sig, 0.0), ValueError);
}
