#include <cmath>

#include "doctest.h"
#include "misi/error.hpp"
#include "misi/forward.hpp"
#include "misi/kernels.hpp"
#include "test_util.hpp"

using namespace misi;
using namespace misi::test;

namespace {

Scene one_freq_scene(std::size_t n, std::size_t n_tx, double f = 0.3e9) {
  FresnelLayout l;
  l.n_tx = n_tx;
  l.n_grid = n;
  l.frequencies = {f};
  return build_fresnel_like_scene(l);
}

MeasurementSet tiny_set(std::uint64_t seed) {
  const Scene s = one_freq_scene(8, 3);
  MeasurementSet m{s, {random_batch(3, s.n_rx(), seed)}, {random_batch(3, 64, seed + 1)}, std::nullopt};
  return m;
}

}  // namespace

TEST_CASE("free space leaves the incident field unchanged") {
  const Scene s = one_freq_scene(16, 4);
  const DomainOperator op(s, 0.3e9);
  const ComplexBatch inc = incident_field(s, 0.3e9);
  const ComplexBatch e = solve_total_field(op, ComplexGrid(16), inc);
  CHECK(e == inc);
}

TEST_CASE("solver residual meets the tolerance") {
  const Scene s = one_freq_scene(32, 3);
  const DomainOperator op(s, 0.3e9);
  const auto g = rasterize_phantom(austria_phantom(4.0), s);
  const ComplexGrid chi = contrast_of(g.eps_r, g.sigma, 0.3e9);
  const ComplexBatch inc = incident_field(s, 0.3e9);
  const ComplexBatch e = solve_total_field(op, chi, inc, 1e-8);
  for (std::size_t p = 0; p < 3; ++p) CHECK(state_residual(op, chi, e.row(p), inc.row(p)) <= 1e-8);
  CHECK_THROWS_AS(solve_total_field(op, chi, inc, 1e-14, 2), ConvergenceError);
  try {
    solve_total_field(op, chi, inc, 1e-14, 2);
  } catch (const ConvergenceError& err) {
    CHECK(err.residual() > 1e-14);
    CHECK(err.iterations() == 2);
  }
  CHECK_THROWS_AS(solve_total_field(op, chi, inc, 0.0), ValueError);
  CHECK_THROWS_AS(solve_total_field(op, ComplexGrid(8), inc), DimensionError);
}

TEST_CASE("interior field of a dielectric cylinder matches the series solution") {
  const Scene s = one_freq_scene(128, 1);
  const DomainOperator op(s, 0.3e9);
  const auto g = rasterize_phantom(Phantom{{make_disk({0, 0}, 0.25, 2.0)}}, s);
  const ComplexGrid chi = contrast_of(g.eps_r, g.sigma, 0.3e9);
  const ComplexBatch e = solve_total_field(op, chi, incident_field(s, 0.3e9));
  std::vector<Point2> pts;
  std::vector<cplx> ours;
  for (std::size_t i = 0; i < s.n_pixels(); ++i) {
    const Point2 c = s.pixel_center(i);
    if (std::hypot(c.x, c.y) < 0.22) {
      pts.push_back(c);
      ours.push_back(e(0, i));
    }
  }
  const auto ref = mie_cylinder(2.0, 0.0, 0.25, 0.3e9, pts, s.tx_positions()[0]);
  CHECK(rel_diff(ours, ref) < 0.02);
}

TEST_CASE("series solution properties") {
  const Point2 tx{3.0, 0.0};
  const std::vector<Point2> pts{{1.0, 0.5}, {-0.7, 0.9}, {0.1, -1.3}, {0.05, 0.1}};
  // no contrast: zero scattered field outside, incident field inside
  const auto empty = mie_cylinder(1.0, 0.0, 0.3, 0.4e9, pts, tx);
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(empty[i]) < 1e-14);
  const double kb = wavenumber(0.4e9);
  const cplx inc = cplx(0.0, -0.25) * cplx(std::cyl_bessel_j(0.0, kb * distance(pts[3], tx)),
                                           -std::cyl_neumann(0.0, kb * distance(pts[3], tx)));
  CHECK(rel_err(empty[3], inc) < 1e-10);

  const std::vector<Point2> outside{{1.0, 0.5}, {-0.7, 0.9}, {0.1, -1.3}};
  const auto a = mie_cylinder(4.0, 0.02, 0.3, 0.4e9, outside, tx, 20);
  const auto b = mie_cylinder(4.0, 0.02, 0.3, 0.4e9, outside, tx, 25);
  CHECK(rel_diff(a, b) < 1e-10);

  const std::vector<Point2> up{{0.5, 1.2}, {0.1, 0.2}}, down{{0.5, -1.2}, {0.1, -0.2}};
  const auto u = mie_cylinder(3.0, 0.01, 0.3, 0.3e9, up, tx);
  const auto d = mie_cylinder(3.0, 0.01, 0.3, 0.3e9, down, tx);
  for (std::size_t i = 0; i < 2; ++i) CHECK(std::abs(u[i]) == doctest::Approx(std::abs(d[i])).epsilon(1e-12));

  CHECK_THROWS_AS(mie_cylinder(2.0, 0.0, 0.3, 0.3e9, pts, {0.1, 0.0}), ValueError);
  CHECK_THROWS_AS(mie_cylinder(0.5, 0.0, 0.3, 0.3e9, pts, tx), ValueError);
  CHECK_THROWS_AS(mie_cylinder(2.0, 0.0, -0.3, 0.3e9, pts, tx), ValueError);
}

TEST_CASE("synthesis of an empty phantom") {
  const Scene s = one_freq_scene(8, 2);
  SynthesisOptions o;
  o.forward_n_grid = 16;
  const MeasurementSet m = synthesize_measurements(s, Phantom{}, o);
  CHECK_NOTHROW(m.validate());
  REQUIRE(m.scattered.size() == 1);
  for (const auto& v : m.scattered[0].data()) CHECK(v == cplx{});
  CHECK(m.incident[0] == incident_field(s, 0.3e9));
  CHECK_FALSE(m.snr_db.has_value());
  o.forward_n_grid = 8;
  CHECK_THROWS_AS(synthesize_measurements(s, Phantom{}, o), ValueError);
  o.allow_inverse_crime = true;
  CHECK_NOTHROW(synthesize_measurements(s, Phantom{}, o));
}

TEST_CASE("synthesised data converges under grid refinement") {
  const Scene s = one_freq_scene(32, 2);
  SynthesisOptions o;
  o.pad_factor = 2;
  o.forward_n_grid = 200;
  const MeasurementSet a = synthesize_measurements(s, austria_phantom(6.0), o);
  o.forward_n_grid = 256;
  const MeasurementSet b = synthesize_measurements(s, austria_phantom(6.0), o);
  CHECK(rel_diff(a.scattered[0].data(), b.scattered[0].data()) < 0.01);
}

TEST_CASE("reciprocity with coincident transmitters and receivers") {
  std::vector<Point2> ring;
  for (int k = 0; k < 4; ++k) ring.push_back({2.0 * std::cos(k * kPi / 2 + 0.3), 2.0 * std::sin(k * kPi / 2 + 0.3)});
  std::vector<std::vector<Point2>> rx(4);
  for (std::size_t p = 0; p < 4; ++p)
    for (std::size_t q = 0; q < 4; ++q)
      if (q != p) rx[p].push_back(ring[q]);
  const Scene s({-0.5, -0.5}, {0.5, 0.5}, 16, ring, rx, {0.3e9}, 2.0);
  SynthesisOptions o;
  o.forward_n_grid = 48;
  o.tol = 1e-10;
  const MeasurementSet m = synthesize_measurements(s, austria_phantom(3.0), o);
  auto slot = [](std::size_t p, std::size_t q) { return q < p ? q : q - 1; };
  for (std::size_t p = 0; p < 4; ++p)
    for (std::size_t q = p + 1; q < 4; ++q)
      CHECK(rel_err(m.scattered[0](p, slot(p, q)), m.scattered[0](q, slot(q, p))) < 1e-6);
}

TEST_CASE("noise power follows the requested SNR") {
  const MeasurementSet clean = tiny_set(1);
  for (double snr : {0.0, 10.0}) {
    double ratio = 0.0;
    const int draws = 1000;
    for (int k = 0; k < draws; ++k) {
      const MeasurementSet noisy = add_noise(clean, snr, static_cast<std::uint64_t>(k));
      double noise = 0.0, signal = 0.0;
      for (std::size_t i = 0; i < clean.scattered[0].size(); ++i) {
        noise += std::norm(noisy.scattered[0].data()[i] - clean.scattered[0].data()[i]);
        signal += std::norm(clean.scattered[0].data()[i]);
      }
      ratio += noise / signal;
    }
    ratio /= draws;
    CHECK(ratio * std::pow(10.0, snr / 10.0) == doctest::Approx(1.0).epsilon(0.05));
  }
}

TEST_CASE("noise model edge cases") {
  const MeasurementSet clean = tiny_set(2);
  const MeasurementSet faint = add_noise(clean, 300.0, 4);
  CHECK(rel_diff(faint.scattered[0].data(), clean.scattered[0].data()) < 1e-12);
  CHECK(*faint.snr_db == 300.0);
  CHECK(add_noise(clean, 10.0, 9) == add_noise(clean, 10.0, 9));
  CHECK_FALSE(add_noise(clean, 10.0, 9) == add_noise(clean, 10.0, 10));

  MeasurementSet twice = clean;
  for (auto& v : twice.scattered[0].data()) v *= 2.0;
  const MeasurementSet n1 = add_noise(clean, 5.0, 3), n2 = add_noise(twice, 5.0, 3);
  for (std::size_t i = 0; i < clean.scattered[0].size(); ++i)
    CHECK(n2.scattered[0].data()[i] == 2.0 * n1.scattered[0].data()[i]);

  MeasurementSet zero = clean;
  for (auto& v : zero.scattered[0].row(1)) v = 0.0;
  const MeasurementSet nz = add_noise(zero, 0.0, 1);
  for (const auto& v : nz.scattered[0].row(1)) CHECK(v == cplx{});
  CHECK(nz.incident == zero.incident);
  CHECK_THROWS_AS(add_noise(clean, std::numeric_limits<double>::infinity(), 1), ValueError);
}

TEST_CASE("measurement set validation") {
  MeasurementSet m = tiny_set(3);
  CHECK_NOTHROW(m.validate());
  m.scattered[0] = ComplexBatch(3, 2);
  CHECK_THROWS_AS(m.validate(), DimensionError);
  m = tiny_set(3);
  m.incident.clear();
  CHECK_THROWS_AS(m.validate(), DimensionError);
}
