#include "misi/greens.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <map>
#include <mutex>
#include <utility>

#include "misi/error.hpp"
#include "misi/kernels.hpp"
#include "misi/special.hpp"

namespace misi {
namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

void check_batch(const ComplexBatch& b, std::size_t cols, const char* what) {
  if (b.cols() != cols) throw DimensionError(std::string(what) + ": column count mismatch");
}

}  // namespace

cplx kernel_offdiag(double kb, double a, double rho) {
  const cplx coef = cplx(0.0, -0.5) * kPi * kb * a * special::bessel_j(1, kb * a);
  return coef * special::hankel2(0, kb * rho);
}

cplx kernel_self(double kb, double a) {
  return cplx(0.0, -0.5) * (kPi * kb * a * special::hankel2(1, kb * a) - cplx(0.0, 2.0));
}

ComplexBatch incident_field(const Scene& scene, double freq) {
  if (!(freq > 0.0)) throw ValueError("incident_field: frequency must be positive");
  const double kb = wavenumber(freq);
  ComplexBatch out(scene.n_tx(), scene.n_pixels());
  for (std::size_t p = 0; p < scene.n_tx(); ++p) {
    const Point2 tx = scene.tx_positions()[p];
    for (std::size_t n = 0; n < scene.n_pixels(); ++n)
      out(p, n) = cplx(0.0, -0.25) * special::hankel2(0, kb * distance(scene.pixel_center(n), tx));
  }
  return out;
}

struct DomainOperator::Plans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;

  explicit Plans(int p) {
    std::lock_guard lock(planner_mutex());
    fftw_complex* buf = fftw_alloc_complex(static_cast<std::size_t>(p) * p);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    forward = fftw_plan_dft_2d(p, p, buf, buf, FFTW_FORWARD, flags);
    backward = fftw_plan_dft_2d(p, p, buf, buf, FFTW_BACKWARD, flags);
    fftw_free(buf);
    if (!forward || !backward) throw NumericError("FFTW planning failed");
  }
  ~Plans() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward);
    fftw_destroy_plan(backward);
  }
  Plans(const Plans&) = delete;
  Plans& operator=(const Plans&) = delete;
};

DomainOperator::DomainOperator(const Scene& scene, double freq, int pad_factor)
    : freq_(freq), pad_(pad_factor), n_(scene.n_grid()), cell_area_(scene.cell_area()), cell_(scene.cell_size()) {
  if (!(freq > 0.0)) throw ValueError("domain operator: frequency must be positive");
  if (pad_factor != 2 && pad_factor != 4) throw ValueError("domain operator: pad_factor must be 2 or 4");
  kb_ = wavenumber(freq);
  a_ = equivalent_radius(scene.cell_size());
  const std::size_t p = padded_size();

  // Kernel depends only on |offset|; evaluate the first quadrant once.
  std::vector<cplx> quadrant(n_ * n_);
  for (std::size_t dy = 0; dy < n_; ++dy)
    for (std::size_t dx = 0; dx < n_; ++dx)
      quadrant[dy * n_ + dx] = (dx == 0 && dy == 0)
                                   ? kernel_self(kb_, a_)
                                   : kernel_offdiag(kb_, a_, cell_ * std::hypot(double(dx), double(dy)));

  kernel_fft_.assign(p * p, cplx{});
  for (long dy = -static_cast<long>(n_) + 1; dy < static_cast<long>(n_); ++dy) {
    for (long dx = -static_cast<long>(n_) + 1; dx < static_cast<long>(n_); ++dx) {
      const std::size_t iy = static_cast<std::size_t>((dy + static_cast<long>(p))) % p;
      const std::size_t ix = static_cast<std::size_t>((dx + static_cast<long>(p))) % p;
      kernel_fft_[iy * p + ix] = quadrant[static_cast<std::size_t>(std::labs(dy)) * n_ +
                                          static_cast<std::size_t>(std::labs(dx))];
    }
  }
  plans_ = std::make_shared<const Plans>(static_cast<int>(p));
  auto* buf = reinterpret_cast<fftw_complex*>(kernel_fft_.data());
  fftw_execute_dft(plans_->forward, buf, buf);
  const double scale = 1.0 / static_cast<double>(p * p);
  for (auto& v : kernel_fft_) v *= scale;
}

cplx DomainOperator::kernel(long dx, long dy) const {
  if (dx == 0 && dy == 0) return kernel_self(kb_, a_);
  return kernel_offdiag(kb_, a_, cell_ * std::hypot(double(dx), double(dy)));
}

void DomainOperator::apply_vector(std::span<const cplx> in, std::span<cplx> out, bool adjoint,
                                  std::vector<cplx>& scratch) const {
  const std::size_t p = padded_size();
  if (in.size() != n_ * n_ || out.size() != n_ * n_)
    throw DimensionError("domain operator: vector length does not match grid");
  scratch.assign(p * p, cplx{});
  for (std::size_t y = 0; y < n_; ++y)
    std::memcpy(scratch.data() + y * p, in.data() + y * n_, n_ * sizeof(cplx));
  auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
  fftw_execute_dft(plans_->forward, buf, buf);
  // The kernel is even in the offset, so the adjoint's spectrum is conj(K).
  if (adjoint)
    kernels::mulc(kernel_fft_, scratch, scratch);
  else
    kernels::mul(kernel_fft_, scratch, scratch);
  fftw_execute_dft(plans_->backward, buf, buf);
  for (std::size_t y = 0; y < n_; ++y)
    std::memcpy(out.data() + y * n_, scratch.data() + y * p, n_ * sizeof(cplx));
}

void DomainOperator::apply(const ComplexBatch& sources, ComplexBatch& out) const {
  check_batch(sources, n_ * n_, "domain operator");
  if (!out.same_shape(sources)) out = ComplexBatch(sources.rows(), sources.cols());
  std::vector<cplx> scratch;
  for (std::size_t r = 0; r < sources.rows(); ++r) apply_vector(sources.row(r), out.row(r), false, scratch);
}

ComplexBatch DomainOperator::apply(const ComplexBatch& sources) const {
  ComplexBatch out;
  apply(sources, out);
  return out;
}

void DomainOperator::apply_adjoint(const ComplexBatch& fields, ComplexBatch& out) const {
  check_batch(fields, n_ * n_, "domain operator adjoint");
  if (!out.same_shape(fields)) out = ComplexBatch(fields.rows(), fields.cols());
  std::vector<cplx> scratch;
  for (std::size_t r = 0; r < fields.rows(); ++r) apply_vector(fields.row(r), out.row(r), true, scratch);
}

ComplexBatch DomainOperator::apply_adjoint(const ComplexBatch& fields) const {
  ComplexBatch out;
  apply_adjoint(fields, out);
  return out;
}

SurfaceOperator::SurfaceOperator(const Scene& scene, double freq) : freq_(freq), n_pix_(scene.n_pixels()) {
  if (!(freq > 0.0)) throw ValueError("surface operator: frequency must be positive");
  const double kb = wavenumber(freq);
  const double a = equivalent_radius(scene.cell_size());
  const cplx coef = cplx(0.0, -0.5) * kPi * kb * a * special::bessel_j(1, kb * a);

  // Rotated copies of one receiver ring coincide; key positions at 1 nm.
  std::map<std::pair<long long, long long>, std::size_t> index;
  std::vector<Point2> unique;
  rows_of_tx_.resize(scene.n_tx());
  for (std::size_t p = 0; p < scene.n_tx(); ++p) {
    for (const Point2& r : scene.rx_topology()[p]) {
      const auto key = std::make_pair(std::llround(r.x * 1e9), std::llround(r.y * 1e9));
      auto [it, inserted] = index.try_emplace(key, unique.size());
      if (inserted) unique.push_back(r);
      rows_of_tx_[p].push_back(it->second);
    }
  }
  n_unique_ = unique.size();
  batched_ = n_unique_ <= 2 * scene.n_rx();
  matrix_.resize(n_unique_ * n_pix_);
  for (std::size_t u = 0; u < n_unique_; ++u)
    for (std::size_t n = 0; n < n_pix_; ++n)
      matrix_[u * n_pix_ + n] = coef * special::hankel2(0, kb * distance(unique[u], scene.pixel_center(n)));
  if (batched_) {
    matrix_t_.resize(matrix_.size());
    for (std::size_t u = 0; u < n_unique_; ++u)
      for (std::size_t n = 0; n < n_pix_; ++n) matrix_t_[n * n_unique_ + u] = matrix_[u * n_pix_ + n];
  }
}

cplx SurfaceOperator::entry(std::size_t tx, std::size_t rx, std::size_t pixel) const {
  return matrix_[rows_of_tx_.at(tx).at(rx) * n_pix_ + pixel];
}

void SurfaceOperator::apply_tx(std::size_t tx, std::span<const cplx> src, std::span<cplx> out) const {
  const auto& rows = rows_of_tx_[tx];
  for (std::size_t q = 0; q < rows.size(); ++q)
    out[q] = kernels::dotu(std::span<const cplx>(matrix_.data() + rows[q] * n_pix_, n_pix_), src);
}

void SurfaceOperator::apply_adjoint_tx(std::size_t tx, std::span<const cplx> data, std::span<cplx> out) const {
  const auto& rows = rows_of_tx_[tx];
  if (batched_) {
    // same reduction as the batched path: every unique receiver, zero where unused
    std::vector<cplx> spread(n_unique_);
    for (std::size_t q = 0; q < rows.size(); ++q) spread[rows[q]] += data[q];
    for (std::size_t n = 0; n < n_pix_; ++n)
      out[n] = kernels::dotc(std::span<const cplx>(matrix_t_.data() + n * n_unique_, n_unique_), spread);
    return;
  }
  std::fill(out.begin(), out.end(), cplx{});
  for (std::size_t q = 0; q < rows.size(); ++q)
    kernels::axpyc(data[q], std::span<const cplx>(matrix_.data() + rows[q] * n_pix_, n_pix_), out);
}

void SurfaceOperator::apply(const ComplexBatch& sources, ComplexBatch& out) const {
  if (sources.rows() != n_tx() || sources.cols() != n_pix_)
    throw DimensionError("surface operator: expected n_tx x n_pixels input");
  if (out.rows() != n_tx() || out.cols() != n_rx()) out = ComplexBatch(n_tx(), n_rx());
  if (!batched_) {
    for (std::size_t p = 0; p < n_tx(); ++p) apply_tx(p, sources.row(p), out.row(p));
    return;
  }
  // every unique receiver against every Tx, then pick each Tx's own receivers
  const std::size_t ntx = n_tx();
  std::vector<cplx> all(n_unique_ * ntx);
  kernels::active().cgemm_nt(matrix_.data(), sources.data().data(), all.data(), n_unique_, ntx, n_pix_);
  for (std::size_t p = 0; p < ntx; ++p) {
    const auto& rows = rows_of_tx_[p];
    for (std::size_t q = 0; q < rows.size(); ++q) out(p, q) = all[rows[q] * ntx + p];
  }
}

ComplexBatch SurfaceOperator::apply(const ComplexBatch& sources) const {
  ComplexBatch out;
  apply(sources, out);
  return out;
}

void SurfaceOperator::apply_adjoint(const ComplexBatch& data, ComplexBatch& out) const {
  if (data.rows() != n_tx() || data.cols() != n_rx())
    throw DimensionError("surface operator adjoint: expected n_tx x n_rx input");
  if (out.rows() != n_tx() || out.cols() != n_pix_) out = ComplexBatch(n_tx(), n_pix_);
  if (!batched_) {
    for (std::size_t p = 0; p < n_tx(); ++p) apply_adjoint_tx(p, data.row(p), out.row(p));
    return;
  }
  const std::size_t ntx = n_tx();
  std::vector<cplx> spread(ntx * n_unique_);
  for (std::size_t p = 0; p < ntx; ++p) {
    const auto& rows = rows_of_tx_[p];
    for (std::size_t q = 0; q < rows.size(); ++q) spread[p * n_unique_ + rows[q]] += data(p, q);
  }
  std::vector<cplx> all(n_pix_ * ntx);
  kernels::active().cgemm_ct(matrix_t_.data(), spread.data(), all.data(), n_pix_, ntx, n_unique_);
  for (std::size_t p = 0; p < ntx; ++p)
    for (std::size_t n = 0; n < n_pix_; ++n) out(p, n) = all[n * ntx + p];
}

ComplexBatch SurfaceOperator::apply_adjoint(const ComplexBatch& data) const {
  ComplexBatch out;
  apply_adjoint(data, out);
  return out;
}

}  // namespace misi
