#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <new>

namespace surfmimo::detail {

// The FFTW planner is not reentrant; execution of an existing plan is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

using FftwBuffer = std::unique_ptr<std::complex<double>[], FftwFree>;

inline FftwBuffer fftw_buffer(std::size_t n) {
  auto* p = static_cast<std::complex<double>*>(fftw_malloc(sizeof(std::complex<double>) * n));
  if (p == nullptr) throw std::bad_alloc();
  for (std::size_t i = 0; i < n; ++i) p[i] = 0.0;
  return FftwBuffer(p);
}

/// In-place 2D complex DFT of a fixed rows x cols row-major array. The
/// backward transform is unnormalized, as in FFTW.
class Fft2d {
 public:
  Fft2d(int rows, int cols) : rows_(rows), cols_(cols), scratch_(fftw_buffer(size())) {
    auto* buf = reinterpret_cast<fftw_complex*>(scratch_.get());
    std::lock_guard lock(fftw_planner_mutex());
    forward_ = fftw_plan_dft_2d(rows, cols, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_2d(rows, cols, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
    if (forward_ == nullptr || backward_ == nullptr) throw std::bad_alloc();
  }

  Fft2d(const Fft2d&) = delete;
  Fft2d& operator=(const Fft2d&) = delete;

  ~Fft2d() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return static_cast<std::size_t>(rows_) * static_cast<std::size_t>(cols_); }

  FftwBuffer make_buffer() const { return fftw_buffer(size()); }

  // Buffers must come from make_buffer() so the plan's alignment assumptions hold.
  void forward(std::complex<double>* data) const {
    auto* p = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(forward_, p, p);
  }
  void backward(std::complex<double>* data) const {
    auto* p = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(backward_, p, p);
  }

 private:
  int rows_;
  int cols_;
  FftwBuffer scratch_;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

}  // namespace surfmimo::detail
