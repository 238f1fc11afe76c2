#include "gdakg/circular.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>

#include "gdakg/error.hpp"

namespace gdakg {
namespace {

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

// Planner calls are not thread-safe in FFTW; execution with the new-array
// interface is. Plans are created once per length under a lock.
struct Plans {
  fftw_plan forward;
  fftw_plan backward;
};

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

Plans plans_for(int n) {
  static std::map<int, Plans> cache;
  std::lock_guard lock(planner_mutex());
  if (auto it = cache.find(n); it != cache.end()) return it->second;
  const int bins = n / 2 + 1;
  std::unique_ptr<double, FftwFree> real(fftw_alloc_real(n));
  std::unique_ptr<fftw_complex, FftwFree> spec(fftw_alloc_complex(bins));
  Plans p;
  p.forward = fftw_plan_dft_r2c_1d(n, real.get(), spec.get(), FFTW_ESTIMATE);
  p.backward = fftw_plan_dft_c2r_1d(n, spec.get(), real.get(), FFTW_ESTIMATE);
  if (!p.forward || !p.backward) throw Error("FFTW planning failed for length " + std::to_string(n));
  cache.emplace(n, p);
  return p;
}

struct Workspace {
  int n = 0;
  std::unique_ptr<double, FftwFree> real;
  std::unique_ptr<fftw_complex, FftwFree> fa;
  std::unique_ptr<fftw_complex, FftwFree> fb;

  void ensure(int size) {
    if (n == size) return;
    n = size;
    const int bins = size / 2 + 1;
    real.reset(fftw_alloc_real(size));
    fa.reset(fftw_alloc_complex(bins));
    fb.reset(fftw_alloc_complex(bins));
  }
};

void combine(std::span<const double> a, std::span<const double> b, std::span<double> out,
             bool conjugate_a) {
  const auto n = static_cast<int>(a.size());
  if (b.size() != a.size() || out.size() != a.size()) {
    throw Error("circular product: length mismatch");
  }
  if (n == 0) return;
  const Plans plans = plans_for(n);
  thread_local Workspace ws;
  ws.ensure(n);
  const int bins = n / 2 + 1;

  std::copy(a.begin(), a.end(), ws.real.get());
  fftw_execute_dft_r2c(plans.forward, ws.real.get(), ws.fa.get());
  std::copy(b.begin(), b.end(), ws.real.get());
  fftw_execute_dft_r2c(plans.forward, ws.real.get(), ws.fb.get());

  const double sign = conjugate_a ? -1.0 : 1.0;
  for (int k = 0; k < bins; ++k) {
    const double ar = ws.fa.get()[k][0];
    const double ai = sign * ws.fa.get()[k][1];
    const double br = ws.fb.get()[k][0];
    const double bi = ws.fb.get()[k][1];
    ws.fa.get()[k][0] = ar * br - ai * bi;
    ws.fa.get()[k][1] = ar * bi + ai * br;
  }
  fftw_execute_dft_c2r(plans.backward, ws.fa.get(), ws.real.get());
  const double scale = 1.0 / n;
  for (int k = 0; k < n; ++k) out[k] = ws.real.get()[k] * scale;
}

}  // namespace

void circular_correlation(std::span<const double> a, std::span<const double> b,
                          std::span<double> out) {
  combine(a, b, out, /*conjugate_a=*/true);
}

void circular_convolution(std::span<const double> a, std::span<const double> b,
                          std::span<double> out) {
  combine(a, b, out, /*conjugate_a=*/false);
}

}  // namespace gdakg
