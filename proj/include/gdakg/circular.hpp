#pragma once

#include <span>

namespace gdakg {

// out[k] = sum_i a[i] * b[(k + i) mod d], computed through FFTW as
// ifft(conj(fft(a)) * fft(b)). All spans must share the same length d.
void circular_correlation(std::span<const double> a, std::span<const double> b,
                          std::span<double> out);

// out[k] = sum_i a[i] * b[(k - i) mod d].
void circular_convolution(std::span<const double> a, std::span<const double> b,
                          std::span<double> out);

}  // namespace gdakg
