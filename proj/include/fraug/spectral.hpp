#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace fraug {

using Complex = std::complex<double>;

// One-sided spectrum of a real signal: floor(N/2)+1 bins, DC first. The
// original length is kept so that odd and even N invert exactly.
struct Spectrum {
    std::vector<Complex> bins;
    std::size_t origin_len = 0;
};

inline std::size_t one_sided_length(std::size_t n) noexcept { return n / 2 + 1; }

// Unscaled forward real DFT. Any N >= 1: mixed radix over {2,3,5,7}, with
// Bluestein's chirp-z for lengths containing a larger prime factor.
Spectrum rfft(std::span<const double> signal);

// Inverse of rfft including the 1/N factor.
std::vector<double> irfft(const Spectrum& spectrum);

std::vector<double> amplitude_spectrum(const Spectrum& spectrum);

// Full-length complex DFT used by the real transforms. `inverse` flips the
// exponent sign and does not scale.
std::vector<Complex> fft(std::span<const Complex> input, bool inverse = false);

// Throws fraug::Error("malformed spectrum") if the invariants do not hold.
void validate(const Spectrum& spectrum);

}  // namespace fraug
