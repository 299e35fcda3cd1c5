#pragma once

// One simulated lock-in measurement, streamed block by block so that tens of seconds at
// MHz sample rates run in constant memory.

#include <cstdint>
#include <functional>
#include <vector>

#include "rydmix/fields.hpp"
#include "rydmix/lockin.hpp"
#include "rydmix/transducer.hpp"

namespace rydmix {

struct DetectionChain {
  EitModel<double> eit;
  PhotodiodeModel photodiode;
  LockInConfig lockin;
  // Subtract the LO-only photodiode level before demodulation, like the AC-coupled input of
  // a bench lock-in. Without it the ~0.5 V DC start-up transient leaks V*(f_c/f_ref)*tail.
  bool ac_coupled = true;
};

struct FieldScene {
  double e_lo = 0;
  std::vector<BasebandTone> tones;
  EnvelopeForm form = EnvelopeForm::exact;
};

/// Runs envelope -> photodiode -> lock-in for `duration` seconds. The photodiode noise is
/// seeded with noise_seed (ignored when the chain's noise density is zero).
LockInOutput measure(const DetectionChain& chain, const FieldScene& scene, double duration,
                     std::uint64_t noise_seed);

/// As measure(), also recording every trace_stride-th lock-in (R, theta) sample.
Demodulation measure_traced(const DetectionChain& chain, const FieldScene& scene,
                            double duration, std::uint64_t noise_seed, std::size_t trace_stride);

/// splitmix64(base ^ index): independent per-point streams from one user seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

/// Calls fn(i) for i in [0, n) on up to `threads` workers (0 = hardware concurrency).
/// Results must be written by index; completion order is unspecified.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace rydmix
