#include "rydmix/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace rydmix {

namespace {
constexpr std::size_t kBlock = 1 << 16;
}

Demodulation measure_traced(const DetectionChain& chain, const FieldScene& scene,
                            double duration, std::uint64_t noise_seed, std::size_t trace_stride) {
  if (!(duration > 0)) throw ConfigError("measurement duration must be positive");
  const double fs = chain.lockin.sample_rate;
  const auto total = static_cast<std::size_t>(std::llround(duration * fs));
  if (total == 0) throw ConfigError("measurement shorter than one sample");

  PhotodiodeModel pd = chain.photodiode;
  pd.rng_seed = noise_seed;
  EnvelopeGenerator envelope(scene.e_lo, scene.tones, fs, 0.0, scene.form);
  Photodiode diode(chain.eit, pd, fs);
  LockInAmplifier lockin(chain.lockin, total, 0.0, trace_stride);

  const double dc = chain.ac_coupled ? pd.dark_voltage + pd.responsivity_gain *
                                                           transmission_at_resonance(chain.eit, scene.e_lo)
                                     : 0.0;

  std::vector<double> field(kBlock);
  std::vector<double> volts(kBlock);
  std::size_t done = 0;
  while (done < total) {
    const std::size_t n = std::min(kBlock, total - done);
    std::span<double> f{field.data(), n};
    std::span<double> v{volts.data(), n};
    envelope.fill(f);
    diode.process(f, v);
    if (dc != 0.0) {
      for (double& x : v) x -= dc;
    }
    lockin.process(v);
    done += n;
  }
  return {lockin.result(), lockin.trace()};
}

LockInOutput measure(const DetectionChain& chain, const FieldScene& scene, double duration,
                     std::uint64_t noise_seed) {
  return measure_traced(chain, scene, duration, noise_seed, 0).output;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t z = (base ^ index) + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> workers;
  workers.reserve(threads);
  for (unsigned w = 0; w < threads; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  workers.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace rydmix
