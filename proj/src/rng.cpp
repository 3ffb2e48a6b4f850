#include "meanfield/rng.hpp"

#include <array>
#include <cmath>

namespace meanfield {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// Ziggurat for the standard normal (Marsaglia-Tsang layout, Doornik's
// variant): 128 equal-area layers, base strip carrying the tail beyond R.
constexpr int kLayers = 128;
constexpr double kTailStart = 3.442619855899;
constexpr double kLayerArea = 9.91256303526217e-3;

struct ZigguratTables {
  std::array<double, kLayers + 1> x{};
  std::array<double, kLayers> ratio{};

  ZigguratTables() {
    double f = std::exp(-0.5 * kTailStart * kTailStart);
    x[0] = kLayerArea / f;
    x[1] = kTailStart;
    x[kLayers] = 0.0;
    for (int i = 2; i < kLayers; ++i) {
      x[static_cast<std::size_t>(i)] = std::sqrt(-2.0 * std::log(kLayerArea / x[static_cast<std::size_t>(i - 1)] + f));
      f = std::exp(-0.5 * x[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)]);
    }
    for (std::size_t i = 0; i < kLayers; ++i) ratio[i] = x[i + 1] / x[i];
  }
};

const ZigguratTables& tables() {
  static const ZigguratTables t;
  return t;
}

double to_open_unit(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

std::uint64_t stream_key(std::uint64_t master_seed, std::uint64_t replication,
                         std::uint64_t agent) {
  std::uint64_t h = mix64(master_seed + kGolden);
  h = mix64(h ^ (replication + 0x632be59bd9b4e019ULL));
  h = mix64(h ^ (agent + 0x8cb92ba72f3d8dd7ULL));
  return h;
}

std::uint64_t GaussianStream::bits(std::uint64_t n) const { return mix64(key_ + (n + 1) * kGolden); }

double GaussianStream::uniform(std::uint64_t n) const { return to_open_unit(bits(n)); }

double GaussianStream::tail(bool negative) {
  double x = 0.0;
  double y = 0.0;
  do {
    x = std::log(uniform(counter_++)) / kTailStart;
    y = std::log(uniform(counter_++));
  } while (-2.0 * y < x * x);
  return negative ? x - kTailStart : kTailStart - x;
}

double GaussianStream::next() {
  const auto& t = tables();
  for (;;) {
    const std::uint64_t w = bits(counter_++);
    const auto layer = static_cast<std::size_t>(w & 0x7f);
    const double u = 2.0 * to_open_unit(w) - 1.0;  // uses bits 11..63
    if (std::abs(u) < t.ratio[layer]) return u * t.x[layer];
    if (layer == 0) return tail(u < 0.0);
    const double x = u * t.x[layer];
    const double f0 = std::exp(-0.5 * (t.x[layer] * t.x[layer] - x * x));
    const double f1 = std::exp(-0.5 * (t.x[layer + 1] * t.x[layer + 1] - x * x));
    if (f1 + uniform(counter_++) * (f0 - f1) < 1.0) return x;
  }
}

}  // namespace meanfield
