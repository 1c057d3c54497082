#pragma once

#include <cstdint>

namespace mcdse {

// On-chip resource bundle. Used both for platform budgets and per-design usage.
struct ResourceVector {
  std::int64_t lut = 0;
  std::int64_t ff = 0;
  std::int64_t dsp = 0;
  std::int64_t bram = 0;

  ResourceVector& operator+=(const ResourceVector& o) {
    lut += o.lut;
    ff += o.ff;
    dsp += o.dsp;
    bram += o.bram;
    return *this;
  }
  friend ResourceVector operator+(ResourceVector a, const ResourceVector& b) { return a += b; }

  bool fits_within(const ResourceVector& budget) const {
    return lut <= budget.lut && ff <= budget.ff && dsp <= budget.dsp && bram <= budget.bram;
  }
  bool operator==(const ResourceVector& o) const = default;
};

// Linear cost table mapping a parallelism configuration to resources.
// Coefficients are calibration placeholders, not device ground truth.
struct ResourceCostModel {
  double dsp_per_mult = 1.0;   // DSP blocks per multiply operator
  double lut_per_pe = 120.0;   // LUTs per processing element
  double ff_per_pe = 96.0;     // flip-flops per processing element
  double lut_base = 300.0;     // fixed LUTs per stage
  double ff_base = 200.0;      // fixed flip-flops per stage
  double bram_bytes = 2048.0;  // bytes held by one block RAM unit
  double word_bytes = 2.0;     // bytes per data element, injected from the platform wordlength
};

}  // namespace mcdse
