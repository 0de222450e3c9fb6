#pragma once

#include "gmc/kernel.hpp"

namespace gmc::test {

// Building the kernel tables takes about a second; share one per binary.
inline const StarScaleKernel& kernel_1d() {
  static const StarScaleKernel k(0.5, 1.0, build_smoothing_kernel(BumpFamily::Exp, 1));
  return k;
}

}  // namespace gmc::test
