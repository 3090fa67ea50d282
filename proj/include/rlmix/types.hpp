#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace rlmix {

using Complex = std::complex<double>;
using CVector = std::vector<Complex>;
using RVector = std::vector<double>;

} // namespace rlmix
