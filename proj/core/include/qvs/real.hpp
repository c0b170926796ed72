#ifndef QVS_REAL_HPP
#define QVS_REAL_HPP

namespace qvs {

// Parameters and data are stored in 32-bit floats; reductions accumulate in
// 64-bit. Building with QVS_REAL_IS_DOUBLE switches storage to double for
// finite-difference test targets.
#ifdef QVS_REAL_IS_DOUBLE
using real = double;
#else
using real = float;
#endif

}  // namespace qvs

#endif
