#include "nbrdf/nn/tensor.hpp"

namespace nbrdf::nn {

// Explicit instantiations keep the hot kernels in one translation unit.
template void gemm_nn<float>(const float *, const float *, float *, int, int, int);
template void gemm_nt<float>(const float *, const float *, float *, int, int, int);
template void gemm_tn<float>(const float *, const float *, float *, int, int, int);
template void gemm_nn<double>(const double *, const double *, double *, int, int, int);
template void gemm_nt<double>(const double *, const double *, double *, int, int, int);
template void gemm_tn<double>(const double *, const double *, double *, int, int, int);
template void gemm_nn_serial<float>(const float *, const float *, float *, int, int, int);
template void gemm_nn_serial<double>(const double *, const double *, double *, int, int, int);

} // namespace nbrdf::nn
