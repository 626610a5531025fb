#pragma once

#include "misi/kernels.hpp"

namespace misi::kernels::detail {

extern const KernelTable kScalarTable;
#if defined(MISI_WITH_AVX2)
extern const KernelTable kAvx2Table;
#endif

}  // namespace misi::kernels::detail
