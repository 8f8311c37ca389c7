#pragma once

namespace hyperlabel {

// Worker count used by the row-parallel loops. No-op without OpenMP.
void set_num_threads(int threads);
int num_threads();

}  // namespace hyperlabel
