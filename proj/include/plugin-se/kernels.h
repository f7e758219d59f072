// plugin-se/kernels.h

// Copyright 2026  plugin-se contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef PLUGIN_SE_KERNELS_H_
#define PLUGIN_SE_KERNELS_H_

#include <cstddef>
#include <functional>
#include <string>

namespace plugin_se {

/// Every data-parallel loop in the library takes one of these. kSerial is the
/// reference path; kParallel spreads iterations over OpenMP threads. Results
/// are written into per-index slots and reduced in index order afterwards, so
/// both paths give bit-identical numbers.
enum class Execution { kSerial, kParallel };

std::string ExecutionName(Execution e);
Execution ParseExecution(const std::string &name);

/// Calls fn(i) for i in [0, n). Under kParallel the first exception thrown
/// by any iteration is rethrown on the calling thread once the loop ends.
void ForEachIndex(size_t n, Execution exec,
                  const std::function<void(size_t)> &fn);

/// Threads OpenMP would use for a parallel region (1 when built without it).
int MaxThreads();

}  // namespace plugin_se

#endif  // PLUGIN_SE_KERNELS_H_
