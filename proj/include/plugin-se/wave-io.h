// plugin-se/wave-io.h

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

#ifndef PLUGIN_SE_WAVE_IO_H_
#define PLUGIN_SE_WAVE_IO_H_

#include <iosfwd>
#include <string>

#include "plugin-se/signal-core.h"

namespace plugin_se {

// RIFF/WAVE, PCM, 16-bit signed little-endian, mono only. Samples map
// linearly: int16 value v <-> v / 32768, so the representable range is
// [-1, 1 - 2^-15]; values outside are clipped on write.

void WriteWave(std::ostream &os, const Waveform &w);
void WriteWaveFile(const std::string &path, const Waveform &w);

Waveform ReadWave(std::istream &is);
Waveform ReadWaveFile(const std::string &path);

}  // namespace plugin_se

#endif  // PLUGIN_SE_WAVE_IO_H_
