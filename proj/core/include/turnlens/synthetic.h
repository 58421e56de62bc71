// Copyright 2026 The TurnLens Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Seeded generator of labeled task-oriented dialogues. Each dialogue-act type
// carries its own AI-leaning and human-leaning phrasings, and AI dialogues
// use more acts per turn.

#ifndef TURNLENS_SYNTHETIC_H_
#define TURNLENS_SYNTHETIC_H_

#include <cstdint>

#include "turnlens/corpus.h"

namespace turnlens {

struct SyntheticConfig {
  int dialogues = 400;
  int min_user_turns = 3;
  int max_user_turns = 5;
  double signal_rate = 0.9;  // clause carries a phrase of its own class
  double noise_rate = 0.03;   // clause carries a phrase of the other class
  double primary_phrase_rate = 0.85;
  double two_act_rate = 0.5;
  double pair_rate = 0.9;  // second act comes from the class pairing table
  std::uint64_t seed = 2025;
};

// Half human, half AI (AI gets the extra one when odd). Deterministic.
Corpus GenerateSyntheticCorpus(const SyntheticConfig& config = {});

}  // namespace turnlens

#endif  // TURNLENS_SYNTHETIC_H_
