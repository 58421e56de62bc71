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

#include "turnlens/synthetic.h"

#include <array>
#include <cctype>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "turnlens/errors.h"

namespace turnlens {

namespace {

struct ActSpec {
  const char* intent;
  const char* domain;
  const char* slot;
  std::vector<const char*> values;  // empty for requests
  std::vector<const char*> clauses;  // "{v}" marks the value
  std::array<const char*, 3> ai;
  std::array<const char*, 3> human;
  int ai_weight;
  int human_weight;
};

const std::vector<ActSpec>& Acts() {
  static const std::vector<ActSpec> acts = {
      {"inform", "travel", "dst_city",
       {"Gotham City", "Star City", "Metropolis", "Central City", "Coast City"},
       {"I want to go to {v}", "my destination is {v}", "book travel to {v}", "the trip ends in {v}"},
       {"any options?", "eager to explore", "seamless journey ahead"},
       {"gotta get there", "heading over soon", "asap pls"},
       1, 1},
      {"inform", "travel", "or_city",
       {"Gotham City", "Star City", "Metropolis", "Bludhaven"},
       {"I am leaving from {v}", "starting in {v}", "my origin is {v}", "out of {v}"},
       {"departing accordingly", "preferred origin point", "commencing travels"},
       {"thats home base", "outta hometown", "close by"},
       1, 1},
      {"inform", "travel", "str_date",
       {"May 5", "June 12", "July 3", "March 9"},
       {"I am travelling on {v}", "the date is {v}", "I fly out {v}", "set it for {v}"},
       {"flexibility is appreciated", "specific itinerary", "availability permitting"},
       {"cant do other days", "day off", "works fine"},
       1, 1},
      {"inform", "hotel", "area",
       {"north", "south", "centre", "east", "west"},
       {"I need a hotel in the {v}", "a place in the {v} area", "lodging around the {v}", "stay on the {v} side"},
       {"vibrant neighborhood", "convenient access", "tranquil atmosphere"},
       {"near downtown", "somewhere cheap", "bars nearby"},
       1, 1},
      {"request", "hotel", "price",
       {},
       {"what does the hotel cost", "tell me the price", "room cost per night", "what would I pay"},
       {"pricing details", "fee breakdown", "rates please"},
       {"how much", "ballpark figure", "pricey?"},
       1, 1},
      {"inform", "restaurant", "food",
       {"italian", "thai", "indian", "chinese"},
       {"I would like {v} food", "looking for {v} food", "a {v} restaurant", "we want {v} dinner"},
       {"authentic cuisine", "culinary experience", "renowned flavors"},
       {"something tasty", "grab grub", "nothing fancy"},
       1, 1},
      {"request", "taxi", "leave_time",
       {},
       {"when does the taxi leave", "what is the pickup time", "pickup hour for the car", "when will the driver come"},
       {"confirm departure", "ensure punctuality", "advise on timing"},
       {"eta?", "clock check", "dunno the schedule"},
       1, 1},
      {"inform", "taxi", "dest",
       {"the station", "the airport", "the museum"},
       {"a taxi to {v}", "I need a cab to {v}", "ride to {v}", "car going to {v}"},
       {"comfortable ride", "arrange transportation", "smooth transfer"},
       {"drop off", "quick lift", "hop in"},
       1, 1},
  };
  return acts;
}

constexpr std::array<const char*, 5> kSystemLines = {
    "Sure, let me check.", "Okay, anything else?", "I can help with that.",
    "Let me look into it.", "One moment please."};

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::size_t Below(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }
  double Unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  bool Chance(double p) { return Unit() < p; }

 private:
  std::mt19937_64 engine_;
};

std::size_t PickAct(Rng& rng, Authorship label, std::size_t exclude) {
  const auto& acts = Acts();
  int total = 0;
  for (std::size_t i = 0; i < acts.size(); ++i) {
    if (i == exclude) continue;
    total += label == Authorship::kAI ? acts[i].ai_weight : acts[i].human_weight;
  }
  int r = static_cast<int>(rng.Below(static_cast<std::size_t>(total)));
  for (std::size_t i = 0; i < acts.size(); ++i) {
    if (i == exclude) continue;
    r -= label == Authorship::kAI ? acts[i].ai_weight : acts[i].human_weight;
    if (r < 0) return i;
  }
  return acts.size() - 1;
}

// Classes pair acts differently: AI joins i with i ^ 1, humans join i with i ^ 2.
std::size_t PairedAct(std::size_t first, Authorship label) {
  return first ^ (label == Authorship::kAI ? 1u : 2u);
}

// The first phrasing of an act dominates; the other two share the rest.
std::size_t PickPhrase(Rng& rng, const SyntheticConfig& config) {
  const double u = rng.Unit();
  if (u < config.primary_phrase_rate) return 0;
  return u < (1.0 + config.primary_phrase_rate) / 2.0 ? 1 : 2;
}

std::string Clause(Rng& rng, const ActSpec& act, Authorship label, const SyntheticConfig& config,
                   DialogueAct* da) {
  std::string text = act.clauses[rng.Below(act.clauses.size())];
  da->intent = act.intent;
  da->domain = act.domain;
  da->slot = act.slot;
  da->value.reset();
  if (!act.values.empty()) {
    const std::string value = act.values[rng.Below(act.values.size())];
    text.replace(text.find("{v}"), 3, value);
    da->value = value;
  }
  const double u = rng.Unit();
  const char* phrase = nullptr;
  const bool ai = label == Authorship::kAI;
  if (u < config.signal_rate) {
    phrase = (ai ? act.ai : act.human)[PickPhrase(rng, config)];
  } else if (u < config.signal_rate + config.noise_rate) {
    phrase = (ai ? act.human : act.ai)[PickPhrase(rng, config)];
  }
  if (phrase) {
    text += ", ";
    text += phrase;
  }
  if (text.back() != '?') text += act.values.empty() && !phrase ? "?" : ".";
  return text;
}

}  // namespace

Corpus GenerateSyntheticCorpus(const SyntheticConfig& config) {
  if (config.dialogues < 1) throw InvalidArgument("need at least one dialogue");
  if (config.min_user_turns < 1 || config.max_user_turns < config.min_user_turns) {
    throw InvalidArgument("invalid user turn range");
  }
  Rng rng(config.seed);
  std::vector<Dialogue> dialogues;
  const int humans = config.dialogues / 2;
  for (int i = 0; i < config.dialogues; ++i) {
    Dialogue d;
    char id[32];
    std::snprintf(id, sizeof id, "syn-%04d", i + 1);
    d.id = id;
    d.domain_tag = "synthetic";
    d.label = i < humans ? Authorship::kHuman : Authorship::kAI;
    const int span = config.max_user_turns - config.min_user_turns + 1;
    const int user_turns = config.min_user_turns + static_cast<int>(rng.Below(static_cast<std::size_t>(span)));
    int index = 0;
    for (int u = 0; u < user_turns; ++u) {
      Turn turn;
      turn.index = index++;
      turn.speaker = Speaker::kUser;
      const std::size_t first = PickAct(rng, d.label, Acts().size());
      std::vector<std::size_t> picks = {first};
      if (rng.Chance(config.two_act_rate)) {
        picks.push_back(rng.Chance(config.pair_rate) ? PairedAct(first, d.label)
                                                     : PickAct(rng, d.label, first));
      }
      for (std::size_t a : picks) {
        DialogueAct da;
        std::string clause = Clause(rng, Acts()[a], d.label, config, &da);
        clause[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(clause[0])));
        if (!turn.text.empty()) turn.text += ' ';
        turn.text += clause;
        turn.das.push_back(std::move(da));
      }
      d.turns.push_back(std::move(turn));
      Turn reply;
      reply.index = index++;
      reply.speaker = Speaker::kSystem;
      reply.text = kSystemLines[rng.Below(kSystemLines.size())];
      d.turns.push_back(std::move(reply));
    }
    dialogues.push_back(std::move(d));
  }
  return Corpus(std::move(dialogues));
}

}  // namespace turnlens
