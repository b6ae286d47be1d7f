#pragma once

#include <string>

#include "uql/agent.hpp"

namespace uql {

// Plain-text checkpoint of an ensemble agent: member and target tables,
// per-pair visit counts, the update-round counter, and the generator state.
// Doubles are written as hexfloats, so a resumed run continues bit-exactly.
// load_checkpoint requires the agent to be constructed with matching table
// shapes and ensemble size; it overwrites tables, counters, and rng state.
void save_checkpoint(const std::string& path, const UqlAgent& agent,
                     const Rng& rng);
void load_checkpoint(const std::string& path, UqlAgent& agent, Rng& rng);

}  // namespace uql
