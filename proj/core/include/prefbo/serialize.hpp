#pragma once

#include <string>

#include "prefbo/engine.hpp"

namespace prefbo {

/// JSON text of a finished (or failed) run. indent < 0 gives compact
/// output.
std::string run_result_to_json(const RunResult& result, int indent = 2);

/// Snapshot round-trip for resumable runs. Front members keep design and
/// objectives; rank and crowding are not part of the snapshot.
std::string run_state_to_json(const RunState& state, int indent = -1);
RunState run_state_from_json(const std::string& text);

/// History table: iter,x_1..x_D,f_1..f_K,phase,theta_1..theta_K, where
/// the weight columns are filled on focused rows only. Floats use %.9g.
std::string history_to_csv(const RunResult& result);

}  // namespace prefbo
