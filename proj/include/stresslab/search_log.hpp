#pragma once

namespace stresslab {

// One per-iteration progress sample shared by every solver: the best failure
// total reward seen so far, or no failure yet. Wall time is informational and
// never part of reproducibility comparisons.
struct IterationRecord {
    int iteration = 0;  // 1-based
    double best_reward = 0.0;
    bool found_failure = false;
    long long wall_ms = 0;
};

}  // namespace stresslab
