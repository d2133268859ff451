// Copyright 2026 The cqdsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace cqdsim {

/// Anything that hands out uniform variates on [0,1).
template <class S>
concept UniformSource = requires(S& s) {
    { s.uniform() } -> std::convertible_to<double>;
};

inline constexpr std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Deterministic uniform stream. The conversion to double is done by hand
/// so that outputs do not depend on the standard library's distributions.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    /// Independent stream for one trial: the trial index is mixed into the
    /// master seed, so trial streams never depend on execution order.
    static RandomStream for_trial(std::uint64_t master_seed, std::uint64_t trial) {
        return RandomStream(splitmix64(master_seed) ^ splitmix64(~trial));
    }

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double operator()() { return uniform(); }

private:
    std::mt19937_64 engine_;
};

/// Replays a fixed script of variates, then falls through to a seeded
/// stream. Used to force particular gadget outcomes.
class ScriptedStream {
public:
    ScriptedStream(std::vector<double> script, std::uint64_t fallback_seed = 0)
        : script_(std::move(script)), fallback_(fallback_seed) {}

    double uniform() {
        if (next_ < script_.size()) return script_[next_++];
        return fallback_.uniform();
    }

    std::size_t consumed() const { return next_; }

private:
    std::vector<double> script_;
    std::size_t next_ = 0;
    RandomStream fallback_;
};

}  // namespace cqdsim
